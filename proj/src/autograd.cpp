// Copyright 2026 The RAWtoBit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rawtobit/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "rawtobit/conv_kernels.hpp"

namespace rtb {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void VarImpl::accumulate(const Tensor& g) {
  if (!grad.defined()) {
    grad = g.clone();
  } else {
    for (int64_t i = 0; i < grad.numel(); ++i) grad[i] += g[i];
  }
}

Var::Var(Tensor value, bool requires_grad) : impl_(std::make_shared<VarImpl>()) {
  impl_->value = std::move(value);
  impl_->requires_grad = requires_grad;
}

void Var::zero_grad() {
  if (impl_ && impl_->grad.defined()) impl_->grad.zero();
}

void Var::backward() const {
  if (impl_->value.numel() != 1)
    fail(ErrorCode::kInvalidShape, "backward() requires a scalar");
  // Post-order DFS: parents precede consumers; replay reversed.
  std::vector<VarImpl*> order;
  std::unordered_set<VarImpl*> seen;
  std::vector<std::pair<VarImpl*, size_t>> stack;
  stack.push_back({impl_.get(), 0});
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      VarImpl* p = node->parents[idx++].get();
      if (!seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  impl_->accumulate(Tensor::scalar(1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    VarImpl* node = *it;
    if (node->backward_fn && node->grad.defined()) node->backward_fn(*node);
  }
}

namespace ops {

namespace {

Var make_result(Tensor value, std::vector<Var> parents,
                std::function<void(VarImpl&)> backward_fn) {
  Var out(std::move(value), false);
  bool record = grad_enabled();
  if (record) {
    bool any = false;
    for (const auto& p : parents)
      if (p.defined() && p.requires_grad()) any = true;
    record = any;
  }
  if (record) {
    out.impl()->requires_grad = true;
    for (auto& p : parents)
      if (p.defined()) out.impl()->parents.push_back(p.impl());
    out.impl()->backward_fn = std::move(backward_fn);
  }
  return out;
}

// Shape contract for binary elementwise ops: equal shapes, or a scalar
// (numel 1) on either side.
enum class BinKind { kSame, kScalarLeft, kScalarRight };

BinKind bin_kind(const Var& a, const Var& b) {
  if (same_shape(a.shape(), b.shape())) return BinKind::kSame;
  if (a.numel() == 1) return BinKind::kScalarLeft;
  if (b.numel() == 1) return BinKind::kScalarRight;
  fail(ErrorCode::kInvalidShape, "elementwise op shape mismatch " +
                                     shape_str(a.shape()) + " vs " +
                                     shape_str(b.shape()));
}

Tensor reduce_to_scalar(const Tensor& g) {
  return Tensor::scalar(t_sum(g));
}

using UnaryFwd = double (*)(double);

Var unary_op(const Var& a, UnaryFwd f,
             std::function<double(double x, double y)> dfdx) {
  Tensor out(a.shape());
  const Tensor& x = a.value();
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = f(x[i]);
  Tensor saved_out = out;
  return make_result(std::move(out), {a},
                     [a, saved_out, dfdx](VarImpl& self) {
                       if (!a.requires_grad()) return;
                       const Tensor& x = a.value();
                       Tensor gx(x.shape());
                       for (int64_t i = 0; i < x.numel(); ++i)
                         gx[i] = self.grad[i] * dfdx(x[i], saved_out[i]);
                       a.impl()->accumulate(gx);
                     });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  BinKind k = bin_kind(a, b);
  Tensor out(k == BinKind::kScalarLeft ? b.shape() : a.shape());
  const Tensor &x = a.value(), &y = b.value();
  if (k == BinKind::kSame) {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[i] + y[i];
  } else if (k == BinKind::kScalarLeft) {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[0] + y[i];
  } else {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[i] + y[0];
  }
  return make_result(std::move(out), {a, b}, [a, b, k](VarImpl& self) {
    if (a.requires_grad())
      a.impl()->accumulate(k == BinKind::kScalarLeft ? reduce_to_scalar(self.grad)
                                                     : self.grad);
    if (b.requires_grad())
      b.impl()->accumulate(k == BinKind::kScalarRight ? reduce_to_scalar(self.grad)
                                                      : self.grad);
  });
}

Var sub(const Var& a, const Var& b) { return add(a, neg(b)); }

Var mul(const Var& a, const Var& b) {
  BinKind k = bin_kind(a, b);
  Tensor out(k == BinKind::kScalarLeft ? b.shape() : a.shape());
  const Tensor &x = a.value(), &y = b.value();
  if (k == BinKind::kSame) {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[i] * y[i];
  } else if (k == BinKind::kScalarLeft) {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[0] * y[i];
  } else {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[i] * y[0];
  }
  return make_result(std::move(out), {a, b}, [a, b, k](VarImpl& self) {
    const Tensor &x = a.value(), &y = b.value();
    if (a.requires_grad()) {
      if (k == BinKind::kScalarLeft) {
        double s = 0;
        for (int64_t i = 0; i < y.numel(); ++i) s += self.grad[i] * y[i];
        a.impl()->accumulate(Tensor::scalar(s));
      } else {
        Tensor g(x.shape());
        for (int64_t i = 0; i < x.numel(); ++i)
          g[i] = self.grad[i] * (k == BinKind::kScalarRight ? y[0] : y[i]);
        a.impl()->accumulate(g);
      }
    }
    if (b.requires_grad()) {
      if (k == BinKind::kScalarRight) {
        double s = 0;
        for (int64_t i = 0; i < x.numel(); ++i) s += self.grad[i] * x[i];
        b.impl()->accumulate(Tensor::scalar(s));
      } else {
        Tensor g(y.shape());
        for (int64_t i = 0; i < y.numel(); ++i)
          g[i] = self.grad[i] * (k == BinKind::kScalarLeft ? x[0] : x[i]);
        b.impl()->accumulate(g);
      }
    }
  });
}

Var div(const Var& a, const Var& b) {
  BinKind k = bin_kind(a, b);
  Tensor out(k == BinKind::kScalarLeft ? b.shape() : a.shape());
  const Tensor &x = a.value(), &y = b.value();
  if (k == BinKind::kSame) {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[i] / y[i];
  } else if (k == BinKind::kScalarLeft) {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[0] / y[i];
  } else {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[i] / y[0];
  }
  return make_result(std::move(out), {a, b}, [a, b, k](VarImpl& self) {
    const Tensor &x = a.value(), &y = b.value();
    auto yv = [&](int64_t i) { return k == BinKind::kScalarRight ? y[0] : y[i]; };
    auto xv = [&](int64_t i) { return k == BinKind::kScalarLeft ? x[0] : x[i]; };
    if (a.requires_grad()) {
      if (k == BinKind::kScalarLeft) {
        double s = 0;
        for (int64_t i = 0; i < self.grad.numel(); ++i) s += self.grad[i] / y[i];
        a.impl()->accumulate(Tensor::scalar(s));
      } else {
        Tensor g(x.shape());
        for (int64_t i = 0; i < g.numel(); ++i) g[i] = self.grad[i] / yv(i);
        a.impl()->accumulate(g);
      }
    }
    if (b.requires_grad()) {
      if (k == BinKind::kScalarRight) {
        double s = 0;
        for (int64_t i = 0; i < self.grad.numel(); ++i)
          s += -self.grad[i] * x[i] / (y[0] * y[0]);
        b.impl()->accumulate(Tensor::scalar(s));
      } else {
        Tensor g(y.shape());
        for (int64_t i = 0; i < g.numel(); ++i)
          g[i] = -self.grad[i] * xv(i) / (y[i] * y[i]);
        b.impl()->accumulate(g);
      }
    }
  });
}

Var neg(const Var& a) {
  return unary_op(a, [](double x) { return -x; },
                  [](double, double) { return -1.0; });
}

Var add_scalar(const Var& a, double s) {
  Tensor out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + s;
  return make_result(std::move(out), {a}, [a](VarImpl& self) {
    if (a.requires_grad()) a.impl()->accumulate(self.grad);
  });
}

Var mul_scalar(const Var& a, double s) {
  Tensor out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * s;
  return make_result(std::move(out), {a}, [a, s](VarImpl& self) {
    if (a.requires_grad()) a.impl()->accumulate(t_scale(self.grad, s));
  });
}

Var add_const(const Var& a, const Tensor& c) {
  Tensor out = t_add(a.value(), c);
  return make_result(std::move(out), {a}, [a](VarImpl& self) {
    if (a.requires_grad()) a.impl()->accumulate(self.grad);
  });
}

Var mul_const(const Var& a, const Tensor& c) {
  Tensor out = t_mul(a.value(), c);
  Tensor cc = c;
  return make_result(std::move(out), {a}, [a, cc](VarImpl& self) {
    if (a.requires_grad()) a.impl()->accumulate(t_mul(self.grad, cc));
  });
}

Var relu(const Var& a) {
  return unary_op(a, [](double x) { return x > 0 ? x : 0.0; },
                  [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
  return unary_op(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Var softplus(const Var& a) {
  return unary_op(a,
                  [](double x) {
                    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
                  },
                  [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var exp(const Var& a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Var sqrt(const Var& a) {
  return unary_op(a, [](double x) { return std::sqrt(x); },
                  [](double, double y) { return 0.5 / y; });
}

Var square(const Var& a) {
  return unary_op(a, [](double x) { return x * x; },
                  [](double x, double) { return 2.0 * x; });
}

Var abs(const Var& a) {
  return unary_op(a, [](double x) { return std::fabs(x); },
                  [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var erf(const Var& a) {
  return unary_op(a, [](double x) { return std::erf(x); },
                  [](double x, double) {
                    return 2.0 / std::sqrt(M_PI) * std::exp(-x * x);
                  });
}

Var lower_bound(const Var& a, double bound) {
  Tensor out(a.shape());
  const Tensor& x = a.value();
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = std::max(x[i], bound);
  return make_result(std::move(out), {a}, [a, bound](VarImpl& self) {
    if (!a.requires_grad()) return;
    const Tensor& x = a.value();
    Tensor g(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i)
      g[i] = (x[i] >= bound || self.grad[i] < 0) ? self.grad[i] : 0.0;
    a.impl()->accumulate(g);
  });
}

Var sum(const Var& a) {
  Tensor out = Tensor::scalar(t_sum(a.value()));
  return make_result(std::move(out), {a}, [a](VarImpl& self) {
    if (!a.requires_grad()) return;
    Tensor g(a.shape(), self.grad[0]);
    a.impl()->accumulate(g);
  });
}

Var mean(const Var& a) { return mul_scalar(sum(a), 1.0 / double(a.numel())); }

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(shape);
  Shape orig = a.shape();
  return make_result(std::move(out), {a}, [a, orig](VarImpl& self) {
    if (a.requires_grad()) a.impl()->accumulate(self.grad.reshaped(orig));
  });
}

Var slice_flat(const Var& a, int64_t offset, Shape out_shape) {
  const int64_t n = shape_numel(out_shape);
  if (offset < 0 || offset + n > a.numel())
    fail(ErrorCode::kInvalidShape, "slice_flat: out of range");
  Tensor out(std::move(out_shape));
  std::memcpy(out.data(), a.value().data() + offset, size_t(n) * sizeof(double));
  return make_result(std::move(out), {a}, [a, offset, n](VarImpl& self) {
    if (!a.requires_grad()) return;
    Tensor g(a.shape());
    std::memcpy(g.data() + offset, self.grad.data(), size_t(n) * sizeof(double));
    a.impl()->accumulate(g);
  });
}

Var bias_add(const Var& x, const Var& b) {
  const Shape& s = x.shape();
  const int N = s[0], C = s[1];
  const int64_t hw = int64_t(s[2]) * s[3];
  Tensor out = x.value().clone();
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      double* p = out.data() + (int64_t(n) * C + c) * hw;
      const double bv = b.value()[c];
      for (int64_t i = 0; i < hw; ++i) p[i] += bv;
    }
  return make_result(std::move(out), {x, b}, [x, b, N, C, hw](VarImpl& self) {
    if (x.requires_grad()) x.impl()->accumulate(self.grad);
    if (b.requires_grad()) {
      Tensor db(b.shape());
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
          const double* p = self.grad.data() + (int64_t(n) * C + c) * hw;
          double sgrad = 0;
          for (int64_t i = 0; i < hw; ++i) sgrad += p[i];
          db[c] += sgrad;
        }
      b.impl()->accumulate(db);
    }
  });
}

Var channel_sum(const Var& x) {
  const Shape& s = x.shape();
  const int N = s[0], C = s[1];
  const int64_t hw = int64_t(s[2]) * s[3];
  Tensor out(Shape{N, 1, s[2], s[3]});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* p = x.value().data() + (int64_t(n) * C + c) * hw;
      double* o = out.data() + int64_t(n) * hw;
      for (int64_t i = 0; i < hw; ++i) o[i] += p[i];
    }
  return make_result(std::move(out), {x}, [x, N, C, hw](VarImpl& self) {
    if (!x.requires_grad()) return;
    Tensor g(x.shape());
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        double* p = g.data() + (int64_t(n) * C + c) * hw;
        const double* o = self.grad.data() + int64_t(n) * hw;
        std::memcpy(p, o, size_t(hw) * sizeof(double));
      }
    x.impl()->accumulate(g);
  });
}

Var global_avg_pool(const Var& x) {
  const Shape& s = x.shape();
  const int N = s[0], C = s[1];
  const int64_t hw = int64_t(s[2]) * s[3];
  Tensor out(Shape{N, C, 1, 1});
  for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
    const double* p = x.value().data() + nc * hw;
    double acc = 0;
    for (int64_t i = 0; i < hw; ++i) acc += p[i];
    out[nc] = acc / double(hw);
  }
  return make_result(std::move(out), {x}, [x, N, C, hw](VarImpl& self) {
    if (!x.requires_grad()) return;
    Tensor g(x.shape());
    for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
      double gv = self.grad[nc] / double(hw);
      double* p = g.data() + nc * hw;
      for (int64_t i = 0; i < hw; ++i) p[i] = gv;
    }
    x.impl()->accumulate(g);
  });
}

Var mul_bcast_nc(const Var& x, const Var& gate) {
  const Shape& s = x.shape();
  const int N = s[0], C = s[1];
  const int64_t hw = int64_t(s[2]) * s[3];
  if (gate.shape() != Shape{N, C, 1, 1})
    fail(ErrorCode::kInvalidShape, "mul_bcast_nc: gate must be [N,C,1,1]");
  Tensor out(x.shape());
  for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
    const double* p = x.value().data() + nc * hw;
    double* o = out.data() + nc * hw;
    const double gv = gate.value()[nc];
    for (int64_t i = 0; i < hw; ++i) o[i] = p[i] * gv;
  }
  return make_result(std::move(out), {x, gate}, [x, gate, N, C, hw](VarImpl& self) {
    if (x.requires_grad()) {
      Tensor g(x.shape());
      for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
        const double gv = gate.value()[nc];
        const double* d = self.grad.data() + nc * hw;
        double* p = g.data() + nc * hw;
        for (int64_t i = 0; i < hw; ++i) p[i] = d[i] * gv;
      }
      x.impl()->accumulate(g);
    }
    if (gate.requires_grad()) {
      Tensor g(gate.shape());
      for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
        const double* d = self.grad.data() + nc * hw;
        const double* p = x.value().data() + nc * hw;
        double acc = 0;
        for (int64_t i = 0; i < hw; ++i) acc += d[i] * p[i];
        g[nc] = acc;
      }
      gate.impl()->accumulate(g);
    }
  });
}

Var concat_ch(const Var& a, const Var& b) {
  const Shape &sa = a.shape(), &sb = b.shape();
  if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3])
    fail(ErrorCode::kInvalidShape, "concat_ch: incompatible shapes");
  const int N = sa[0], Ca = sa[1], Cb = sb[1];
  const int64_t hw = int64_t(sa[2]) * sa[3];
  Tensor out(Shape{N, Ca + Cb, sa[2], sa[3]});
  for (int n = 0; n < N; ++n) {
    std::memcpy(out.data() + int64_t(n) * (Ca + Cb) * hw,
                a.value().data() + int64_t(n) * Ca * hw,
                size_t(Ca * hw) * sizeof(double));
    std::memcpy(out.data() + (int64_t(n) * (Ca + Cb) + Ca) * hw,
                b.value().data() + int64_t(n) * Cb * hw,
                size_t(Cb * hw) * sizeof(double));
  }
  return make_result(std::move(out), {a, b}, [a, b, N, Ca, Cb, hw](VarImpl& self) {
    if (a.requires_grad()) {
      Tensor g(a.shape());
      for (int n = 0; n < N; ++n)
        std::memcpy(g.data() + int64_t(n) * Ca * hw,
                    self.grad.data() + int64_t(n) * (Ca + Cb) * hw,
                    size_t(Ca * hw) * sizeof(double));
      a.impl()->accumulate(g);
    }
    if (b.requires_grad()) {
      Tensor g(b.shape());
      for (int n = 0; n < N; ++n)
        std::memcpy(g.data() + int64_t(n) * Cb * hw,
                    self.grad.data() + (int64_t(n) * (Ca + Cb) + Ca) * hw,
                    size_t(Cb * hw) * sizeof(double));
      b.impl()->accumulate(g);
    }
  });
}

Var slice_ch(const Var& x, int c0, int c1) {
  const Shape& s = x.shape();
  const int N = s[0], C = s[1], Cs = c1 - c0;
  if (c0 < 0 || c1 > C || Cs <= 0)
    fail(ErrorCode::kInvalidShape, "slice_ch: bad channel range");
  const int64_t hw = int64_t(s[2]) * s[3];
  Tensor out(Shape{N, Cs, s[2], s[3]});
  for (int n = 0; n < N; ++n)
    std::memcpy(out.data() + int64_t(n) * Cs * hw,
                x.value().data() + (int64_t(n) * C + c0) * hw,
                size_t(Cs * hw) * sizeof(double));
  return make_result(std::move(out), {x}, [x, N, C, c0, Cs, hw](VarImpl& self) {
    if (!x.requires_grad()) return;
    Tensor g(x.shape());
    for (int n = 0; n < N; ++n)
      std::memcpy(g.data() + (int64_t(n) * C + c0) * hw,
                  self.grad.data() + int64_t(n) * Cs * hw,
                  size_t(Cs * hw) * sizeof(double));
    x.impl()->accumulate(g);
  });
}

Var slice_batch(const Var& x, int n0, int n1) {
  const Shape& s = x.shape();
  if (n0 < 0 || n1 > s[0] || n1 <= n0)
    fail(ErrorCode::kInvalidShape, "slice_batch: bad range");
  const int64_t per = x.numel() / s[0];
  Tensor out(Shape{n1 - n0, s[1], s[2], s[3]});
  std::memcpy(out.data(), x.value().data() + n0 * per,
              size_t((n1 - n0) * per) * sizeof(double));
  return make_result(std::move(out), {x}, [x, n0, n1, per](VarImpl& self) {
    if (!x.requires_grad()) return;
    Tensor g(x.shape());
    std::memcpy(g.data() + n0 * per, self.grad.data(),
                size_t((n1 - n0) * per) * sizeof(double));
    x.impl()->accumulate(g);
  });
}

Var crop_hw(const Var& x, int h, int w) {
  const Shape& s = x.shape();
  if (h > s[2] || w > s[3]) fail(ErrorCode::kInvalidShape, "crop_hw: grows");
  if (h == s[2] && w == s[3]) return x;
  const int N = s[0], C = s[1], H = s[2], W = s[3];
  Tensor out(Shape{N, C, h, w});
  for (int64_t nc = 0; nc < int64_t(N) * C; ++nc)
    for (int i = 0; i < h; ++i)
      std::memcpy(out.data() + (nc * h + i) * w,
                  x.value().data() + (nc * H + i) * W, size_t(w) * sizeof(double));
  return make_result(std::move(out), {x}, [x, N, C, H, W, h, w](VarImpl& self) {
    if (!x.requires_grad()) return;
    Tensor g(x.shape());
    for (int64_t nc = 0; nc < int64_t(N) * C; ++nc)
      for (int i = 0; i < h; ++i)
        std::memcpy(g.data() + (nc * H + i) * W,
                    self.grad.data() + (nc * h + i) * w, size_t(w) * sizeof(double));
    x.impl()->accumulate(g);
  });
}

Var pixel_shuffle2(const Var& x) {
  const Shape& s = x.shape();
  const int N = s[0], C4 = s[1], H = s[2], W = s[3];
  if (C4 % 4 != 0) fail(ErrorCode::kInvalidShape, "pixel_shuffle2: C % 4 != 0");
  const int C = C4 / 4;
  Tensor out(Shape{N, C, 2 * H, 2 * W});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj) {
          const double* src =
              x.value().data() + ((int64_t(n) * C4 + c * 4 + di * 2 + dj) * H) * W;
          for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j)
              out.at4(n, c, 2 * i + di, 2 * j + dj) = src[int64_t(i) * W + j];
        }
  return make_result(std::move(out), {x}, [x, N, C4, C, H, W](VarImpl& self) {
    if (!x.requires_grad()) return;
    Tensor g(x.shape());
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj) {
            double* dst = g.data() + ((int64_t(n) * C4 + c * 4 + di * 2 + dj) * H) * W;
            for (int i = 0; i < H; ++i)
              for (int j = 0; j < W; ++j)
                dst[int64_t(i) * W + j] = self.grad.at4(n, c, 2 * i + di, 2 * j + dj);
          }
    x.impl()->accumulate(g);
  });
}

Var matmul(const Var& a, const Var& b) {
  const Shape &sa = a.shape(), &sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
    fail(ErrorCode::kInvalidShape, "matmul: incompatible shapes");
  const int m = sa[0], k = sa[1], n = sb[1];
  Tensor out(Shape{m, n});
  gemm_rm(false, false, m, n, k, 1.0, a.value().data(), k, b.value().data(), n,
          0.0, out.data(), n);
  return make_result(std::move(out), {a, b}, [a, b, m, k, n](VarImpl& self) {
    if (a.requires_grad()) {
      Tensor g(Shape{m, k});
      gemm_rm(false, true, m, k, n, 1.0, self.grad.data(), n, b.value().data(),
              n, 0.0, g.data(), k);
      a.impl()->accumulate(g);
    }
    if (b.requires_grad()) {
      Tensor g(Shape{k, n});
      gemm_rm(true, false, k, n, m, 1.0, a.value().data(), k, self.grad.data(),
              n, 0.0, g.data(), n);
      b.impl()->accumulate(g);
    }
  });
}

Var add_colvec(const Var& x, const Var& b) {
  const Shape& s = x.shape();
  const int r = s[0], m = s[1];
  if (b.numel() != r) fail(ErrorCode::kInvalidShape, "add_colvec: bad vector");
  Tensor out(x.shape());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < m; ++j)
      out[int64_t(i) * m + j] = x.value()[int64_t(i) * m + j] + b.value()[i];
  return make_result(std::move(out), {x, b}, [x, b, r, m](VarImpl& self) {
    if (x.requires_grad()) x.impl()->accumulate(self.grad);
    if (b.requires_grad()) {
      Tensor g(b.shape());
      for (int i = 0; i < r; ++i) {
        double acc = 0;
        for (int j = 0; j < m; ++j) acc += self.grad[int64_t(i) * m + j];
        g[i] = acc;
      }
      b.impl()->accumulate(g);
    }
  });
}

Var mul_colvec(const Var& x, const Var& a) {
  const Shape& s = x.shape();
  const int r = s[0], m = s[1];
  if (a.numel() != r) fail(ErrorCode::kInvalidShape, "mul_colvec: bad vector");
  Tensor out(x.shape());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < m; ++j)
      out[int64_t(i) * m + j] = x.value()[int64_t(i) * m + j] * a.value()[i];
  return make_result(std::move(out), {x, a}, [x, a, r, m](VarImpl& self) {
    if (x.requires_grad()) {
      Tensor g(x.shape());
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < m; ++j)
          g[int64_t(i) * m + j] = self.grad[int64_t(i) * m + j] * a.value()[i];
      x.impl()->accumulate(g);
    }
    if (a.requires_grad()) {
      Tensor g(a.shape());
      for (int i = 0; i < r; ++i) {
        double acc = 0;
        for (int j = 0; j < m; ++j)
          acc += self.grad[int64_t(i) * m + j] * x.value()[int64_t(i) * m + j];
        g[i] = acc;
      }
      a.impl()->accumulate(g);
    }
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  Tensor out = conv2d_fwd(x.value(), w.value(),
                          b.defined() ? b.value() : Tensor(), stride, pad);
  std::vector<Var> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  return make_result(std::move(out), parents, [x, w, b, stride, pad](VarImpl& self) {
    if (x.requires_grad())
      x.impl()->accumulate(
          conv2d_bwd_input(self.grad, w.value(), x.shape(), stride, pad));
    if (w.requires_grad() || (b.defined() && b.requires_grad())) {
      Tensor dw(w.shape());
      Tensor db = b.defined() ? Tensor(b.shape()) : Tensor();
      conv2d_bwd_params(self.grad, x.value(), dw, db, stride, pad);
      if (w.requires_grad()) w.impl()->accumulate(dw);
      if (b.defined() && b.requires_grad()) b.impl()->accumulate(db);
    }
  });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride,
                     int pad, int out_pad) {
  Tensor out = tconv2d_fwd(x.value(), w.value(),
                           b.defined() ? b.value() : Tensor(), stride, pad,
                           out_pad);
  std::vector<Var> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  return make_result(std::move(out), parents, [x, w, b, stride, pad](VarImpl& self) {
    if (x.requires_grad())
      x.impl()->accumulate(
          tconv2d_bwd_input(self.grad, w.value(), x.shape(), stride, pad));
    if (w.requires_grad() || (b.defined() && b.requires_grad())) {
      Tensor dw(w.shape());
      Tensor db = b.defined() ? Tensor(b.shape()) : Tensor();
      tconv2d_bwd_params(self.grad, x.value(), dw, db, stride, pad);
      if (w.requires_grad()) w.impl()->accumulate(dw);
      if (b.defined() && b.requires_grad()) b.impl()->accumulate(db);
    }
  });
}

}  // namespace ops

}  // namespace rtb
