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

#ifndef RAWTOBIT_AUTOGRAD_HPP_
#define RAWTOBIT_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "rawtobit/tensor.hpp"

namespace rtb {

// Define-by-run reverse-mode autodiff over Tensor. Ops record a node only
// while grad mode is enabled and at least one input requires grad.

struct VarImpl {
  Tensor value;
  Tensor grad;  // allocated lazily by accumulate()
  bool requires_grad = false;
  std::vector<std::shared_ptr<VarImpl>> parents;
  // Reads this->grad, accumulates into parents' grads.
  std::function<void(VarImpl&)> backward_fn;

  void accumulate(const Tensor& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Tensor& value() const { return impl_->value; }
  Tensor& value_mut() { return impl_->value; }
  const Shape& shape() const { return impl_->value.shape(); }
  int64_t numel() const { return impl_->value.numel(); }
  double item() const { return impl_->value.item(); }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool rg) { impl_->requires_grad = rg; }
  bool has_grad() const { return impl_ && impl_->grad.defined(); }
  const Tensor& grad() const { return impl_->grad; }
  Tensor& grad_mut() { return impl_->grad; }
  void zero_grad();

  // Runs reverse-mode accumulation from this scalar.
  void backward() const;

  Var detach() const { return Var(impl_->value, false); }

  std::shared_ptr<VarImpl> impl() const { return impl_; }

 private:
  std::shared_ptr<VarImpl> impl_;
};

bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

namespace ops {

// Elementwise. Binary ops accept equal shapes, or a scalar (numel==1) on
// either side which broadcasts.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var add_scalar(const Var& a, double s);
Var mul_scalar(const Var& a, double s);
Var add_const(const Var& a, const Tensor& c);  // no grad into c
Var mul_const(const Var& a, const Tensor& c);

Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var softplus(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);
Var abs(const Var& a);
Var erf(const Var& a);

// max(a, bound) with gradient passed when a >= bound or when the incoming
// gradient pushes a upward; keeps floored parameters trainable.
Var lower_bound(const Var& a, double bound);

Var sum(const Var& a);   // -> scalar
Var mean(const Var& a);  // -> scalar

Var reshape(const Var& a, Shape shape);

// Contiguous flat slice [offset, offset+numel(out_shape)) viewed as out_shape.
Var slice_flat(const Var& a, int64_t offset, Shape out_shape);

// [N,C,H,W] helpers.
Var bias_add(const Var& x, const Var& b);         // b: [C]
Var channel_sum(const Var& x);                    // -> [N,1,H,W]
Var global_avg_pool(const Var& x);                // -> [N,C,1,1]
Var mul_bcast_nc(const Var& x, const Var& g);     // g: [N,C,1,1]
Var concat_ch(const Var& a, const Var& b);
Var slice_ch(const Var& x, int c0, int c1);
Var slice_batch(const Var& x, int n0, int n1);
Var crop_hw(const Var& x, int h, int w);          // top-left crop
Var pixel_shuffle2(const Var& x);                 // [N,4C,H,W] -> [N,C,2H,2W]

// Dense linear algebra on 2-d tensors.
Var matmul(const Var& a, const Var& b);           // [m,k]x[k,n]
Var add_colvec(const Var& x, const Var& b);       // x: [r,m], b: [r]
Var mul_colvec(const Var& x, const Var& a);

// Convolutions on [N,C,H,W]; weight [Co,Ci,k,k] (conv) or [Ci,Co,k,k]
// (transposed). bias may be undefined Var for none.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride,
                     int pad, int out_pad);

}  // namespace ops

}  // namespace rtb

#endif  // RAWTOBIT_AUTOGRAD_HPP_
