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

#include "rawtobit/nn.hpp"

#include <cmath>

namespace rtb {

std::vector<std::pair<std::string, Var>> Module::named_parameters() const {
  std::vector<std::pair<std::string, Var>> out;
  collect("", &out);
  return out;
}

void Module::collect(const std::string& prefix,
                     std::vector<std::pair<std::string, Var>>* out) const {
  for (const auto& [name, v] : params_)
    out->push_back({prefix.empty() ? name : prefix + "." + name, v});
  for (const auto& [name, child] : children_)
    child->collect(prefix.empty() ? name : prefix + "." + name, out);
}

std::vector<Var> Module::parameters() const {
  std::vector<Var> out;
  for (auto& [name, v] : named_parameters()) out.push_back(v);
  return out;
}

void Module::set_requires_grad(bool rg) {
  for (auto& v : parameters()) v.set_requires_grad(rg);
}

void Module::zero_grad() {
  for (auto& v : parameters()) v.zero_grad();
}

double Module::parameter_checksum() const {
  double acc = 0;
  int64_t idx = 1;
  for (auto& v : parameters())
    for (int64_t i = 0; i < v.numel(); ++i)
      acc += v.value()[i] * double(idx++ % 9973);
  return acc;
}

Var& Module::register_param(const std::string& name, Var v) {
  params_.push_back({name, std::move(v)});
  return params_.back().second;
}

void Module::register_module(const std::string& name, Module* m) {
  children_.push_back({name, m});
}

namespace {
Tensor conv_init(Shape shape, int fan_in, Rng& rng) {
  double bound = 1.0 / std::sqrt(double(fan_in));
  return Tensor::rand_uniform(std::move(shape), rng, -bound, bound);
}
}  // namespace

Conv2d::Conv2d(int cin, int cout, int k, int stride_, int pad_, Rng& rng,
               bool with_bias)
    : stride(stride_), pad(pad_) {
  const int fan_in = cin * k * k;
  weight = register_param("weight",
                          Var(conv_init({cout, cin, k, k}, fan_in, rng), true));
  if (with_bias)
    bias = register_param("bias", Var(conv_init({cout}, fan_in, rng), true));
}

Var Conv2d::forward(const Var& x) const {
  return ops::conv2d(x, weight, bias, stride, pad);
}

ConvTranspose2d::ConvTranspose2d(int cin, int cout, int k, int stride_,
                                 int pad_, int out_pad_, Rng& rng,
                                 bool with_bias)
    : stride(stride_), pad(pad_), out_pad(out_pad_) {
  const int fan_in = cin * k * k;
  weight = register_param("weight",
                          Var(conv_init({cin, cout, k, k}, fan_in, rng), true));
  if (with_bias)
    bias = register_param("bias", Var(conv_init({cout}, fan_in, rng), true));
}

Var ConvTranspose2d::forward(const Var& x) const {
  return ops::conv_transpose2d(x, weight, bias, stride, pad, out_pad);
}

MaskedConv2d::MaskedConv2d(int cin, int cout, int k, Rng& rng) : pad(k / 2) {
  if (k % 2 == 0)
    fail(ErrorCode::kInvalidSpec, "masked conv kernel must be odd");
  const int fan_in = cin * k * k;
  weight = register_param("weight",
                          Var(conv_init({cout, cin, k, k}, fan_in, rng), true));
  bias = register_param("bias", Var(conv_init({cout}, fan_in, rng), true));
  mask_ = Tensor(Shape{cout, cin, k, k}, 1.0);
  const int c = k / 2;
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci)
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          if (i > c || (i == c && j >= c)) mask_.at4(co, ci, i, j) = 0.0;
}

Var MaskedConv2d::forward(const Var& x) const {
  Var w = ops::mul_const(weight, mask_);
  return ops::conv2d(x, w, bias, 1, pad);
}

Gdn::Gdn(int channels_, bool inverse_) : inverse(inverse_), channels(channels_) {
  beta_raw = register_param("beta_raw", Var(Tensor(Shape{channels}, 1.0), true));
  Tensor g(Shape{channels, channels});
  for (int i = 0; i < channels; ++i)
    g[int64_t(i) * channels + i] = std::sqrt(0.1);
  gamma_raw = register_param("gamma_raw", Var(std::move(g), true));
}

Var Gdn::effective_beta() const {
  return ops::add_scalar(ops::square(beta_raw), kBetaMin);
}

Var Gdn::effective_gamma() const {
  return ops::reshape(ops::square(gamma_raw), Shape{channels, channels, 1, 1});
}

Var gdn_eval(const Var& x, const Var& beta, const Var& gamma, bool inverse) {
  Var pool = ops::conv2d(ops::square(x), gamma, beta, 1, 0);
  Var den = ops::sqrt(pool);
  return inverse ? ops::mul(x, den) : ops::div(x, den);
}

Var Gdn::forward(const Var& x) const {
  return gdn_eval(x, effective_beta(), effective_gamma(), inverse);
}

Rcab::Rcab(int channels, int reduction, Rng& rng) {
  if (channels % reduction != 0)
    fail(ErrorCode::kInvalidSpec, "rcab: channels not divisible by reduction");
  conv1 = std::make_unique<Conv2d>(channels, channels, 3, 1, 1, rng);
  conv2 = std::make_unique<Conv2d>(channels, channels, 3, 1, 1, rng);
  fc1 = std::make_unique<Conv2d>(channels, channels / reduction, 1, 1, 0, rng);
  fc2 = std::make_unique<Conv2d>(channels / reduction, channels, 1, 1, 0, rng);
  register_module("conv1", conv1.get());
  register_module("conv2", conv2.get());
  register_module("fc1", fc1.get());
  register_module("fc2", fc2.get());
}

Var Rcab::forward(const Var& x) const {
  Var t = conv2->forward(ops::relu(conv1->forward(x)));
  Var s = ops::global_avg_pool(t);
  Var gate = ops::sigmoid(fc2->forward(ops::relu(fc1->forward(s))));
  return ops::add(x, ops::mul_bcast_nc(t, gate));
}

Rcag::Rcag(int channels, int num_blocks, int reduction, Rng& rng) {
  if (num_blocks < 1) fail(ErrorCode::kInvalidSpec, "rcag: num_blocks < 1");
  for (int i = 0; i < num_blocks; ++i) {
    blocks.push_back(std::make_unique<Rcab>(channels, reduction, rng));
    register_module("rcab" + std::to_string(i), blocks.back().get());
  }
}

Var Rcag::forward(const Var& x) const {
  Var t = x;
  for (const auto& b : blocks) t = b->forward(t);
  return ops::add(x, t);
}

Adam::Adam(std::vector<Var> params, double lr) : params_(std::move(params)), lr_(lr) {
  for (auto& p : params_) {
    m_.push_back(Tensor(p.shape()));
    v_.push_back(Tensor(p.shape()));
  }
}

double Adam::clip_global_norm(double max_norm) {
  double sq = 0;
  for (auto& p : params_) {
    if (!p.has_grad()) continue;
    const Tensor& g = p.grad();
    for (int64_t i = 0; i < g.numel(); ++i) sq += g[i] * g[i];
  }
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    double scale = max_norm / norm;
    for (auto& p : params_) {
      if (!p.has_grad()) continue;
      Tensor& g = p.grad_mut();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] *= scale;
    }
  }
  return norm;
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, double(t_));
  const double bc2 = 1.0 - std::pow(beta2_, double(t_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Var& p = params_[pi];
    if (!p.has_grad()) continue;
    const Tensor& g = p.grad();
    Tensor &m = m_[pi], &v = v_[pi];
    Tensor& val = p.value_mut();
    for (int64_t i = 0; i < g.numel(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mh = m[i] / bc1, vh = v[i] / bc2;
      val[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace rtb
