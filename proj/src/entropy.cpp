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

#include "rawtobit/entropy.hpp"

#include <cmath>

namespace rtb {

namespace {
constexpr double kInvLn2 = 1.4426950408889634;  // 1/ln(2)
constexpr double kInvSqrt2 = 0.7071067811865476;

double std_normal_cdf(double u) { return 0.5 * (1.0 + std::erf(u * kInvSqrt2)); }
}  // namespace

Var quantize_noise(const Var& y, Rng& rng) {
  Tensor noise(y.shape());
  for (int64_t i = 0; i < noise.numel(); ++i) noise[i] = rng.uniform() - 0.5;
  return ops::add_const(y, noise);
}

Tensor quantize_round(const Tensor& y) { return t_round(y); }

double gaussian_interval_prob(double y, double mu, double sigma) {
  const double hi = (y + 0.5 - mu) / sigma;
  const double lo = (y - 0.5 - mu) / sigma;
  return std_normal_cdf(hi) - std_normal_cdf(lo);
}

Var gaussian_likelihood(const Var& y, const Var& mu, const Var& sigma) {
  using namespace ops;
  Var centered = sub(y, mu);
  Var hi = div(add_scalar(centered, 0.5), sigma);
  Var lo = div(add_scalar(centered, -0.5), sigma);
  // Phi(u) = 0.5 (1 + erf(u / sqrt(2))); the 0.5-offsets cancel in the diff.
  Var p = mul_scalar(
      sub(erf(mul_scalar(hi, kInvSqrt2)), erf(mul_scalar(lo, kInvSqrt2))), 0.5);
  return lower_bound(p, kLikelihoodMin);
}

Var gaussian_bits(const Var& y, const Var& mu, const Var& sigma) {
  using namespace ops;
  return mul_scalar(sum(log(gaussian_likelihood(y, mu, sigma))), -kInvLn2);
}

double gaussian_bits_value(const Tensor& y, const Tensor& mu, const Tensor& sigma) {
  double bits = 0;
  for (int64_t i = 0; i < y.numel(); ++i) {
    double p = gaussian_interval_prob(y[i], mu[i], sigma[i]);
    p = std::max(p, kLikelihoodMin);
    bits -= std::log2(p);
  }
  return bits;
}

FactorizedPrior::FactorizedPrior(int channels_, Rng& rng, std::vector<int> hidden,
                                 double init_scale)
    : channels(channels_) {
  dims.push_back(1);
  for (int h : hidden) dims.push_back(h);
  dims.push_back(1);
  const int layers = int(dims.size()) - 1;
  const double scale_step = std::pow(init_scale, 1.0 / double(layers));
  for (int k = 0; k < layers; ++k) {
    const int r_in = dims[size_t(k)], r_out = dims[size_t(k) + 1];
    // softplus(matrix) starts at 1 / (scale_step * r_out).
    const double m0 = std::log(std::expm1(1.0 / (scale_step * r_out)));
    Tensor m(Shape{channels * r_out * r_in}, m0);
    matrices.push_back(register_param("matrix" + std::to_string(k), Var(std::move(m), true)));
    Tensor b = Tensor::rand_uniform(Shape{channels * r_out}, rng, -0.5, 0.5);
    biases.push_back(register_param("bias" + std::to_string(k), Var(std::move(b), true)));
    if (k < layers - 1) {
      Tensor f(Shape{channels * r_out});
      factors.push_back(register_param("factor" + std::to_string(k), Var(std::move(f), true)));
    }
  }
}

Var FactorizedPrior::channel_cdf(int c, const Var& x_row) const {
  using namespace ops;
  const int layers = int(dims.size()) - 1;
  Var v = x_row;  // [1, m]
  for (int k = 0; k < layers; ++k) {
    const int r_in = dims[size_t(k)], r_out = dims[size_t(k) + 1];
    Var h = softplus(slice_flat(matrices[size_t(k)], int64_t(c) * r_out * r_in,
                                Shape{r_out, r_in}));
    Var b = slice_flat(biases[size_t(k)], int64_t(c) * r_out, Shape{r_out});
    v = add_colvec(matmul(h, v), b);
    if (k < layers - 1) {
      Var a = tanh(slice_flat(factors[size_t(k)], int64_t(c) * r_out, Shape{r_out}));
      v = add(v, mul_colvec(tanh(v), a));
    }
  }
  return sigmoid(v);
}

Var FactorizedPrior::bits(const Var& z) const {
  using namespace ops;
  const Shape& s = z.shape();
  if (s[1] != channels)
    fail(ErrorCode::kInvalidShape, "factorized prior channel mismatch");
  const int64_t m = int64_t(s[0]) * s[2] * s[3];
  Var total;
  for (int c = 0; c < channels; ++c) {
    Var row = reshape(slice_ch(z, c, c + 1), Shape{1, int(m)});
    Var p = sub(channel_cdf(c, add_scalar(row, 0.5)),
                channel_cdf(c, add_scalar(row, -0.5)));
    Var bits_c = mul_scalar(sum(log(lower_bound(p, kLikelihoodMin))), -kInvLn2);
    total = total.defined() ? add(total, bits_c) : bits_c;
  }
  return total;
}

double FactorizedPrior::bits_value(const Tensor& z) const {
  NoGradGuard ng;
  return bits(Var(z)).item();
}

std::vector<double> FactorizedPrior::channel_cdf_values(
    int c, const std::vector<double>& xs) const {
  NoGradGuard ng;
  Tensor row(Shape{1, int(xs.size())});
  for (size_t i = 0; i < xs.size(); ++i) row[int64_t(i)] = xs[i];
  Var out = channel_cdf(c, Var(row));
  std::vector<double> res(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) res[i] = out.value()[int64_t(i)];
  return res;
}

HyperAnalysis::HyperAnalysis(int C, Rng& rng) {
  c1 = std::make_unique<Conv2d>(C, C, 3, 1, 1, rng);
  c2 = std::make_unique<Conv2d>(C, C, 5, 2, 2, rng);
  c3 = std::make_unique<Conv2d>(C, C, 5, 2, 2, rng);
  register_module("c1", c1.get());
  register_module("c2", c2.get());
  register_module("c3", c3.get());
}

Var HyperAnalysis::forward(const Var& y) const {
  using namespace ops;
  return c3->forward(relu(c2->forward(relu(c1->forward(y)))));
}

HyperSynthesis::HyperSynthesis(int C, Rng& rng) {
  t1 = std::make_unique<ConvTranspose2d>(C, C, 5, 2, 2, 1, rng);
  t2 = std::make_unique<ConvTranspose2d>(C, C * 3 / 2, 5, 2, 2, 1, rng);
  c3 = std::make_unique<Conv2d>(C * 3 / 2, 2 * C, 3, 1, 1, rng);
  register_module("t1", t1.get());
  register_module("t2", t2.get());
  register_module("c3", c3.get());
}

Var HyperSynthesis::forward(const Var& z, int yh, int yw) const {
  using namespace ops;
  Var u = relu(t2->forward(relu(t1->forward(z))));
  u = crop_hw(u, yh, yw);
  return c3->forward(u);
}

ContextModel::ContextModel(int C, Rng& rng) {
  conv = std::make_unique<MaskedConv2d>(C, 2 * C, 5, rng);
  register_module("conv", conv.get());
}

Var ContextModel::forward(const Var& y_coded) const {
  return conv->forward(y_coded);
}

EntropyParameters::EntropyParameters(int latent_channels, Rng& rng)
    : C(latent_channels) {
  c1 = std::make_unique<Conv2d>(4 * C, 3 * C, 1, 1, 0, rng);
  c2 = std::make_unique<Conv2d>(3 * C, 2 * C, 1, 1, 0, rng);
  register_module("c1", c1.get());
  register_module("c2", c2.get());
}

EntropyParameters::Params EntropyParameters::forward(const Var& hyper_feat,
                                                     const Var& ctx_feat) const {
  using namespace ops;
  if (hyper_feat.shape()[2] != ctx_feat.shape()[2] ||
      hyper_feat.shape()[3] != ctx_feat.shape()[3])
    fail(ErrorCode::kInvalidShape, "entropy params: spatial dims differ");
  Var h = concat_ch(hyper_feat, ctx_feat);
  Var out = c2->forward(relu(c1->forward(h)));
  Params p;
  p.mu = slice_ch(out, 0, C);
  p.sigma = lower_bound(slice_ch(out, C, 2 * C), kSigmaMin);
  return p;
}

EntropyUnit::EntropyUnit(int latent_channels, Rng& rng) : C(latent_channels) {
  ha = std::make_unique<HyperAnalysis>(C, rng);
  hs = std::make_unique<HyperSynthesis>(C, rng);
  ctx = std::make_unique<ContextModel>(C, rng);
  ep = std::make_unique<EntropyParameters>(C, rng);
  fp = std::make_unique<FactorizedPrior>(C, rng);
  register_module("ha", ha.get());
  register_module("hs", hs.get());
  register_module("ctx", ctx.get());
  register_module("ep", ep.get());
  register_module("fp", fp.get());
}

EntropyUnit::Rate EntropyUnit::rate(const Var& y_cont, const Var& y_code,
                                    QuantizeMode mode, Rng& rng) const {
  Var z = ha->forward(y_cont);
  Var z_code = mode == QuantizeMode::kNoise
                   ? quantize_noise(z, rng)
                   : Var(quantize_round(z.value()));
  const int yh = y_cont.shape()[2], yw = y_cont.shape()[3];
  Var hyper_feat = hs->forward(z_code, yh, yw);
  Var ctx_feat = ctx->forward(y_code);
  auto params = ep->forward(hyper_feat, ctx_feat);
  Rate r;
  r.mu = params.mu;
  r.sigma = params.sigma;
  r.y_bits = gaussian_bits(y_code, params.mu, params.sigma);
  r.z_bits = fp->bits(z_code);
  return r;
}

}  // namespace rtb
