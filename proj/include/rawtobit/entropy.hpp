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

#ifndef RAWTOBIT_ENTROPY_HPP_
#define RAWTOBIT_ENTROPY_HPP_

#include <memory>
#include <vector>

#include "rawtobit/nn.hpp"

namespace rtb {

// Stabilization floors shared by rate estimation and the entropy coder.
constexpr double kSigmaMin = 0.11;
constexpr double kLikelihoodMin = 1.0 / 65536.0;  // 2^-16

enum class QuantizeMode { kNoise, kRound };

// Training proxy: adds i.i.d. U(-0.5, 0.5); differentiable as identity.
Var quantize_noise(const Var& y, Rng& rng);
// Inference path: round to nearest integer (mean-free convention).
Tensor quantize_round(const Tensor& y);

// Interval likelihood of integer-spaced bins under N(mu, sigma^2), floored
// at kLikelihoodMin. All inputs share one shape.
Var gaussian_likelihood(const Var& y, const Var& mu, const Var& sigma);
// Total bits: sum of -log2(likelihood).
Var gaussian_bits(const Var& y, const Var& mu, const Var& sigma);
double gaussian_bits_value(const Tensor& y, const Tensor& mu, const Tensor& sigma);

// Scalar interval probability under N(mu, sigma^2), same math as above.
double gaussian_interval_prob(double y, double mu, double sigma);

// Univariate learned density for the hyper-latent, one model per channel.
// The CDF is a monotone chain of softplus-positive linear maps and bounded
// tanh gates ending in a sigmoid.
class FactorizedPrior : public Module {
 public:
  FactorizedPrior(int channels, Rng& rng, std::vector<int> hidden = {3, 3, 3},
                  double init_scale = 10.0);

  // CDF logits chain for channel c on a [1,m] row of evaluation points.
  Var channel_cdf(int c, const Var& x_row) const;
  // Total bits over z (any [N,C,h,w] tensor of coded values).
  Var bits(const Var& z) const;
  double bits_value(const Tensor& z) const;
  // Plain evaluation used when building code tables.
  std::vector<double> channel_cdf_values(int c, const std::vector<double>& xs) const;

  int channels;
  std::vector<int> dims;  // [1, hidden..., 1]
  std::vector<Var> matrices, biases, factors;
};

// Hyper-latent analysis: one stride-1 stage then two stride-2 stages.
class HyperAnalysis : public Module {
 public:
  HyperAnalysis(int latent_channels, Rng& rng);
  Var forward(const Var& y) const;
  std::unique_ptr<Conv2d> c1, c2, c3;
};

// Mirror of the analysis; output is cropped back to the latent's spatial
// dims so latents sized to /16 inputs (not necessarily /64) round-trip.
class HyperSynthesis : public Module {
 public:
  HyperSynthesis(int latent_channels, Rng& rng);
  Var forward(const Var& z, int yh, int yw) const;
  std::unique_ptr<ConvTranspose2d> t1, t2;
  std::unique_ptr<Conv2d> c3;
};

// Autoregressive context features from already-decoded latents.
class ContextModel : public Module {
 public:
  ContextModel(int latent_channels, Rng& rng);
  Var forward(const Var& y_coded) const;
  std::unique_ptr<MaskedConv2d> conv;
};

// Two 1x1 layers mapping concat(hyper 2C, context 2C) to (mu, sigma).
class EntropyParameters : public Module {
 public:
  EntropyParameters(int latent_channels, Rng& rng);
  struct Params {
    Var mu, sigma;
  };
  Params forward(const Var& hyper_feat, const Var& ctx_feat) const;
  std::unique_ptr<Conv2d> c1, c2;
  int C;
};

// Full conditional-rate stack for one latent tensor.
class EntropyUnit : public Module {
 public:
  EntropyUnit(int latent_channels, Rng& rng);

  struct Rate {
    Var y_bits, z_bits;
    Var mu, sigma;
  };
  // y_cont: encoder output before quantization; y_code: the noisy or
  // rounded values actually being priced.
  Rate rate(const Var& y_cont, const Var& y_code, QuantizeMode mode, Rng& rng) const;

  int C;
  std::unique_ptr<HyperAnalysis> ha;
  std::unique_ptr<HyperSynthesis> hs;
  std::unique_ptr<ContextModel> ctx;
  std::unique_ptr<EntropyParameters> ep;
  std::unique_ptr<FactorizedPrior> fp;
};

// Spatial dim of the hyper-latent for a latent dim: two ceil-halvings.
inline int hyper_dim(int y_dim) { return ((y_dim + 1) / 2 + 1) / 2; }

}  // namespace rtb

#endif  // RAWTOBIT_ENTROPY_HPP_
