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

#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "rawtobit/entropy.hpp"

using namespace rtb;
using rtb_test::max_grad_error;

TEST_SUITE_BEGIN("entropy_model");

TEST_CASE("hyper analysis/synthesis shape contract") {
  Rng rng(41);
  EntropyUnit eu(8, rng);
  Tensor y = Tensor::randn({1, 8, 8, 8}, rng);
  Var z = eu.ha->forward(Var(y));
  CHECK(z.shape() == Shape{1, 8, 2, 2});
  Var feat = eu.hs->forward(z, 8, 8);
  CHECK(feat.shape() == Shape{1, 16, 8, 8});
  // odd latent dims still map back through the crop
  Tensor y2 = Tensor::randn({1, 8, 3, 5}, rng);
  Var z2 = eu.ha->forward(Var(y2));
  CHECK(z2.shape() == Shape{1, 8, hyper_dim(3), hyper_dim(5)});
  CHECK(eu.hs->forward(z2, 3, 5).shape() == Shape{1, 16, 3, 5});
}

TEST_CASE("zero y with zero weights gives bias-driven constant z") {
  Rng rng(42);
  HyperAnalysis ha(4, rng);
  for (auto& [name, p] : ha.named_parameters())
    if (name.find("weight") != std::string::npos) {
      Var v = p;
      v.value_mut().zero();
    }
  Tensor y(Shape{1, 4, 8, 8}, 0.0);
  Tensor z = ha.forward(Var(y)).value();
  for (int c = 0; c < 4; ++c) {
    const double v0 = z.at4(0, c, 0, 0);
    for (int i = 0; i < z.dim(2); ++i)
      for (int j = 0; j < z.dim(3); ++j)
        CHECK(z.at4(0, c, i, j) == doctest::Approx(v0));
  }
}

TEST_CASE("entropy parameters: floor, shapes, determinism") {
  Rng rng(43);
  EntropyParameters ep(4, rng);
  Tensor hf = Tensor::randn({1, 8, 3, 3}, rng);
  Tensor cf = Tensor::randn({1, 8, 3, 3}, rng);
  auto p1 = ep.forward(Var(hf), Var(cf));
  auto p2 = ep.forward(Var(hf), Var(cf));
  CHECK(p1.mu.shape() == Shape{1, 4, 3, 3});
  CHECK(p1.sigma.shape() == Shape{1, 4, 3, 3});
  CHECK(t_max_abs_diff(p1.mu.value(), p2.mu.value()) == 0.0);
  for (int64_t i = 0; i < p1.sigma.numel(); ++i)
    CHECK(p1.sigma.value()[i] >= kSigmaMin);
  // pushing the raw head far negative floors sigma at 0.11
  ep.c2->bias.value_mut().fill(-1e9);
  auto p3 = ep.forward(Var(hf), Var(cf));
  for (int64_t i = 0; i < p3.sigma.numel(); ++i)
    CHECK(p3.sigma.value()[i] == doctest::Approx(kSigmaMin));
  Tensor bad = Tensor::randn({1, 8, 2, 2}, rng);
  CHECK_THROWS_AS(ep.forward(Var(hf), Var(bad)), Error);
}

TEST_CASE("gaussian_rate pinned values") {
  // sigma=1: p = Phi(0.5) - Phi(-0.5) = 0.382925, bits = 1.38486
  Tensor y = Tensor::scalar(0.0), mu = Tensor::scalar(0.0);
  double bits1 = gaussian_bits_value(y, mu, Tensor::scalar(1.0));
  CHECK(bits1 == doctest::Approx(1.38486).epsilon(1e-4));
  double p1 = gaussian_interval_prob(0.0, 0.0, 1.0);
  CHECK(p1 == doctest::Approx(0.382925).epsilon(1e-5));
  // sigma=0.5: p = 0.682689, bits = 0.55075
  double bits05 = gaussian_bits_value(y, mu, Tensor::scalar(0.5));
  CHECK(bits05 == doctest::Approx(0.55075).epsilon(1e-4));
}

TEST_CASE("gaussian_rate additivity over elements") {
  Rng rng(44);
  Tensor y = t_round(Tensor::randn({1, 2, 3, 3}, rng, 2.0));
  Tensor mu = Tensor::randn({1, 2, 3, 3}, rng);
  Tensor sg = Tensor::rand_uniform({1, 2, 3, 3}, rng, 0.2, 3.0);
  double total = gaussian_bits_value(y, mu, sg);
  double acc = 0;
  for (int64_t i = 0; i < y.numel(); ++i)
    acc += gaussian_bits_value(Tensor::scalar(y[i]), Tensor::scalar(mu[i]),
                               Tensor::scalar(sg[i]));
  CHECK(total == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("gaussian_rate invariances") {
  Rng rng(45);
  // integer co-shift of (y, mu)
  for (int c : {-3, 1, 7}) {
    double a = gaussian_bits_value(Tensor::scalar(2.0), Tensor::scalar(0.3),
                                   Tensor::scalar(0.8));
    double b = gaussian_bits_value(Tensor::scalar(2.0 + c),
                                   Tensor::scalar(0.3 + c), Tensor::scalar(0.8));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
  // monotone decreasing in sigma at y == mu
  double prev = 1e9;
  for (double s : {0.11, 0.3, 0.7, 1.5, 3.0, 8.0}) {
    double bits = gaussian_bits_value(Tensor::scalar(1.0), Tensor::scalar(1.0),
                                      Tensor::scalar(s));
    CHECK(bits < prev);
    prev = bits;
  }
  (void)rng;
}

TEST_CASE("likelihood floor caps per-element bits at 16") {
  double bits = gaussian_bits_value(Tensor::scalar(100.0), Tensor::scalar(0.0),
                                    Tensor::scalar(0.11));
  CHECK(bits == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("gaussian_rate gradients vs finite differences") {
  Rng rng(46);
  Var y(t_round(Tensor::randn({1, 2, 4, 4}, rng, 1.5)), true);
  Var mu(Tensor::randn({1, 2, 4, 4}, rng, 0.5), true);
  Var sg(Tensor::rand_uniform({1, 2, 4, 4}, rng, 0.3, 2.0), true);
  auto loss = [&] { return gaussian_bits(y, mu, sg); };
  CHECK(max_grad_error({y, mu, sg}, loss) < 1e-3);
}

TEST_CASE("quantize: round and noise") {
  CHECK(quantize_round(Tensor::scalar(0.49))[0] == doctest::Approx(0.0));
  CHECK(quantize_round(Tensor::scalar(0.51))[0] == doctest::Approx(1.0));
  Rng rng(47);
  Tensor y = Tensor::randn({1, 1, 16, 16}, rng, 3.0);
  Var noisy = quantize_noise(Var(y), rng);
  for (int64_t i = 0; i < y.numel(); ++i)
    CHECK(std::fabs(noisy.value()[i] - y[i]) <= 0.5);
  // noise mode keeps identity gradients
  Var yv(y.clone(), true);
  Var loss = ops::sum(quantize_noise(yv, rng));
  loss.backward();
  for (int64_t i = 0; i < y.numel(); ++i)
    CHECK(yv.grad()[i] == doctest::Approx(1.0));
}

TEST_CASE("noise-quantized rate approximates rounded rate (Monte Carlo)") {
  Rng rng(48);
  const int n = 10000;
  Tensor mu(Shape{n}, 0.0), sg(Shape{n}, 1.0);
  Tensor y(Shape{n});
  for (int i = 0; i < n; ++i) y[i] = rng.normal();
  Tensor rounded = t_round(y);
  const double bits_round = gaussian_bits_value(rounded, mu, sg);
  Tensor noisy(Shape{n});
  for (int i = 0; i < n; ++i) noisy[i] = y[i] + rng.uniform() - 0.5;
  const double bits_noise = gaussian_bits_value(noisy, mu, sg);
  CHECK(std::fabs(bits_noise - bits_round) / bits_round < 0.05);
}

TEST_CASE("factorized prior: monotone cdf, floor bound, flat init") {
  Rng rng(49);
  FactorizedPrior fp(3, rng);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> xs;
    for (double x = -30; x <= 30; x += 0.25) xs.push_back(x);
    auto cdf = fp.channel_cdf_values(c, xs);
    for (size_t i = 1; i < cdf.size(); ++i) CHECK(cdf[i] >= cdf[i - 1]);
    CHECK(cdf.front() >= 0.0);
    CHECK(cdf.back() <= 1.0);
  }
  // near-equal bits for -1,0,1 before training (per-symbol, one channel)
  FactorizedPrior fp1(1, rng);
  double lo = 1e30, hi = 0;
  for (int v = -1; v <= 1; ++v) {
    Tensor one(Shape{1, 1, 1, 1}, double(v));
    const double bits = fp1.bits_value(one);
    lo = std::min(lo, bits);
    hi = std::max(hi, bits);
    CHECK(bits <= 16.0 + 1e-9);  // likelihood floor bound
  }
  CHECK(hi / lo < 1.05);
}

TEST_CASE("factorized prior gradient check") {
  Rng rng(50);
  FactorizedPrior fp(2, rng);
  Var z(Tensor::randn({1, 2, 2, 3}, rng, 2.0), true);
  auto loss = [&] { return fp.bits(z); };
  std::vector<Var> inputs = {z};
  for (auto& p : fp.parameters()) inputs.push_back(p);
  CHECK(max_grad_error(inputs, loss, 1e-5, 64) < 1e-3);
}

TEST_CASE("rate of a partitioned tensor equals the sum of parts") {
  Rng rng(51);
  EntropyUnit eu(4, rng);
  Tensor y = Tensor::randn({1, 4, 4, 4}, rng, 2.0);
  Tensor mu(Shape{1, 4, 4, 4}, 0.1);
  Tensor sg(Shape{1, 4, 4, 4}, 0.9);
  const double whole = gaussian_bits_value(y, mu, sg);
  double parts = 0;
  // split along width into two halves
  for (int half = 0; half < 2; ++half) {
    Tensor yp(Shape{1, 4, 4, 2}), mp(Shape{1, 4, 4, 2}), sp(Shape{1, 4, 4, 2});
    for (int c = 0; c < 4; ++c)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) {
          yp.at4(0, c, i, j) = y.at4(0, c, i, 2 * half + j);
          mp.at4(0, c, i, j) = mu.at4(0, c, i, 2 * half + j);
          sp.at4(0, c, i, j) = sg.at4(0, c, i, 2 * half + j);
        }
    parts += gaussian_bits_value(yp, mp, sp);
  }
  CHECK(whole == doctest::Approx(parts).epsilon(1e-12));
}

TEST_SUITE_END();
