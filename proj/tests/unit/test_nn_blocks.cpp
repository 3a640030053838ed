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
#include "rawtobit/nn.hpp"

using namespace rtb;
using rtb_test::max_grad_error;

TEST_SUITE_BEGIN("nn_blocks");

namespace {

Var gdn_with(const Tensor& x, const Tensor& beta, const Tensor& gamma_cc,
             bool inverse) {
  const int c = beta.dim(0);
  Var gv(gamma_cc.reshaped({c, c, 1, 1}));
  return gdn_eval(Var(x), Var(beta), gv, inverse);
}

}  // namespace

TEST_CASE("gdn identity parameters pass input through") {
  Rng rng(21);
  Tensor x = Tensor::randn({1, 3, 4, 4}, rng);
  Tensor beta(Shape{3}, 1.0);
  Tensor gamma(Shape{3, 3}, 0.0);
  Var y = gdn_with(x, beta, gamma, false);
  CHECK(t_max_abs_diff(y.value(), x) < 1e-15);
}

TEST_CASE("gdn scalar closed form") {
  // C=1, x=2, beta=0, gamma=1 -> 2 / sqrt(4) = 1
  Tensor x(Shape{1, 1, 1, 1}, 2.0);
  Var y = gdn_with(x, Tensor(Shape{1}, 0.0), Tensor(Shape{1, 1}, 1.0), false);
  CHECK(y.value()[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inverse gdn matches a scalar loop oracle") {
  Rng rng(22);
  const int C = 3, H = 2, W = 2;
  Tensor x = Tensor::randn({1, C, H, W}, rng);
  Tensor beta = Tensor::rand_uniform({C}, rng, 0.2, 1.5);
  Tensor gamma = Tensor::rand_uniform({C, C}, rng, 0.0, 0.4);
  Var y = gdn_with(x, beta, gamma, true);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) {
        double pool = beta[c];
        for (int s = 0; s < C; ++s) {
          const double xs = x.at4(0, s, i, j);
          pool += gamma[int64_t(c) * C + s] * xs * xs;
        }
        CHECK(y.value().at4(0, c, i, j) ==
              doctest::Approx(x.at4(0, c, i, j) * std::sqrt(pool)).epsilon(1e-12));
      }
}

TEST_CASE("gdn forward output bounded by |x|/sqrt(beta_min)") {
  Rng rng(23);
  Gdn gdn(4, false);
  Tensor x = Tensor::randn({2, 4, 5, 5}, rng, 3.0);
  Var y = gdn.forward(Var(x));
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(std::fabs(y.value()[i]) <=
          std::fabs(x[i]) / std::sqrt(Gdn::kBetaMin) + 1e-9);
}

TEST_CASE("gdn layer gradient check (both modes)") {
  Rng rng(24);
  for (bool inverse : {false, true}) {
    Gdn gdn(2, inverse);
    Var x(Tensor::randn({1, 2, 8, 8}, rng), true);
    auto loss = [&] { return ops::sum(ops::square(gdn.forward(x))); };
    std::vector<Var> inputs = {x, gdn.beta_raw, gdn.gamma_raw};
    CHECK(max_grad_error(inputs, loss) < 1e-3);
  }
}

TEST_CASE("rcab zero branch is the identity") {
  Rng rng(25);
  Rcab rcab(4, 2, rng);
  for (auto& [name, p] : rcab.named_parameters()) {
    Var v = p;
    v.value_mut().zero();
  }
  Tensor x = Tensor::randn({1, 4, 3, 3}, rng);
  Var y = rcab.forward(Var(x));
  CHECK(t_max_abs_diff(y.value(), x) == 0.0);
}

TEST_CASE("rcag hand-computed chain on a 1x1 input") {
  Rng rng(26);
  Rcag rcag(2, 1, 2, rng);  // one RCAB, 2 channels
  Rcab& b = *rcag.blocks[0];
  // identity 3x3 delta kernels, zero bias
  auto set_identity = [](Conv2d& conv) {
    Tensor& w = conv.weight.value_mut();
    w.zero();
    const int co = w.dim(0), ci = w.dim(1), k = w.dim(2);
    for (int c = 0; c < std::min(co, ci); ++c) w.at4(c, c, k / 2, k / 2) = 1.0;
    if (conv.bias.defined()) conv.bias.value_mut().zero();
  };
  set_identity(*b.conv1);
  set_identity(*b.conv2);
  // force the attention gate to exactly 1.0: zero weights, huge bias
  b.fc1->weight.value_mut().zero();
  b.fc1->bias.value_mut().zero();
  b.fc2->weight.value_mut().zero();
  b.fc2->bias.value_mut().fill(100.0);  // sigmoid(100) == 1.0 in double
  Tensor x = Tensor::from({1, 2, 1, 1}, {0.5, 1.25});
  Var y = rcag.forward(Var(x));
  // rcab: x + identity-chain(x) * 1 = 2x; rcag residual: x + 2x = 3x
  CHECK(y.value()[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(y.value()[1] == doctest::Approx(3.75).epsilon(1e-12));
}

TEST_CASE("rcag keeps shape for arbitrary spatial dims") {
  Rng rng(27);
  Rcag rcag(8, 2, 4, rng);
  for (auto [h, w] : {std::pair{3, 5}, {7, 2}, {1, 1}}) {
    Tensor x = Tensor::randn({2, 8, h, w}, rng);
    CHECK(rcag.forward(Var(x)).shape() == x.shape());
  }
  Tensor bad = Tensor::randn({1, 4, 3, 3}, rng);
  CHECK_THROWS_AS(rcag.forward(Var(bad)), Error);
}

TEST_CASE("rcag gradient check") {
  Rng rng(28);
  Rcag rcag(4, 2, 2, rng);
  Var x(Tensor::randn({1, 4, 5, 5}, rng), true);
  auto loss = [&] { return ops::mean(ops::square(rcag.forward(x))); };
  std::vector<Var> inputs = {x};
  for (auto& p : rcag.parameters()) inputs.push_back(p);
  CHECK(max_grad_error(inputs, loss, 1e-5, 24) < 1e-3);
}

TEST_CASE("masked conv type A: interior tap count") {
  Rng rng(29);
  MaskedConv2d mc(1, 1, 3, rng);
  mc.weight.value_mut().fill(1.0);
  mc.bias.value_mut().zero();
  Tensor x(Shape{1, 1, 5, 5}, 1.0);
  Var y = mc.forward(Var(x));
  // type A 3x3 keeps the 3 taps above and 1 to the left
  CHECK(y.value().at4(0, 0, 2, 2) == doctest::Approx(4.0));
  CHECK(y.value().at4(0, 0, 0, 0) == doctest::Approx(0.0));  // no past taps yet
}

TEST_CASE("masked conv: zero input yields bias only") {
  Rng rng(30);
  MaskedConv2d mc(2, 3, 5, rng);
  Tensor x(Shape{1, 2, 4, 4}, 0.0);
  Var y = mc.forward(Var(x));
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(y.value().at4(0, c, i, j) == doctest::Approx(mc.bias.value()[c]));
}

TEST_CASE("masked conv rejects even kernels") {
  Rng rng(31);
  CHECK_THROWS_AS(MaskedConv2d(1, 1, 4, rng), Error);
}

TEST_CASE("masked conv causality for kernels 3 and 5") {
  Rng base(32);
  for (int k : {3, 5}) {
    MaskedConv2d mc(2, 2, k, base);
    const int H = 7, W = 6;
    Tensor x = Tensor::randn({1, 2, H, W}, base);
    Tensor y0 = mc.forward(Var(x)).value();
    for (int trial = 0; trial < 10; ++trial) {
      const int pi = int(base.below(H)), pj = int(base.below(W));
      const int pc = int(base.below(2));
      Tensor xp = x.clone();
      xp.at4(0, pc, pi, pj) += 1.7;
      Tensor y1 = mc.forward(Var(xp)).value();
      for (int c = 0; c < 2; ++c)
        for (int i = 0; i < H; ++i)
          for (int j = 0; j < W; ++j)
            if (i < pi || (i == pi && j <= pj))
              CHECK(y1.at4(0, c, i, j) == y0.at4(0, c, i, j));
    }
  }
}

TEST_CASE("masked conv gradient check") {
  Rng rng(33);
  MaskedConv2d mc(2, 4, 5, rng);
  Var x(Tensor::randn({1, 2, 8, 8}, rng), true);
  auto loss = [&] { return ops::sum(ops::square(mc.forward(x))); };
  std::vector<Var> inputs = {x, mc.weight, mc.bias};
  CHECK(max_grad_error(inputs, loss, 1e-5, 64) < 1e-3);
}

TEST_CASE("adam converges on a quadratic") {
  Var p(Tensor::from({2}, {5.0, -3.0}), true);
  Adam opt({p}, 0.1);
  for (int i = 0; i < 400; ++i) {
    opt.zero_grad();
    Var loss = ops::sum(ops::square(p));
    loss.backward();
    opt.step();
  }
  CHECK(std::fabs(p.value()[0]) < 1e-2);
  CHECK(std::fabs(p.value()[1]) < 1e-2);
}

TEST_SUITE_END();
