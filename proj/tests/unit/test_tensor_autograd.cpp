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
#include "rawtobit/conv_kernels.hpp"

using namespace rtb;
using rtb_test::max_grad_error;

TEST_SUITE_BEGIN("tensor_autograd");

TEST_CASE("conv2d matches a direct loop") {
  Rng rng(11);
  Tensor x = Tensor::randn({1, 2, 5, 6}, rng);
  Tensor w = Tensor::randn({3, 2, 3, 3}, rng);
  Tensor b = Tensor::randn({3}, rng);
  Tensor out = conv2d_fwd(x, w, b, 2, 1);
  CHECK(out.shape() == Shape{1, 3, 3, 3});
  // direct evaluation at every output position
  for (int co = 0; co < 3; ++co)
    for (int oi = 0; oi < 3; ++oi)
      for (int oj = 0; oj < 3; ++oj) {
        double acc = b[co];
        for (int ci = 0; ci < 2; ++ci)
          for (int ki = 0; ki < 3; ++ki)
            for (int kj = 0; kj < 3; ++kj) {
              const int ii = oi * 2 + ki - 1, jj = oj * 2 + kj - 1;
              if (ii < 0 || ii >= 5 || jj < 0 || jj >= 6) continue;
              acc += w.at4(co, ci, ki, kj) * x.at4(0, ci, ii, jj);
            }
        CHECK(out.at4(0, co, oi, oj) == doctest::Approx(acc).epsilon(1e-12));
      }
}

TEST_CASE("tconv2d shape and adjointness") {
  Rng rng(12);
  Tensor x = Tensor::randn({1, 3, 4, 4}, rng);
  Tensor w = Tensor::randn({3, 2, 3, 3}, rng);
  Tensor out = tconv2d_fwd(x, w, Tensor(), 2, 1, 1);
  CHECK(out.shape() == Shape{1, 2, 8, 8});
  // <conv(u), x> == <u, tconv(x)>: the same [3,2,k,k] storage acts as a
  // conv weight mapping 2ch -> 3ch and a tconv weight mapping 3ch -> 2ch.
  Tensor u = Tensor::randn({1, 2, 8, 8}, rng);
  Tensor conv_u = conv2d_fwd(u, w, Tensor(), 2, 1);
  CHECK(std::fabs(t_dot(conv_u, x) - t_dot(u, out)) <
        1e-9 * (1 + std::fabs(t_dot(u, out))));
}

TEST_CASE("elementwise op gradients") {
  Rng rng(13);
  Var x(Tensor::randn({2, 3}, rng), true);
  Var y(Tensor::rand_uniform({2, 3}, rng, 0.5, 2.0), true);
  auto loss = [&] {
    using namespace ops;
    Var a = mul(x, y);
    Var b = div(sigmoid(a), add_scalar(square(y), 1.0));
    Var c = add(erf(x), mul_scalar(softplus(b), 1.7));
    return sum(mul(c, c));
  };
  CHECK(max_grad_error({x, y}, loss) < 1e-6);
}

TEST_CASE("reduction and reshape gradients") {
  Rng rng(14);
  Var x(Tensor::randn({1, 4, 2, 2}, rng), true);
  auto loss = [&] {
    using namespace ops;
    Var g = global_avg_pool(x);
    Var s = channel_sum(square(x));
    return add(sum(mul(g, g)), mean(s));
  };
  CHECK(max_grad_error({x}, loss) < 1e-6);
}

TEST_CASE("conv and tconv gradients vs finite differences") {
  Rng rng(15);
  Var x(Tensor::randn({2, 2, 6, 6}, rng), true);
  Var w(Tensor::randn({3, 2, 3, 3}, rng, 0.4), true);
  Var b(Tensor::randn({3}, rng), true);
  auto loss = [&] {
    using namespace ops;
    return sum(square(conv2d(x, w, b, 2, 1)));
  };
  CHECK(max_grad_error({x, w, b}, loss) < 1e-6);

  Var wt(Tensor::randn({2, 3, 3, 3}, rng, 0.4), true);
  Var bt(Tensor::randn({3}, rng), true);
  auto loss_t = [&] {
    using namespace ops;
    return sum(square(conv_transpose2d(x, wt, bt, 2, 1, 1)));
  };
  CHECK(max_grad_error({x, wt, bt}, loss_t) < 1e-6);
}

TEST_CASE("pixel shuffle, slicing, concat gradients") {
  Rng rng(16);
  Var x(Tensor::randn({1, 8, 3, 3}, rng), true);
  Var y(Tensor::randn({1, 2, 6, 6}, rng), true);
  auto loss = [&] {
    using namespace ops;
    Var up = pixel_shuffle2(x);                   // [1,2,6,6]
    Var cat = concat_ch(up, y);                   // [1,4,6,6]
    Var left = slice_ch(cat, 0, 2);
    Var right = slice_ch(cat, 2, 4);
    Var crop = crop_hw(mul(left, right), 5, 4);
    return sum(square(crop));
  };
  CHECK(max_grad_error({x, y}, loss) < 1e-6);
}

TEST_CASE("lower_bound gradient rule") {
  // Above the bound gradients pass; below they pass only when pushing up.
  Var x(Tensor::from({3}, {0.5, -1.0, -2.0}), true);
  Var w(Tensor::from({3}, {1.0, 1.0, -1.0}), true);
  using namespace ops;
  Var y = lower_bound(x, 0.0);
  Var loss = sum(mul(w, y));
  loss.backward();
  // x0 above bound: grad w0=1 passes. x1 below, incoming grad=1 (>0): blocked.
  // x2 below, incoming grad=-1 (<0, would push x up): passes.
  CHECK(x.grad()[0] == doctest::Approx(1.0));
  CHECK(x.grad()[1] == doctest::Approx(0.0));
  CHECK(x.grad()[2] == doctest::Approx(-1.0));
}

TEST_CASE("matmul and colvec gradients") {
  Rng rng(17);
  Var a(Tensor::randn({3, 4}, rng), true);
  Var b(Tensor::randn({4, 5}, rng), true);
  Var c(Tensor::randn({3}, rng), true);
  auto loss = [&] {
    using namespace ops;
    return sum(square(mul_colvec(add_colvec(matmul(a, b), c), c)));
  };
  CHECK(max_grad_error({a, b, c}, loss) < 1e-6);
}

TEST_CASE("grad accumulates across shared consumers") {
  Var x(Tensor::scalar(3.0), true);
  using namespace ops;
  Var y = add(square(x), mul_scalar(x, 4.0));  // x^2 + 4x -> dy/dx = 2x+4 = 10
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(10.0));
}

TEST_CASE("no-grad mode records nothing") {
  Var x(Tensor::scalar(2.0), true);
  NoGradGuard ng;
  Var y = ops::square(x);
  CHECK_FALSE(y.requires_grad());
}

TEST_SUITE_END();
