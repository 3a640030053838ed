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

#ifndef RAWTOBIT_TESTS_GRADCHECK_HPP_
#define RAWTOBIT_TESTS_GRADCHECK_HPP_

#include <functional>
#include <vector>

#include "rawtobit/autograd.hpp"

namespace rtb_test {

// Central-difference check of analytic gradients. loss_fn must rebuild the
// graph from the live values of `inputs` on every call. Returns the largest
// symmetric relative error over all checked elements.
inline double max_grad_error(std::vector<rtb::Var> inputs,
                             const std::function<rtb::Var()>& loss_fn,
                             double eps = 1e-5, int64_t max_checks_per_input = 256) {
  using rtb::Tensor;
  rtb::Var loss = loss_fn();
  for (auto& v : inputs) v.zero_grad();
  loss.backward();
  std::vector<Tensor> analytic;
  for (auto& v : inputs)
    analytic.push_back(v.has_grad() ? v.grad().clone()
                                    : Tensor(v.value().shape()));

  double worst = 0;
  for (size_t pi = 0; pi < inputs.size(); ++pi) {
    rtb::Var& v = inputs[pi];
    const int64_t n = v.numel();
    const int64_t stride = std::max<int64_t>(1, n / max_checks_per_input);
    for (int64_t i = 0; i < n; i += stride) {
      const double orig = v.value()[i];
      double fplus, fminus;
      {
        rtb::NoGradGuard ng;
        v.value_mut()[i] = orig + eps;
        fplus = loss_fn().item();
        v.value_mut()[i] = orig - eps;
        fminus = loss_fn().item();
        v.value_mut()[i] = orig;
      }
      const double fd = (fplus - fminus) / (2 * eps);
      const double an = analytic[pi][i];
      const double err = std::fabs(an - fd) / (std::fabs(an) + std::fabs(fd) + 1e-6);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace rtb_test

#endif  // RAWTOBIT_TESTS_GRADCHECK_HPP_
