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

#ifndef RAWTOBIT_TENSOR_HPP_
#define RAWTOBIT_TENSOR_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rawtobit/errors.hpp"
#include "rawtobit/rng.hpp"

namespace rtb {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);
bool same_shape(const Shape& a, const Shape& b);

// Dense row-major double tensor. Copies share storage; use clone() for a
// deep copy. All network math runs in float64 so analytic gradients can be
// checked against central differences at tight tolerances.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, double fill);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }
  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0);
  static Tensor rand_uniform(Shape shape, Rng& rng, double lo, double hi);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int ndim() const { return int(shape_.size()); }
  int dim(int i) const { return shape_[size_t(i)]; }
  int64_t numel() const { return numel_; }

  double* data() { return data_.get(); }
  const double* data() const { return data_.get(); }
  double& operator[](int64_t i) { return data_.get()[i]; }
  double operator[](int64_t i) const { return data_.get()[i]; }

  // Convenience accessor for [N,C,H,W] tensors.
  double& at4(int n, int c, int h, int w);
  double at4(int n, int c, int h, int w) const;

  double item() const;

  Tensor clone() const;
  Tensor reshaped(Shape shape) const;  // shares storage

  void fill(double v);
  void zero() { fill(0.0); }

  bool all_finite() const;
  double abs_max() const;

 private:
  Shape shape_;
  int64_t numel_ = 0;
  std::shared_ptr<double[]> data_;
};

// Elementwise helpers on raw tensors (no autograd). Out-of-place.
Tensor t_add(const Tensor& a, const Tensor& b);
Tensor t_sub(const Tensor& a, const Tensor& b);
Tensor t_mul(const Tensor& a, const Tensor& b);
Tensor t_scale(const Tensor& a, double s);
Tensor t_round(const Tensor& a);
Tensor t_clamp(const Tensor& a, double lo, double hi);
double t_dot(const Tensor& a, const Tensor& b);
double t_sum(const Tensor& a);
double t_mse(const Tensor& a, const Tensor& b);
double t_max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace rtb

#endif  // RAWTOBIT_TENSOR_HPP_
