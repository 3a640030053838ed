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

#include "rawtobit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace rtb {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  numel_ = shape_numel(shape_);
  if (numel_ < 0) fail(ErrorCode::kInvalidShape, "negative tensor shape");
  data_ = std::shared_ptr<double[]>(new double[size_t(numel_)]());
}

Tensor::Tensor(Shape shape, double fill_value) : Tensor(std::move(shape)) {
  fill(fill_value);
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  Tensor t(std::move(shape));
  if (int64_t(values.size()) != t.numel())
    fail(ErrorCode::kInvalidShape, "value count does not match shape");
  std::copy(values.begin(), values.end(), t.data());
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t(Shape{1});
  t[0] = v;
  return t;
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = stddev * rng.normal();
  return t;
}

Tensor Tensor::rand_uniform(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double& Tensor::at4(int n, int c, int h, int w) {
  const Shape& s = shape_;
  return data_.get()[((int64_t(n) * s[1] + c) * s[2] + h) * s[3] + w];
}

double Tensor::at4(int n, int c, int h, int w) const {
  const Shape& s = shape_;
  return data_.get()[((int64_t(n) * s[1] + c) * s[2] + h) * s[3] + w];
}

double Tensor::item() const {
  if (numel_ != 1) fail(ErrorCode::kInvalidShape, "item() on non-scalar");
  return data_.get()[0];
}

Tensor Tensor::clone() const {
  if (!defined()) return Tensor();
  Tensor t(shape_);
  std::memcpy(t.data(), data(), size_t(numel_) * sizeof(double));
  return t;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel_)
    fail(ErrorCode::kInvalidShape, "reshape changes element count");
  Tensor t;
  t.shape_ = std::move(shape);
  t.numel_ = numel_;
  t.data_ = data_;
  return t;
}

void Tensor::fill(double v) {
  std::fill(data_.get(), data_.get() + numel_, v);
}

bool Tensor::all_finite() const {
  for (int64_t i = 0; i < numel_; ++i)
    if (!std::isfinite(data_.get()[i])) return false;
  return true;
}

double Tensor::abs_max() const {
  double m = 0;
  for (int64_t i = 0; i < numel_; ++i)
    m = std::max(m, std::fabs(data_.get()[i]));
  return m;
}

namespace {
void check_same(const Tensor& a, const Tensor& b) {
  if (!same_shape(a.shape(), b.shape()))
    fail(ErrorCode::kInvalidShape,
         "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}
}  // namespace

Tensor t_add(const Tensor& a, const Tensor& b) {
  check_same(a, b);
  Tensor o(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) o[i] = a[i] + b[i];
  return o;
}

Tensor t_sub(const Tensor& a, const Tensor& b) {
  check_same(a, b);
  Tensor o(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) o[i] = a[i] - b[i];
  return o;
}

Tensor t_mul(const Tensor& a, const Tensor& b) {
  check_same(a, b);
  Tensor o(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) o[i] = a[i] * b[i];
  return o;
}

Tensor t_scale(const Tensor& a, double s) {
  Tensor o(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) o[i] = a[i] * s;
  return o;
}

Tensor t_round(const Tensor& a) {
  Tensor o(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) o[i] = std::nearbyint(a[i]);
  return o;
}

Tensor t_clamp(const Tensor& a, double lo, double hi) {
  Tensor o(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) o[i] = std::min(hi, std::max(lo, a[i]));
  return o;
}

double t_dot(const Tensor& a, const Tensor& b) {
  check_same(a, b);
  double s = 0;
  for (int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

double t_sum(const Tensor& a) {
  double s = 0;
  for (int64_t i = 0; i < a.numel(); ++i) s += a[i];
  return s;
}

double t_mse(const Tensor& a, const Tensor& b) {
  check_same(a, b);
  double s = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s / double(a.numel());
}

double t_max_abs_diff(const Tensor& a, const Tensor& b) {
  check_same(a, b);
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidShape: return "InvalidShape";
    case ErrorCode::kUnsupportedPattern: return "UnsupportedPattern";
    case ErrorCode::kInvalidMetadata: return "InvalidMetadata";
    case ErrorCode::kPatchTooLarge: return "PatchTooLarge";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kDecodeError: return "DecodeError";
    case ErrorCode::kModelMismatch: return "ModelMismatch";
    case ErrorCode::kMissingK: return "MissingK";
    case ErrorCode::kPadRequired: return "PadRequired";
    case ErrorCode::kNanAbort: return "NanAbort";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

}  // namespace rtb
