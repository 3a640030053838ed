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

#ifndef RAWTOBIT_CONV_KERNELS_HPP_
#define RAWTOBIT_CONV_KERNELS_HPP_

#include "rawtobit/tensor.hpp"

namespace rtb {

// im2col + GEMM convolution kernels. Column buffers are chunked over output
// positions so full-resolution decoders stay within a small memory budget.

int conv_out_dim(int in, int k, int stride, int pad);
int tconv_out_dim(int in, int k, int stride, int pad, int out_pad);

// x: [N,Ci,H,W], w: [Co,Ci,k,k], bias: [Co] or empty -> [N,Co,OH,OW]
Tensor conv2d_fwd(const Tensor& x, const Tensor& w, const Tensor& b,
                  int stride, int pad);
Tensor conv2d_bwd_input(const Tensor& dout, const Tensor& w, const Shape& xshape,
                        int stride, int pad);
void conv2d_bwd_params(const Tensor& dout, const Tensor& x, Tensor& dw,
                       Tensor& db, int stride, int pad);

// x: [N,Ci,H,W], w: [Ci,Co,k,k], bias: [Co] -> [N,Co,OH,OW]
Tensor tconv2d_fwd(const Tensor& x, const Tensor& w, const Tensor& b,
                   int stride, int pad, int out_pad);
Tensor tconv2d_bwd_input(const Tensor& dout, const Tensor& w, const Shape& xshape,
                         int stride, int pad);
void tconv2d_bwd_params(const Tensor& dout, const Tensor& x, Tensor& dw,
                        Tensor& db, int stride, int pad);

// C = alpha * op(A) * op(B) + beta * C, row-major.
void gemm_rm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
             const double* a, int lda, const double* b, int ldb, double beta,
             double* c, int ldc);

}  // namespace rtb

#endif  // RAWTOBIT_CONV_KERNELS_HPP_
