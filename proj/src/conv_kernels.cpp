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

#include "rawtobit/conv_kernels.hpp"

#include <cblas.h>

#include <algorithm>
#include <cstring>
#include <vector>

namespace rtb {

void gemm_rm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
             const double* a, int lda, const double* b, int ldb, double beta,
             double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
              ldb, beta, c, ldc);
}

int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

int tconv_out_dim(int in, int k, int stride, int pad, int out_pad) {
  return (in - 1) * stride - 2 * pad + k + out_pad;
}

namespace {

constexpr int64_t kColBudgetBytes = 64ll << 20;

int64_t chunk_cols(int64_t rows, int64_t total) {
  int64_t c = std::max<int64_t>(1, kColBudgetBytes / 8 / std::max<int64_t>(1, rows));
  return std::min(c, total);
}

// Gathers kernel windows for grid positions [p0,p1) of a (grid_h x grid_w)
// sampling grid into col [C*k*k, p1-p0]. Window top-left for grid position
// (gi,gj) is (gi*stride - pad, gj*stride - pad) in the source image.
void im2col_chunk(const double* x, int C, int H, int W, int k, int stride,
                  int pad, int grid_w, int64_t p0, int64_t p1, double* col) {
  const int64_t cols = p1 - p0;
  for (int c = 0; c < C; ++c) {
    const double* xc = x + int64_t(c) * H * W;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        double* row = col + ((int64_t(c) * k + ki) * k + kj) * cols;
        for (int64_t p = p0; p < p1; ++p) {
          const int gi = int(p / grid_w), gj = int(p % grid_w);
          const int ii = gi * stride + ki - pad;
          const int jj = gj * stride + kj - pad;
          row[p - p0] = (ii >= 0 && ii < H && jj >= 0 && jj < W)
                            ? xc[int64_t(ii) * W + jj]
                            : 0.0;
        }
      }
    }
  }
}

// Adjoint of im2col_chunk: scatter-accumulates col back into x.
void col2im_chunk(const double* col, int C, int H, int W, int k, int stride,
                  int pad, int grid_w, int64_t p0, int64_t p1, double* x) {
  const int64_t cols = p1 - p0;
  for (int c = 0; c < C; ++c) {
    double* xc = x + int64_t(c) * H * W;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const double* row = col + ((int64_t(c) * k + ki) * k + kj) * cols;
        for (int64_t p = p0; p < p1; ++p) {
          const int gi = int(p / grid_w), gj = int(p % grid_w);
          const int ii = gi * stride + ki - pad;
          const int jj = gj * stride + kj - pad;
          if (ii >= 0 && ii < H && jj >= 0 && jj < W)
            xc[int64_t(ii) * W + jj] += row[p - p0];
        }
      }
    }
  }
}

void add_bias(Tensor& out, const Tensor& b) {
  if (!b.defined()) return;
  const int N = out.dim(0), C = out.dim(1);
  const int64_t hw = int64_t(out.dim(2)) * out.dim(3);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      double* p = out.data() + (int64_t(n) * C + c) * hw;
      const double bv = b[c];
      for (int64_t i = 0; i < hw; ++i) p[i] += bv;
    }
}

}  // namespace

Tensor conv2d_fwd(const Tensor& x, const Tensor& w, const Tensor& b,
                  int stride, int pad) {
  const int N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = w.dim(0), k = w.dim(2);
  if (w.dim(1) != Ci)
    fail(ErrorCode::kInvalidShape, "conv2d: weight/input channel mismatch");
  const int OH = conv_out_dim(H, k, stride, pad);
  const int OW = conv_out_dim(W, k, stride, pad);
  if (OH <= 0 || OW <= 0) fail(ErrorCode::kInvalidShape, "conv2d: empty output");
  Tensor out(Shape{N, Co, OH, OW});

  const int64_t rows = int64_t(Ci) * k * k, total = int64_t(OH) * OW;
  const int64_t chunk = chunk_cols(rows, total);
  std::vector<double> col(size_t(rows * chunk));
  for (int n = 0; n < N; ++n) {
    const double* xn = x.data() + int64_t(n) * Ci * H * W;
    double* on = out.data() + int64_t(n) * Co * total;
    for (int64_t p0 = 0; p0 < total; p0 += chunk) {
      const int64_t p1 = std::min(total, p0 + chunk);
      im2col_chunk(xn, Ci, H, W, k, stride, pad, OW, p0, p1, col.data());
      gemm_rm(false, false, Co, int(p1 - p0), int(rows), 1.0, w.data(),
              int(rows), col.data(), int(p1 - p0), 0.0, on + p0, int(total));
    }
  }
  add_bias(out, b);
  return out;
}

Tensor conv2d_bwd_input(const Tensor& dout, const Tensor& w, const Shape& xshape,
                        int stride, int pad) {
  const int N = xshape[0], Ci = xshape[1], H = xshape[2], W = xshape[3];
  const int Co = w.dim(0), k = w.dim(2);
  const int OH = dout.dim(2), OW = dout.dim(3);
  Tensor dx(xshape);
  const int64_t rows = int64_t(Ci) * k * k, total = int64_t(OH) * OW;
  const int64_t chunk = chunk_cols(rows, total);
  std::vector<double> col(size_t(rows * chunk));
  for (int n = 0; n < N; ++n) {
    const double* don = dout.data() + int64_t(n) * Co * total;
    double* dxn = dx.data() + int64_t(n) * Ci * H * W;
    for (int64_t p0 = 0; p0 < total; p0 += chunk) {
      const int64_t p1 = std::min(total, p0 + chunk);
      // col = W^T * dout_chunk
      gemm_rm(true, false, int(rows), int(p1 - p0), Co, 1.0, w.data(),
              int(rows), don + p0, int(total), 0.0, col.data(), int(p1 - p0));
      col2im_chunk(col.data(), Ci, H, W, k, stride, pad, OW, p0, p1, dxn);
    }
  }
  return dx;
}

void conv2d_bwd_params(const Tensor& dout, const Tensor& x, Tensor& dw,
                       Tensor& db, int stride, int pad) {
  const int N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = dw.dim(0), k = dw.dim(2);
  const int OH = dout.dim(2), OW = dout.dim(3);
  const int64_t rows = int64_t(Ci) * k * k, total = int64_t(OH) * OW;
  const int64_t chunk = chunk_cols(rows, total);
  std::vector<double> col(size_t(rows * chunk));
  for (int n = 0; n < N; ++n) {
    const double* xn = x.data() + int64_t(n) * Ci * H * W;
    const double* don = dout.data() + int64_t(n) * Co * total;
    for (int64_t p0 = 0; p0 < total; p0 += chunk) {
      const int64_t p1 = std::min(total, p0 + chunk);
      im2col_chunk(xn, Ci, H, W, k, stride, pad, OW, p0, p1, col.data());
      // dW += dout_chunk * col^T
      gemm_rm(false, true, Co, int(rows), int(p1 - p0), 1.0, don + p0,
              int(total), col.data(), int(p1 - p0), 1.0, dw.data(), int(rows));
    }
  }
  if (db.defined()) {
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < Co; ++c) {
        const double* p = dout.data() + (int64_t(n) * Co + c) * total;
        double s = 0;
        for (int64_t i = 0; i < total; ++i) s += p[i];
        db[c] += s;
      }
  }
}

Tensor tconv2d_fwd(const Tensor& x, const Tensor& w, const Tensor& b,
                   int stride, int pad, int out_pad) {
  const int N = x.dim(0), Ci = x.dim(1), IH = x.dim(2), IW = x.dim(3);
  const int Co = w.dim(1), k = w.dim(2);
  if (w.dim(0) != Ci)
    fail(ErrorCode::kInvalidShape, "tconv2d: weight/input channel mismatch");
  const int OH = tconv_out_dim(IH, k, stride, pad, out_pad);
  const int OW = tconv_out_dim(IW, k, stride, pad, out_pad);
  if (OH <= 0 || OW <= 0) fail(ErrorCode::kInvalidShape, "tconv2d: empty output");
  Tensor out(Shape{N, Co, OH, OW});

  const int64_t rows = int64_t(Co) * k * k, total = int64_t(IH) * IW;
  const int64_t chunk = chunk_cols(rows, total);
  std::vector<double> col(size_t(rows * chunk));
  for (int n = 0; n < N; ++n) {
    const double* xn = x.data() + int64_t(n) * Ci * total;
    double* on = out.data() + int64_t(n) * Co * OH * OW;
    for (int64_t p0 = 0; p0 < total; p0 += chunk) {
      const int64_t p1 = std::min(total, p0 + chunk);
      // col = W^T * x_chunk, W viewed as [Ci, Co*k*k]
      gemm_rm(true, false, int(rows), int(p1 - p0), Ci, 1.0, w.data(),
              int(rows), xn + p0, int(total), 0.0, col.data(), int(p1 - p0));
      col2im_chunk(col.data(), Co, OH, OW, k, stride, pad, IW, p0, p1, on);
    }
  }
  add_bias(out, b);
  return out;
}

Tensor tconv2d_bwd_input(const Tensor& dout, const Tensor& w, const Shape& xshape,
                         int stride, int pad) {
  const int N = xshape[0], Ci = xshape[1], IH = xshape[2], IW = xshape[3];
  const int Co = w.dim(1), k = w.dim(2);
  const int OH = dout.dim(2), OW = dout.dim(3);
  Tensor dx(xshape);
  const int64_t rows = int64_t(Co) * k * k, total = int64_t(IH) * IW;
  const int64_t chunk = chunk_cols(rows, total);
  std::vector<double> col(size_t(rows * chunk));
  for (int n = 0; n < N; ++n) {
    const double* don = dout.data() + int64_t(n) * Co * OH * OW;
    double* dxn = dx.data() + int64_t(n) * Ci * total;
    for (int64_t p0 = 0; p0 < total; p0 += chunk) {
      const int64_t p1 = std::min(total, p0 + chunk);
      im2col_chunk(don, Co, OH, OW, k, stride, pad, IW, p0, p1, col.data());
      // dx_chunk = W * col, into columns [p0,p1) of dx [Ci, total]
      gemm_rm(false, false, Ci, int(p1 - p0), int(rows), 1.0, w.data(),
              int(rows), col.data(), int(p1 - p0), 0.0, dxn + p0, int(total));
    }
  }
  return dx;
}

void tconv2d_bwd_params(const Tensor& dout, const Tensor& x, Tensor& dw,
                        Tensor& db, int stride, int pad) {
  const int N = x.dim(0), Ci = x.dim(1), IH = x.dim(2), IW = x.dim(3);
  const int Co = dw.dim(1), k = dw.dim(2);
  const int OH = dout.dim(2), OW = dout.dim(3);
  const int64_t rows = int64_t(Co) * k * k, total = int64_t(IH) * IW;
  const int64_t chunk = chunk_cols(rows, total);
  std::vector<double> col(size_t(rows * chunk));
  for (int n = 0; n < N; ++n) {
    const double* xn = x.data() + int64_t(n) * Ci * total;
    const double* don = dout.data() + int64_t(n) * Co * OH * OW;
    for (int64_t p0 = 0; p0 < total; p0 += chunk) {
      const int64_t p1 = std::min(total, p0 + chunk);
      im2col_chunk(don, Co, OH, OW, k, stride, pad, IW, p0, p1, col.data());
      // dW += x_chunk * col^T, dW viewed as [Ci, Co*k*k]
      gemm_rm(false, true, Ci, int(rows), int(p1 - p0), 1.0, xn + p0,
              int(total), col.data(), int(p1 - p0), 1.0, dw.data(), int(rows));
    }
  }
  if (db.defined()) {
    const int64_t ohw = int64_t(OH) * OW;
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < Co; ++c) {
        const double* p = dout.data() + (int64_t(n) * Co + c) * ohw;
        double s = 0;
        for (int64_t i = 0; i < ohw; ++i) s += p[i];
        db[c] += s;
      }
  }
}

}  // namespace rtb
