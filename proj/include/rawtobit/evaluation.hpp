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

#ifndef RAWTOBIT_EVALUATION_HPP_
#define RAWTOBIT_EVALUATION_HPP_

#include <string>
#include <vector>

#include "rawtobit/data.hpp"
#include "rawtobit/networks.hpp"

namespace rtb {

// -10 log10(MSE) on [0,1] data; +inf sentinel for identical images.
double psnr_db(const Tensor& a, const Tensor& b);

// 8 * file_bytes / (H * W); H,W are the sRGB-resolution dims.
double bpp_of(size_t file_bytes, int height, int width);

struct RdPoint {
  std::string system;
  double lambda = 0;
  double bpp = 0;
  double psnr = 0;
  int image_count = 0;
};

struct RdSweepResult {
  std::vector<RdPoint> points;
  std::vector<std::string> warnings;
  // Mean PSNR of the uncompressed ISP-stage output; NaN unless a cascaded
  // checkpoint was swept. Overlaid as the bound on the plot.
  double cascaded_ceiling_psnr = std::numeric_limits<double>::quiet_NaN();
  std::string csv_path, svg_path;
};

// Encodes and decodes every test image through every checkpoint, averages
// per-image PSNR and bpp, sorts points by bpp, and emits CSV + SVG.
RdSweepResult rd_sweep(const std::vector<std::string>& checkpoint_paths,
                       const std::vector<PairRecord>& test_pairs,
                       const std::string& out_dir);

void write_rd_csv(const std::string& path, const std::vector<RdPoint>& points);
std::vector<RdPoint> read_rd_csv(const std::string& path);

// Per-pixel mean absolute error across channels, mapped onto [0,1] with a
// fixed full-scale error so different methods render comparably.
constexpr double kErrorMapFullScale = 0.25;
Tensor error_map(const Tensor& ground_truth, const Tensor& recon,
                 double full_scale = kErrorMapFullScale);

// --- plotting ---------------------------------------------------------------

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool dashed = false;
};

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series);

void plot_rd_svg(const std::string& path, const std::vector<RdPoint>& points,
                 double cascaded_ceiling_psnr);

// One series per CSV: the named y column against the x column.
void plot_csv_svg(const std::string& svg_path,
                  const std::vector<std::pair<std::string, std::string>>& csv_and_label,
                  const std::string& x_col, const std::string& y_col,
                  const std::string& title);

}  // namespace rtb

#endif  // RAWTOBIT_EVALUATION_HPP_
