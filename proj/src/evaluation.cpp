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

#include "rawtobit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace rtb {

namespace fs = std::filesystem;

double psnr_db(const Tensor& a, const Tensor& b) {
  if (!same_shape(a.shape(), b.shape()))
    fail(ErrorCode::kInvalidShape, "psnr: shape mismatch");
  const double mse = t_mse(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

double bpp_of(size_t file_bytes, int height, int width) {
  if (height <= 0 || width <= 0)
    fail(ErrorCode::kInvalidArgument, "bpp needs positive dims");
  return 8.0 * double(file_bytes) / (double(height) * double(width));
}

Tensor error_map(const Tensor& ground_truth, const Tensor& recon,
                 double full_scale) {
  if (!same_shape(ground_truth.shape(), recon.shape()))
    fail(ErrorCode::kInvalidShape, "error_map: shape mismatch");
  const int C = ground_truth.dim(0), H = ground_truth.dim(1), W = ground_truth.dim(2);
  Tensor out(Shape{1, H, W});
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      double mae = 0;
      for (int c = 0; c < C; ++c)
        mae += std::fabs(ground_truth[(int64_t(c) * H + i) * W + j] -
                         recon[(int64_t(c) * H + i) * W + j]);
      mae /= double(C);
      out[int64_t(i) * W + j] = std::min(1.0, mae / full_scale);
    }
  return out;
}

void write_rd_csv(const std::string& path, const std::vector<RdPoint>& points) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::kIoError, "cannot write: " + path);
  f << "system,lambda,bpp,psnr_db,n_images\n";
  for (const auto& p : points) {
    char buf[160];
    snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%d\n", p.system.c_str(),
             p.lambda, p.bpp, p.psnr, p.image_count);
    f << buf;
  }
}

std::vector<RdPoint> read_rd_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kIoError, "cannot open: " + path);
  std::string line;
  std::getline(f, line);  // header
  std::vector<RdPoint> points;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    RdPoint p;
    std::getline(ss, p.system, ',');
    std::getline(ss, field, ',');
    p.lambda = std::stod(field);
    std::getline(ss, field, ',');
    p.bpp = std::stod(field);
    std::getline(ss, field, ',');
    p.psnr = std::stod(field);
    std::getline(ss, field, ',');
    p.image_count = std::stoi(field);
    points.push_back(p);
  }
  return points;
}

RdSweepResult rd_sweep(const std::vector<std::string>& checkpoint_paths,
                       const std::vector<PairRecord>& test_pairs,
                       const std::string& out_dir) {
  if (checkpoint_paths.empty())
    fail(ErrorCode::kInvalidArgument, "rd_sweep needs at least one checkpoint");
  if (test_pairs.empty())
    fail(ErrorCode::kInvalidArgument, "rd_sweep needs test images");
  fs::create_directories(out_dir);
  RdSweepResult res;
  std::vector<double> ceiling_psnrs;

  for (const auto& path : checkpoint_paths) {
    std::unique_ptr<System> sys;
    try {
      sys = System::load_file(path);
    } catch (const Error& e) {
      res.warnings.push_back("skipping " + path + ": " + e.what());
      continue;
    }
    const SystemKind kind = sys->config().kind;
    double psnr_sum = 0, bpp_sum = 0;
    int counted = 0;
    for (const auto& pair : test_pairs) {
      EncodeResult enc = sys->encode_image(pair.raw.data);
      const auto bytes = serialize_bitstream(enc.stream);
      const double bpp = bpp_of(bytes.size(), int(enc.stream.header.height),
                                int(enc.stream.header.width));
      Tensor recon = sys->decode_stream(enc.stream);
      const Tensor& gt =
          kind == SystemKind::kCompTeacher ? pair.raw.data : pair.srgb.data;
      const double p = psnr_db(t_clamp(gt, 0.0, 1.0), recon);
      if (std::isinf(p)) {
        res.warnings.push_back("infinite PSNR excluded for " +
                               pair.raw.source_id + " via " + path);
      } else {
        psnr_sum += p;
        ++counted;
      }
      bpp_sum += bpp;
      if (kind == SystemKind::kCascaded) {
        NoGradGuard ng;
        Tensor srgb_isp = sys->cascaded()
                              ->isp_forward(Var(pair.raw.data.reshaped(
                                  Shape{1, 4, pair.raw.data.dim(1),
                                        pair.raw.data.dim(2)})))
                              .value();
        srgb_isp = t_clamp(srgb_isp, 0.0, 1.0)
                       .reshaped(pair.srgb.data.shape());
        const double cp = psnr_db(t_clamp(pair.srgb.data, 0.0, 1.0), srgb_isp);
        if (!std::isinf(cp)) ceiling_psnrs.push_back(cp);
      }
    }
    RdPoint point;
    point.system = system_kind_to_string(kind);
    point.lambda = sys->config().lambda;
    point.bpp = bpp_sum / double(test_pairs.size());
    point.psnr = counted > 0 ? psnr_sum / double(counted)
                             : std::numeric_limits<double>::quiet_NaN();
    point.image_count = int(test_pairs.size());
    res.points.push_back(point);
  }

  std::sort(res.points.begin(), res.points.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  if (!ceiling_psnrs.empty()) {
    double s = 0;
    for (double v : ceiling_psnrs) s += v;
    res.cascaded_ceiling_psnr = s / double(ceiling_psnrs.size());
  }
  res.csv_path = out_dir + "/rd.csv";
  res.svg_path = out_dir + "/rd.svg";
  write_rd_csv(res.csv_path, res.points);
  plot_rd_svg(res.svg_path, res.points, res.cascaded_ceiling_psnr);
  return res;
}

// --- SVG plotting -------------------------------------------------------------

namespace {

constexpr int kW = 760, kH = 520;
constexpr int kMarginL = 70, kMarginR = 160, kMarginT = 40, kMarginB = 55;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf"};

struct AxisScale {
  double lo = 0, hi = 1;
  double map(double v, double pix_lo, double pix_hi) const {
    const double t = (v - lo) / (hi - lo);
    return pix_lo + t * (pix_hi - pix_lo);
  }
};

AxisScale fit_axis(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0, 1};
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.06 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string fmt(double v) {
  char buf[40];
  snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  if (!std::isfinite(xlo)) {
    xlo = 0;
    xhi = 1;
    ylo = 0;
    yhi = 1;
  }
  AxisScale xs = fit_axis(xlo, xhi), ys = fit_axis(ylo, yhi);
  const double px0 = kMarginL, px1 = kW - kMarginR;
  const double py0 = kH - kMarginB, py1 = kMarginT;  // y grows upward

  std::ofstream f(path);
  if (!f) fail(ErrorCode::kIoError, "cannot write: " + path);
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='"
    << kH << "' viewBox='0 0 " << kW << " " << kH << "'>\n"
    << "<rect width='100%' height='100%' fill='white'/>\n";
  f << "<text x='" << kW / 2 << "' y='22' text-anchor='middle' font-size='16'>"
    << title << "</text>\n";
  // axes
  f << "<line x1='" << px0 << "' y1='" << py0 << "' x2='" << px1 << "' y2='"
    << py0 << "' stroke='black'/>\n";
  f << "<line x1='" << px0 << "' y1='" << py0 << "' x2='" << px0 << "' y2='"
    << py1 << "' stroke='black'/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = xs.lo + (xs.hi - xs.lo) * t / 5.0;
    const double yv = ys.lo + (ys.hi - ys.lo) * t / 5.0;
    const double xp = xs.map(xv, px0, px1), yp = ys.map(yv, py0, py1);
    f << "<line x1='" << xp << "' y1='" << py0 << "' x2='" << xp << "' y2='"
      << py0 + 5 << "' stroke='black'/>\n"
      << "<text x='" << xp << "' y='" << py0 + 20
      << "' text-anchor='middle' font-size='11'>" << fmt(xv) << "</text>\n";
    f << "<line x1='" << px0 - 5 << "' y1='" << yp << "' x2='" << px0 << "' y2='"
      << yp << "' stroke='black'/>\n"
      << "<text x='" << px0 - 8 << "' y='" << yp + 4
      << "' text-anchor='end' font-size='11'>" << fmt(yv) << "</text>\n";
  }
  f << "<text x='" << (px0 + px1) / 2 << "' y='" << kH - 12
    << "' text-anchor='middle' font-size='13'>" << x_label << "</text>\n";
  f << "<text x='18' y='" << (py0 + py1) / 2
    << "' text-anchor='middle' font-size='13' transform='rotate(-90 18 "
    << (py0 + py1) / 2 << ")'>" << y_label << "</text>\n";

  int ci = 0;
  double legend_y = kMarginT + 10;
  for (const auto& s : series) {
    const char* color = kColors[ci % 7];
    std::ostringstream pts;
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      pts << xs.map(x, px0, px1) << "," << ys.map(y, py0, py1) << " ";
    }
    f << "<polyline fill='none' stroke='" << color << "' stroke-width='1.8' "
      << (s.dashed ? "stroke-dasharray='7,5' " : "") << "points='" << pts.str()
      << "'/>\n";
    if (!s.dashed)
      for (auto [x, y] : s.points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        f << "<circle cx='" << xs.map(x, px0, px1) << "' cy='"
          << ys.map(y, py0, py1) << "' r='3' fill='" << color << "'/>\n";
      }
    f << "<line x1='" << px1 + 10 << "' y1='" << legend_y << "' x2='"
      << px1 + 34 << "' y2='" << legend_y << "' stroke='" << color
      << "' stroke-width='2' " << (s.dashed ? "stroke-dasharray='7,5'" : "")
      << "/>\n"
      << "<text x='" << px1 + 40 << "' y='" << legend_y + 4
      << "' font-size='12'>" << s.label << "</text>\n";
    legend_y += 18;
    ++ci;
  }
  f << "</svg>\n";
}

void plot_rd_svg(const std::string& path, const std::vector<RdPoint>& points,
                 double cascaded_ceiling_psnr) {
  std::map<std::string, PlotSeries> by_system;
  for (const auto& p : points) {
    auto& s = by_system[p.system];
    s.label = p.system;
    s.points.push_back({p.bpp, p.psnr});
  }
  std::vector<PlotSeries> series;
  for (auto& [name, s] : by_system) {
    std::sort(s.points.begin(), s.points.end());
    series.push_back(s);
  }
  if (std::isfinite(cascaded_ceiling_psnr)) {
    double xlo = 0, xhi = 1;
    if (!points.empty()) {
      xlo = points.front().bpp;
      xhi = points.back().bpp;
    }
    PlotSeries ceil;
    ceil.label = "cascaded ISP ceiling";
    ceil.dashed = true;
    ceil.points = {{xlo, cascaded_ceiling_psnr}, {xhi, cascaded_ceiling_psnr}};
    series.push_back(ceil);
  }
  write_svg_plot(path, "Rate-distortion", "bpp (sRGB resolution)", "PSNR (dB)",
                 series);
}

void plot_csv_svg(const std::string& svg_path,
                  const std::vector<std::pair<std::string, std::string>>& csv_and_label,
                  const std::string& x_col, const std::string& y_col,
                  const std::string& title) {
  std::vector<PlotSeries> series;
  for (const auto& [csv_path, label] : csv_and_label) {
    std::ifstream f(csv_path);
    if (!f) fail(ErrorCode::kIoError, "cannot open: " + csv_path);
    std::string line;
    if (!std::getline(f, line))
      fail(ErrorCode::kFormatError, "empty csv: " + csv_path);
    std::vector<std::string> cols;
    {
      std::istringstream ss(line);
      std::string c;
      while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    const auto xi = std::find(cols.begin(), cols.end(), x_col);
    const auto yi = std::find(cols.begin(), cols.end(), y_col);
    if (xi == cols.end() || yi == cols.end())
      fail(ErrorCode::kFormatError,
           "csv " + csv_path + " lacks columns " + x_col + "/" + y_col);
    const size_t xidx = size_t(xi - cols.begin()), yidx = size_t(yi - cols.begin());
    PlotSeries s;
    s.label = label;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (fields.size() <= std::max(xidx, yidx)) continue;
      s.points.push_back({std::stod(fields[xidx]), std::stod(fields[yidx])});
    }
    series.push_back(std::move(s));
  }
  write_svg_plot(svg_path, title, x_col, y_col, series);
}

}  // namespace rtb
