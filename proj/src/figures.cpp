// Copyright 2026 The capf Authors.
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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "capf/csv.hpp"
#include "capf/experiment.hpp"

namespace capf {

namespace {

constexpr double kPanelWidth = 420.0;
constexpr double kPanelHeight = 320.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 36.0;
constexpr double kMarginBottom = 46.0;
constexpr std::size_t kTicks = 5;
constexpr std::size_t kDegeneracyBins = 100;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  [[nodiscard]] bool empty() const { return !(hi >= lo); }

  /// Padded by 5% on each side; degenerate ranges get a unit width.
  [[nodiscard]] Range padded() const {
    if (empty()) {
      return {0.0, 1.0};
    }
    if (hi == lo) {
      return {lo - 0.5, hi + 0.5};
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
  }
};

/// A plotting panel at pixel offset (x0, 0) of the canvas.
class Panel {
 public:
  Panel(double x0, Range x, Range y) : x0_(x0), x_(x), y_(y) {}

  [[nodiscard]] double px(double v) const {
    return x0_ + kMarginLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kPanelWidth - kMarginLeft - kMarginRight);
  }
  [[nodiscard]] double py(double v) const {
    return kMarginTop + (y_.hi - v) / (y_.hi - y_.lo) * (kPanelHeight - kMarginTop - kMarginBottom);
  }
  [[nodiscard]] bool contains(double x, double y) const {
    return x >= x_.lo && x <= x_.hi && y >= y_.lo && y <= y_.hi;
  }

  void frame(std::ostream& svg, const std::string& title, const std::string& xlabel, const std::string& ylabel) const {
    const double left = px(x_.lo);
    const double right = px(x_.hi);
    const double top = py(y_.hi);
    const double bottom = py(y_.lo);
    svg << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(right - left) << "\" height=\""
        << num(bottom - top) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (std::size_t k = 0; k < kTicks; ++k) {
      const double f = static_cast<double>(k) / static_cast<double>(kTicks - 1);
      const double xv = x_.lo + f * (x_.hi - x_.lo);
      const double yv = y_.lo + f * (y_.hi - y_.lo);
      svg << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(px(xv)) << "\" y2=\""
          << num(bottom + 4) << "\" stroke=\"#333\"/>\n";
      svg << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(bottom + 16)
          << "\" font-size=\"10\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
      svg << "<line x1=\"" << num(left - 4) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(left) << "\" y2=\""
          << num(py(yv)) << "\" stroke=\"#333\"/>\n";
      svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(yv) + 3)
          << "\" font-size=\"10\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
    }
    svg << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << num(kMarginTop - 14)
        << "\" font-size=\"13\" text-anchor=\"middle\">" << title << "</text>\n";
    svg << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << num(kPanelHeight - 8)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    const double ly = (top + bottom) / 2;
    svg << "<text x=\"" << num(x0_ + 14) << "\" y=\"" << num(ly) << "\" font-size=\"11\" text-anchor=\"middle\""
        << " transform=\"rotate(-90 " << num(x0_ + 14) << ' ' << num(ly) << ")\">" << ylabel << "</text>\n";
  }

  void dot(std::ostream& svg, double x, double y) const {
    if (!contains(x, y)) {
      return;
    }
    svg << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"2.5\" fill=\"#1f4fd1\"/>\n";
  }

  void cross(std::ostream& svg, double x, double y) const {
    if (!contains(x, y)) {
      return;
    }
    const double cx = px(x);
    const double cy = py(y);
    svg << "<path d=\"M" << num(cx - 3) << ' ' << num(cy - 3) << "L" << num(cx + 3) << ' ' << num(cy + 3) << "M"
        << num(cx - 3) << ' ' << num(cy + 3) << "L" << num(cx + 3) << ' ' << num(cy - 3)
        << "\" stroke=\"#d11f1f\" stroke-width=\"1.2\"/>\n";
  }

  /// Polyline clipped to the panel's y range by dropping points outside it.
  void polyline(std::ostream& svg, const std::vector<std::pair<double, double>>& points, const std::string& style) const {
    std::string path;
    bool pen_down = false;
    for (const auto& [x, y] : points) {
      if (!contains(x, y)) {
        pen_down = false;
        continue;
      }
      path += (pen_down ? "L" : "M") + num(px(x)) + ' ' + num(py(y));
      pen_down = true;
    }
    if (!path.empty()) {
      svg << "<path d=\"" << path << "\" fill=\"none\" " << style << "/>\n";
    }
  }

  [[nodiscard]] const Range& x() const { return x_; }

 private:
  double x0_;
  Range x_;
  Range y_;
};

void svg_open(std::ostream& svg, double width, double height) {
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void write_file(const std::filesystem::path& path, const std::string& text, std::vector<std::filesystem::path>& written) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << text;
  written.push_back(path);
}

struct Overlays {
  std::optional<BaselineRecord> kf_true;
  std::vector<std::pair<double, BaselineRecord>> augmented;  // sorted by eps
};

Overlays collect_overlays(const std::vector<BaselineRecord>& baselines) {
  Overlays o;
  for (const auto& b : baselines) {
    if (b.baseline == "kf_true") {
      o.kf_true = b;
    } else if (b.baseline == "kf_augmented") {
      o.augmented.emplace_back(b.eps, b);
    }
  }
  std::sort(o.augmented.begin(), o.augmented.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return o;
}

std::string scatter_svg(const std::string& label, const std::vector<const RunRecord*>& runs, const Overlays& overlays,
                        bool nondegenerate_only) {
  Range xr;
  Range logz_r;
  Range mse_r;
  for (const auto* r : runs) {
    xr.include(r->eps);
    if (nondegenerate_only && r->degenerate) {
      continue;
    }
    logz_r.include(r->log_z);
    mse_r.include(r->mse);
  }
  if (overlays.kf_true) {
    logz_r.include(overlays.kf_true->log_z);
    mse_r.include(overlays.kf_true->mse);
  }
  for (const auto& [eps, b] : overlays.augmented) {
    if (eps >= xr.lo && eps <= xr.hi) {
      logz_r.include(b.log_z);
      mse_r.include(b.mse);
    }
  }
  const Panel logz_panel(0.0, xr.padded(), logz_r.padded());
  const Panel mse_panel(kPanelWidth, xr.padded(), mse_r.padded());

  std::ostringstream svg;
  svg_open(svg, 2 * kPanelWidth, kPanelHeight);
  const std::string suffix = nondegenerate_only ? " (non-degenerate runs)" : "";
  logz_panel.frame(svg, label + ": log-likelihood" + suffix, "eps", "log Z estimate");
  mse_panel.frame(svg, label + ": MSE" + suffix, "eps", "MSE");

  for (const auto* r : runs) {
    if (r->degenerate) {
      if (!nondegenerate_only) {
        logz_panel.cross(svg, r->eps, r->log_z);
        mse_panel.cross(svg, r->eps, r->mse);
      }
    } else {
      logz_panel.dot(svg, r->eps, r->log_z);
      mse_panel.dot(svg, r->eps, r->mse);
    }
  }
  std::vector<std::pair<double, double>> aug_logz;
  std::vector<std::pair<double, double>> aug_mse;
  for (const auto& [eps, b] : overlays.augmented) {
    aug_logz.emplace_back(eps, b.log_z);
    aug_mse.emplace_back(eps, b.mse);
  }
  const std::string dashed = "stroke=\"#d11f1f\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"";
  logz_panel.polyline(svg, aug_logz, dashed);
  mse_panel.polyline(svg, aug_mse, dashed);
  if (overlays.kf_true) {
    const std::string solid = "stroke=\"black\" stroke-width=\"1.5\"";
    const auto& x = logz_panel.x();
    logz_panel.polyline(svg, {{x.lo, overlays.kf_true->log_z}, {x.hi, overlays.kf_true->log_z}}, solid);
    mse_panel.polyline(svg, {{x.lo, overlays.kf_true->mse}, {x.hi, overlays.kf_true->mse}}, solid);
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string scatter_csv(const std::vector<const RunRecord*>& runs, const Overlays& overlays, Range eps_range) {
  std::ostringstream csvout;
  csvout << "series,eps,logz,mse,degenerate\n";
  for (const auto* r : runs) {
    csvout << "run," << csv::format_real(r->eps) << ',' << csv::format_real(r->log_z) << ','
           << csv::format_real(r->mse) << ',' << (r->degenerate ? 1 : 0) << '\n';
  }
  if (overlays.kf_true && !eps_range.empty()) {
    for (const double eps : {eps_range.lo, eps_range.hi}) {
      csvout << "kf_true," << csv::format_real(eps) << ',' << csv::format_real(overlays.kf_true->log_z) << ','
             << csv::format_real(overlays.kf_true->mse) << ",0\n";
    }
  }
  for (const auto& [eps, b] : overlays.augmented) {
    csvout << "kf_augmented," << csv::format_real(eps) << ',' << csv::format_real(b.log_z) << ','
           << csv::format_real(b.mse) << ",0\n";
  }
  return csvout.str();
}

BinnedDegeneracy degeneracy_bins(const std::vector<const RunRecord*>& runs, Range& eps_range) {
  std::vector<RunRecord> copy;
  copy.reserve(runs.size());
  for (const auto* r : runs) {
    copy.push_back(*r);
    eps_range.include(r->eps);
  }
  if (eps_range.empty()) {
    eps_range = {0.0, 1.0};
  } else if (eps_range.hi == eps_range.lo) {
    eps_range.hi = eps_range.lo + 1.0;
  }
  return bin_degeneracy(copy, kDegeneracyBins, eps_range.lo, eps_range.hi);
}

std::string degeneracy_svg(const std::string& label, const BinnedDegeneracy& bins, Range eps_range) {
  const Panel panel(0.0, eps_range, Range{0.0, 1.0}.padded());
  std::ostringstream svg;
  svg_open(svg, kPanelWidth, kPanelHeight);
  panel.frame(svg, label + ": probability of degeneracy", "eps", "P(min ESS < 2)");
  const std::string style = "stroke=\"#1f4fd1\" stroke-width=\"1.5\"";
  std::vector<std::pair<double, double>> run;
  const auto flush = [&] {
    panel.polyline(svg, run, style);
    run.clear();
  };
  for (std::size_t k = 0; k < bins.probabilities.size(); ++k) {
    const double p = bins.probabilities[k];
    if (std::isnan(p)) {
      flush();
      continue;
    }
    run.emplace_back(bins.bin_edges[k], p);
    run.emplace_back(bins.bin_edges[k + 1], p);
  }
  flush();
  svg << "</svg>\n";
  return svg.str();
}

std::string degeneracy_csv(const BinnedDegeneracy& bins) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count,degenerate_count,probability\n";
  for (std::size_t k = 0; k < bins.probabilities.size(); ++k) {
    out << csv::format_real(bins.bin_edges[k]) << ',' << csv::format_real(bins.bin_edges[k + 1]) << ','
        << bins.counts[k] << ',' << bins.degenerate_counts[k] << ',' << csv::format_real(bins.probabilities[k])
        << '\n';
  }
  return out.str();
}

}  // namespace

std::vector<std::filesystem::path> emit_figures(const std::vector<RunRecord>& records,
                                                const std::vector<BaselineRecord>& baselines,
                                                const std::filesystem::path& out_dir) {
  if (records.empty()) {
    throw std::invalid_argument("emit_figures: no records");
  }
  std::filesystem::create_directories(out_dir);
  std::map<std::string, std::vector<const RunRecord*>> by_policy;
  for (const auto& r : records) {
    if (r.cov_policy == to_string(CovPolicyKind::BlockDiagonalObserved) ||
        r.cov_policy == to_string(CovPolicyKind::WeightedSampleCov) ||
        r.cov_policy == to_string(CovPolicyKind::FixedMatrix)) {
      by_policy[r.cov_policy].push_back(&r);
    }
  }
  const auto overlays = collect_overlays(baselines);
  std::vector<std::filesystem::path> written;
  for (const auto& [label, runs] : by_policy) {
    Range eps_range;
    const auto bins = degeneracy_bins(runs, eps_range);
    write_file(out_dir / (label + "_scatter.svg"), scatter_svg(label, runs, overlays, false), written);
    write_file(out_dir / (label + "_scatter_nondegenerate.svg"), scatter_svg(label, runs, overlays, true), written);
    write_file(out_dir / (label + "_scatter.csv"), scatter_csv(runs, overlays, eps_range), written);
    write_file(out_dir / (label + "_degeneracy.svg"), degeneracy_svg(label, bins, eps_range), written);
    write_file(out_dir / (label + "_degeneracy.csv"), degeneracy_csv(bins), written);
  }
  return written;
}

}  // namespace capf
