// Copyright 2026 The dpscale Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpscale/grid.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "dpscale/error.h"
#include "dpscale/levenberg_marquardt.h"
#include "dpscale/number_format.h"

namespace dpscale::grid {
namespace {

constexpr size_t kMaxReportedProblems = 8;

template <typename T>
size_t AxisIndex(const std::vector<T>& axis, T value) {
  return static_cast<size_t>(std::lower_bound(axis.begin(), axis.end(), value) -
                             axis.begin());
}

template <typename T>
std::vector<T> SortedUnique(std::vector<T> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

template <typename T>
void CheckAxis(const std::vector<T>& axis, const char* name, bool allow_zero) {
  for (size_t i = 0; i < axis.size(); ++i) {
    const double v = static_cast<double>(axis[i]);
    if (!std::isfinite(v) || v < 0 || (!allow_zero && v == 0)) {
      throw InvalidArgument(std::string("axis '") + name +
                                "' holds a non-finite or non-positive value",
                            name);
    }
    if (i > 0 && !(axis[i - 1] < axis[i])) {
      throw InvalidArgument(
          std::string("axis '") + name + "' must be strictly increasing",
          name);
    }
  }
  if (axis.empty()) {
    throw InvalidArgument(std::string("axis '") + name + "' is empty", name);
  }
}

std::string Trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool ParseDouble(std::string_view text, double& out) {
  std::string s = Trim(text);
  std::string_view v = s;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  if (v.empty()) return false;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  return ec == std::errc() && ptr == v.data() + v.size();
}

std::string CellName(const MeasurementGrid& g, size_t m, size_t t, size_t s,
                     size_t l) {
  std::ostringstream os;
  os << "(model_params=" << FormatNumber(g.model_sizes[m])
     << ", iterations=" << g.iterations[t]
     << ", noise_batch_ratio=" << FormatNumber(g.nbrs[s]);
  if (!g.learning_rates.empty()) {
    os << ", learning_rate=" << FormatNumber(g.learning_rates[l]);
  }
  os << ")";
  return os.str();
}

void RequireState(const MeasurementGrid& grid,
                  std::initializer_list<GridState> allowed,
                  std::string_view operation) {
  for (GridState s : allowed) {
    if (grid.state == s) return;
  }
  throw FailedPrecondition(std::string(operation) + " does not accept a " +
                           std::string(GridStateName(grid.state)) + " grid");
}

// Strides of the single-layer tensor [m][t][s].
struct Strides {
  size_t t;
  size_t m;
};

// Applies isotonic projections along T then nbr on a single-layer tensor.
// Because the pool-adjacent-violators projection is order preserving, the
// second pass keeps the first pass's monotonicity up to rounding; the loop
// absorbs any last-ulp violations.
void ProjectMonotone(MeasurementGrid& g) {
  const size_t nm = g.model_sizes.size();
  const size_t nt = g.iterations.size();
  const size_t ns = g.nbrs.size();
  std::vector<double> buf;
  for (int round = 0; round < 8; ++round) {
    bool changed = false;
    for (size_t m = 0; m < nm; ++m) {
      for (size_t s = 0; s < ns; ++s) {
        buf.resize(nt);
        for (size_t t = 0; t < nt; ++t) buf[t] = g.At(m, t, s);
        const std::vector<double> fit =
            IsotonicFit(buf, Direction::kNonincreasing);
        for (size_t t = 0; t < nt; ++t) {
          if (fit[t] != buf[t]) changed = true;
          g.loss[g.Index(m, t, s)] = fit[t];
        }
      }
      for (size_t t = 0; t < nt; ++t) {
        buf.resize(ns);
        for (size_t s = 0; s < ns; ++s) buf[s] = g.At(m, t, s);
        const std::vector<double> fit =
            IsotonicFit(buf, Direction::kNondecreasing);
        for (size_t s = 0; s < ns; ++s) {
          if (fit[s] != buf[s]) changed = true;
          g.loss[g.Index(m, t, s)] = fit[s];
        }
      }
    }
    if (!changed) return;
  }
}

struct PowerLawModel {
  std::span<const double> x;  // iterations / reference
  std::span<const double> y;

  Eigen::Index num_residuals() const {
    return static_cast<Eigen::Index>(x.size());
  }
  void Project(Eigen::VectorXd& p) const {
    p[1] = std::max(p[1], 0.0);
    p[2] = std::clamp(p[2], 1e-6, 20.0);
  }
  void Evaluate(const Eigen::VectorXd& p, Eigen::VectorXd& r,
                Eigen::MatrixXd* jac) const {
    for (size_t i = 0; i < x.size(); ++i) {
      const double lx = std::log(x[i]);
      const double u = std::exp(-p[2] * lx);
      const Eigen::Index k = static_cast<Eigen::Index>(i);
      r[k] = p[0] + p[1] * u - y[i];
      if (jac != nullptr) {
        (*jac)(k, 0) = 1;
        (*jac)(k, 1) = u;
        (*jac)(k, 2) = -p[1] * u * lx;
      }
    }
  }
};

}  // namespace

std::string_view GridStateName(GridState state) {
  switch (state) {
    case GridState::kRaw:
      return "raw";
    case GridState::kSmoothed:
      return "smoothed";
    case GridState::kMonotone:
      return "monotone";
    case GridState::kExtrapolated:
      return "extrapolated";
  }
  return "raw";
}

GridState ParseGridState(std::string_view name) {
  for (GridState s : {GridState::kRaw, GridState::kSmoothed,
                      GridState::kMonotone, GridState::kExtrapolated}) {
    if (GridStateName(s) == name) return s;
  }
  throw InvalidArgument("unknown grid state '" + std::string(name) + "'",
                        "state");
}

void MeasurementGrid::Validate() const {
  CheckAxis(model_sizes, "model_params", false);
  CheckAxis(iterations, "iterations", false);
  CheckAxis(nbrs, "noise_batch_ratio", true);
  if (state == GridState::kRaw) {
    CheckAxis(learning_rates, "learning_rate", false);
  } else if (!learning_rates.empty()) {
    throw InvalidArgument(
        "only raw grids carry learning-rate layers", "learning_rate");
  }
  const size_t expected =
      model_sizes.size() * iterations.size() * nbrs.size() * layers();
  if (loss.size() != expected) {
    throw InvalidArgument("loss tensor has " + std::to_string(loss.size()) +
                              " entries, expected " + std::to_string(expected),
                          "loss");
  }
  for (double v : loss) {
    if (!std::isfinite(v) || !(v > 0)) {
      throw InvalidArgument("losses must be finite and positive", "loss");
    }
  }
  if (state == GridState::kMonotone || state == GridState::kExtrapolated) {
    const auto tol = [](double a) { return 1e-12 * std::abs(a); };
    for (size_t m = 0; m < model_sizes.size(); ++m) {
      for (size_t t = 0; t < iterations.size(); ++t) {
        for (size_t s = 0; s < nbrs.size(); ++s) {
          const double v = At(m, t, s);
          if (t > 0 && v > At(m, t - 1, s) + tol(v)) {
            throw FailedPrecondition("loss increases along iterations at " +
                                     CellName(*this, m, t, s, 0));
          }
          if (s > 0 && v < At(m, t, s - 1) - tol(v)) {
            throw FailedPrecondition(
                "loss decreases along noise-batch ratio at " +
                CellName(*this, m, t, s, 0));
          }
        }
      }
    }
  }
}

MeasurementGrid AssembleGrid(std::span<const Measurement> rows,
                             std::span<const size_t> line_numbers) {
  if (!line_numbers.empty() && line_numbers.size() != rows.size()) {
    throw InvalidArgument("one line number per row required", "rows");
  }
  const auto label = [&](size_t i) {
    return line_numbers.empty() ? "row " + std::to_string(i + 1)
                                : "line " + std::to_string(line_numbers[i]);
  };
  std::vector<std::string> problems;
  const auto report = [&](size_t i, const std::string& what) {
    if (problems.size() < kMaxReportedProblems) {
      problems.push_back(label(i) + ": " + what);
    } else if (problems.size() == kMaxReportedProblems) {
      problems.push_back("...");
    }
  };
  std::vector<double> ms, ss, ls;
  std::vector<int64_t> ts;
  for (size_t i = 0; i < rows.size(); ++i) {
    const Measurement& r = rows[i];
    if (!std::isfinite(r.loss) || !(r.loss > 0)) {
      report(i, "loss must be finite and positive");
    }
    if (!std::isfinite(r.model_params) || !(r.model_params > 0)) {
      report(i, "model_params must be positive");
    }
    if (r.iterations <= 0) report(i, "iterations must be positive");
    if (!std::isfinite(r.nbr) || r.nbr < 0) {
      report(i, "noise_batch_ratio must be nonnegative");
    }
    if (!std::isfinite(r.learning_rate) || !(r.learning_rate > 0)) {
      report(i, "learning_rate must be positive");
    }
    ms.push_back(r.model_params);
    ts.push_back(r.iterations);
    ss.push_back(r.nbr);
    ls.push_back(r.learning_rate);
  }
  const auto fail = [&](const std::string& headline) {
    std::string msg = headline;
    for (const std::string& p : problems) msg += "\n  " + p;
    throw InvalidArgument(msg, "grid");
  };
  if (rows.empty()) fail("grid has no measurements");
  if (!problems.empty()) fail("invalid measurements");

  MeasurementGrid g;
  g.model_sizes = SortedUnique(std::move(ms));
  g.iterations = SortedUnique(std::move(ts));
  g.nbrs = SortedUnique(std::move(ss));
  g.learning_rates = SortedUnique(std::move(ls));
  g.state = GridState::kRaw;
  const size_t cells = g.model_sizes.size() * g.iterations.size() *
                       g.nbrs.size() * g.learning_rates.size();
  g.loss.assign(cells, 0.0);
  std::vector<size_t> owner(cells, 0);  // 1 + row index
  for (size_t i = 0; i < rows.size(); ++i) {
    const Measurement& r = rows[i];
    const size_t idx = g.Index(AxisIndex(g.model_sizes, r.model_params),
                               AxisIndex(g.iterations, r.iterations),
                               AxisIndex(g.nbrs, r.nbr),
                               AxisIndex(g.learning_rates, r.learning_rate));
    if (owner[idx] != 0) {
      report(i, "duplicates " + label(owner[idx] - 1));
      continue;
    }
    owner[idx] = i + 1;
    g.loss[idx] = r.loss;
  }
  if (!problems.empty()) fail("duplicate measurements");

  size_t missing = 0;
  std::string example;
  for (size_t m = 0; m < g.model_sizes.size(); ++m) {
    for (size_t t = 0; t < g.iterations.size(); ++t) {
      for (size_t s = 0; s < g.nbrs.size(); ++s) {
        for (size_t l = 0; l < g.learning_rates.size(); ++l) {
          if (owner[g.Index(m, t, s, l)] == 0) {
            if (missing++ == 0) example = CellName(g, m, t, s, l);
          }
        }
      }
    }
  }
  if (missing > 0) {
    throw InvalidArgument("incomplete grid: " + std::to_string(missing) +
                              " of " + std::to_string(cells) +
                              " cells missing, first missing " + example,
                          "grid");
  }
  return g;
}

MeasurementGrid LoadGridCsv(std::istream& in) {
  std::string line;
  size_t line_no = 0;
  bool have_header = false;
  std::vector<Measurement> rows;
  std::vector<size_t> row_lines;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (Trim(line).empty()) continue;
    if (!have_header) {
      std::string compact;
      for (char c : line) {
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
      }
      if (compact != kGridCsvHeader) {
        throw InvalidArgument("line " + std::to_string(line_no) +
                                  ": expected header '" +
                                  std::string(kGridCsvHeader) + "'",
                              "header");
      }
      have_header = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      const size_t comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    double v[5];
    bool ok = fields.size() == 5;
    for (size_t i = 0; ok && i < 5; ++i) ok = ParseDouble(fields[i], v[i]);
    if (ok && (v[1] != std::floor(v[1]) || !(std::abs(v[1]) < 9e15))) {
      ok = false;
    }
    if (!ok) {
      if (problems.size() < kMaxReportedProblems) {
        problems.push_back("line " + std::to_string(line_no) +
                           ": expected five numeric fields");
      }
      continue;
    }
    rows.push_back({v[0], static_cast<int64_t>(v[1]), v[2], v[3], v[4]});
    row_lines.push_back(line_no);
  }
  if (!have_header) throw InvalidArgument("grid CSV is empty", "header");
  if (!problems.empty()) {
    std::string msg = "malformed grid CSV";
    for (const std::string& p : problems) msg += "\n  " + p;
    throw InvalidArgument(msg, "grid");
  }
  return AssembleGrid(rows, row_lines);
}

MeasurementGrid LoadGridCsvFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open grid file '" + path + "'", "path");
  return LoadGridCsv(in);
}

void WriteGridCsv(const MeasurementGrid& grid, std::ostream& out) {
  if (grid.learning_rates.empty()) {
    throw FailedPrecondition(
        "grid CSV export needs learning-rate layers (raw grid)");
  }
  out << kGridCsvHeader << '\n';
  for (size_t m = 0; m < grid.model_sizes.size(); ++m) {
    for (size_t t = 0; t < grid.iterations.size(); ++t) {
      for (size_t s = 0; s < grid.nbrs.size(); ++s) {
        for (size_t l = 0; l < grid.learning_rates.size(); ++l) {
          out << FormatNumber(grid.model_sizes[m]) << ',' << grid.iterations[t]
              << ',' << FormatNumber(grid.nbrs[s]) << ','
              << FormatNumber(grid.learning_rates[l]) << ','
              << FormatNumber(grid.At(m, t, s, l)) << '\n';
        }
      }
    }
  }
}

std::vector<double> RollingAverage(std::span<const double> series,
                                   int window) {
  if (window < 1) throw InvalidArgument("window must be at least 1", "window");
  std::vector<double> out(series.size());
  const size_t w = static_cast<size_t>(window);
  for (size_t i = 0; i < series.size(); ++i) {
    const size_t begin = i + 1 >= w ? i + 1 - w : 0;
    double sum = 0;
    for (size_t j = begin; j <= i; ++j) sum += series[j];
    out[i] = w == 1 ? series[i] : sum / static_cast<double>(i + 1 - begin);
  }
  return out;
}

std::vector<double> IsotonicFit(std::span<const double> values,
                                Direction direction) {
  if (values.empty()) {
    throw InvalidArgument("isotonic fit needs a nonempty sequence", "values");
  }
  const double sign = direction == Direction::kNondecreasing ? 1.0 : -1.0;
  struct Block {
    double sum;
    size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("isotonic fit needs finite values", "values");
    }
    blocks.push_back({sign * v, 1});
    while (blocks.size() > 1 &&
           blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      const Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().count += top.count;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  size_t i = 0;
  for (const Block& b : blocks) {
    // Singleton blocks return the input bit-for-bit, which keeps monotone
    // inputs exact fixpoints.
    const double level = b.count == 1 ? values[i] : sign * b.mean();
    out.insert(out.end(), b.count, level);
    i += b.count;
  }
  return out;
}

MeasurementGrid Smooth(const MeasurementGrid& raw, int window) {
  RequireState(raw, {GridState::kRaw}, "smoothing");
  raw.Validate();
  if (window < 1) throw InvalidArgument("window must be at least 1", "window");
  MeasurementGrid out;
  out.model_sizes = raw.model_sizes;
  out.iterations = raw.iterations;
  out.nbrs = raw.nbrs;
  out.state = GridState::kSmoothed;
  out.provenance.window = window;
  out.provenance.lr_policy = "min";
  const size_t nt = raw.iterations.size();
  out.loss.assign(raw.model_sizes.size() * nt * raw.nbrs.size(),
                  std::numeric_limits<double>::infinity());
  std::vector<double> series(nt);
  for (size_t m = 0; m < raw.model_sizes.size(); ++m) {
    for (size_t s = 0; s < raw.nbrs.size(); ++s) {
      for (size_t l = 0; l < raw.layers(); ++l) {
        for (size_t t = 0; t < nt; ++t) series[t] = raw.At(m, t, s, l);
        const std::vector<double> avg = RollingAverage(series, window);
        for (size_t t = 0; t < nt; ++t) {
          double& cell = out.loss[out.Index(m, t, s)];
          cell = std::min(cell, avg[t]);
        }
      }
    }
  }
  return out;
}

MeasurementGrid MakeMonotone(const MeasurementGrid& grid) {
  RequireState(grid, {GridState::kSmoothed, GridState::kMonotone},
               "monotone projection");
  MeasurementGrid out = grid;
  out.state = GridState::kMonotone;
  ProjectMonotone(out);
  out.Validate();
  return out;
}

MeasurementGrid Clean(const MeasurementGrid& raw, int window) {
  return MakeMonotone(Smooth(raw, window));
}

double PowerLawFit::Predict(double iterations) const {
  return e + a * std::pow(iterations, -alpha);
}

PowerLawFit FitPowerLaw(std::span<const double> iterations,
                        std::span<const double> losses, double t_min,
                        double t_max) {
  if (iterations.size() != losses.size()) {
    throw InvalidArgument("iterations and losses differ in length", "series");
  }
  if (!(t_min > 0) || !(t_max >= t_min)) {
    throw InvalidArgument("fit range must satisfy 0 < t_min <= t_max",
                          "fit_range");
  }
  std::vector<double> x, y;
  for (size_t i = 0; i < iterations.size(); ++i) {
    if (iterations[i] >= t_min && iterations[i] <= t_max) {
      if (!std::isfinite(losses[i]) || !(iterations[i] > 0)) {
        throw InvalidArgument("series holds non-finite points", "series");
      }
      x.push_back(iterations[i]);
      y.push_back(losses[i]);
    }
  }
  if (x.size() < 4) {
    throw InvalidArgument("power-law fit needs at least 4 points in range, got " +
                              std::to_string(x.size()),
                          "fit_range");
  }
  // Work with iterations relative to the geometric mean of the fitted points
  // so that A stays well scaled for any exponent.
  double log_ref = 0;
  for (double v : x) log_ref += std::log(v);
  log_ref /= static_cast<double>(x.size());
  const double ref = std::exp(log_ref);
  std::vector<double> xs(x.size());
  for (size_t i = 0; i < x.size(); ++i) xs[i] = x[i] / ref;

  const PowerLawModel model{xs, y};
  const double min_loss = *std::min_element(y.begin(), y.end());
  LmResult best;
  bool have_best = false;
  for (double alpha0 : {0.1, 0.3, 0.5, 1.0}) {
    for (double e_scale : {0.5, 0.9}) {
      Eigen::VectorXd p(3);
      p[0] = min_loss * e_scale;
      p[1] = std::max(0.0, (y[0] - p[0]) * std::pow(xs[0], alpha0));
      p[2] = alpha0;
      const LmResult r = LevenbergMarquardt(model, p);
      if (!r.finite) continue;
      if (!have_best || r.cost < best.cost) {
        best = r;
        have_best = true;
      }
    }
  }
  if (!have_best) {
    throw NumericFailure("power-law fit diverged from every start");
  }
  // The flat line A = 0 is where the exponent becomes unidentifiable; LM can
  // only approach it by driving alpha to zero, so offer it in closed form.
  {
    double mean = 0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double cost = 0;
    for (double v : y) cost += 0.5 * (v - mean) * (v - mean);
    if (cost <= best.cost) {
      best.params[0] = mean;
      best.params[1] = 0;
      best.cost = cost;
    }
  }
  PowerLawFit fit;
  fit.e = best.params[0];
  fit.alpha = best.params[2];
  fit.a = best.params[1] * std::pow(ref, fit.alpha);
  fit.t_min = t_min;
  fit.t_max = t_max;
  fit.residual = 2 * best.cost;
  fit.points = static_cast<int>(x.size());
  if (!std::isfinite(fit.a) || !std::isfinite(fit.e)) {
    throw NumericFailure("power-law fit produced non-finite parameters (best "
                         "so far: E=" + FormatNumber(fit.e) +
                         ", A=" + FormatNumber(fit.a) +
                         ", alpha=" + FormatNumber(fit.alpha) + ")");
  }
  return fit;
}

MeasurementGrid Extrapolate(const MeasurementGrid& monotone,
                            std::span<const int64_t> target,
                            const ExtrapolationOptions& options) {
  RequireState(monotone, {GridState::kMonotone}, "extrapolation");
  monotone.Validate();
  const int64_t last = monotone.iterations.back();
  std::vector<int64_t> added;
  for (size_t i = 0; i < target.size(); ++i) {
    const int64_t t = target[i];
    if (i > 0 && !(target[i - 1] < t)) {
      throw InvalidArgument("target iterations must be strictly increasing",
                            "iterations");
    }
    if (t <= 0) {
      throw InvalidArgument("target iterations must be positive",
                            "iterations");
    }
    if (t > kMaxExtrapolatedIterations) {
      throw OutOfDomain("target iterations " + std::to_string(t) +
                            " exceed the extrapolation cap " +
                            std::to_string(kMaxExtrapolatedIterations),
                        "iterations");
    }
    if (t <= last) {
      if (!std::binary_search(monotone.iterations.begin(),
                              monotone.iterations.end(), t)) {
        throw InvalidArgument("target iteration " + std::to_string(t) +
                                  " lies inside the grid but is not a node",
                              "iterations");
      }
    } else {
      added.push_back(t);
    }
  }

  MeasurementGrid out;
  out.model_sizes = monotone.model_sizes;
  out.nbrs = monotone.nbrs;
  out.iterations = monotone.iterations;
  out.iterations.insert(out.iterations.end(), added.begin(), added.end());
  out.state = GridState::kExtrapolated;
  out.provenance = monotone.provenance;
  out.provenance.fit_range = std::make_pair(options.fit_min, options.fit_max);
  const size_t nt0 = monotone.iterations.size();
  const size_t nt = out.iterations.size();
  const size_t ns = out.nbrs.size();
  out.loss.assign(out.model_sizes.size() * nt * ns, 0.0);

  std::vector<double> t_axis(nt0);
  for (size_t t = 0; t < nt0; ++t) {
    t_axis[t] = static_cast<double>(monotone.iterations[t]);
  }
  std::vector<double> series(nt0);
  for (size_t m = 0; m < out.model_sizes.size(); ++m) {
    for (size_t s = 0; s < ns; ++s) {
      for (size_t t = 0; t < nt0; ++t) {
        series[t] = monotone.At(m, t, s);
        out.loss[out.Index(m, t, s)] = series[t];
      }
      if (added.empty()) continue;
      const PowerLawFit fit =
          FitPowerLaw(t_axis, series, options.fit_min, options.fit_max);
      for (size_t k = 0; k < added.size(); ++k) {
        const double v = fit.Predict(static_cast<double>(added[k]));
        out.loss[out.Index(m, nt0 + k, s)] = std::min(v, series[nt0 - 1]);
      }
    }
    std::vector<double> column(ns);
    for (size_t t = nt0; t < nt; ++t) {
      for (size_t s = 0; s < ns; ++s) column[s] = out.At(m, t, s);
      const std::vector<double> fit =
          IsotonicFit(column, Direction::kNondecreasing);
      for (size_t s = 0; s < ns; ++s) out.loss[out.Index(m, t, s)] = fit[s];
    }
  }
  out.Validate();
  return out;
}

MeasurementGrid SynthGrid(const law::ParametricLaw& law, const SynthAxes& axes,
                          double noise_sd, uint64_t seed,
                          double examples_per_step) {
  law.Validate();
  if (!(noise_sd >= 0) || !std::isfinite(noise_sd)) {
    throw InvalidArgument("noise_sd must be nonnegative", "noise_sd");
  }
  if (!(examples_per_step > 0)) {
    throw InvalidArgument("examples_per_step must be positive",
                          "examples_per_step");
  }
  MeasurementGrid g;
  g.model_sizes = axes.model_sizes;
  g.iterations = axes.iterations;
  g.nbrs = axes.nbrs;
  g.learning_rates = axes.learning_rates;
  g.state = GridState::kRaw;
  CheckAxis(g.model_sizes, "model_params", false);
  CheckAxis(g.iterations, "iterations", false);
  CheckAxis(g.nbrs, "noise_batch_ratio", true);
  CheckAxis(g.learning_rates, "learning_rate", false);
  g.loss.resize(g.model_sizes.size() * g.iterations.size() * g.nbrs.size() *
                g.layers());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (size_t m = 0; m < g.model_sizes.size(); ++m) {
    for (size_t t = 0; t < g.iterations.size(); ++t) {
      const double examples =
          examples_per_step * static_cast<double>(g.iterations[t]);
      for (size_t s = 0; s < g.nbrs.size(); ++s) {
        const double base = law.Predict(g.model_sizes[m], examples, g.nbrs[s]);
        for (size_t l = 0; l < g.layers(); ++l) {
          double v = base;
          if (noise_sd > 0) v += noise_sd * noise(rng);
          g.loss[g.Index(m, t, s, l)] = std::max(v, kSynthLossFloor);
        }
      }
    }
  }
  return g;
}

}  // namespace dpscale::grid
