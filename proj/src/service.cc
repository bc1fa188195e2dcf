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

#include "dpscale/service.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <set>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "dpscale/accounting.h"
#include "dpscale/number_format.h"
#include "dpscale/planner.h"

namespace dpscale::service {
namespace {

using io::Json;

constexpr double kInf = std::numeric_limits<double>::infinity();

double ParseDouble(std::string_view text, std::string_view field,
                   bool allow_inf) {
  if (allow_inf && (text == "inf" || text == "infinity" || text == "Infinity")) {
    return kInf;
  }
  double v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw InvalidArgument("parameter '" + std::string(field) +
                              "' must be a finite number, got '" +
                              std::string(text) + "'",
                          std::string(field));
  }
  return v;
}

// Typed access to request parameters; rejects parameters nobody asked for.
class Reader {
 public:
  explicit Reader(const Params& params) : params_(params) {}

  std::optional<std::string> Str(std::string_view name) {
    used_.insert(std::string(name));
    const auto it = params_.find(name);
    if (it == params_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> OptNumber(std::string_view name,
                                  bool allow_inf = false) {
    const std::optional<std::string> s = Str(name);
    if (!s) return std::nullopt;
    return ParseDouble(*s, name, allow_inf);
  }

  double Need(std::string_view name, bool allow_inf = false) {
    const std::optional<double> v = OptNumber(name, allow_inf);
    if (!v) {
      throw InvalidArgument("missing parameter '" + std::string(name) + "'",
                            std::string(name));
    }
    return *v;
  }

  double Number(std::string_view name, double fallback,
                bool allow_inf = false) {
    return OptNumber(name, allow_inf).value_or(fallback);
  }

  int64_t Int(std::string_view name, std::optional<int64_t> fallback) {
    const std::optional<std::string> s = Str(name);
    if (!s) {
      if (fallback) return *fallback;
      throw InvalidArgument("missing parameter '" + std::string(name) + "'",
                            std::string(name));
    }
    int64_t v = 0;
    const char* end = s->data() + s->size();
    const auto [ptr, ec] = std::from_chars(s->data(), end, v);
    if (s->empty() || ec != std::errc() || ptr != end) {
      throw InvalidArgument("parameter '" + std::string(name) +
                                "' must be an integer, got '" + *s + "'",
                            std::string(name));
    }
    return v;
  }

  void Finish() const {
    for (const auto& [key, value] : params_) {
      if (!used_.contains(key)) {
        throw InvalidArgument("unknown parameter '" + key + "'", key);
      }
    }
  }

 private:
  const Params& params_;
  std::set<std::string, std::less<>> used_;
};

planner::PlanOptions ReadPlanOptions(Reader& r, const ServiceConfig& config) {
  planner::PlanOptions o;
  o.seq_len = r.Number("seq_len", o.seq_len);
  o.lattice_density = r.Number("density", o.lattice_density);
  o.near_optimal = r.Number("near_optimal", o.near_optimal);
  o.max_configs = config.max_configs;
  o.deadline = std::chrono::steady_clock::now() + config.timeout;
  return o;
}

Json OptionsJson(const planner::PlanOptions& o) {
  return {{"seq_len", o.seq_len},
          {"lattice_density", o.lattice_density},
          {"near_optimal", o.near_optimal}};
}

// Compact scientific notation with two significant digits, e.g. 1.3e+16.
std::string Sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1e", v);
  return buf;
}

std::string Fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

ServiceConfig ConfigFromEnvironment(ServiceConfig base) {
  if (const char* delta = std::getenv("DPSCALE_DELTA")) {
    base.default_delta = ParseDouble(delta, "DPSCALE_DELTA", false);
    accounting::PrivacySpec{1, base.default_delta}.Validate();
  }
  return base;
}

int PortFromEnvironment(int fallback) {
  const char* port = std::getenv("DPSCALE_PORT");
  if (port == nullptr) return fallback;
  const double v = ParseDouble(port, "DPSCALE_PORT", false);
  if (v != std::floor(v) || v < 0 || v > 65535) {
    throw InvalidArgument("DPSCALE_PORT must be an integer in [0, 65535]",
                          "DPSCALE_PORT");
  }
  return static_cast<int>(v);
}

const law::FittedLaw& Service::RequireLaw() const {
  if (!law_) throw FailedPrecondition("no law loaded");
  return *law_;
}

Json Service::Health() const {
  return {{"status", "ok"}, {"law_loaded", law_.has_value()}};
}

Json Service::Calibrate(const Params& params) const {
  Reader r(params);
  const accounting::PrivacySpec spec{r.Need("epsilon"),
                                     r.Number("delta", config_.default_delta)};
  accounting::AccountingSetup setup;
  setup.data_size = r.Need("data");
  setup.batch_size = r.Need("batch");
  setup.iterations = r.Int("steps", std::nullopt);
  const std::string batching = r.Str("batching").value_or("both");
  r.Finish();
  const accounting::BatchingChoice choice =
      accounting::ParseBatchingChoice(batching);
  spec.Validate();
  if (spec.non_private()) {
    throw InvalidArgument("calibration needs a finite epsilon", "epsilon");
  }
  setup.Validate();
  Json out = io::ToJson(accounting::CalibrateNbr(spec, setup, choice));
  if (choice == accounting::BatchingChoice::kLowerOfBoth) {
    Json candidates;
    for (auto [name, c] :
         {std::pair{"poisson", accounting::BatchingChoice::kPoisson},
          std::pair{"deterministic", accounting::BatchingChoice::kDeterministic}}) {
      try {
        candidates[name] = io::ToJson(accounting::CalibrateNbr(spec, setup, c));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNumeric) throw;
        candidates[name] = nullptr;
      }
    }
    out["candidates"] = std::move(candidates);
  }
  return out;
}

Json Service::Plan(const Params& params) const {
  Reader r(params);
  planner::Budgets b;
  b.compute = r.Need("compute");
  b.privacy.epsilon = r.Need("epsilon", true);
  b.privacy.delta = r.Number("delta", config_.default_delta);
  b.data_size = r.Need("data");
  const planner::PlanOptions o = ReadPlanOptions(r, config_);
  r.Finish();
  const law::FittedLaw& law = RequireLaw();
  const planner::Allocation a = planner::OptimalAllocation(b, law, o);
  Json out;
  out["budgets"] = io::ToJson(b);
  out["options"] = OptionsJson(o);
  const Json alloc = io::ToJson(a);
  for (const auto& [k, v] : alloc.items()) out[k] = v;
  return out;
}

Json Service::Sweep(const Params& params, planner::SweepSeries* series) const {
  Reader r(params);
  const planner::SweepAxis axis = planner::ParseSweepAxis(
      r.Str("axis").value_or("compute"));
  const double from = r.Need("from");
  const double to = r.Need("to");
  const int64_t points = r.Int("points", 9);
  planner::Budgets fixed;
  const bool c = axis == planner::SweepAxis::kCompute;
  const bool p = axis == planner::SweepAxis::kPrivacy;
  const bool d = axis == planner::SweepAxis::kData;
  fixed.compute = c ? from : r.Need("compute");
  fixed.privacy.epsilon = p ? from : r.Need("epsilon", true);
  fixed.privacy.delta = r.Number("delta", config_.default_delta);
  fixed.data_size = d ? from : r.Need("data");
  const double tolerance = r.Number("tolerance", 0.01);
  const planner::PlanOptions o = ReadPlanOptions(r, config_);
  r.Finish();
  if (points < 1 || points > 1000) {
    throw InvalidArgument("points must be in [1, 1000]", "points");
  }
  if (!(tolerance >= 0)) {
    throw InvalidArgument("tolerance must be nonnegative", "tolerance");
  }
  const law::FittedLaw& law = RequireLaw();
  const std::vector<double> values =
      planner::GeometricGrid(from, to, static_cast<int>(points));
  const planner::SweepSeries s = planner::Sweep(axis, values, fixed, law, o);
  Json out = io::ToJson(s);
  out["options"] = OptionsJson(o);
  if (c) {
    out["tolerance"] = tolerance;
    out["critical_compute"] = planner::CriticalCompute(s, tolerance);
  }
  if (series != nullptr) *series = s;
  return out;
}

Json Service::VectorField(const Params& params) const {
  Reader r(params);
  accounting::VectorFieldRequest req;
  req.x_axis = accounting::ParseBudgetAxis(r.Str("x").value_or("privacy"));
  req.y_axis = accounting::ParseBudgetAxis(r.Str("y").value_or("compute"));
  auto default_range = [](accounting::BudgetAxis a) -> std::pair<int, int> {
    switch (a) {
      case accounting::BudgetAxis::kPrivacy:
        return {-2, 10};
      case accounting::BudgetAxis::kCompute:
        return {6, 19};
      case accounting::BudgetAxis::kData:
        return {20, 30};
    }
    return {0, 0};
  };
  const auto [dx0, dx1] = default_range(req.x_axis);
  const auto [dy0, dy1] = default_range(req.y_axis);
  const int64_t x_from = r.Int("x_from", dx0);
  const int64_t x_to = r.Int("x_to", dx1);
  const int64_t y_from = r.Int("y_from", dy0);
  const int64_t y_to = r.Int("y_to", dy1);
  req.epsilon = r.Number("epsilon", 4.0);
  req.batch_size = r.Number("batch", 65536.0);
  req.data_size = r.Number("data", 16777216.0);
  req.iterations = r.Int("steps", 16000);
  req.delta = r.Number("delta", config_.default_delta);
  r.Finish();
  auto lattice = [](int64_t lo, int64_t hi, const char* field) {
    if (lo > hi || lo < -60 || hi > 60) {
      throw InvalidArgument(
          "exponent range must satisfy -60 <= from <= to <= 60", field);
    }
    if (hi - lo > 40) {
      throw InvalidArgument("at most 41 lattice points per axis", field);
    }
    std::vector<double> v;
    for (int64_t k = lo; k <= hi; ++k) {
      v.push_back(std::ldexp(1.0, static_cast<int>(k)));
    }
    return v;
  };
  req.x_values = lattice(x_from, x_to, "x_from");
  req.y_values = lattice(y_from, y_to, "y_from");
  if (req.iterations < 1) {
    throw InvalidArgument("steps must be at least 1", "steps");
  }
  // Every doubled point must stay a valid setup (B <= N, epsilon finite).
  auto max_of = [&](accounting::BudgetAxis a, double fixed) {
    if (a == req.x_axis) return 2 * req.x_values.back();
    if (a == req.y_axis) return 2 * req.y_values.back();
    return fixed;
  };
  auto min_of = [&](accounting::BudgetAxis a, double fixed) {
    if (a == req.x_axis) return req.x_values.front();
    if (a == req.y_axis) return req.y_values.front();
    return fixed;
  };
  if (max_of(accounting::BudgetAxis::kCompute, req.batch_size) >
      min_of(accounting::BudgetAxis::kData, req.data_size)) {
    throw InvalidArgument(
        "the lattice would double the batch size beyond the data budget",
        "batch");
  }
  accounting::PrivacySpec{min_of(accounting::BudgetAxis::kPrivacy, req.epsilon),
                          req.delta}
      .Validate();
  return io::ToJson(accounting::ComputeVectorField(req));
}

Json Service::Law() const { return io::LawSummary(RequireLaw()); }

Json Service::SaturatingTable(const Json& fixture, const Params& params) const {
  Reader r(params);
  const planner::PlanOptions o = ReadPlanOptions(r, config_);
  const double tolerance = r.Number("tolerance", 0.01);
  r.Finish();
  const law::FittedLaw& law = RequireLaw();
  const Json& grid = fixture.at("compute_grid");
  const std::vector<double> computes = planner::GeometricGrid(
      io::GetNumber(grid, "from"), io::GetNumber(grid, "to"),
      static_cast<int>(io::GetNumber(grid, "points")));
  const double delta = fixture.contains("delta")
                           ? io::GetNumber(fixture, "delta")
                           : config_.default_delta;
  Json rows = Json::array();
  for (const Json& row : fixture.at("rows")) {
    planner::Budgets fixed;
    fixed.compute = computes.front();
    fixed.privacy = {io::GetNumber(row, "epsilon"), delta};
    fixed.data_size = io::GetNumber(row, "data");
    const planner::SweepSeries s =
        planner::LossVsCompute(fixed, law, computes, o);
    const double critical = planner::CriticalCompute(s, tolerance);
    const planner::SweepPoint* at = nullptr;
    for (const planner::SweepPoint& p : s.points) {
      if (p.x == critical) at = &p;
    }
    const planner::PlanResult& best = at->allocation.best;
    Json out;
    out["data"] = fixed.data_size;
    out["epsilon"] = io::Number(fixed.privacy.epsilon);
    out["compute"] = critical;
    out["cross_entropy"] = *best.predicted_loss;
    out["model_params"] = best.config.model_params;
    out["iterations"] = best.config.iterations;
    out["batch_size"] = best.config.batch_size;
    out["token_model_ratio"] = best.token_model_ratio();
    rows.push_back(std::move(out));
  }
  Json out;
  out["tolerance"] = tolerance;
  out["delta"] = delta;
  out["compute_grid"] = computes;
  out["options"] = OptionsJson(o);
  out["rows"] = std::move(rows);
  return out;
}

std::string FormatSaturatingTable(const Json& table) {
  const std::vector<std::string> header = {
      "Data",       "Privacy",    "Compute",    "Cross Entropy",
      "Model Size", "Iterations", "Batch Size", "Token / Model"};
  std::vector<std::vector<std::string>> cells;
  std::string last_data;
  for (const Json& row : table.at("rows")) {
    std::string data = Sci(io::GetNumber(row, "data"));
    const std::string shown = data == last_data ? "" : data;
    last_data = data;
    const double eps = io::GetNumber(row, "epsilon");
    cells.push_back({shown, std::isinf(eps) ? "inf" : FormatNumber(eps),
                     Sci(io::GetNumber(row, "compute")),
                     Fixed2(io::GetNumber(row, "cross_entropy")),
                     Sci(io::GetNumber(row, "model_params")),
                     Sci(io::GetNumber(row, "iterations")),
                     Sci(io::GetNumber(row, "batch_size")),
                     Sci(io::GetNumber(row, "token_model_ratio"))});
  }
  std::vector<size_t> width(header.size());
  for (size_t i = 0; i < header.size(); ++i) {
    width[i] = header[i].size();
    for (const auto& row : cells) width[i] = std::max(width[i], row[i].size());
  }
  auto line = [&](const std::vector<std::string>& row) {
    std::string out;
    for (size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += " | ";
      out += row[i] + std::string(width[i] - row[i].size(), ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  std::string rule;
  for (size_t i = 0; i < width.size(); ++i) {
    if (i > 0) rule += "-+-";
    rule += std::string(width[i], '-');
  }
  out += rule + "\n";
  for (const auto& row : cells) out += line(row);
  return out;
}

int HttpStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kFailedPrecondition:
      return 400;
    case ErrorCode::kOutOfDomain:
    case ErrorCode::kNumeric:
      return 422;
    case ErrorCode::kDeadlineExceeded:
      return 503;
  }
  return 500;
}

int ExitCode(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kFailedPrecondition:
    case ErrorCode::kOutOfDomain:
      return 2;
    case ErrorCode::kNumeric:
    case ErrorCode::kDeadlineExceeded:
      return 3;
  }
  return 3;
}

}  // namespace dpscale::service
