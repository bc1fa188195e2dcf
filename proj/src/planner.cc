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

#include "dpscale/planner.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "dpscale/error.h"
#include "dpscale/grid.h"
#include "dpscale/number_format.h"

namespace dpscale::planner {
namespace {

using accounting::AccountingSetup;
using accounting::Batching;
using accounting::NoiseBatchRatio;

constexpr double kInf = std::numeric_limits<double>::infinity();

void CheckDeadline(const PlanOptions& options) {
  if (options.deadline && std::chrono::steady_clock::now() > *options.deadline) {
    throw DeadlineExceeded("planning exceeded its time budget");
  }
}

void ValidateOptions(const PlanOptions& options) {
  if (!(options.seq_len > 0) || !std::isfinite(options.seq_len)) {
    throw InvalidArgument("seq_len must be positive", "seq_len");
  }
  if (!(options.lattice_density > 0) || options.lattice_density > 1000) {
    throw InvalidArgument("lattice_density must be in (0, 1000]",
                          "lattice_density");
  }
  if (!(options.near_optimal >= 0) || !std::isfinite(options.near_optimal)) {
    throw InvalidArgument("near-optimal tolerance must be nonnegative",
                          "near_optimal");
  }
}

// Strict weak order used for the argmin: loss, then smaller M, then smaller T.
bool Better(const PlanResult& a, const PlanResult& b) {
  return std::make_tuple(*a.predicted_loss, a.config.model_params,
                         a.config.iterations, a.config.batch_size) <
         std::make_tuple(*b.predicted_loss, b.config.model_params,
                         b.config.iterations, b.config.batch_size);
}

void Widen(Band& band, double v, bool first) {
  if (first) {
    band.min = band.max = v;
  } else {
    band.min = std::min(band.min, v);
    band.max = std::max(band.max, v);
  }
}

}  // namespace

void TrainingConfig::Validate() const {
  if (!(model_params > 0) || !std::isfinite(model_params)) {
    throw InvalidArgument("model_params must be positive", "model_params");
  }
  if (!(batch_size > 0) || !std::isfinite(batch_size)) {
    throw InvalidArgument("batch_size must be positive", "batch_size");
  }
  if (iterations <= 0) {
    throw InvalidArgument("iterations must be positive", "iterations");
  }
  if (!(seq_len > 0) || !std::isfinite(seq_len)) {
    throw InvalidArgument("seq_len must be positive", "seq_len");
  }
}

void Budgets::Validate() const {
  if (!(compute > 0) || !std::isfinite(compute)) {
    throw InvalidArgument("compute budget must be positive and finite",
                          "compute");
  }
  if (!(data_size >= 1) || !std::isfinite(data_size)) {
    throw InvalidArgument("data budget must be at least 1", "data");
  }
  privacy.Validate();
}

std::string_view PlanStatusName(PlanStatus status) {
  switch (status) {
    case PlanStatus::kOk:
      return "ok";
    case PlanStatus::kOutOfDomain:
      return "out_of_domain";
    case PlanStatus::kInfeasible:
      return "infeasible";
  }
  return "ok";
}

std::vector<double> LogLattice(double lo, double hi, double density) {
  if (!(lo > 0) || !(hi >= lo) || !std::isfinite(hi)) {
    throw InvalidArgument("lattice bounds must satisfy 0 < lo <= hi",
                          "lattice");
  }
  const long first =
      static_cast<long>(std::ceil(density * std::log10(lo) - 1e-9));
  const long last =
      static_cast<long>(std::floor(density * std::log10(hi) + 1e-9));
  std::vector<double> out;
  for (long j = first; j <= last; ++j) {
    const double v = std::pow(10.0, static_cast<double>(j) / density);
    if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) out.push_back(v);
  }
  return out;
}

std::vector<TrainingConfig> EnumerateConfigs(double compute,
                                             const law::LawDomain& domain,
                                             const PlanOptions& options,
                                             double max_batch) {
  if (!(compute > 0) || !std::isfinite(compute)) {
    throw InvalidArgument("compute budget must be positive and finite",
                          "compute");
  }
  ValidateOptions(options);
  const std::vector<double> models =
      LogLattice(domain.m_min, domain.m_max, options.lattice_density);
  const double t_hi = std::min(
      domain.t_max, static_cast<double>(grid::kMaxExtrapolatedIterations));
  std::vector<int64_t> steps;
  if (t_hi >= std::max(1.0, domain.t_min)) {
    for (double t : LogLattice(std::max(1.0, domain.t_min), t_hi,
                               options.lattice_density)) {
      const int64_t r = std::llround(t);
      if (static_cast<double>(r) < domain.t_min ||
          static_cast<double>(r) > t_hi) {
        continue;
      }
      if (steps.empty() || steps.back() != r) steps.push_back(r);
    }
  }
  if (static_cast<double>(models.size()) * static_cast<double>(steps.size()) >
      static_cast<double>(options.max_configs)) {
    throw InvalidArgument(
        "configuration lattice of " +
            std::to_string(models.size() * steps.size()) +
            " points exceeds the cap of " + std::to_string(options.max_configs),
        "lattice_density");
  }
  std::vector<TrainingConfig> out;
  out.reserve(models.size() * steps.size());
  for (double m : models) {
    for (int64_t t : steps) {
      const double b =
          compute / (6 * m * options.seq_len * static_cast<double>(t));
      if (b < 1 || b > max_batch) continue;
      out.push_back({m, b, t, options.seq_len});
    }
  }
  return out;
}

PlanResult Evaluate(const TrainingConfig& config, const Budgets& budgets,
                    const law::FittedLaw& law, const PlanOptions& options) {
  config.Validate();
  PlanResult r;
  r.config = config;
  if (config.batch_size > budgets.data_size) {
    r.status = PlanStatus::kInfeasible;
    r.note = "batch size exceeds the data budget";
    return r;
  }
  if (!budgets.privacy.non_private()) {
    const AccountingSetup setup{budgets.data_size, config.batch_size,
                                config.iterations, Batching::kPoisson};
    try {
      const accounting::Calibration cal = accounting::CalibrateNbr(
          budgets.privacy, setup, options.batching, options.calibration);
      r.nbr = cal.nbr;
      r.branch = cal.branch;
      r.epsilon_achieved = cal.epsilon;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumeric) throw;
      r.status = PlanStatus::kInfeasible;
      r.note = e.what();
      return r;
    }
  }
  const double t = static_cast<double>(config.iterations);
  if (!law.domain().Contains(config.model_params, t, r.nbr.value())) {
    r.status = PlanStatus::kOutOfDomain;
    try {
      law.domain().Check(config.model_params, t, r.nbr.value());
    } catch (const Error& e) {
      r.note = e.what();
    }
    return r;
  }
  r.predicted_loss = law.Query(config.model_params, t, r.nbr.value());
  return r;
}

Allocation OptimalAllocation(const Budgets& budgets, const law::FittedLaw& law,
                             const PlanOptions& options,
                             std::span<const TrainingConfig> extra) {
  budgets.Validate();
  std::vector<TrainingConfig> configs =
      EnumerateConfigs(budgets.compute, law.domain(), options);
  Allocation out;
  out.enumerated = static_cast<int64_t>(configs.size());
  for (const TrainingConfig& c : extra) {
    c.Validate();
    configs.push_back(c);
  }
  std::vector<PlanResult> results;
  results.reserve(configs.size());
  const PlanResult* best = nullptr;
  for (size_t i = 0; i < configs.size(); ++i) {
    if (i % 64 == 0) CheckDeadline(options);
    results.push_back(Evaluate(configs[i], budgets, law, options));
  }
  for (const PlanResult& r : results) {
    switch (r.status) {
      case PlanStatus::kOk:
        ++out.evaluated;
        if (best == nullptr || Better(r, *best)) best = &r;
        break;
      case PlanStatus::kOutOfDomain:
        ++out.out_of_domain;
        break;
      case PlanStatus::kInfeasible:
        ++out.infeasible;
        break;
    }
  }
  if (best == nullptr) {
    throw OutOfDomain(
        "no configuration for compute " + FormatNumber(budgets.compute) +
            " is feasible and inside the law domain (" +
            std::to_string(out.out_of_domain) + " out of domain, " +
            std::to_string(out.infeasible) + " infeasible)",
        "compute");
  }
  out.best = *best;
  AllocationBand& band = out.band;
  band.threshold = *best->predicted_loss * (1 + options.near_optimal);
  for (const PlanResult& r : results) {
    if (r.status != PlanStatus::kOk || *r.predicted_loss > band.threshold) {
      continue;
    }
    const bool first = band.count++ == 0;
    Widen(band.model_params, r.config.model_params, first);
    Widen(band.batch_size, r.config.batch_size, first);
    Widen(band.iterations, static_cast<double>(r.config.iterations), first);
    Widen(band.token_model_ratio, r.token_model_ratio(), first);
    Widen(band.nbr, r.nbr.value(), first);
  }
  return out;
}

std::string_view SweepAxisName(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kCompute:
      return "compute";
    case SweepAxis::kPrivacy:
      return "privacy";
    case SweepAxis::kData:
      return "data";
  }
  return "compute";
}

SweepAxis ParseSweepAxis(std::string_view name) {
  if (name == "compute") return SweepAxis::kCompute;
  if (name == "privacy" || name == "epsilon") return SweepAxis::kPrivacy;
  if (name == "data") return SweepAxis::kData;
  throw InvalidArgument("unknown sweep axis '" + std::string(name) +
                            "' (expected compute, privacy or data)",
                        "axis");
}

std::vector<double> GeometricGrid(double from, double to, int points) {
  if (!(from > 0) || !(to >= from) || !std::isfinite(to)) {
    throw InvalidArgument("grid bounds must satisfy 0 < from <= to", "from");
  }
  if (points < 1 || points > 10000) {
    throw InvalidArgument("points must be in [1, 10000]", "points");
  }
  if (points == 1) return {from};
  std::vector<double> out(static_cast<size_t>(points));
  // Stepping in log10 keeps whole and half decades exact.
  const double lo = std::log10(from);
  const double step = (std::log10(to) - lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    out[static_cast<size_t>(i)] =
        std::pow(10.0, lo + step * static_cast<double>(i));
  }
  out.front() = from;
  out.back() = to;
  return out;
}

SweepSeries Sweep(SweepAxis axis, std::span<const double> values,
                  const Budgets& fixed, const law::FittedLaw& law,
                  const PlanOptions& options) {
  if (values.empty()) throw InvalidArgument("sweep needs values", "points");
  SweepSeries series;
  series.axis = axis;
  series.fixed = fixed;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0 && !(values[i - 1] < values[i])) {
      throw InvalidArgument("sweep values must be strictly increasing", "from");
    }
    Budgets b = fixed;
    switch (axis) {
      case SweepAxis::kCompute:
        b.compute = values[i];
        break;
      case SweepAxis::kPrivacy:
        b.privacy.epsilon = values[i];
        break;
      case SweepAxis::kData:
        b.data_size = values[i];
        break;
    }
    SweepPoint point;
    point.x = values[i];
    try {
      point.allocation = OptimalAllocation(b, law, options);
    } catch (const Error& e) {
      // A larger compute budget can always spend less: when nothing fits
      // (e.g. every batch would exceed the data budget) keep the previous
      // optimum.
      if (e.code() != ErrorCode::kOutOfDomain ||
          axis != SweepAxis::kCompute || series.points.empty()) {
        throw;
      }
      point.allocation = series.points.back().allocation;
    }
    point.loss = *point.allocation.best.predicted_loss;
    if (axis == SweepAxis::kCompute && !series.points.empty() &&
        series.points.back().loss <= point.loss) {
      point.allocation = series.points.back().allocation;
      point.loss = series.points.back().loss;
    }
    series.points.push_back(std::move(point));
  }
  return series;
}

SweepSeries LossVsCompute(const Budgets& fixed, const law::FittedLaw& law,
                          std::span<const double> compute_grid,
                          const PlanOptions& options) {
  return Sweep(SweepAxis::kCompute, compute_grid, fixed, law, options);
}

double CriticalCompute(std::span<const double> x, std::span<const double> loss,
                       double tolerance) {
  if (x.empty() || x.size() != loss.size()) {
    throw InvalidArgument("series must be nonempty with matching lengths",
                          "series");
  }
  if (!(tolerance >= 0)) {
    throw InvalidArgument("tolerance must be nonnegative", "tolerance");
  }
  for (size_t i = 1; i < loss.size(); ++i) {
    if (loss[i] > loss[i - 1]) {
      throw InvalidArgument("series must be nonincreasing", "series");
    }
  }
  const double floor = *std::min_element(loss.begin(), loss.end());
  for (size_t i = 0; i < loss.size(); ++i) {
    if (loss[i] <= (1 + tolerance) * floor) return x[i];
  }
  return x.back();
}

double CriticalCompute(const SweepSeries& series, double tolerance) {
  std::vector<double> x, loss;
  for (const SweepPoint& p : series.points) {
    x.push_back(p.x);
    loss.push_back(p.loss);
  }
  return CriticalCompute(x, loss, tolerance);
}

std::vector<TokenRatioPoint> TokenModelSweep(const SweepSeries& compute_sweep) {
  if (compute_sweep.axis != SweepAxis::kCompute) {
    throw InvalidArgument("token ratio sweep needs a compute sweep", "axis");
  }
  std::vector<TokenRatioPoint> out;
  for (const SweepPoint& p : compute_sweep.points) {
    out.push_back({p.x, p.allocation.best.token_model_ratio(),
                   p.allocation.band.token_model_ratio});
  }
  return out;
}

std::vector<Baseline> PublishedBaselines() {
  return {
      {"BertLarge", {335e6, 1295, 7500, law::kDefaultSequenceLength}},
      {"BertMedium", {41e6, 15879, 5000, law::kDefaultSequenceLength}},
      {"BertTiny", {4.5e6, 283061, 2500, law::kDefaultSequenceLength}},
  };
}

BaselineComparison CompareBaselines(std::span<const Baseline> baselines,
                                    const Budgets& budgets,
                                    const law::FittedLaw& law,
                                    std::span<const double> epsilons,
                                    std::span<const double> savings_grid,
                                    const PlanOptions& options) {
  if (epsilons.empty()) {
    throw InvalidArgument("at least one epsilon is required", "epsilon");
  }
  for (size_t i = 0; i < savings_grid.size(); ++i) {
    if (!(savings_grid[i] > 0) || savings_grid[i] > budgets.compute ||
        (i > 0 && !(savings_grid[i - 1] < savings_grid[i]))) {
      throw InvalidArgument(
          "savings grid must increase strictly up to the compute budget",
          "savings_grid");
    }
  }
  BaselineComparison out;
  out.compute = budgets.compute;
  out.data_size = budgets.data_size;
  out.epsilons.assign(epsilons.begin(), epsilons.end());
  std::vector<TrainingConfig> rescaled;
  for (const Baseline& b : baselines) {
    b.config.Validate();
    Baseline r = b;
    r.config.batch_size =
        budgets.compute / (6 * b.config.model_params * b.config.seq_len *
                           static_cast<double>(b.config.iterations));
    rescaled.push_back(r.config);
    out.baselines.push_back({r, {}});
  }
  for (double eps : epsilons) {
    Budgets b = budgets;
    b.privacy.epsilon = eps;
    const Allocation best = OptimalAllocation(b, law, options, rescaled);
    out.optimal.push_back(best.best);

    // Best loss reachable with at most each smaller compute budget.
    std::vector<double> reachable;
    double running = kInf;
    for (double c : savings_grid) {
      if (c == budgets.compute) break;
      Budgets bc = b;
      bc.compute = c;
      try {
        running = std::min(running,
                           *OptimalAllocation(bc, law, options).best.predicted_loss);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kOutOfDomain) throw;
      }
      reachable.push_back(running);
    }
    for (BaselineSeries& series : out.baselines) {
      BaselinePoint point;
      point.epsilon = eps;
      point.result = Evaluate(series.baseline.config, b, law, options);
      if (point.result.in_domain()) {
        const double target = *point.result.predicted_loss;
        double matched = budgets.compute;
        for (size_t i = 0; i < reachable.size(); ++i) {
          if (reachable[i] <= target) {
            matched = savings_grid[i];
            break;
          }
        }
        point.savings = budgets.compute / matched;
      }
      series.points.push_back(point);
    }
  }
  return out;
}

}  // namespace dpscale::planner
