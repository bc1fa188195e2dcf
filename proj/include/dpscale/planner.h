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

// Constant-compute planning: enumerate (M, B, T) configurations that spend a
// compute budget C = 6 * M * B * S * T, calibrate the noise each one needs
// for the privacy and data budgets, and rank them by the loss predicted by a
// fitted law.

#ifndef DPSCALE_PLANNER_H_
#define DPSCALE_PLANNER_H_

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpscale/accounting.h"
#include "dpscale/lawfit.h"

namespace dpscale::planner {

struct TrainingConfig {
  double model_params = 0;  // M
  double batch_size = 0;    // B, expected examples per step
  int64_t iterations = 0;   // T
  double seq_len = law::kDefaultSequenceLength;  // S

  double compute() const {
    return 6 * model_params * batch_size * seq_len *
           static_cast<double>(iterations);
  }
  double tokens() const {
    return seq_len * batch_size * static_cast<double>(iterations);
  }
  double token_model_ratio() const { return tokens() / model_params; }
  void Validate() const;

  friend bool operator==(const TrainingConfig&,
                         const TrainingConfig&) = default;
};

struct Budgets {
  double compute = 0;  // FLOPs
  accounting::PrivacySpec privacy;
  double data_size = 0;  // individuals

  void Validate() const;
};

enum class PlanStatus {
  kOk,           // calibrated and predicted
  kOutOfDomain,  // (M, T, nbr) outside the law's domain
  kInfeasible,   // privacy budget unattainable or B > N
};

std::string_view PlanStatusName(PlanStatus status);

struct PlanResult {
  TrainingConfig config;
  accounting::NoiseBatchRatio nbr;
  std::optional<accounting::Batching> branch;  // empty when non-private
  double epsilon_achieved = 0;                 // 0 when non-private
  std::optional<double> predicted_loss;        // only when status == kOk
  PlanStatus status = PlanStatus::kOk;
  std::string note;  // reason for a non-ok status

  bool in_domain() const { return status == PlanStatus::kOk; }
  double token_model_ratio() const { return config.token_model_ratio(); }
};

struct Band {
  double min = 0;
  double max = 0;
};

// Per-hyperparameter range over the near-optimal configurations.
struct AllocationBand {
  double threshold = 0;  // loss cutoff, (1 + tolerance) * best loss
  int64_t count = 0;     // configurations within the cutoff
  Band model_params;
  Band batch_size;
  Band iterations;
  Band token_model_ratio;
  Band nbr;
};

struct PlanOptions {
  double seq_len = law::kDefaultSequenceLength;
  double lattice_density = 16;     // lattice points per decade for M and T
  double near_optimal = 0.01;      // band tolerance on loss
  accounting::BatchingChoice batching =
      accounting::BatchingChoice::kLowerOfBoth;
  accounting::CalibrationOptions calibration;
  int64_t max_configs = 1000000;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct Allocation {
  PlanResult best;
  AllocationBand band;
  int64_t enumerated = 0;
  int64_t evaluated = 0;  // in domain and feasible
  int64_t out_of_domain = 0;
  int64_t infeasible = 0;
};

// Lattice 10^(j / density) restricted to [lo, hi] (with a relative slack of
// 1e-12 at the ends).
std::vector<double> LogLattice(double lo, double hi, double density);

// Constant-compute configurations over the (M, T) lattices inside `domain`
// (T capped at the extrapolation limit, rounded to integers). B is derived
// from the compute identity; configurations with B < 1 are dropped, as are
// those with B > max_batch. Sorted by (M, T).
std::vector<TrainingConfig> EnumerateConfigs(
    double compute, const law::LawDomain& domain, const PlanOptions& options,
    double max_batch = std::numeric_limits<double>::infinity());

// Calibrates and predicts one configuration. Never throws for
// out-of-domain or infeasible configurations; those are flagged.
PlanResult Evaluate(const TrainingConfig& config, const Budgets& budgets,
                    const law::FittedLaw& law, const PlanOptions& options = {});

// Also evaluates `extra` configurations (e.g. fixed baselines) alongside the
// lattice. The best configuration minimises the predicted loss with ties
// going to smaller M, then smaller T. Throws OutOfDomain when no
// configuration is feasible and inside the law's domain.
Allocation OptimalAllocation(const Budgets& budgets, const law::FittedLaw& law,
                             const PlanOptions& options = {},
                             std::span<const TrainingConfig> extra = {});

// ---------------------------------------------------------------------------
// Sweeps.

enum class SweepAxis { kCompute, kPrivacy, kData };
std::string_view SweepAxisName(SweepAxis axis);
SweepAxis ParseSweepAxis(std::string_view name);

struct SweepPoint {
  double x = 0;
  Allocation allocation;
  // Loss reported for this budget. Along compute this is the best loss over
  // all budgets up to x (a budget is an upper bound on spending), so the
  // allocation is the one attaining it.
  double loss = 0;
};

struct SweepSeries {
  SweepAxis axis = SweepAxis::kCompute;
  Budgets fixed;  // the swept budget's field is ignored
  std::vector<SweepPoint> points;
};

// Geometric grid of `points` values from `from` to `to` inclusive.
std::vector<double> GeometricGrid(double from, double to, int points);

SweepSeries Sweep(SweepAxis axis, std::span<const double> values,
                  const Budgets& fixed, const law::FittedLaw& law,
                  const PlanOptions& options = {});

// Best loss as a function of compute (nonincreasing).
SweepSeries LossVsCompute(const Budgets& fixed, const law::FittedLaw& law,
                          std::span<const double> compute_grid,
                          const PlanOptions& options = {});

// Smallest budget whose loss is within (1 + tolerance) of the series minimum.
double CriticalCompute(const SweepSeries& series, double tolerance = 0.01);
double CriticalCompute(std::span<const double> x, std::span<const double> loss,
                       double tolerance = 0.01);

struct TokenRatioPoint {
  double compute = 0;
  double ratio = 0;  // S * B * T / M of the optimum
  Band band;
};

std::vector<TokenRatioPoint> TokenModelSweep(const SweepSeries& compute_sweep);

// ---------------------------------------------------------------------------
// Fixed baseline configurations.

struct Baseline {
  std::string name;
  TrainingConfig config;
};

// Model size, steps and batch size of the three BERT baselines with
// compute 1e19 and data budget 1e7.
std::vector<Baseline> PublishedBaselines();

struct BaselinePoint {
  double epsilon = 0;
  PlanResult result;
  double savings = 0;  // compute ratio of the baseline over the cheapest
                       // compute-optimal budget matching its loss; 0 if the
                       // baseline is not feasible
};

struct BaselineSeries {
  Baseline baseline;  // batch size rescaled to the compared compute
  std::vector<BaselinePoint> points;
};

struct BaselineComparison {
  double compute = 0;
  double data_size = 0;
  std::vector<double> epsilons;
  std::vector<PlanResult> optimal;  // per epsilon, over lattice and baselines
  std::vector<BaselineSeries> baselines;
};

// For every epsilon evaluates each baseline (batch size rescaled so that its
// compute equals `budgets.compute`) and the compute-optimal configuration
// over the lattice plus the baselines. Savings are measured on
// `savings_grid`, a grid of compute budgets up to budgets.compute.
BaselineComparison CompareBaselines(std::span<const Baseline> baselines,
                                    const Budgets& budgets,
                                    const law::FittedLaw& law,
                                    std::span<const double> epsilons,
                                    std::span<const double> savings_grid,
                                    const PlanOptions& options = {});

}  // namespace dpscale::planner

#endif  // DPSCALE_PLANNER_H_
