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

// Queryable loss predictors L(M, T, nbr): a log-space interpolator over a
// cleaned measurement grid and fitted parametric laws.

#ifndef DPSCALE_LAWFIT_H_
#define DPSCALE_LAWFIT_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dpscale/grid.h"
#include "dpscale/parametric_law.h"

namespace dpscale::law {

// Axis-aligned box of valid (model size, iterations, nbr) queries. A zero
// noise-batch ratio is valid only when `has_zero_slice` is set; positive
// ratios must lie in [nbr_min, nbr_max].
struct LawDomain {
  double m_min = 1e5;
  double m_max = 1e11;
  double t_min = 1;
  double t_max = static_cast<double>(grid::kMaxExtrapolatedIterations);
  double nbr_min = 0;
  double nbr_max = std::numeric_limits<double>::max();
  bool has_zero_slice = true;

  // Throws OutOfDomain naming the violated axis and its bounds.
  void Check(double model_params, double iterations, double nbr) const;
  bool Contains(double model_params, double iterations, double nbr) const;
  void Validate() const;

  friend bool operator==(const LawDomain&, const LawDomain&) = default;
};

// Trilinear interpolation of the loss over (ln M, ln T, ln nbr), with the
// non-private (nbr = 0) layer interpolated bilinearly over (ln M, ln T).
class InterpolatedLaw {
 public:
  // Requires a monotone or extrapolated grid with at least two model sizes,
  // two iteration counts and either two positive noise-batch ratios or only
  // the non-private layer.
  static InterpolatedLaw Build(const grid::MeasurementGrid& grid);

  double Query(double model_params, double iterations, double nbr) const;

  const LawDomain& domain() const { return domain_; }
  const std::vector<double>& model_sizes() const { return model_sizes_; }
  const std::vector<int64_t>& iterations() const { return iterations_; }
  // Positive noise-batch ratios of the private layers.
  const std::vector<double>& nbrs() const { return nbrs_; }
  // [m][t][s] over the positive ratios.
  const std::vector<double>& private_loss() const { return private_loss_; }
  // [m][t], empty without a non-private layer.
  const std::vector<double>& zero_loss() const { return zero_loss_; }
  const grid::GridProvenance& provenance() const { return provenance_; }
  grid::GridState source_state() const { return source_state_; }

  // Rebuilds a law from serialized parts; validates shapes.
  static InterpolatedLaw FromParts(std::vector<double> model_sizes,
                                   std::vector<int64_t> iterations,
                                   std::vector<double> nbrs,
                                   std::vector<double> private_loss,
                                   std::vector<double> zero_loss,
                                   grid::GridState source_state,
                                   grid::GridProvenance provenance);

  friend bool operator==(const InterpolatedLaw& a, const InterpolatedLaw& b) {
    return a.model_sizes_ == b.model_sizes_ && a.iterations_ == b.iterations_ &&
           a.nbrs_ == b.nbrs_ && a.private_loss_ == b.private_loss_ &&
           a.zero_loss_ == b.zero_loss_ && a.source_state_ == b.source_state_ &&
           a.provenance_ == b.provenance_;
  }

 private:
  void Finish();

  std::vector<double> model_sizes_;
  std::vector<int64_t> iterations_;
  std::vector<double> nbrs_;
  std::vector<double> private_loss_;
  std::vector<double> zero_loss_;
  grid::GridState source_state_ = grid::GridState::kMonotone;
  grid::GridProvenance provenance_;

  std::vector<double> log_m_;
  std::vector<double> log_t_;
  std::vector<double> log_s_;
  LawDomain domain_;
};

// ---------------------------------------------------------------------------
// Parametric fitting.

enum class FitObjective { kRawLoss, kLogLoss };

std::string_view FitObjectiveName(FitObjective objective);
FitObjective ParseFitObjective(std::string_view name);

struct FitFilters {
  double min_iterations = 100000;  // keep rows with T > min_iterations
  double min_nbr = 5e-7;           // keep rows with nbr > min_nbr
  double max_loss = 8;             // keep rows with loss <= max_loss

  friend bool operator==(const FitFilters&, const FitFilters&) = default;
};

struct FitMetadata {
  double huber_delta = 1e-3;
  FitObjective objective = FitObjective::kRawLoss;
  FitFilters filters;
  double final_objective = 0;
  int chosen_start = -1;
  int rows_used = 0;
  int rows_filtered = 0;

  friend bool operator==(const FitMetadata&, const FitMetadata&) = default;
};

struct ParametricModel {
  ParametricLaw law;
  double examples_per_step = grid::kDefaultExamplesPerStep;
  LawDomain domain;
  std::optional<FitMetadata> fit;

  double Query(double model_params, double iterations, double nbr) const;

  friend bool operator==(const ParametricModel&,
                         const ParametricModel&) = default;
};

struct ParametricSample {
  double model_params = 0;
  double iterations = 0;
  double nbr = 0;
  double loss = 0;
};

struct FitOptions {
  LawForm form = LawForm::kL2;
  FitFilters filters;
  double huber_delta = 1e-3;
  FitObjective objective = FitObjective::kRawLoss;
  double examples_per_step = grid::kDefaultExamplesPerStep;
  NbrTransform transform;
  int starts = 32;
  uint64_t seed = 0;
  int max_iterations = 2000;
};

// Flattens a cleaned grid into fitting samples (one per cell).
std::vector<ParametricSample> SamplesFromGrid(const grid::MeasurementGrid& grid);

// Minimises the mean Huber loss between predicted and observed loss over the
// rows that pass the filters, from `starts` quasi-random initialisations.
// The returned domain is the bounding box of the rows used.
ParametricModel FitParametric(std::span<const ParametricSample> rows,
                              const FitOptions& options = {});

// Mean Huber objective of `law` on `rows` (no filtering).
double HuberObjective(const ParametricLaw& law,
                      std::span<const ParametricSample> rows,
                      double examples_per_step, double huber_delta,
                      FitObjective objective);

inline constexpr double kDefaultSequenceLength = 512;

// Model size minimising law(M, C / (6 M S), nbr) over M in [m_lo, m_hi],
// i.e. with every token of the compute budget treated as one training
// example of length S.
double OptimalModelSize(const ParametricLaw& law, double compute, double nbr,
                        double seq_len = kDefaultSequenceLength,
                        double m_lo = 1e5, double m_hi = 1e11);

// ---------------------------------------------------------------------------
// Either kind of law behind one query interface.

enum class LawKind { kInterpolated, kParametric };

std::string_view LawKindName(LawKind kind);  // "interp" / "parametric"

class FittedLaw {
 public:
  FittedLaw(InterpolatedLaw law) : law_(std::move(law)) {}
  FittedLaw(ParametricModel law) : law_(std::move(law)) {}

  LawKind kind() const;
  const LawDomain& domain() const;
  double Query(double model_params, double iterations, double nbr) const;

  const InterpolatedLaw* interpolated() const {
    return std::get_if<InterpolatedLaw>(&law_);
  }
  const ParametricModel* parametric() const {
    return std::get_if<ParametricModel>(&law_);
  }

  friend bool operator==(const FittedLaw&, const FittedLaw&) = default;

 private:
  std::variant<InterpolatedLaw, ParametricModel> law_;
};

}  // namespace dpscale::law

#endif  // DPSCALE_LAWFIT_H_
