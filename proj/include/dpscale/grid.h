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

// Loss-measurement grids and the cleaning pipeline that turns raw training
// curves into a monotone loss surface over (model size, iterations,
// noise-batch ratio).
//
// Pipeline states only move forward:
//   raw -> smoothed -> monotone -> extrapolated
// Every stage returns a new grid; inputs are never modified.

#ifndef DPSCALE_GRID_H_
#define DPSCALE_GRID_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpscale/parametric_law.h"

namespace dpscale::grid {

enum class GridState { kRaw, kSmoothed, kMonotone, kExtrapolated };

std::string_view GridStateName(GridState state);
GridState ParseGridState(std::string_view name);

struct Measurement {
  double model_params = 0;
  int64_t iterations = 0;
  double nbr = 0;
  double learning_rate = 0;
  double loss = 0;
};

struct GridProvenance {
  int window = 0;              // rolling-average window, 0 if not smoothed
  std::string lr_policy;       // how learning-rate layers were reduced
  std::optional<std::pair<double, double>> fit_range;  // extrapolation fit

  friend bool operator==(const GridProvenance&,
                         const GridProvenance&) = default;
};

// Dense loss tensor indexed [model][iteration][nbr][learning rate], row-major.
// Raw grids keep one layer per learning rate; from the smoothed state on the
// learning-rate axis is empty and there is a single layer.
struct MeasurementGrid {
  std::vector<double> model_sizes;
  std::vector<int64_t> iterations;
  std::vector<double> nbrs;
  std::vector<double> learning_rates;
  std::vector<double> loss;
  GridState state = GridState::kRaw;
  GridProvenance provenance;

  size_t layers() const {
    return learning_rates.empty() ? 1 : learning_rates.size();
  }
  size_t Index(size_t m, size_t t, size_t s, size_t l = 0) const {
    return ((m * iterations.size() + t) * nbrs.size() + s) * layers() + l;
  }
  double At(size_t m, size_t t, size_t s, size_t l = 0) const {
    return loss[Index(m, t, s, l)];
  }

  // Checks axis ordering, tensor size, finite positive losses and, for
  // monotone and extrapolated grids, the monotonicity invariants.
  void Validate() const;

  friend bool operator==(const MeasurementGrid&,
                         const MeasurementGrid&) = default;
};

// ---------------------------------------------------------------------------
// Ingestion.

inline constexpr std::string_view kGridCsvHeader =
    "model_params,iterations,noise_batch_ratio,learning_rate,loss";

// Builds a raw grid from measurements in any order. Errors name offending
// rows by `line_numbers` when given, otherwise by 1-based row index.
MeasurementGrid AssembleGrid(std::span<const Measurement> rows,
                             std::span<const size_t> line_numbers = {});

// Parses the grid CSV format. Error messages name offending line numbers.
MeasurementGrid LoadGridCsv(std::istream& in);
MeasurementGrid LoadGridCsvFile(const std::string& path);

// Writes a grid that still carries learning-rate layers (raw state), rows
// sorted by (model, iterations, nbr, learning rate).
void WriteGridCsv(const MeasurementGrid& grid, std::ostream& out);

// ---------------------------------------------------------------------------
// Cleaning.

// out[i] = mean(in[max(0, i - window + 1) ..= i]).
std::vector<double> RollingAverage(std::span<const double> series, int window);

enum class Direction { kNonincreasing, kNondecreasing };

// Least-squares projection onto monotone sequences (pool adjacent violators,
// unit weights).
std::vector<double> IsotonicFit(std::span<const double> values,
                                Direction direction);

// Rolling average along iterations for every (model, nbr, learning rate)
// series, then pointwise minimum over learning rates.
MeasurementGrid Smooth(const MeasurementGrid& raw, int window);

// Isotonic projection: nonincreasing along iterations, then nondecreasing
// along the noise-batch ratio. Accepts smoothed or monotone grids (the latter
// is a fixpoint).
MeasurementGrid MakeMonotone(const MeasurementGrid& grid);

// Smooth followed by MakeMonotone.
MeasurementGrid Clean(const MeasurementGrid& raw, int window = 10);

// ---------------------------------------------------------------------------
// Extrapolation over iterations with L(T) = E + A / T^alpha.

struct PowerLawFit {
  double e = 0;
  double a = 0;
  double alpha = 0;
  double t_min = 0;
  double t_max = 0;
  double residual = 0;  // sum of squared residuals on the fitted points
  int points = 0;

  double Predict(double iterations) const;
};

// Fits the points whose iteration count lies in [t_min, t_max]. Requires at
// least four such points.
PowerLawFit FitPowerLaw(std::span<const double> iterations,
                        std::span<const double> losses, double t_min,
                        double t_max);

inline constexpr int64_t kMaxExtrapolatedIterations = int64_t{1} << 20;

struct ExtrapolationOptions {
  double fit_min = 16000;
  double fit_max = 128000;
};

// Adds the iteration counts of `target` beyond the grid's last column, filled
// from a per-(model, nbr) power-law fit. Values up to the last observed column
// must already be grid nodes and are preserved. Extrapolated values are capped
// at the last observed loss of their series and re-projected to be
// nondecreasing along the noise-batch ratio.
MeasurementGrid Extrapolate(const MeasurementGrid& monotone,
                            std::span<const int64_t> target,
                            const ExtrapolationOptions& options = {});

// ---------------------------------------------------------------------------
// Synthetic grids.

struct SynthAxes {
  std::vector<double> model_sizes;
  std::vector<int64_t> iterations;
  std::vector<double> nbrs;
  std::vector<double> learning_rates = {1e-3};
};

inline constexpr double kDefaultExamplesPerStep = 1024;
inline constexpr double kSynthLossFloor = 1e-3;

// loss = law(M, examples_per_step * T, nbr) + N(0, noise_sd^2), clamped below
// at kSynthLossFloor. Deterministic for a given seed.
MeasurementGrid SynthGrid(const law::ParametricLaw& law, const SynthAxes& axes,
                          double noise_sd, uint64_t seed,
                          double examples_per_step = kDefaultExamplesPerStep);

}  // namespace dpscale::grid

#endif  // DPSCALE_GRID_H_
