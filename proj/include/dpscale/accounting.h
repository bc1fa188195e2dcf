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

// Privacy accounting for DP-SGD parameterised by the noise-batch ratio.
//
// The noise-batch ratio is the standard deviation of the Gaussian noise added
// to the *mean* clipped minibatch gradient. Accounting works with the noise
// multiplier of the *summed* gradient, `noise_multiplier = batch_size * nbr`,
// at sensitivity 1.
//
// Two batching analyses are supported:
//   * Poisson: every step samples each record with probability q = B / N and
//     the T steps are composed with Renyi DP over the orders 1.1..10.9 (step
//     0.1) and the integers 11..256.
//   * Deterministic: every record is assumed to take part in all T steps, so
//     the run is a single Gaussian mechanism with multiplier sigma / sqrt(T),
//     whose exact (epsilon, delta) profile is known in closed form.
// Calibration picks the lower noise of the two analyses.

#ifndef DPSCALE_ACCOUNTING_H_
#define DPSCALE_ACCOUNTING_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dpscale::accounting {

inline constexpr double kDefaultDelta = 1e-8;

struct PrivacySpec {
  double epsilon = 1.0;
  double delta = kDefaultDelta;

  // Throws InvalidArgument unless epsilon > 0 and 0 < delta < 1. An infinite
  // epsilon is allowed and denotes non-private training.
  void Validate() const;
  bool non_private() const;
};

enum class Batching { kPoisson, kDeterministic };

std::string_view BatchingName(Batching batching);
Batching ParseBatching(std::string_view name);

struct AccountingSetup {
  double data_size = 0;     // N, number of individuals
  double batch_size = 0;    // B, expected examples per step
  int64_t iterations = 0;   // T
  Batching batching = Batching::kPoisson;

  void Validate() const;
  double sampling_probability() const { return batch_size / data_size; }
};

// Strong type for the noise-batch ratio. Zero means non-private training.
class NoiseBatchRatio {
 public:
  constexpr NoiseBatchRatio() = default;
  explicit NoiseBatchRatio(double value);

  double value() const { return value_; }
  bool non_private() const { return value_ == 0.0; }
  double noise_multiplier(double batch_size) const {
    return batch_size * value_;
  }

  friend bool operator==(NoiseBatchRatio, NoiseBatchRatio) = default;

 private:
  double value_ = 0.0;
};

struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> values;
};

enum class BoundKind { kExact, kUpperBound };
std::string_view BoundKindName(BoundKind kind);

struct ProfilePoint {
  double epsilon;
  double delta;
};

struct PrivacyProfile {
  std::vector<ProfilePoint> points;
  BoundKind bound = BoundKind::kExact;
};

// Orders used for Renyi accounting: 1.1, 1.2, ..., 10.9 and the integers
// 11..256.
std::span<const double> DefaultOrders();

// RDP of the Gaussian mechanism with sensitivity 1: order / (2 sigma^2).
double RdpGaussian(double noise_multiplier, double order);

// RDP of the Poisson-subsampled Gaussian mechanism. Integer orders (up to
// 256) use the exact binomial expansion of E[(mu1/mu0)^order]; fractional
// orders use the two-sided generalized binomial series and return +inf where
// that series does not converge.
double RdpSubsampledGaussian(double noise_multiplier, double q, double order);

// RDP curve of one subsampled-Gaussian step over DefaultOrders().
RdpCurve SubsampledGaussianCurve(double noise_multiplier, double q);

RdpCurve Compose(const RdpCurve& curve, int64_t steps);

// Smallest epsilon over the curve's orders via the improved RDP-to-DP
// conversion. Never negative.
double RdpToEpsilon(const RdpCurve& curve, double delta);

// Inverse view of the same conversion: the smallest delta certified at
// `epsilon`, clipped to [0, 1].
double RdpToDelta(const RdpCurve& curve, double epsilon);

// Exact delta(epsilon) of a Gaussian mechanism with sensitivity 1.
double AnalyticGaussianDelta(double noise_multiplier, double epsilon);

// Smallest epsilon >= 0 with AnalyticGaussianDelta(sigma, epsilon) <= delta.
double AnalyticGaussianEpsilon(double noise_multiplier, double delta);

// Epsilon of the setup's batching analysis at `delta`. Throws for nbr == 0.
double EpsilonOf(const AccountingSetup& setup, NoiseBatchRatio nbr,
                 double delta);

enum class BatchingChoice { kPoisson, kDeterministic, kLowerOfBoth };
BatchingChoice ParseBatchingChoice(std::string_view name);

struct CalibrationOptions {
  // Target relative width of the final bisection bracket on nbr. Fine
  // enough that the achieved epsilon lands within 0.1% of the target even
  // where epsilon is steep in nbr (large budgets).
  double relative_width = 1e-6;
  double lower_bracket = 1e-10;
  double upper_bracket = 1e4;
};

struct Calibration {
  NoiseBatchRatio nbr;
  double noise_multiplier = 0;
  double epsilon = 0;  // epsilon achieved by the winning branch
  Batching branch = Batching::kPoisson;
};

// Smallest noise-batch ratio (on the bisection lattice) whose epsilon at
// spec.delta does not exceed spec.epsilon. setup.batching is ignored; `choice`
// selects the analysis. With kLowerOfBoth ties go to the deterministic branch.
// A non-private spec (infinite epsilon) returns nbr == 0.
Calibration CalibrateNbr(const PrivacySpec& spec, const AccountingSetup& setup,
                         BatchingChoice choice = BatchingChoice::kLowerOfBoth,
                         const CalibrationOptions& options = {});

struct MiaAdvantage {
  double value = 0;
  BoundKind bound = BoundKind::kExact;
};

// Total-variation bound on membership-inference advantage: delta at eps = 0.
MiaAdvantage MiaAdvantageOf(const AccountingSetup& setup, NoiseBatchRatio nbr);

// delta(epsilon) sampled at `epsilons` (sorted ascending).
PrivacyProfile ProfileOf(const AccountingSetup& setup, NoiseBatchRatio nbr,
                         std::span<const double> epsilons);

// Budgets varied by the noise-batch-ratio vector fields. Compute is expressed
// through the expected batch size at fixed iterations.
enum class BudgetAxis { kPrivacy, kCompute, kData };
std::string_view BudgetAxisName(BudgetAxis axis);
BudgetAxis ParseBudgetAxis(std::string_view name);

struct VectorFieldRequest {
  BudgetAxis x_axis = BudgetAxis::kPrivacy;
  BudgetAxis y_axis = BudgetAxis::kCompute;
  std::vector<double> x_values;  // usually powers of two
  std::vector<double> y_values;
  // Values of all three budgets; those on x/y are overridden per point.
  double epsilon = 8;
  double batch_size = 1024;
  double data_size = 1e7;
  int64_t iterations = 16000;
  double delta = kDefaultDelta;
};

struct VectorFieldPoint {
  double x;
  double y;
  double nbr;
  // nbr(point) / nbr(point with the budget doubled) - 1.
  double dx;
  double dy;
};

struct VectorField {
  BudgetAxis x_axis;
  BudgetAxis y_axis;
  int64_t iterations;
  double delta;
  std::vector<VectorFieldPoint> points;  // row-major: y outer, x inner
};

VectorField ComputeVectorField(const VectorFieldRequest& request,
                               const CalibrationOptions& options = {
                                   .relative_width = 1e-9});

}  // namespace dpscale::accounting

#endif  // DPSCALE_ACCOUNTING_H_
