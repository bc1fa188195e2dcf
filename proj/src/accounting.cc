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

#include "dpscale/accounting.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>

#include "dpscale/error.h"

namespace dpscale::accounting {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxOrder = 256;

// 1.1, 1.2, ..., 10.9 followed by the integers 11..256. The dense low orders
// matter at large epsilon, where the best order approaches 1.
const std::vector<double>& AllOrders() {
  static const std::vector<double> orders = [] {
    std::vector<double> v;
    for (int x = 1; x < 100; ++x) v.push_back(1 + x / 10.0);
    for (int a = 11; a <= kMaxOrder; ++a) v.push_back(a);
    return v;
  }();
  return orders;
}

// log C(n, k) for 0 <= k <= n <= kMaxOrder.
double LogBinomial(int n, int k) {
  static const std::vector<std::vector<double>> table = [] {
    std::vector<std::vector<double>> t(kMaxOrder + 1);
    for (int m = 0; m <= kMaxOrder; ++m) {
      t[m].resize(m + 1);
      for (int j = 0; j <= m; ++j) {
        t[m][j] = std::lgamma(m + 1.0) - std::lgamma(j + 1.0) -
                  std::lgamma(m - j + 1.0);
      }
    }
    return t;
  }();
  return table[n][k];
}

// log(exp(x) - 1) for x > 0.
double LogExpm1(double x) {
  if (x > 40.0) return x + std::log1p(-std::exp(-x));
  return std::log(std::expm1(x));
}

// log(1 + exp(x)).
double Log1pExp(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void CheckNoiseMultiplier(double noise_multiplier) {
  if (!std::isfinite(noise_multiplier) || noise_multiplier <= 0) {
    throw InvalidArgument("noise multiplier must be finite and positive",
                          "noise_multiplier");
  }
}

void CheckDelta(double delta) {
  if (!(delta > 0 && delta < 1)) {
    throw InvalidArgument("delta must lie in (0, 1)", "delta");
  }
}

void CheckSamplingProbability(double q) {
  if (!(q > 0 && q <= 1)) {
    throw InvalidArgument("sampling probability must lie in (0, 1]", "q");
  }
}

// Single-step RDP of the subsampled Gaussian at an integer order. The sum
// E[(1 + q (exp(u) - 1))^a] - 1 is expanded binomially; the k = 0 and k = 1
// terms cancel exactly, leaving only nonnegative terms, so the result keeps
// full relative precision when it is tiny.
double IntegerOrderRdp(double sigma, double q, int order) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  std::array<double, kMaxOrder + 1> terms;
  double max_term = -kInf;
  for (int k = 2; k <= order; ++k) {
    const double t = LogBinomial(order, k) + (order - k) * log_1mq +
                     k * log_q + LogExpm1(k * (k - 1.0) * inv_two_var);
    terms[k] = t;
    max_term = std::max(max_term, t);
  }
  double sum = 0;
  for (int k = 2; k <= order; ++k) sum += std::exp(terms[k] - max_term);
  const double log_a_minus_1 = max_term + std::log(sum);
  return Log1pExp(log_a_minus_1) / (order - 1.0);
}

// log(exp(a) + exp(b)).
double LogAdd(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(erfc(x)), with the asymptotic expansion where erfc underflows.
double LogErfc(double x) {
  if (x < 25) return std::log(std::erfc(x));
  const double x2 = x * x;
  return -0.5 * std::log(M_PI) - std::log(x) - x2 - 0.5 / x2 +
         0.625 / (x2 * x2) - 37.0 / 24.0 / (x2 * x2 * x2) +
         353.0 / 64.0 / (x2 * x2 * x2 * x2);
}

constexpr int kMaxFractionalTerms = 1000;

// Single-step RDP of the subsampled Gaussian at a fractional order a. Split
// the integral for A = E[(mu1 / mu0)^a] at z0, where mu1 = 2 mu0, and expand
// both pieces with generalized binomial series; each term is a Gaussian
// integral over a half-line. The coefficients C(a, i) change sign every step
// once i > floor(a) + 1, so positive and negative terms are accumulated
// apart. Returns +inf when the series does not settle within the term budget,
// which drops the order from the minimum and keeps the bound valid.
double FractionalOrderRdp(double sigma, double q, double order) {
  const double var = sigma * sigma;
  const double z0 = var * std::log(1 / q - 1) + 0.5;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double erfc_scale = std::sqrt(2.0) * sigma;
  const int sign_start = static_cast<int>(std::floor(order)) + 2;
  double positive = -kInf;
  double negative = -kInf;
  double last = kInf;
  // log |binom(order, i)|, advanced by |binom(a, i+1)| = |binom(a, i)| *
  // |a - i| / (i + 1).
  double log_coef = 0;
  const double log_half = std::log(0.5);
  for (int i = 0; i < kMaxFractionalTerms; ++i) {
    const double j = order - i;
    if (i > 0) log_coef += std::log(std::fabs(j + 1) / i);
    const double below = log_coef + i * log_q + j * log_1mq +
                         (i * (i - 1.0)) / (2 * var) + log_half +
                         LogErfc((i - z0) / erfc_scale);
    const double above = log_coef + j * log_q + i * log_1mq +
                         (j * (j - 1)) / (2 * var) + log_half +
                         LogErfc((z0 - j) / erfc_scale);
    const double term = LogAdd(below, above);
    if (i >= sign_start && (i - sign_start) % 2 == 0) {
      negative = LogAdd(negative, term);
    } else {
      positive = LogAdd(positive, term);
    }
    // Past sign_start the series alternates; once the magnitudes decrease,
    // the first omitted term bounds the remainder, so adding it back keeps
    // the result an upper bound.
    if (i >= sign_start && term < last && term < positive - 30) {
      positive = LogAdd(positive, term);
      if (negative >= positive) return kInf;
      const double log_a =
          positive + std::log1p(-std::exp(negative - positive));
      return std::max(0.0, log_a) / (order - 1);
    }
    last = term;
  }
  return kInf;
}

bool IsIntegerOrder(double order) {
  return order == std::floor(order) && order <= kMaxOrder;
}

double SubsampledRdp(double sigma, double q, double order) {
  if (q == 1.0) return order / (2.0 * sigma * sigma);
  if (IsIntegerOrder(order)) {
    return IntegerOrderRdp(sigma, q, static_cast<int>(order));
  }
  return FractionalOrderRdp(sigma, q, order);
}

// Per-order slack of the improved RDP-to-DP conversion:
// epsilon(order) = rdp(order) + ConversionOffset(order, delta).
double ConversionOffset(double order, double log_delta) {
  return std::log1p(-1.0 / order) -
         (log_delta + std::log(order)) / (order - 1.0);
}

// Minimum over orders of the converted epsilon for T-fold composition of one
// subsampled-Gaussian step. Renyi divergence is nondecreasing in the order, so
// a lower bound at one order bounds every higher order and rdp >= 0 bounds the
// lower ones; both let most orders be skipped without changing the result.
//
// The log-moment K(a) = (a - 1) rdp(a) is convex with K(1) = 0. For a
// fractional order between the integers k and k + 1, interpolating K between
// them is an upper bound and extending the chord through k - 1 and k is a
// lower bound. Both come from the cheap integer orders, so the fractional
// series is evaluated only for orders the bounds cannot settle, and each
// fractional order reports the smaller of the series and the interpolation.
class PoissonEpsilon {
 public:
  PoissonEpsilon(double q, int64_t steps, double delta)
      : q_(q),
        steps_(static_cast<double>(steps)),
        orders_(AllOrders()) {
    const double log_delta = std::log(delta);
    const size_t n = orders_.size();
    offset_.resize(n);
    suffix_min_.resize(n);
    prefix_min_.resize(n);
    composed_.resize(n);
    integer_index_.assign(kMaxOrder + 1, n);
    for (size_t i = 0; i < n; ++i) {
      offset_[i] = ConversionOffset(orders_[i], log_delta);
      if (IsIntegerOrder(orders_[i])) {
        integer_index_[static_cast<size_t>(orders_[i])] = i;
      }
    }
    for (size_t i = 0; i < n; ++i) {
      prefix_min_[i] =
          i == 0 ? offset_[0] : std::min(prefix_min_[i - 1], offset_[i]);
    }
    for (size_t i = n; i-- > 0;) {
      suffix_min_[i] =
          i + 1 == n ? offset_[i] : std::min(suffix_min_[i + 1], offset_[i]);
    }
    // Start near order 16, typical for moderate budgets.
    warm_ = std::lower_bound(orders_.begin(), orders_.end(), 16.0) -
            orders_.begin();
  }

  double Epsilon(double sigma) {
    return std::max(0.0, Search(sigma, -kInf));
  }

  bool AtMost(double sigma, double target) {
    return Search(sigma, target) <= target;
  }

 private:
  struct Bounds {
    double lower;
    double upper;
  };

  // Composed RDP at order index i from the direct series, memoized for the
  // current sigma.
  double ComposedRdp(double sigma, size_t i) {
    if (std::isnan(composed_[i])) {
      composed_[i] = steps_ * SubsampledRdp(sigma, q_, orders_[i]);
    }
    return composed_[i];
  }

  // Composed log-moment at an integer order; K(1) = 0.
  double LogMoment(double sigma, int order) {
    if (order <= 1) return 0;
    return (order - 1) * ComposedRdp(sigma, integer_index_[order]);
  }

  // Cheap bounds on the reported composed RDP at order index i; exact at
  // integer orders.
  Bounds OrderBounds(double sigma, size_t i) {
    const double a = orders_[i];
    if (IsIntegerOrder(a)) {
      const double rdp = ComposedRdp(sigma, i);
      return std::isfinite(rdp) ? Bounds{rdp, rdp} : Bounds{0, kInf};
    }
    const int k = static_cast<int>(std::floor(a));
    const double below = LogMoment(sigma, k - 1);
    const double at = LogMoment(sigma, k);
    const double above = LogMoment(sigma, k + 1);
    if (!std::isfinite(below) || !std::isfinite(at) || !std::isfinite(above)) {
      return {0, kInf};
    }
    const double lower = std::max(0.0, at + (a - k) * (at - below));
    const double upper = at + (a - k) * (above - at);
    return {lower / (a - 1), upper / (a - 1)};
  }

  // Returns the exact minimum when target is -inf; otherwise returns as soon
  // as some order certifies epsilon <= target, or any value above target when
  // none does.
  double Search(double sigma, double target) {
    const bool exact = target == -kInf;
    const size_t n = orders_.size();
    std::fill(composed_.begin(), composed_.end(), kNaN);
    size_t best_index = warm_;
    double best = kInf;
    // Orders whose lower bound exceeds `limit` cannot change the answer.
    auto limit = [&] { return exact ? best : target; };
    // Considers order index i with precomputed bounds; true once the target
    // is certified.
    auto visit = [&](size_t i, const Bounds& bounds) {
      if (bounds.lower + offset_[i] > limit()) return false;
      double rdp = bounds.upper;
      if (exact || rdp + offset_[i] > target) {
        if (bounds.lower != bounds.upper) {
          rdp = std::min(rdp, ComposedRdp(sigma, i));
        }
        if (!std::isfinite(rdp)) return false;
      }
      const double eps = rdp + offset_[i];
      if (eps < best) {
        best = eps;
        best_index = i;
      }
      return best <= target;
    };

    // Lower bound on the RDP of every order above those visited.
    double floor_rdp = 0;
    const size_t start = warm_;
    for (size_t i = start; i < n; ++i) {
      if (floor_rdp + suffix_min_[i] > limit()) break;
      const Bounds bounds = OrderBounds(sigma, i);
      floor_rdp = std::max(floor_rdp, bounds.lower);
      if (visit(i, bounds)) break;
    }
    if (best > target) {
      for (size_t i = start; i-- > 0;) {
        if (prefix_min_[i] > limit()) break;
        if (visit(i, OrderBounds(sigma, i))) break;
      }
    }
    warm_ = best_index;
    return best;
  }

  double q_;
  double steps_;
  std::span<const double> orders_;
  std::vector<double> offset_;
  std::vector<double> suffix_min_;
  std::vector<double> prefix_min_;
  std::vector<double> composed_;
  std::vector<size_t> integer_index_;
  size_t warm_;
};

// Bisection on log(nbr) over a fixed bracket and a fixed number of halvings.
// The returned upper endpoint is therefore a monotone function of the true
// root, which keeps calibrated values monotone in every budget.
template <typename AtMost>
double BisectNbr(AtMost&& at_most, const CalibrationOptions& options) {
  double lo = std::log(options.lower_bracket);
  double hi = std::log(options.upper_bracket);
  if (!at_most(options.upper_bracket)) {
    throw NumericFailure(
        "privacy budget unattainable within the noise-batch-ratio bracket");
  }
  if (at_most(options.lower_bracket)) return options.lower_bracket;
  const int halvings = static_cast<int>(
      std::ceil(std::log2((hi - lo) / std::log1p(options.relative_width))));
  for (int i = 0; i < halvings; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (at_most(std::exp(mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::exp(hi);
}

Calibration CalibrateBranch(const PrivacySpec& spec,
                            const AccountingSetup& setup, Batching branch,
                            const CalibrationOptions& options) {
  const double b = setup.batch_size;
  Calibration out;
  out.branch = branch;
  double nbr;
  if (branch == Batching::kPoisson) {
    PoissonEpsilon accountant(setup.sampling_probability(), setup.iterations,
                              spec.delta);
    nbr = BisectNbr(
        [&](double v) { return accountant.AtMost(b * v, spec.epsilon); },
        options);
    out.epsilon = accountant.Epsilon(b * nbr);
  } else {
    const double root_t = std::sqrt(static_cast<double>(setup.iterations));
    nbr = BisectNbr(
        [&](double v) {
          return AnalyticGaussianDelta(b * v / root_t, spec.epsilon) <=
                 spec.delta;
        },
        options);
    out.epsilon = AnalyticGaussianEpsilon(b * nbr / root_t, spec.delta);
  }
  out.nbr = NoiseBatchRatio(nbr);
  out.noise_multiplier = b * nbr;
  return out;
}

RdpCurve ComposedPoissonCurve(const AccountingSetup& setup,
                              NoiseBatchRatio nbr) {
  return Compose(SubsampledGaussianCurve(
                     nbr.noise_multiplier(setup.batch_size),
                     setup.sampling_probability()),
                 setup.iterations);
}

double DeterministicSigma(const AccountingSetup& setup, NoiseBatchRatio nbr) {
  return nbr.noise_multiplier(setup.batch_size) /
         std::sqrt(static_cast<double>(setup.iterations));
}

}  // namespace

void PrivacySpec::Validate() const {
  if (std::isnan(epsilon) || epsilon <= 0) {
    throw InvalidArgument("epsilon must be positive", "epsilon");
  }
  CheckDelta(delta);
}

bool PrivacySpec::non_private() const { return std::isinf(epsilon); }

std::string_view BatchingName(Batching batching) {
  return batching == Batching::kPoisson ? "poisson" : "deterministic";
}

Batching ParseBatching(std::string_view name) {
  if (name == "poisson") return Batching::kPoisson;
  if (name == "deterministic") return Batching::kDeterministic;
  throw InvalidArgument("unknown batching '" + std::string(name) + "'",
                        "batching");
}

BatchingChoice ParseBatchingChoice(std::string_view name) {
  if (name == "both") return BatchingChoice::kLowerOfBoth;
  return ParseBatching(name) == Batching::kPoisson
             ? BatchingChoice::kPoisson
             : BatchingChoice::kDeterministic;
}

void AccountingSetup::Validate() const {
  if (!std::isfinite(data_size) || data_size <= 0) {
    throw InvalidArgument("data budget must be finite and positive", "data");
  }
  if (!std::isfinite(batch_size) || batch_size <= 0) {
    throw InvalidArgument("batch size must be finite and positive", "batch");
  }
  if (batch_size > data_size) {
    throw InvalidArgument("batch size cannot exceed the data budget", "batch");
  }
  if (batching == Batching::kDeterministic && batch_size < 1) {
    throw InvalidArgument("deterministic batches need at least one example",
                          "batch");
  }
  if (iterations < 1) {
    throw InvalidArgument("iterations must be at least 1", "steps");
  }
}

NoiseBatchRatio::NoiseBatchRatio(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0) {
    throw InvalidArgument("noise-batch ratio must be finite and nonnegative",
                          "noise_batch_ratio");
  }
}

std::string_view BoundKindName(BoundKind kind) {
  return kind == BoundKind::kExact ? "exact" : "upper";
}

std::span<const double> DefaultOrders() { return AllOrders(); }

double RdpGaussian(double noise_multiplier, double order) {
  CheckNoiseMultiplier(noise_multiplier);
  if (!std::isfinite(order) || order <= 1) {
    throw InvalidArgument("Renyi order must exceed 1", "order");
  }
  return order / (2.0 * noise_multiplier * noise_multiplier);
}

double RdpSubsampledGaussian(double noise_multiplier, double q, double order) {
  CheckNoiseMultiplier(noise_multiplier);
  CheckSamplingProbability(q);
  if (!(order > 1) || (order == std::floor(order) && order > kMaxOrder) ||
      !std::isfinite(order)) {
    throw InvalidArgument(
        "order must exceed 1; integer orders are limited to 256", "order");
  }
  return SubsampledRdp(noise_multiplier, q, order);
}

RdpCurve SubsampledGaussianCurve(double noise_multiplier, double q) {
  CheckNoiseMultiplier(noise_multiplier);
  CheckSamplingProbability(q);
  RdpCurve curve;
  for (double order : AllOrders()) {
    curve.orders.push_back(order);
    curve.values.push_back(SubsampledRdp(noise_multiplier, q, order));
  }
  return curve;
}

RdpCurve Compose(const RdpCurve& curve, int64_t steps) {
  if (steps < 1) throw InvalidArgument("steps must be at least 1", "steps");
  RdpCurve out = curve;
  for (double& v : out.values) v *= static_cast<double>(steps);
  return out;
}

double RdpToEpsilon(const RdpCurve& curve, double delta) {
  CheckDelta(delta);
  if (curve.orders.empty() || curve.orders.size() != curve.values.size()) {
    throw InvalidArgument("RDP curve must be nonempty with matching lengths");
  }
  const double log_delta = std::log(delta);
  double best = kInf;
  for (size_t i = 0; i < curve.orders.size(); ++i) {
    best = std::min(best, curve.values[i] +
                              ConversionOffset(curve.orders[i], log_delta));
  }
  return std::max(0.0, best);
}

double RdpToDelta(const RdpCurve& curve, double epsilon) {
  if (curve.orders.empty() || curve.orders.size() != curve.values.size()) {
    throw InvalidArgument("RDP curve must be nonempty with matching lengths");
  }
  if (!(epsilon >= 0)) throw InvalidArgument("epsilon must be >= 0", "epsilon");
  double log_delta = 0;
  for (size_t i = 0; i < curve.orders.size(); ++i) {
    const double a = curve.orders[i];
    const double r = curve.values[i];
    // Renyi divergence upper-bounds KL, and TV <= sqrt(1 - exp(-KL)).
    double bound = r == 0 ? -kInf : 0.5 * std::log1p(-std::exp(-r));
    bound = std::min(bound,
                     (a - 1) * (r - epsilon + std::log1p(-1 / a)) - std::log(a));
    log_delta = std::min(log_delta, bound);
  }
  return std::clamp(std::exp(log_delta), 0.0, 1.0);
}

double AnalyticGaussianDelta(double noise_multiplier, double epsilon) {
  CheckNoiseMultiplier(noise_multiplier);
  if (!(epsilon >= 0) || std::isinf(epsilon)) {
    throw InvalidArgument("epsilon must be finite and >= 0", "epsilon");
  }
  const double s = noise_multiplier;
  const double a = 1.0 / (2 * s) - epsilon * s;
  const double b = -1.0 / (2 * s) - epsilon * s;
  const double tail = NormalCdf(b);
  const double second = tail > 0 ? std::exp(epsilon + std::log(tail)) : 0.0;
  return std::clamp(NormalCdf(a) - second, 0.0, 1.0);
}

double AnalyticGaussianEpsilon(double noise_multiplier, double delta) {
  CheckNoiseMultiplier(noise_multiplier);
  CheckDelta(delta);
  if (AnalyticGaussianDelta(noise_multiplier, 0) <= delta) return 0;
  double lo = 0;
  double hi = 1;
  while (AnalyticGaussianDelta(noise_multiplier, hi) > delta) {
    lo = hi;
    hi *= 2;
    if (hi > 1e300) throw NumericFailure("epsilon bracket overflow");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (AnalyticGaussianDelta(noise_multiplier, mid) <= delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double EpsilonOf(const AccountingSetup& setup, NoiseBatchRatio nbr,
                 double delta) {
  setup.Validate();
  CheckDelta(delta);
  if (nbr.non_private()) {
    throw InvalidArgument("non-private; epsilon undefined",
                          "noise_batch_ratio");
  }
  const double sigma = nbr.noise_multiplier(setup.batch_size);
  if (setup.batching == Batching::kPoisson) {
    PoissonEpsilon accountant(setup.sampling_probability(), setup.iterations,
                              delta);
    return accountant.Epsilon(sigma);
  }
  return AnalyticGaussianEpsilon(DeterministicSigma(setup, nbr), delta);
}

Calibration CalibrateNbr(const PrivacySpec& spec, const AccountingSetup& setup,
                         BatchingChoice choice,
                         const CalibrationOptions& options) {
  spec.Validate();
  AccountingSetup checked = setup;
  checked.batching = choice == BatchingChoice::kPoisson
                         ? Batching::kPoisson
                         : Batching::kDeterministic;
  if (choice == BatchingChoice::kLowerOfBoth && setup.batch_size < 1) {
    // A deterministic batch needs a whole example; fall back to Poisson.
    checked.batching = Batching::kPoisson;
    choice = BatchingChoice::kPoisson;
  }
  checked.Validate();
  if (!(options.lower_bracket > 0 &&
        options.upper_bracket > options.lower_bracket &&
        options.relative_width > 0)) {
    throw InvalidArgument("invalid calibration bracket");
  }
  if (spec.non_private()) {
    Calibration out;
    out.epsilon = spec.epsilon;
    out.branch = checked.batching;
    return out;
  }
  switch (choice) {
    case BatchingChoice::kPoisson:
      return CalibrateBranch(spec, checked, Batching::kPoisson, options);
    case BatchingChoice::kDeterministic:
      return CalibrateBranch(spec, checked, Batching::kDeterministic, options);
    case BatchingChoice::kLowerOfBoth:
      break;
  }
  std::optional<Calibration> deterministic;
  std::optional<Calibration> poisson;
  try {
    deterministic =
        CalibrateBranch(spec, checked, Batching::kDeterministic, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNumeric) throw;
  }
  try {
    poisson = CalibrateBranch(spec, checked, Batching::kPoisson, options);
  } catch (const Error& e) {
    // RDP conversion cannot certify very small epsilons at all.
    if (e.code() != ErrorCode::kNumeric || !deterministic) throw;
  }
  if (!poisson) return *deterministic;
  if (!deterministic) return *poisson;
  return poisson->nbr.value() < deterministic->nbr.value() ? *poisson
                                                           : *deterministic;
}

MiaAdvantage MiaAdvantageOf(const AccountingSetup& setup,
                            NoiseBatchRatio nbr) {
  setup.Validate();
  if (nbr.non_private()) {
    throw InvalidArgument("non-private; advantage undefined",
                          "noise_batch_ratio");
  }
  if (setup.batching == Batching::kDeterministic) {
    return {AnalyticGaussianDelta(DeterministicSigma(setup, nbr), 0),
            BoundKind::kExact};
  }
  return {RdpToDelta(ComposedPoissonCurve(setup, nbr), 0),
          BoundKind::kUpperBound};
}

PrivacyProfile ProfileOf(const AccountingSetup& setup, NoiseBatchRatio nbr,
                         std::span<const double> epsilons) {
  setup.Validate();
  if (nbr.non_private()) {
    throw InvalidArgument("non-private; profile undefined",
                          "noise_batch_ratio");
  }
  if (!std::is_sorted(epsilons.begin(), epsilons.end())) {
    throw InvalidArgument("profile epsilons must be sorted", "epsilon");
  }
  PrivacyProfile profile;
  if (setup.batching == Batching::kDeterministic) {
    const double sigma = DeterministicSigma(setup, nbr);
    for (double e : epsilons) {
      profile.points.push_back({e, AnalyticGaussianDelta(sigma, e)});
    }
    profile.bound = BoundKind::kExact;
  } else {
    const RdpCurve curve = ComposedPoissonCurve(setup, nbr);
    for (double e : epsilons) profile.points.push_back({e, RdpToDelta(curve, e)});
    profile.bound = BoundKind::kUpperBound;
  }
  return profile;
}

std::string_view BudgetAxisName(BudgetAxis axis) {
  switch (axis) {
    case BudgetAxis::kPrivacy:
      return "privacy";
    case BudgetAxis::kCompute:
      return "compute";
    case BudgetAxis::kData:
      return "data";
  }
  return "";
}

BudgetAxis ParseBudgetAxis(std::string_view name) {
  if (name == "privacy" || name == "epsilon") return BudgetAxis::kPrivacy;
  if (name == "compute" || name == "batch") return BudgetAxis::kCompute;
  if (name == "data") return BudgetAxis::kData;
  throw InvalidArgument("unknown budget axis '" + std::string(name) + "'",
                        "axis");
}

VectorField ComputeVectorField(const VectorFieldRequest& request,
                               const CalibrationOptions& options) {
  if (request.x_axis == request.y_axis) {
    throw InvalidArgument("vector-field axes must differ", "y");
  }
  if (request.x_values.empty() || request.y_values.empty()) {
    throw InvalidArgument("vector-field lattice is empty", "x");
  }
  CheckDelta(request.delta);

  using Budgets = std::array<double, 3>;  // epsilon, batch, data
  auto index = [](BudgetAxis a) { return static_cast<size_t>(a); };
  std::map<Budgets, double> cache;
  auto nbr_at = [&](const Budgets& b) {
    auto it = cache.find(b);
    if (it != cache.end()) return it->second;
    AccountingSetup setup{.data_size = b[2],
                          .batch_size = b[1],
                          .iterations = request.iterations};
    const double v =
        CalibrateNbr({.epsilon = b[0], .delta = request.delta}, setup,
                     BatchingChoice::kLowerOfBoth, options)
            .nbr.value();
    cache.emplace(b, v);
    return v;
  };

  VectorField field{request.x_axis, request.y_axis, request.iterations,
                    request.delta, {}};
  const Budgets base = {request.epsilon, request.batch_size,
                        request.data_size};
  for (double y : request.y_values) {
    for (double x : request.x_values) {
      Budgets p = base;
      p[index(request.x_axis)] = x;
      p[index(request.y_axis)] = y;
      Budgets px = p;
      px[index(request.x_axis)] *= 2;
      Budgets py = p;
      py[index(request.y_axis)] *= 2;
      const double v = nbr_at(p);
      field.points.push_back(
          {x, y, v, v / nbr_at(px) - 1.0, v / nbr_at(py) - 1.0});
    }
  }
  return field;
}

}  // namespace dpscale::accounting
