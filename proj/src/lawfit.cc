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

#include "dpscale/lawfit.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <string>
#include <tuple>

#include <Eigen/Dense>

#include "dpscale/error.h"
#include "dpscale/levenberg_marquardt.h"
#include "dpscale/number_format.h"

namespace dpscale::law {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void CheckQueryValues(double model_params, double iterations, double nbr) {
  if (!std::isfinite(model_params) || !(model_params > 0)) {
    throw InvalidArgument("model_params must be positive and finite",
                          "model_params");
  }
  if (!std::isfinite(iterations) || !(iterations > 0)) {
    throw InvalidArgument("iterations must be positive and finite",
                          "iterations");
  }
  if (!std::isfinite(nbr) || nbr < 0) {
    throw InvalidArgument("noise_batch_ratio must be nonnegative and finite",
                          "noise_batch_ratio");
  }
}

std::string Bounds(double lo, double hi) {
  return "[" + FormatNumber(lo) + ", " + FormatNumber(hi) + "]";
}

// Cell index and weight of x on a strictly increasing axis, x inside range.
struct Bracket {
  size_t i;
  double w;
};

Bracket Locate(const std::vector<double>& axis, double x) {
  const size_t n = axis.size();
  x = std::clamp(x, axis.front(), axis.back());
  size_t i = static_cast<size_t>(
      std::upper_bound(axis.begin(), axis.end(), x) - axis.begin());
  i = i == 0 ? 0 : i - 1;
  if (i > n - 2) i = n - 2;
  const double w = (x - axis[i]) / (axis[i + 1] - axis[i]);
  return {i, std::clamp(w, 0.0, 1.0)};
}

double Lerp(double a, double b, double w) {
  if (w == 0) return a;
  if (w == 1) return b;
  return (1 - w) * a + w * b;
}

// ---------------------------------------------------------------------------
// Parametric objective.

// Parameters: ln E, ln A, ln alpha, ln B, ln beta, ln C, ln gamma, alpha2.
constexpr int kNumParams = 8;
using Params = Eigen::Matrix<double, kNumParams, 1>;

struct Row {
  double log_m;
  double log_n;
  double log_noise;  // ln nbr (L1) or ln s(nbr) (L2); -inf for nbr = 0
  double loss;
  double weight;     // normalised multiplicity
};

ParametricCoefficients ToCoefficients(const Params& p) {
  return {.e = std::exp(p[0]),
          .a = std::exp(p[1]),
          .alpha = std::exp(p[2]),
          .b = std::exp(p[3]),
          .beta = std::exp(p[4]),
          .c = std::exp(p[5]),
          .gamma = std::exp(p[6]),
          .alpha2 = p[7]};
}

class HuberProblem {
 public:
  HuberProblem(std::vector<Row> rows, LawForm form, double delta,
               FitObjective objective)
      : rows_(std::move(rows)),
        form_(form),
        delta_(delta),
        objective_(objective) {}

  int dims() const { return form_ == LawForm::kL2 ? kNumParams : 7; }

  // Prediction and its gradient with respect to the parameters.
  double Predict(const Params& p, const Row& r, Params* grad) const {
    const double e = std::exp(p[0]);
    const double alpha = std::exp(p[2]);
    const double beta = std::exp(p[4]);
    const double gamma = std::exp(p[6]);
    const double ta = std::exp(p[1] - alpha * r.log_m);
    const double tb = std::exp(p[3] - beta * r.log_n);
    double tc = 0;
    if (r.log_noise > -kInf) {
      const double m_term = form_ == LawForm::kL2 ? p[7] * r.log_m : 0.0;
      tc = std::exp(p[5] + gamma * r.log_noise - m_term);
    }
    if (grad != nullptr) {
      (*grad)[0] = e;
      (*grad)[1] = ta;
      (*grad)[2] = -alpha * r.log_m * ta;
      (*grad)[3] = tb;
      (*grad)[4] = -beta * r.log_n * tb;
      (*grad)[5] = tc;
      (*grad)[6] = tc > 0 ? gamma * r.log_noise * tc : 0.0;
      (*grad)[7] = form_ == LawForm::kL2 ? -r.log_m * tc : 0.0;
    }
    return e + ta + tb + tc;
  }

  double Residual(const Params& p, const Row& r, Params* grad) const {
    const double pred = Predict(p, r, grad);
    if (objective_ == FitObjective::kRawLoss) return pred - r.loss;
    if (grad != nullptr) *grad /= pred;
    return std::log(pred) - std::log(r.loss);
  }

  double Value(const Params& p, Params* grad) const {
    double f = 0;
    if (grad != nullptr) grad->setZero();
    Params g;
    for (const Row& r : rows_) {
      const double res = Residual(p, r, grad != nullptr ? &g : nullptr);
      const double a = std::abs(res);
      if (a <= delta_) {
        f += r.weight * 0.5 * res * res;
        if (grad != nullptr) *grad += (r.weight * res) * g;
      } else {
        f += r.weight * delta_ * (a - 0.5 * delta_);
        if (grad != nullptr) {
          *grad += (r.weight * delta_ * (res > 0 ? 1.0 : -1.0)) * g;
        }
      }
    }
    if (!std::isfinite(f)) return kInf;
    return f;
  }

  const std::vector<Row>& rows() const { return rows_; }
  LawForm form() const { return form_; }
  double delta() const { return delta_; }

 private:
  std::vector<Row> rows_;
  LawForm form_;
  double delta_;
  FitObjective objective_;
};

// Limited-memory BFGS with a backtracking Armijo line search.
struct LbfgsResult {
  Params params;
  double value;
  int iterations;
};

LbfgsResult Lbfgs(const HuberProblem& problem, Params x, int max_iterations) {
  const int dims = problem.dims();
  const auto masked = [&](Params g) {
    for (int i = dims; i < kNumParams; ++i) g[i] = 0;
    return g;
  };
  Params g;
  double f = problem.Value(x, &g);
  g = masked(g);
  std::deque<std::pair<Params, Params>> memory;  // (s, y)
  int it = 0;
  int stalled = 0;
  for (; it < max_iterations && std::isfinite(f); ++it) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-15) break;
    // Two-loop recursion.
    Params q = g;
    std::vector<double> alphas(memory.size());
    for (size_t k = memory.size(); k-- > 0;) {
      const auto& [s, y] = memory[k];
      alphas[k] = s.dot(q) / y.dot(s);
      q -= alphas[k] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.dot(y);
    } else {
      q /= std::max(1.0, g.norm());
    }
    for (size_t k = 0; k < memory.size(); ++k) {
      const auto& [s, y] = memory[k];
      const double beta = y.dot(q) / y.dot(s);
      q += (alphas[k] - beta) * s;
    }
    Params dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0)) {
      memory.clear();
      dir = -g / std::max(1.0, g.norm());
      slope = g.dot(dir);
    }
    double step = 1;
    Params x_new;
    Params g_new;
    double f_new = kInf;
    bool found = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = problem.Value(x_new, &g_new);
      if (f_new <= f + 1e-4 * step * slope) {
        found = true;
        break;
      }
      step *= 0.5;
    }
    if (!found) break;
    g_new = masked(g_new);
    const Params s = x_new - x;
    const Params y = g_new - g;
    if (s.dot(y) > 1e-300) {
      memory.emplace_back(s, y);
      if (memory.size() > 10) memory.pop_front();
    }
    const double decrease = f - f_new;
    x = x_new;
    g = g_new;
    stalled = decrease <= 1e-16 * std::max(std::abs(f), 1e-300) ? stalled + 1 : 0;
    f = f_new;
    if (stalled >= 5) break;
  }
  return {x, f, it};
}

// Iteratively reweighted Levenberg-Marquardt refinement of a Huber fit. With
// all residuals inside the quadratic zone this is plain Gauss-Newton, which
// converges far faster than quasi-Newton near a good solution.
struct WeightedModel {
  const HuberProblem* problem;
  std::vector<double> sqrt_weights;

  Eigen::Index num_residuals() const {
    return static_cast<Eigen::Index>(problem->rows().size());
  }
  void Project(Eigen::VectorXd& p) const {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (i != 7) p[i] = std::clamp(p[i], -60.0, 60.0);
    }
  }
  void Evaluate(const Eigen::VectorXd& v, Eigen::VectorXd& r,
                Eigen::MatrixXd* jac) const {
    Params p = Params::Zero();
    p.head(v.size()) = v;
    Params g;
    const auto& rows = problem->rows();
    for (size_t i = 0; i < rows.size(); ++i) {
      const Eigen::Index k = static_cast<Eigen::Index>(i);
      r[k] = sqrt_weights[i] *
             problem->Residual(p, rows[i], jac != nullptr ? &g : nullptr);
      if (jac != nullptr) {
        jac->row(k) = sqrt_weights[i] * g.head(v.size()).transpose();
      }
    }
  }
};

Params Polish(const HuberProblem& problem, Params x, double& value) {
  const int dims = problem.dims();
  WeightedModel model{&problem, {}};
  const auto& rows = problem.rows();
  model.sqrt_weights.resize(rows.size());
  for (int round = 0; round < 6; ++round) {
    for (size_t i = 0; i < rows.size(); ++i) {
      const double a = std::abs(problem.Residual(x, rows[i], nullptr));
      const double huber = a <= problem.delta() ? 1.0 : problem.delta() / a;
      model.sqrt_weights[i] = std::sqrt(rows[i].weight * huber);
    }
    LmOptions options;
    options.max_iterations = 200;
    const LmResult lm =
        LevenbergMarquardt(model, Eigen::VectorXd(x.head(dims)), options);
    if (!lm.finite) break;
    Params candidate = x;
    candidate.head(dims) = lm.params;
    const double v = problem.Value(candidate, nullptr);
    if (!(v < value)) break;
    const bool tiny = value - v <= 1e-15 * value;
    x = candidate;
    value = v;
    if (tiny) break;
  }
  return x;
}

double RadicalInverse(uint64_t index, uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double result = 0;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return result;
}

// Quasi-random start inside the coefficient box (Halton sequence).
Params StartPoint(uint64_t index) {
  static constexpr std::array<uint64_t, kNumParams> kPrimes = {2,  3,  5,  7,
                                                               11, 13, 17, 19};
  static const std::array<std::pair<double, double>, kNumParams> kBox = {{
      {std::log(0.1), std::log(5.0)},     // ln E
      {std::log(1.0), std::log(1e4)},     // ln A
      {std::log(0.05), std::log(1.5)},    // ln alpha
      {std::log(1.0), std::log(1e4)},     // ln B
      {std::log(0.05), std::log(1.5)},    // ln beta
      {std::log(0.01), std::log(10.0)},   // ln C
      {std::log(0.1), std::log(3.0)},     // ln gamma
      {-0.5, 0.5},                        // alpha2
  }};
  Params p;
  for (int i = 0; i < kNumParams; ++i) {
    const double u = RadicalInverse(index, kPrimes[i]);
    p[i] = kBox[i].first + u * (kBox[i].second - kBox[i].first);
  }
  return p;
}

bool LexLess(const ParametricCoefficients& a, const ParametricCoefficients& b) {
  return std::tie(a.e, a.a, a.alpha, a.b, a.beta, a.c, a.gamma, a.alpha2) <
         std::tie(b.e, b.a, b.alpha, b.b, b.beta, b.c, b.gamma, b.alpha2);
}

}  // namespace

// ---------------------------------------------------------------------------
// LawDomain.

bool LawDomain::Contains(double model_params, double iterations,
                         double nbr) const {
  if (!(model_params >= m_min && model_params <= m_max)) return false;
  if (!(iterations >= t_min && iterations <= t_max)) return false;
  if (nbr == 0) return has_zero_slice;
  return nbr >= nbr_min && nbr <= nbr_max && nbr > 0;
}

void LawDomain::Check(double model_params, double iterations,
                      double nbr) const {
  CheckQueryValues(model_params, iterations, nbr);
  if (!(model_params >= m_min && model_params <= m_max)) {
    throw OutOfDomain("model_params " + FormatNumber(model_params) +
                          " outside the law domain " + Bounds(m_min, m_max),
                      "model_params");
  }
  if (!(iterations >= t_min && iterations <= t_max)) {
    throw OutOfDomain("iterations " + FormatNumber(iterations) +
                          " outside the law domain " + Bounds(t_min, t_max),
                      "iterations");
  }
  if (nbr == 0) {
    if (!has_zero_slice) {
      throw OutOfDomain("law has no non-private (zero noise-batch ratio) layer",
                        "noise_batch_ratio");
    }
    return;
  }
  if (!(nbr >= nbr_min && nbr <= nbr_max && nbr_max > 0)) {
    throw OutOfDomain("noise_batch_ratio " + FormatNumber(nbr) +
                          " outside the law domain " +
                          Bounds(nbr_min, nbr_max),
                      "noise_batch_ratio");
  }
}

void LawDomain::Validate() const {
  if (!(m_min > 0 && m_min <= m_max && std::isfinite(m_max))) {
    throw InvalidArgument("invalid model-size domain", "domain");
  }
  if (!(t_min > 0 && t_min <= t_max && std::isfinite(t_max))) {
    throw InvalidArgument("invalid iteration domain", "domain");
  }
  if (!(nbr_min >= 0 && nbr_min <= nbr_max)) {
    throw InvalidArgument("invalid noise-batch-ratio domain", "domain");
  }
}

// ---------------------------------------------------------------------------
// InterpolatedLaw.

InterpolatedLaw InterpolatedLaw::Build(const grid::MeasurementGrid& grid) {
  if (grid.state != grid::GridState::kMonotone &&
      grid.state != grid::GridState::kExtrapolated) {
    throw FailedPrecondition(
        "interpolation needs a monotone or extrapolated grid, got " +
        std::string(grid::GridStateName(grid.state)));
  }
  grid.Validate();
  const size_t nm = grid.model_sizes.size();
  const size_t nt = grid.iterations.size();
  const size_t ns = grid.nbrs.size();
  const size_t zero = grid.nbrs.front() == 0 ? 1 : 0;
  std::vector<double> nbrs(grid.nbrs.begin() + zero, grid.nbrs.end());
  std::vector<double> private_loss;
  std::vector<double> zero_loss;
  private_loss.reserve(nm * nt * (ns - zero));
  for (size_t m = 0; m < nm; ++m) {
    for (size_t t = 0; t < nt; ++t) {
      if (zero) zero_loss.push_back(grid.At(m, t, 0));
      for (size_t s = zero; s < ns; ++s) private_loss.push_back(grid.At(m, t, s));
    }
  }
  return FromParts(grid.model_sizes, grid.iterations, std::move(nbrs),
                   std::move(private_loss), std::move(zero_loss), grid.state,
                   grid.provenance);
}

InterpolatedLaw InterpolatedLaw::FromParts(
    std::vector<double> model_sizes, std::vector<int64_t> iterations,
    std::vector<double> nbrs, std::vector<double> private_loss,
    std::vector<double> zero_loss, grid::GridState source_state,
    grid::GridProvenance provenance) {
  InterpolatedLaw law;
  law.model_sizes_ = std::move(model_sizes);
  law.iterations_ = std::move(iterations);
  law.nbrs_ = std::move(nbrs);
  law.private_loss_ = std::move(private_loss);
  law.zero_loss_ = std::move(zero_loss);
  law.source_state_ = source_state;
  law.provenance_ = std::move(provenance);
  law.Finish();
  return law;
}

void InterpolatedLaw::Finish() {
  const auto need_two = [](size_t n, const char* axis) {
    if (n < 2) {
      throw InvalidArgument(std::string("interpolation needs at least 2 points "
                                        "on axis '") +
                                axis + "'",
                            axis);
    }
  };
  need_two(model_sizes_.size(), "model_params");
  need_two(iterations_.size(), "iterations");
  if (!nbrs_.empty()) need_two(nbrs_.size(), "noise_batch_ratio");
  if (nbrs_.empty() && zero_loss_.empty()) {
    throw InvalidArgument("law has no loss layers", "noise_batch_ratio");
  }
  const size_t nm = model_sizes_.size();
  const size_t nt = iterations_.size();
  if (private_loss_.size() != nm * nt * nbrs_.size()) {
    throw InvalidArgument("private loss tensor has the wrong size", "loss");
  }
  if (!zero_loss_.empty() && zero_loss_.size() != nm * nt) {
    throw InvalidArgument("non-private loss layer has the wrong size", "loss");
  }
  const auto check_axis = [](const auto& axis, const char* name) {
    for (size_t i = 0; i < axis.size(); ++i) {
      if (!(axis[i] > 0) || !std::isfinite(static_cast<double>(axis[i])) ||
          (i > 0 && !(axis[i - 1] < axis[i]))) {
        throw InvalidArgument(std::string("axis '") + name +
                                  "' must be positive and strictly increasing",
                              name);
      }
    }
  };
  check_axis(model_sizes_, "model_params");
  check_axis(iterations_, "iterations");
  check_axis(nbrs_, "noise_batch_ratio");
  for (const auto* layer : {&private_loss_, &zero_loss_}) {
    for (double v : *layer) {
      if (!std::isfinite(v) || !(v > 0)) {
        throw InvalidArgument("losses must be finite and positive", "loss");
      }
    }
  }
  log_m_.clear();
  log_t_.clear();
  log_s_.clear();
  for (double m : model_sizes_) log_m_.push_back(std::log(m));
  for (int64_t t : iterations_) log_t_.push_back(std::log(static_cast<double>(t)));
  for (double s : nbrs_) log_s_.push_back(std::log(s));
  domain_.m_min = model_sizes_.front();
  domain_.m_max = model_sizes_.back();
  domain_.t_min = static_cast<double>(iterations_.front());
  domain_.t_max = static_cast<double>(iterations_.back());
  domain_.nbr_min = nbrs_.empty() ? 0 : nbrs_.front();
  domain_.nbr_max = nbrs_.empty() ? 0 : nbrs_.back();
  domain_.has_zero_slice = !zero_loss_.empty();
}

double InterpolatedLaw::Query(double model_params, double iterations,
                              double nbr) const {
  domain_.Check(model_params, iterations, nbr);
  const Bracket bm = Locate(log_m_, std::log(model_params));
  const Bracket bt = Locate(log_t_, std::log(iterations));
  const size_t nt = iterations_.size();
  if (nbr == 0) {
    const auto at = [&](size_t m, size_t t) { return zero_loss_[m * nt + t]; };
    const double lo = Lerp(at(bm.i, bt.i), at(bm.i, bt.i + 1), bt.w);
    const double hi = Lerp(at(bm.i + 1, bt.i), at(bm.i + 1, bt.i + 1), bt.w);
    return Lerp(lo, hi, bm.w);
  }
  const Bracket bs = Locate(log_s_, std::log(nbr));
  const size_t ns = nbrs_.size();
  const auto at = [&](size_t m, size_t t, size_t s) {
    return private_loss_[(m * nt + t) * ns + s];
  };
  double plane[2];
  for (size_t dm = 0; dm < 2; ++dm) {
    const size_t m = bm.i + dm;
    const double lo = Lerp(at(m, bt.i, bs.i), at(m, bt.i, bs.i + 1), bs.w);
    const double hi =
        Lerp(at(m, bt.i + 1, bs.i), at(m, bt.i + 1, bs.i + 1), bs.w);
    plane[dm] = Lerp(lo, hi, bt.w);
  }
  return Lerp(plane[0], plane[1], bm.w);
}

// ---------------------------------------------------------------------------
// Parametric laws.

std::string_view FitObjectiveName(FitObjective objective) {
  return objective == FitObjective::kRawLoss ? "raw" : "log";
}

FitObjective ParseFitObjective(std::string_view name) {
  if (name == "raw") return FitObjective::kRawLoss;
  if (name == "log") return FitObjective::kLogLoss;
  throw InvalidArgument("unknown fit objective '" + std::string(name) +
                            "' (expected raw or log)",
                        "objective");
}

double ParametricModel::Query(double model_params, double iterations,
                              double nbr) const {
  domain.Check(model_params, iterations, nbr);
  return law.Predict(model_params, examples_per_step * iterations, nbr);
}

std::vector<ParametricSample> SamplesFromGrid(
    const grid::MeasurementGrid& grid) {
  if (grid.state == grid::GridState::kRaw) {
    throw FailedPrecondition("parametric fitting needs a cleaned grid");
  }
  std::vector<ParametricSample> rows;
  rows.reserve(grid.loss.size());
  for (size_t m = 0; m < grid.model_sizes.size(); ++m) {
    for (size_t t = 0; t < grid.iterations.size(); ++t) {
      for (size_t s = 0; s < grid.nbrs.size(); ++s) {
        rows.push_back({grid.model_sizes[m],
                        static_cast<double>(grid.iterations[t]), grid.nbrs[s],
                        grid.At(m, t, s)});
      }
    }
  }
  return rows;
}

double HuberObjective(const ParametricLaw& law,
                      std::span<const ParametricSample> rows,
                      double examples_per_step, double huber_delta,
                      FitObjective objective) {
  if (rows.empty()) throw InvalidArgument("no rows", "rows");
  double sum = 0;
  for (const ParametricSample& r : rows) {
    const double pred =
        law.Predict(r.model_params, examples_per_step * r.iterations, r.nbr);
    const double res = objective == FitObjective::kRawLoss
                           ? pred - r.loss
                           : std::log(pred) - std::log(r.loss);
    const double a = std::abs(res);
    sum += a <= huber_delta ? 0.5 * res * res
                            : huber_delta * (a - 0.5 * huber_delta);
  }
  return sum / static_cast<double>(rows.size());
}

ParametricModel FitParametric(std::span<const ParametricSample> rows,
                              const FitOptions& options) {
  if (!(options.huber_delta > 0)) {
    throw InvalidArgument("huber_delta must be positive", "huber_delta");
  }
  if (!(options.examples_per_step > 0)) {
    throw InvalidArgument("examples_per_step must be positive",
                          "examples_per_step");
  }
  if (options.starts < 1) {
    throw InvalidArgument("at least one start is required", "starts");
  }
  options.transform.Validate();

  LawDomain domain;
  domain.m_min = domain.t_min = domain.nbr_min = kInf;
  domain.m_max = domain.t_max = domain.nbr_max = 0;
  domain.has_zero_slice = true;
  std::vector<ParametricSample> kept;
  for (const ParametricSample& r : rows) {
    if (!(r.model_params > 0) || !(r.iterations > 0) || !(r.nbr >= 0) ||
        !(r.loss > 0) || !std::isfinite(r.model_params) ||
        !std::isfinite(r.iterations) || !std::isfinite(r.nbr) ||
        !std::isfinite(r.loss)) {
      throw InvalidArgument("fit rows need positive finite values", "rows");
    }
    domain.m_min = std::min(domain.m_min, r.model_params);
    domain.m_max = std::max(domain.m_max, r.model_params);
    domain.t_min = std::min(domain.t_min, r.iterations);
    domain.t_max = std::max(domain.t_max, r.iterations);
    if (r.nbr > 0) {
      domain.nbr_min = std::min(domain.nbr_min, r.nbr);
      domain.nbr_max = std::max(domain.nbr_max, r.nbr);
    }
    if (r.iterations > options.filters.min_iterations &&
        r.nbr > options.filters.min_nbr && r.loss <= options.filters.max_loss) {
      kept.push_back(r);
    }
  }
  if (domain.nbr_max == 0) domain.nbr_min = 0;
  if (kept.size() < 10) {
    throw InvalidArgument("parametric fit needs at least 10 rows after "
                          "filtering, got " + std::to_string(kept.size()),
                          "rows");
  }

  // Canonical order with exact duplicates merged into weights, so the result
  // does not depend on row order or on uniform replication of the data.
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return std::tie(a.model_params, a.iterations, a.nbr, a.loss) <
           std::tie(b.model_params, b.iterations, b.nbr, b.loss);
  });
  std::vector<Row> fit_rows;
  const double total = static_cast<double>(kept.size());
  for (size_t i = 0; i < kept.size();) {
    size_t j = i;
    while (j < kept.size() && kept[j].model_params == kept[i].model_params &&
           kept[j].iterations == kept[i].iterations &&
           kept[j].nbr == kept[i].nbr && kept[j].loss == kept[i].loss) {
      ++j;
    }
    const ParametricSample& r = kept[i];
    double log_noise = -kInf;
    if (r.nbr > 0) {
      log_noise = options.form == LawForm::kL1
                      ? std::log(r.nbr)
                      : std::log(options.transform.Apply(r.nbr));
    }
    fit_rows.push_back({std::log(r.model_params),
                        std::log(options.examples_per_step * r.iterations),
                        log_noise, r.loss,
                        static_cast<double>(j - i) / total});
    i = j;
  }

  const HuberProblem problem(std::move(fit_rows), options.form,
                             options.huber_delta, options.objective);
  bool have_best = false;
  Params best;
  double best_value = kInf;
  int best_start = -1;
  for (int s = 0; s < options.starts; ++s) {
    Params start = StartPoint(options.seed * static_cast<uint64_t>(options.starts) +
                              static_cast<uint64_t>(s) + 1);
    if (options.form == LawForm::kL1) start[7] = 0;
    LbfgsResult run = Lbfgs(problem, start, options.max_iterations);
    if (!std::isfinite(run.value) || !run.params.allFinite()) continue;
    double value = run.value;
    const Params x = Polish(problem, run.params, value);
    if (!std::isfinite(value)) continue;
    const bool better =
        !have_best || value < best_value ||
        (value == best_value &&
         LexLess(ToCoefficients(x), ToCoefficients(best)));
    if (better) {
      have_best = true;
      best = x;
      best_value = value;
      best_start = s;
    }
  }
  if (!have_best) {
    throw NumericFailure("parametric fit diverged from all " +
                         std::to_string(options.starts) + " starts on " +
                         std::to_string(kept.size()) + " rows");
  }

  ParametricModel model;
  model.law.form = options.form;
  model.law.coef = ToCoefficients(best);
  if (options.form == LawForm::kL1) model.law.coef.alpha2 = 0;
  model.law.transform = options.transform;
  model.examples_per_step = options.examples_per_step;
  model.domain = domain;
  FitMetadata meta;
  meta.huber_delta = options.huber_delta;
  meta.objective = options.objective;
  meta.filters = options.filters;
  meta.final_objective = best_value;
  meta.chosen_start = best_start;
  meta.rows_used = static_cast<int>(kept.size());
  meta.rows_filtered = static_cast<int>(rows.size() - kept.size());
  model.fit = meta;
  return model;
}

double OptimalModelSize(const ParametricLaw& law, double compute, double nbr,
                        double seq_len, double m_lo, double m_hi) {
  if (!(compute > 0) || !std::isfinite(compute)) {
    throw InvalidArgument("compute must be positive", "compute");
  }
  if (!(seq_len > 0)) throw InvalidArgument("seq_len must be positive", "seq_len");
  if (!(m_lo > 0) || !(m_hi > m_lo)) {
    throw InvalidArgument("model-size bracket must satisfy 0 < lo < hi",
                          "model_params");
  }
  law.Validate();
  const auto loss = [&](double log_m) {
    const double m = std::exp(log_m);
    return law.Predict(m, compute / (6 * m * seq_len), nbr);
  };
  // The objective is a sum of exponentials in ln M, hence convex, so golden
  // section converges to the global minimum.
  const double inv_phi = (std::sqrt(5.0) - 1) / 2;
  double a = std::log(m_lo);
  double b = std::log(m_hi);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = loss(c);
  double fd = loss(d);
  while (b - a > 1e-10) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = loss(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = loss(d);
    }
  }
  return std::exp(0.5 * (a + b));
}

// ---------------------------------------------------------------------------
// FittedLaw.

std::string_view LawKindName(LawKind kind) {
  return kind == LawKind::kInterpolated ? "interp" : "parametric";
}

LawKind FittedLaw::kind() const {
  return law_.index() == 0 ? LawKind::kInterpolated : LawKind::kParametric;
}

const LawDomain& FittedLaw::domain() const {
  if (const auto* p = parametric()) return p->domain;
  return interpolated()->domain();
}

double FittedLaw::Query(double model_params, double iterations,
                        double nbr) const {
  if (const auto* p = parametric()) {
    return p->Query(model_params, iterations, nbr);
  }
  return interpolated()->Query(model_params, iterations, nbr);
}

}  // namespace dpscale::law
