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

// Small dense Levenberg-Marquardt solver for nonlinear least squares with a
// handful of parameters.
//
// A model provides
//   Eigen::Index num_residuals() const;
//   void Evaluate(const Eigen::VectorXd& params, Eigen::VectorXd& residuals,
//                 Eigen::MatrixXd* jacobian) const;
//   void Project(Eigen::VectorXd& params) const;   // clamp to feasible set
// and the solver minimises 0.5 * |residuals|^2.

#ifndef DPSCALE_LEVENBERG_MARQUARDT_H_
#define DPSCALE_LEVENBERG_MARQUARDT_H_

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace dpscale {

struct LmOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-14;
  double step_tolerance = 1e-14;
  double cost_tolerance = 1e-30;
  double initial_damping = 1e-3;
};

struct LmResult {
  Eigen::VectorXd params;
  double cost = 0;  // 0.5 * sum of squared residuals
  int iterations = 0;
  bool finite = true;
};

template <typename Model>
LmResult LevenbergMarquardt(const Model& model, Eigen::VectorXd params,
                            const LmOptions& options = {}) {
  const Eigen::Index n = params.size();
  Eigen::VectorXd r(model.num_residuals());
  Eigen::MatrixXd jac(model.num_residuals(), n);
  model.Project(params);
  model.Evaluate(params, r, &jac);
  double cost = 0.5 * r.squaredNorm();

  LmResult result{params, cost, 0, std::isfinite(cost)};
  if (!result.finite) return result;

  double mu = -1;
  double nu = 2;
  Eigen::VectorXd trial_r(r.size());
  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tolerance ||
        cost < options.cost_tolerance) {
      break;
    }
    if (mu < 0) mu = options.initial_damping * jtj.diagonal().maxCoeff();
    if (!(mu > 0)) mu = options.initial_damping;

    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += mu * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-grad);
      Eigen::VectorXd trial = params + step;
      model.Project(trial);
      model.Evaluate(trial, trial_r, nullptr);
      const double trial_cost = 0.5 * trial_r.squaredNorm();
      const Eigen::VectorXd actual_step = trial - params;
      const double predicted =
          -(grad.dot(actual_step) + 0.5 * actual_step.dot(jtj * actual_step));
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double rho = predicted > 0 ? (cost - trial_cost) / predicted : 1;
        mu *= std::max(1.0 / 3.0, 1 - std::pow(2 * rho - 1, 3));
        nu = 2;
        const double step_norm = actual_step.norm();
        params = trial;
        cost = trial_cost;
        model.Evaluate(params, r, &jac);
        accepted = true;
        if (step_norm < options.step_tolerance * (params.norm() + 1e-300)) {
          result.params = params;
          result.cost = cost;
          return result;
        }
      } else {
        mu *= nu;
        nu *= 2;
      }
    }
    if (!accepted) break;
  }
  result.params = params;
  result.cost = cost;
  result.finite = params.allFinite() && std::isfinite(cost);
  return result;
}

}  // namespace dpscale

#endif  // DPSCALE_LEVENBERG_MARQUARDT_H_
