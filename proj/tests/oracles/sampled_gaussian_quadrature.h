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

// Test-only oracle: Renyi divergence of the Poisson-subsampled Gaussian by
// direct numerical integration, independent of the binomial expansion used in
// the library.
//
// With mu0 = N(0, s^2) and mu1 = (1 - q) N(0, s^2) + q N(1, s^2),
//   A - 1 = integral mu0(z) [(mu1(z) / mu0(z))^a - 1] dz
// and mu1 / mu0 = 1 + q expm1((2z - 1) / (2 s^2)). Large divergences are
// integrated in log space, shifted by the integrand's peak.

#ifndef DPSCALE_TESTS_ORACLES_SAMPLED_GAUSSIAN_QUADRATURE_H_
#define DPSCALE_TESTS_ORACLES_SAMPLED_GAUSSIAN_QUADRATURE_H_

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace dpscale::oracle {

inline double SampledGaussianRdpByQuadrature(double sigma, double q,
                                             double order) {
  const double var = sigma * sigma;
  const double log_norm = -std::log(sigma * std::sqrt(2 * M_PI));
  // log(mu1 / mu0) at z, accurate for both tiny and huge likelihood ratios.
  auto log_ratio = [&](double z) {
    const double u = (2 * z - 1) / (2 * var);
    if (u < 30) return std::log1p(q * std::expm1(u));
    return std::log(q) + u + std::log1p((1 - q) / q * std::exp(-u));
  };
  // log of the integrand mu0 (mu1 / mu0)^a; it peaks near z = a.
  auto log_integrand = [&](double z) {
    return log_norm - z * z / (2 * var) + order * log_ratio(z);
  };
  // Mass sits between the two mixture centres 0 and `order`; integrate piece
  // by piece with a generous margin.
  const double lo = -40 * sigma;
  const double hi = order + 40 * sigma;
  auto integrate = [&](auto integrand) {
    double total = 0;
    for (double a = lo; a < hi; a += sigma) {
      const double b = std::min(a + sigma, hi);
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          integrand, a, b, 4, 1e-13);
    }
    return total;
  };
  const double shift = std::max(log_integrand(order), log_integrand(0));
  if (shift < 1) {
    // Small divergence: integrate mu0 [(mu1 / mu0)^a - 1] to keep precision.
    const double total = integrate([&](double z) {
      const double log_density = log_norm - z * z / (2 * var);
      const double log_power = order * log_ratio(z);
      if (log_power < 1) return std::exp(log_density) * std::expm1(log_power);
      return std::exp(log_density + log_power) - std::exp(log_density);
    });
    return std::log1p(total) / (order - 1);
  }
  const double scaled =
      integrate([&](double z) { return std::exp(log_integrand(z) - shift); });
  return (shift + std::log(scaled)) / (order - 1);
}

}  // namespace dpscale::oracle

#endif  // DPSCALE_TESTS_ORACLES_SAMPLED_GAUSSIAN_QUADRATURE_H_
