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

#include "dpscale/parametric_law.h"

#include <cmath>
#include <string>

#include "dpscale/error.h"

namespace dpscale::law {

std::string_view LawFormName(LawForm form) {
  return form == LawForm::kL1 ? "L1" : "L2";
}

LawForm ParseLawForm(std::string_view name) {
  if (name == "L1" || name == "l1") return LawForm::kL1;
  if (name == "L2" || name == "l2") return LawForm::kL2;
  throw InvalidArgument("unknown law form '" + std::string(name) +
                            "' (expected L1 or L2)",
                        "form");
}

double NbrTransform::Apply(double nbr) const {
  if (nbr == 0) return 0;
  const double z = (std::log(nbr) + shift) / scale;
  return 1.0 / (1.0 + std::exp(-z));
}

double NbrTransform::Invert(double value) const {
  if (!(value > 0 && value < 1)) {
    throw InvalidArgument("transformed noise-batch ratio must lie in (0, 1)",
                          "nbr");
  }
  const double z = std::log(value) - std::log1p(-value);
  return std::exp(z * scale - shift);
}

void NbrTransform::Validate() const {
  if (!std::isfinite(shift) || !(scale > 0) || !std::isfinite(scale)) {
    throw InvalidArgument("transform needs finite shift and positive scale",
                          "transform");
  }
}

void ParametricLaw::Validate() const {
  const ParametricCoefficients& k = coef;
  for (double v : {k.e, k.a, k.alpha, k.b, k.beta, k.c, k.gamma, k.alpha2}) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("law coefficients must be finite", "coefficients");
    }
  }
  if (k.a < 0 || k.b < 0 || k.c < 0) {
    throw InvalidArgument("A, B and C must be nonnegative", "coefficients");
  }
  if (!(k.alpha > 0) || !(k.beta > 0) || !(k.gamma > 0)) {
    throw InvalidArgument("alpha, beta and gamma must be positive",
                          "coefficients");
  }
  transform.Validate();
}

double ParametricLaw::Predict(double model_params, double examples,
                              double nbr) const {
  if (!(model_params > 0) || !std::isfinite(model_params)) {
    throw InvalidArgument("model size must be positive", "model_params");
  }
  if (!(examples > 0) || !std::isfinite(examples)) {
    throw InvalidArgument("example count must be positive", "examples");
  }
  if (!(nbr >= 0) || !std::isfinite(nbr)) {
    throw InvalidArgument("noise-batch ratio must be nonnegative", "nbr");
  }
  const ParametricCoefficients& k = coef;
  double loss = k.e + k.a * std::pow(model_params, -k.alpha) +
                k.b * std::pow(examples, -k.beta);
  if (nbr > 0 && k.c > 0) {
    if (form == LawForm::kL1) {
      loss += k.c * std::pow(nbr, k.gamma);
    } else {
      loss += k.c * std::pow(transform.Apply(nbr), k.gamma) *
              std::pow(model_params, -k.alpha2);
    }
  }
  return loss;
}

ParametricLaw DefaultSyntheticLaw() {
  ParametricLaw law;
  law.form = LawForm::kL2;
  law.coef = {.e = 1.0,
              .a = 2000.0,
              .alpha = 0.47,
              .b = 10.0,
              .beta = 0.12,
              .c = 1.5,
              .gamma = 0.95,
              .alpha2 = -0.07};
  return law;
}

}  // namespace dpscale::law
