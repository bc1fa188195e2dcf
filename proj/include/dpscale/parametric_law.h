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

// Parametric private scaling laws.
//
//   L1(M, N, nbr) = E + A / M^alpha + B / N^beta + C * nbr^gamma
//   L2(M, N, nbr) = E + A / M^alpha + B / N^beta + C * s(nbr)^gamma / M^alpha2
//
// where N is the number of training examples seen and s is a logistic
// squashing of log(nbr). A zero noise-batch ratio (non-private training)
// drops the noise term in both forms.

#ifndef DPSCALE_PARAMETRIC_LAW_H_
#define DPSCALE_PARAMETRIC_LAW_H_

#include <string_view>

namespace dpscale::law {

enum class LawForm { kL1, kL2 };

std::string_view LawFormName(LawForm form);  // "L1" / "L2"
LawForm ParseLawForm(std::string_view name);

// s(nbr) = logistic((ln nbr + shift) / scale), a strictly increasing
// bijection from (0, inf) onto (0, 1). s(0) is defined as 0.
struct NbrTransform {
  double shift = 8.0;
  double scale = 1.6;

  double Apply(double nbr) const;
  double Invert(double value) const;  // value in (0, 1)
  void Validate() const;

  friend bool operator==(const NbrTransform&, const NbrTransform&) = default;
};

struct ParametricCoefficients {
  double e = 0;
  double a = 0;
  double alpha = 0;
  double b = 0;
  double beta = 0;
  double c = 0;
  double gamma = 0;
  double alpha2 = 0;  // L2 only

  friend bool operator==(const ParametricCoefficients&,
                         const ParametricCoefficients&) = default;
};

struct ParametricLaw {
  LawForm form = LawForm::kL2;
  ParametricCoefficients coef;
  NbrTransform transform;

  // Throws InvalidArgument unless A, B, C >= 0, alpha, beta, gamma > 0 and
  // every coefficient is finite.
  void Validate() const;

  // Loss for a model with `model_params` parameters trained on `examples`
  // examples with noise-batch ratio `nbr` (0 = non-private).
  double Predict(double model_params, double examples, double nbr) const;

  friend bool operator==(const ParametricLaw&, const ParametricLaw&) = default;
};

// Coefficients used by the synthetic fixtures: the exponents are the ones
// reported for the fitted L2 law; the scale coefficients are chosen to give
// BERT-like cross-entropy ranges.
ParametricLaw DefaultSyntheticLaw();

}  // namespace dpscale::law

#endif  // DPSCALE_PARAMETRIC_LAW_H_
