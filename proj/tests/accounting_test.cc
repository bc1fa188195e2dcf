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

#include <cmath>
#include <random>
#include <vector>

#include "dpscale/error.h"
#include "gtest/gtest.h"
#include "oracles/reference_calibrations.h"
#include "oracles/sampled_gaussian_quadrature.h"

namespace dpscale::accounting {
namespace {

// Phi(0.5) - Phi(-0.5), 40-digit evaluation.
constexpr double kDeltaSigma1Eps0 = 0.3829249225480262072754092212166754797672;

TEST(RdpGaussianTest, ClosedForm) {
  EXPECT_DOUBLE_EQ(RdpGaussian(1, 2), 1.0);
  EXPECT_DOUBLE_EQ(RdpGaussian(2, 2), 0.25);
}

TEST(RdpGaussianTest, RejectsOrderOne) {
  EXPECT_THROW(RdpGaussian(1, 1.0), Error);
  EXPECT_THROW(RdpGaussian(0, 2.0), Error);
  EXPECT_THROW(RdpGaussian(NAN, 2.0), Error);
}

TEST(RdpSubsampledGaussianTest, FullSamplingIsUnsampledGaussian) {
  for (int order = 2; order <= 64; ++order) {
    for (double sigma : {0.5, 1.0, 3.0}) {
      const double expected = RdpGaussian(sigma, order);
      EXPECT_NEAR(RdpSubsampledGaussian(sigma, 1.0, order), expected,
                  1e-12 * expected);
    }
  }
}

TEST(RdpSubsampledGaussianTest, MatchesQuadrature) {
  const double value = RdpSubsampledGaussian(4, 0.01, 2);
  const double oracle = oracle::SampledGaussianRdpByQuadrature(4, 0.01, 2);
  EXPECT_NEAR(value, oracle, 1e-6 * oracle);
  for (int order : {3, 7, 20}) {
    const double v = RdpSubsampledGaussian(1.5, 0.05, order);
    const double o = oracle::SampledGaussianRdpByQuadrature(1.5, 0.05, order);
    EXPECT_NEAR(v, o, 1e-6 * o) << "order " << order;
  }
}

TEST(RdpSubsampledGaussianTest, FractionalOrdersBoundQuadrature) {
  for (double q : {1e-3, 1e-2, 0.05, 0.2, 0.5}) {
    for (double sigma : {0.8, 1.0, 2.0, 4.0, 8.0}) {
      for (double order : {1.1, 1.5, 2.5, 3.7, 5.3, 7.9, 10.9}) {
        const double v = RdpSubsampledGaussian(sigma, q, order);
        const double o =
            oracle::SampledGaussianRdpByQuadrature(sigma, q, order);
        // A series that does not settle reports +inf, which is still a bound.
        if (q <= 0.01) ASSERT_TRUE(std::isfinite(v));
        if (!std::isfinite(v)) continue;
        EXPECT_GE(v, o * (1 - 1e-6))
            << "q " << q << " sigma " << sigma << " order " << order;
        EXPECT_LE(v, o * (1 + 2e-5))
            << "q " << q << " sigma " << sigma << " order " << order;
      }
    }
  }
}

TEST(RdpSubsampledGaussianTest, VanishesWithSamplingProbability) {
  EXPECT_LT(RdpSubsampledGaussian(1, 1e-12, 2), 1e-20);
  EXPECT_GT(RdpSubsampledGaussian(1, 1e-12, 2), 0);
}

TEST(RdpSubsampledGaussianTest, MonotoneInQAndOrder) {
  double prev_q = 0;
  for (double q : {1e-4, 1e-3, 0.01, 0.1, 0.5, 0.9, 1.0}) {
    const double v = RdpSubsampledGaussian(0.8, q, 8);
    EXPECT_GE(v, prev_q);
    prev_q = v;
  }
  double prev_order = 0;
  for (int order = 2; order <= 256; ++order) {
    const double v = RdpSubsampledGaussian(2.0, 0.01, order);
    EXPECT_GE(v, prev_order * (1 - 1e-12));
    prev_order = v;
  }
}

TEST(RdpSubsampledGaussianTest, RejectsBadSamplingProbability) {
  EXPECT_THROW(RdpSubsampledGaussian(1, 0.0, 2), Error);
  EXPECT_THROW(RdpSubsampledGaussian(1, 1.5, 2), Error);
  EXPECT_THROW(RdpSubsampledGaussian(1, 0.5, 1), Error);
}

TEST(ComposeTest, Additivity) {
  RdpCurve single{{2}, {0.5}};
  EXPECT_EQ(Compose(single, 2).values, std::vector<double>{1.0});
  RdpCurve pair{{2, 3}, {0.1, 0.2}};
  const RdpCurve ten = Compose(pair, 10);
  EXPECT_DOUBLE_EQ(ten.values[0], 1.0);
  EXPECT_DOUBLE_EQ(ten.values[1], 2.0);
  EXPECT_EQ(Compose(pair, 1).values, pair.values);
  EXPECT_THROW(Compose(pair, 0), Error);
}

TEST(RdpToEpsilonTest, FiniteForHugeDivergence) {
  const double eps = RdpToEpsilon({{2}, {1e12}}, 1e-8);
  EXPECT_TRUE(std::isfinite(eps));
  EXPECT_GT(eps, 1e11);
}

TEST(RdpToEpsilonTest, ZeroDivergenceClipsToZero) {
  EXPECT_EQ(RdpToEpsilon({{2, 4, 8}, {0, 0, 0}}, 0.5), 0.0);
}

TEST(RdpToEpsilonTest, NonincreasingInDelta) {
  const RdpCurve curve = Compose(SubsampledGaussianCurve(1.1, 0.01), 1000);
  double prev = INFINITY;
  for (double delta : {1e-12, 1e-10, 1e-8, 1e-6, 1e-3, 0.1}) {
    const double eps = RdpToEpsilon(curve, delta);
    EXPECT_LE(eps, prev);
    prev = eps;
  }
}

TEST(RdpToEpsilonTest, UpperBoundsExactGaussian) {
  for (double sigma : {0.7, 1.0, 2.0, 5.0}) {
    const RdpCurve curve = SubsampledGaussianCurve(sigma, 1.0);
    for (double delta : {1e-3, 1e-5, 1e-8}) {
      EXPECT_LE(AnalyticGaussianEpsilon(sigma, delta),
                RdpToEpsilon(curve, delta));
    }
  }
}

TEST(AnalyticGaussianTest, Examples) {
  EXPECT_NEAR(AnalyticGaussianDelta(1, 0), kDeltaSigma1Eps0, 1e-15);
  EXPECT_LT(AnalyticGaussianDelta(1e9, 0), 1e-9);
  EXPECT_LT(AnalyticGaussianDelta(1, 10), 1e-9);
}

TEST(AnalyticGaussianTest, StrictlyDecreasing) {
  double prev = 1;
  for (double sigma : {0.3, 0.5, 1.0, 2.0, 4.0}) {
    const double d = AnalyticGaussianDelta(sigma, 1.0);
    EXPECT_LT(d, prev);
    prev = d;
  }
  prev = 1;
  for (double eps : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const double d = AnalyticGaussianDelta(0.8, eps);
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(AnalyticGaussianTest, EpsilonInvertsDelta) {
  for (double sigma : {0.5, 1.0, 3.0}) {
    for (double delta : {1e-2, 1e-5, 1e-9}) {
      const double eps = AnalyticGaussianEpsilon(sigma, delta);
      EXPECT_LE(AnalyticGaussianDelta(sigma, eps), delta);
      EXPECT_NEAR(AnalyticGaussianDelta(sigma, eps), delta, 1e-9 * delta);
    }
  }
}

TEST(EpsilonOfTest, DeterministicFullBatch) {
  AccountingSetup setup{.data_size = 1000,
                        .batch_size = 1000,
                        .iterations = 1,
                        .batching = Batching::kDeterministic};
  EXPECT_NEAR(EpsilonOf(setup, NoiseBatchRatio(1.0 / 1000), 0.382925), 0,
              1e-6);
}

TEST(EpsilonOfTest, NonPrivateIsAnError) {
  AccountingSetup setup{.data_size = 1e6, .batch_size = 1e3, .iterations = 10};
  EXPECT_THROW(EpsilonOf(setup, NoiseBatchRatio(0), 1e-8), Error);
}

TEST(EpsilonOfTest, DoublingNoiseNeverIncreasesEpsilon) {
  for (Batching b : {Batching::kPoisson, Batching::kDeterministic}) {
    AccountingSetup setup{.data_size = 1e6,
                          .batch_size = 4096,
                          .iterations = 2000,
                          .batching = b};
    double prev = INFINITY;
    for (double nbr = 1e-5; nbr < 1e-1; nbr *= 2) {
      const double eps = EpsilonOf(setup, NoiseBatchRatio(nbr), 1e-8);
      EXPECT_LE(eps, prev);
      prev = eps;
    }
  }
}

// Frozen from dp_accounting's RdpAccountant on the same order grid; see
// tests/oracles/reference_accountant.py.
TEST(EpsilonOfTest, MatchesReferenceAccountant) {
  struct Case {
    double n, b;
    int64_t t;
    double nbr, expected;
  };
  for (const Case& c : {Case{1e7, 1024, 16000, std::ldexp(1.0, -15),
                             7394535.05902721},
                        Case{1e7, 65536, 16000, std::ldexp(1.0, -10),
                             0.06806440616710385},
                        Case{1e6, 4096, 2000, std::ldexp(1.0, -9),
                             0.11388698175518613}}) {
    AccountingSetup setup{.data_size = c.n, .batch_size = c.b,
                          .iterations = c.t};
    EXPECT_NEAR(EpsilonOf(setup, NoiseBatchRatio(c.nbr), 1e-8), c.expected,
                0.01 * c.expected);
  }
}

TEST(CalibrateNbrTest, RoundTrip) {
  const PrivacySpec spec{.epsilon = 4, .delta = 1e-8};
  AccountingSetup setup{.data_size = 1e7, .batch_size = 65536,
                        .iterations = 16000};
  const Calibration c = CalibrateNbr(spec, setup);
  setup.batching = c.branch;
  const double eps = EpsilonOf(setup, c.nbr, spec.delta);
  EXPECT_LE(eps, spec.epsilon);
  EXPECT_GE(eps, 0.999 * spec.epsilon);
  EXPECT_DOUBLE_EQ(c.epsilon, eps);
  EXPECT_DOUBLE_EQ(c.noise_multiplier, 65536 * c.nbr.value());
}

TEST(CalibrateNbrTest, MatchesReferenceAccountant) {
  const Calibration c =
      CalibrateNbr({.epsilon = 8, .delta = 1e-8},
                   {.data_size = 1e7, .batch_size = 65536, .iterations = 16000});
  EXPECT_EQ(c.branch, Batching::kPoisson);
  EXPECT_NEAR(c.nbr.value(), 1.4211622781775352e-05, 0.01 * 1.4212e-5);
}

TEST(CalibrateNbrTest, MatchesReferenceOnPublishedSettings) {
  for (const oracle::ReferenceCalibration& r :
       oracle::kReferenceCalibrations) {
    const Calibration c = CalibrateNbr(
        {.epsilon = r.epsilon, .delta = oracle::kReferenceDelta},
        {.data_size = r.data_size, .batch_size = r.batch_size,
         .iterations = r.iterations},
        BatchingChoice::kPoisson);
    EXPECT_NEAR(c.nbr.value() / r.nbr, 1, 0.01)
        << "eps=" << r.epsilon << " N=" << r.data_size;
  }
}

TEST(CalibrateNbrTest, MonotoneInEpsilon) {
  AccountingSetup setup{.data_size = 1e6, .batch_size = 8192,
                        .iterations = 3000};
  double prev = INFINITY;
  for (double eps : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0}) {
    const double nbr = CalibrateNbr({.epsilon = eps}, setup).nbr.value();
    EXPECT_LE(nbr, prev);
    prev = nbr;
  }
}

TEST(CalibrateNbrTest, FullBatchPrefersDeterministic) {
  AccountingSetup setup{.data_size = 5000, .batch_size = 5000,
                        .iterations = 100};
  const Calibration both = CalibrateNbr({.epsilon = 2}, setup);
  EXPECT_EQ(both.branch, Batching::kDeterministic);
  const Calibration poisson =
      CalibrateNbr({.epsilon = 2}, setup, BatchingChoice::kPoisson);
  EXPECT_LE(both.nbr.value(), poisson.nbr.value());
}

TEST(CalibrateNbrTest, NonPrivateSpec) {
  const Calibration c =
      CalibrateNbr({.epsilon = INFINITY},
                   {.data_size = 1e6, .batch_size = 1e3, .iterations = 10});
  EXPECT_TRUE(c.nbr.non_private());
}

TEST(CalibrateNbrTest, RejectsInvalidInputs) {
  AccountingSetup setup{.data_size = 1e6, .batch_size = 1e3,
                        .iterations = 10};
  EXPECT_THROW(CalibrateNbr({.epsilon = -1}, setup), Error);
  EXPECT_THROW(CalibrateNbr({.epsilon = 1, .delta = 1.5}, setup), Error);
  setup.batch_size = 2e6;
  EXPECT_THROW(CalibrateNbr({.epsilon = 1}, setup), Error);
}

TEST(CalibrateNbrTest, UnattainableBracket) {
  try {
    CalibrateNbr({.epsilon = 1e-3},
                 {.data_size = 10, .batch_size = 10, .iterations = 1000000},
                 BatchingChoice::kLowerOfBoth,
                 {.relative_width = 1e-4, .upper_bracket = 1e-3});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
}

TEST(CalibrateNbrTest, BudgetSafetyOnRandomSetups) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 100; ++i) {
    const double n = std::pow(10, 4 + 5 * u(rng));
    const double b = std::max(1.0, n * std::pow(10, -4 * u(rng)));
    const auto t = static_cast<int64_t>(std::pow(10, 1 + 4 * u(rng)));
    const PrivacySpec spec{.epsilon = std::pow(2, -2 + 8 * u(rng)),
                           .delta = std::pow(10, -10 + 5 * u(rng))};
    AccountingSetup setup{.data_size = n, .batch_size = b, .iterations = t};
    const Calibration c = CalibrateNbr(spec, setup);
    setup.batching = c.branch;
    const double eps = EpsilonOf(setup, c.nbr, spec.delta);
    EXPECT_LE(eps, spec.epsilon);
    EXPECT_GE(eps, 0.999 * spec.epsilon);
  }
}

TEST(MiaAdvantageTest, DeterministicMatchesAnalyticProfile) {
  AccountingSetup setup{.data_size = 100,
                        .batch_size = 100,
                        .iterations = 4,
                        .batching = Batching::kDeterministic};
  // sigma / sqrt(T) = 100 * 0.02 / 2 = 1.
  const MiaAdvantage adv = MiaAdvantageOf(setup, NoiseBatchRatio(0.02));
  EXPECT_EQ(adv.bound, BoundKind::kExact);
  EXPECT_NEAR(adv.value, kDeltaSigma1Eps0, 1e-12);
}

TEST(MiaAdvantageTest, NonincreasingInNoiseAndVanishes) {
  for (Batching b : {Batching::kPoisson, Batching::kDeterministic}) {
    AccountingSetup setup{.data_size = 1e5, .batch_size = 1000,
                          .iterations = 500, .batching = b};
    double prev = 1;
    for (double nbr = 1e-4; nbr < 1e3; nbr *= 4) {
      const double adv = MiaAdvantageOf(setup, NoiseBatchRatio(nbr)).value;
      EXPECT_LE(adv, prev);
      EXPECT_GE(adv, 0);
      prev = adv;
    }
    EXPECT_LT(prev, 1e-3);
  }
  AccountingSetup poisson{.data_size = 1e5, .batch_size = 1000,
                          .iterations = 500};
  EXPECT_EQ(MiaAdvantageOf(poisson, NoiseBatchRatio(1e-3)).bound,
            BoundKind::kUpperBound);
}

TEST(ProfileTest, DeltaNonincreasingInEpsilon) {
  std::vector<double> eps;
  for (double e = 0; e <= 20; e += 0.25) eps.push_back(e);
  for (Batching b : {Batching::kPoisson, Batching::kDeterministic}) {
    AccountingSetup setup{.data_size = 1e6, .batch_size = 4096,
                          .iterations = 1000, .batching = b};
    const PrivacyProfile profile =
        ProfileOf(setup, NoiseBatchRatio(2e-4), eps);
    ASSERT_EQ(profile.points.size(), eps.size());
    for (size_t i = 1; i < profile.points.size(); ++i) {
      EXPECT_LE(profile.points[i].delta, profile.points[i - 1].delta);
      EXPECT_GE(profile.points[i].delta, 0);
      EXPECT_LE(profile.points[i].delta, 1);
    }
  }
}

TEST(VectorFieldTest, ComponentsNonnegativeAndTelescoping) {
  VectorFieldRequest request;
  request.x_axis = BudgetAxis::kPrivacy;
  request.y_axis = BudgetAxis::kData;
  request.x_values = {1, 2, 4};
  request.y_values = {1 << 20, 1 << 21};
  request.batch_size = 4096;
  const VectorField field = ComputeVectorField(request);
  ASSERT_EQ(field.points.size(), 6u);
  for (const VectorFieldPoint& p : field.points) {
    EXPECT_GE(p.dx, 0);
    EXPECT_GE(p.dy, 0);
  }
  // (1 + c(x)) (1 + c(2x)) = nbr(x) / nbr(4x) along x.
  const VectorFieldPoint& a = field.points[0];
  const VectorFieldPoint& b = field.points[1];
  const VectorFieldPoint& c = field.points[2];
  EXPECT_NEAR((1 + a.dx) * (1 + b.dx), a.nbr / c.nbr, 1e-12);
}

TEST(VectorFieldTest, ComponentIsDoublingRatioMinusOne) {
  VectorFieldRequest request;
  request.x_axis = BudgetAxis::kPrivacy;
  request.y_axis = BudgetAxis::kCompute;
  request.x_values = {2};
  request.y_values = {8192};
  request.data_size = 1e6;
  request.iterations = 1000;
  const VectorFieldPoint p = ComputeVectorField(request).points[0];
  const CalibrationOptions fine{.relative_width = 1e-9};
  AccountingSetup setup{.data_size = 1e6, .batch_size = 8192,
                        .iterations = 1000};
  const double base =
      CalibrateNbr({.epsilon = 2}, setup, BatchingChoice::kLowerOfBoth, fine)
          .nbr.value();
  const double doubled_eps =
      CalibrateNbr({.epsilon = 4}, setup, BatchingChoice::kLowerOfBoth, fine)
          .nbr.value();
  setup.batch_size = 16384;
  const double doubled_batch =
      CalibrateNbr({.epsilon = 2}, setup, BatchingChoice::kLowerOfBoth, fine)
          .nbr.value();
  EXPECT_DOUBLE_EQ(p.nbr, base);
  EXPECT_DOUBLE_EQ(p.dx, base / doubled_eps - 1);
  EXPECT_DOUBLE_EQ(p.dy, base / doubled_batch - 1);
}

TEST(VectorFieldTest, NearUnitLengthInGaussianRegime) {
  // With full batches and small epsilon the noise scales almost like
  // 1/epsilon: a unit-length privacy component means doubling epsilon halves
  // the noise-batch ratio.
  VectorFieldRequest request;
  request.x_axis = BudgetAxis::kPrivacy;
  request.y_axis = BudgetAxis::kData;
  request.x_values = {1.0 / 16};
  request.y_values = {1 << 20};
  request.batch_size = 1 << 20;
  request.iterations = 1;
  const VectorField field = ComputeVectorField(request);
  EXPECT_GT(field.points[0].dx, 0.9);
  EXPECT_LE(field.points[0].dx, 1.0);
}

TEST(VectorFieldTest, RejectsIdenticalAxes) {
  VectorFieldRequest request;
  request.x_axis = request.y_axis = BudgetAxis::kData;
  request.x_values = request.y_values = {1e6};
  EXPECT_THROW(ComputeVectorField(request), Error);
}

}  // namespace
}  // namespace dpscale::accounting
