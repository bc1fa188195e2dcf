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

// Monotone least squares by exhaustive search. The optimum is constant on
// contiguous blocks and equals each block's mean, so it is the best feasible
// candidate among all 2^(n-1) ways to cut the sequence into blocks.

#ifndef DPSCALE_TESTS_ORACLES_ISOTONIC_BRUTE_FORCE_H_
#define DPSCALE_TESTS_ORACLES_ISOTONIC_BRUTE_FORCE_H_

#include <limits>
#include <vector>

namespace dpscale::oracle {

inline std::vector<double> BruteForceIsotonic(const std::vector<double>& y,
                                              bool nondecreasing) {
  const size_t n = y.size();
  std::vector<double> best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (unsigned cuts = 0; cuts < (1u << (n - 1)); ++cuts) {
    std::vector<double> x(n);
    size_t start = 0;
    for (size_t i = 0; i < n; ++i) {
      const bool end_block = i + 1 == n || (cuts >> i) & 1u;
      if (!end_block) continue;
      double mean = 0;
      for (size_t j = start; j <= i; ++j) mean += y[j];
      mean /= static_cast<double>(i + 1 - start);
      for (size_t j = start; j <= i; ++j) x[j] = mean;
      start = i + 1;
    }
    bool feasible = true;
    for (size_t i = 1; i < n && feasible; ++i) {
      feasible = nondecreasing ? x[i - 1] <= x[i] + 1e-12
                               : x[i - 1] >= x[i] - 1e-12;
    }
    if (!feasible) continue;
    double sse = 0;
    for (size_t i = 0; i < n; ++i) sse += (x[i] - y[i]) * (x[i] - y[i]);
    if (sse < best_sse - 1e-12) {
      best_sse = sse;
      best = x;
    }
  }
  return best;
}

}  // namespace dpscale::oracle

#endif  // DPSCALE_TESTS_ORACLES_ISOTONIC_BRUTE_FORCE_H_
