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

// Request handling shared by the command-line tool and the HTTP service.
//
// Every operation takes flat string parameters (query-string style), so the
// CLI flags and the /api/v1 query parameters go through the same parsing and
// produce byte-identical JSON.

#ifndef DPSCALE_SERVICE_H_
#define DPSCALE_SERVICE_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "dpscale/error.h"
#include "dpscale/lawfit.h"
#include "dpscale/planner.h"
#include "dpscale/serialize.h"

namespace dpscale::service {

using Params = std::map<std::string, std::string, std::less<>>;

struct ServiceConfig {
  double default_delta = 1e-8;
  std::chrono::milliseconds timeout{30000};
  int64_t max_configs = 1000000;
};

// Environment overrides: DPSCALE_DELTA (default delta) and DPSCALE_PORT.
ServiceConfig ConfigFromEnvironment(ServiceConfig base = {});
int PortFromEnvironment(int fallback);

class Service {
 public:
  explicit Service(ServiceConfig config = {},
                   std::optional<law::FittedLaw> law = std::nullopt)
      : config_(config), law_(std::move(law)) {}

  const ServiceConfig& config() const { return config_; }
  bool has_law() const { return law_.has_value(); }

  // {status, law_loaded}
  io::Json Health() const;
  // epsilon, delta, data, batch, steps, batching (poisson|deterministic|both)
  io::Json Calibrate(const Params& params) const;
  // compute, epsilon, delta, data, seq_len, density, near_optimal
  io::Json Plan(const Params& params) const;
  // axis (compute|privacy|data), from, to, points, the other budgets,
  // seq_len, density, near_optimal, tolerance. Optionally hands back the
  // series itself.
  io::Json Sweep(const Params& params,
                 planner::SweepSeries* series = nullptr) const;
  // x, y (privacy|compute|data), x_from, x_to, y_from, y_to (log2 exponents),
  // epsilon, batch, data, steps, delta
  io::Json VectorField(const Params& params) const;
  io::Json Law() const;

  // For each (data, epsilon) row of the fixture, the smallest compute in the
  // compute grid within `tolerance` of the best loss, and its allocation.
  // Fixture: {compute_grid: {from, to, points}, delta?, rows: [{data,
  // epsilon, ...}]}.
  io::Json SaturatingTable(const io::Json& fixture, const Params& params) const;

 private:
  const law::FittedLaw& RequireLaw() const;

  ServiceConfig config_;
  std::optional<law::FittedLaw> law_;
};

// Text rendering of SaturatingTable() output with the columns data, privacy,
// compute, cross entropy, model size, iterations, batch size, token/model.
std::string FormatSaturatingTable(const io::Json& table);

// HTTP status for an error: 400 for invalid arguments and failed
// preconditions, 422 for out-of-domain and numeric failures, 503 for
// deadlines.
int HttpStatus(ErrorCode code);
// Process exit code: 2 for validation errors, 3 for numeric failures.
int ExitCode(ErrorCode code);

}  // namespace dpscale::service

#endif  // DPSCALE_SERVICE_H_
