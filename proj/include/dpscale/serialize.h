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

// JSON and CSV encodings of grids, laws and analysis reports.
//
// Objects keep a fixed field order and doubles are written in their shortest
// round-trip form, so equal inputs always produce identical bytes and
// re-parsing restores every value exactly. Non-finite budgets (a non-private
// epsilon) are written as the string "inf".

#ifndef DPSCALE_SERIALIZE_H_
#define DPSCALE_SERIALIZE_H_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpscale/accounting.h"
#include "dpscale/error.h"
#include "dpscale/grid.h"
#include "dpscale/lawfit.h"
#include "dpscale/planner.h"

namespace dpscale::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Compact single-line encoding followed by a newline.
std::string Dump(const Json& json);
// Parses text; malformed input raises InvalidArgument naming `what`.
Json Parse(std::string_view text, std::string_view what = "input");
Json ReadJsonFile(const std::string& path);
void WriteTextFile(const std::string& path, std::string_view text);

// A finite number, or "inf" for +infinity.
Json Number(double value);
// Reads a number (or "inf") from `json[key]`; errors name `key`.
double GetNumber(const Json& json, std::string_view key);

Json ToJson(const grid::MeasurementGrid& grid);
grid::MeasurementGrid GridFromJson(const Json& json);

Json ToJson(const grid::PowerLawFit& fit);

Json ToJson(const law::LawDomain& domain);
Json ToJson(const law::FittedLaw& law);
law::FittedLaw LawFromJson(const Json& json);
// Kind, form, domain and provenance without the tensor or coefficients.
Json LawSummary(const law::FittedLaw& law);

Json ToJson(const accounting::Calibration& calibration);
Json ToJson(const accounting::PrivacyProfile& profile);
Json ToJson(const accounting::VectorField& field);

Json ToJson(const planner::Budgets& budgets);
Json ToJson(const planner::TrainingConfig& config);
Json ToJson(const planner::PlanResult& result);
Json ToJson(const planner::AllocationBand& band);
Json ToJson(const planner::Allocation& allocation);
Json ToJson(const planner::SweepSeries& series);
Json ToJson(const std::vector<planner::TokenRatioPoint>& ratios);
Json ToJson(const planner::BaselineComparison& comparison);

// Baseline fixture: {"baselines": [{name, model_params, batch_size,
// iterations, seq_len?}], "compute"?, "data_size"?, "delta"?}.
std::vector<planner::Baseline> BaselinesFromJson(const Json& json);

// {code, message, field}.
Json ToJson(const Error& error);

// Plot-ready CSV of one sweep quantity: header `x,value,band_min,band_max`.
// `quantity` is one of loss, model_params, batch_size, iterations,
// token_model_ratio, nbr; loss has no band columns.
std::string SweepCsv(const planner::SweepSeries& series,
                     std::string_view quantity);

}  // namespace dpscale::io

#endif  // DPSCALE_SERIALIZE_H_
