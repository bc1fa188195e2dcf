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

#include "dpscale/serialize.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "dpscale/number_format.h"

namespace dpscale::io {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const Json& Require(const Json& json, std::string_view key) {
  if (!json.is_object()) {
    throw InvalidArgument("expected a JSON object holding '" +
                              std::string(key) + "'",
                          std::string(key));
  }
  const auto it = json.find(std::string(key));
  if (it == json.end()) {
    throw InvalidArgument("missing field '" + std::string(key) + "'",
                          std::string(key));
  }
  return *it;
}

bool Has(const Json& json, std::string_view key) {
  return json.is_object() && json.contains(std::string(key)) &&
         !json.at(std::string(key)).is_null();
}

double AsNumber(const Json& v, std::string_view key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && v.get<std::string>() == "inf") return kInf;
  throw InvalidArgument("field '" + std::string(key) + "' must be a number",
                        std::string(key));
}

int64_t GetInt(const Json& json, std::string_view key) {
  const Json& v = Require(json, key);
  if (!v.is_number_integer()) {
    throw InvalidArgument("field '" + std::string(key) + "' must be an integer",
                          std::string(key));
  }
  return v.get<int64_t>();
}

std::string GetString(const Json& json, std::string_view key) {
  const Json& v = Require(json, key);
  if (!v.is_string()) {
    throw InvalidArgument("field '" + std::string(key) + "' must be a string",
                          std::string(key));
  }
  return v.get<std::string>();
}

std::vector<double> GetDoubles(const Json& json, std::string_view key) {
  const Json& v = Require(json, key);
  if (!v.is_array()) {
    throw InvalidArgument("field '" + std::string(key) + "' must be an array",
                          std::string(key));
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const Json& e : v) out.push_back(AsNumber(e, key));
  return out;
}

std::vector<int64_t> GetInts(const Json& json, std::string_view key) {
  const Json& v = Require(json, key);
  if (!v.is_array()) {
    throw InvalidArgument("field '" + std::string(key) + "' must be an array",
                          std::string(key));
  }
  std::vector<int64_t> out;
  out.reserve(v.size());
  for (const Json& e : v) {
    if (!e.is_number_integer()) {
      throw InvalidArgument(
          "field '" + std::string(key) + "' must hold integers",
          std::string(key));
    }
    out.push_back(e.get<int64_t>());
  }
  return out;
}

void CheckSchema(const Json& json) {
  if (Has(json, "schema_version") &&
      GetInt(json, "schema_version") != kSchemaVersion) {
    throw InvalidArgument("unsupported schema_version " +
                              Require(json, "schema_version").dump() +
                              " (expected " + std::to_string(kSchemaVersion) +
                              ")",
                          "schema_version");
  }
}

Json Pair(double lo, double hi) { return Json::array({Number(lo), Number(hi)}); }

Json ToJson(const grid::GridProvenance& p) {
  Json out;
  out["window"] = p.window;
  out["lr_policy"] = p.lr_policy;
  out["fit_range"] =
      p.fit_range ? Pair(p.fit_range->first, p.fit_range->second) : Json();
  return out;
}

grid::GridProvenance ProvenanceFromJson(const Json& json) {
  grid::GridProvenance p;
  if (json.is_null()) return p;
  if (Has(json, "window")) p.window = static_cast<int>(GetInt(json, "window"));
  if (Has(json, "lr_policy")) p.lr_policy = GetString(json, "lr_policy");
  if (Has(json, "fit_range")) {
    const std::vector<double> r = GetDoubles(json, "fit_range");
    if (r.size() != 2) {
      throw InvalidArgument("fit_range must have two entries", "fit_range");
    }
    p.fit_range = std::make_pair(r[0], r[1]);
  }
  return p;
}

Json ToJson(const law::FitMetadata& m) {
  Json out;
  out["huber_delta"] = m.huber_delta;
  out["objective"] = law::FitObjectiveName(m.objective);
  out["filters"] = {{"min_iterations", m.filters.min_iterations},
                    {"min_nbr", m.filters.min_nbr},
                    {"max_loss", m.filters.max_loss}};
  out["final_objective"] = m.final_objective;
  out["chosen_start"] = m.chosen_start;
  out["rows_used"] = m.rows_used;
  out["rows_filtered"] = m.rows_filtered;
  return out;
}

law::FitMetadata FitMetadataFromJson(const Json& json) {
  law::FitMetadata m;
  m.huber_delta = GetNumber(json, "huber_delta");
  m.objective = law::ParseFitObjective(GetString(json, "objective"));
  const Json& f = Require(json, "filters");
  m.filters.min_iterations = GetNumber(f, "min_iterations");
  m.filters.min_nbr = GetNumber(f, "min_nbr");
  m.filters.max_loss = GetNumber(f, "max_loss");
  m.final_objective = GetNumber(json, "final_objective");
  m.chosen_start = static_cast<int>(GetInt(json, "chosen_start"));
  m.rows_used = static_cast<int>(GetInt(json, "rows_used"));
  m.rows_filtered = static_cast<int>(GetInt(json, "rows_filtered"));
  return m;
}

law::LawDomain DomainFromJson(const Json& json) {
  law::LawDomain d;
  const std::vector<double> m = GetDoubles(json, "model_params");
  const std::vector<double> t = GetDoubles(json, "iterations");
  const std::vector<double> s = GetDoubles(json, "noise_batch_ratio");
  if (m.size() != 2 || t.size() != 2 || s.size() != 2) {
    throw InvalidArgument("domain bounds must be [min, max] pairs", "domain");
  }
  d.m_min = m[0];
  d.m_max = m[1];
  d.t_min = t[0];
  d.t_max = t[1];
  d.nbr_min = s[0];
  d.nbr_max = s[1];
  const Json& z = Require(json, "zero_slice");
  if (!z.is_boolean()) {
    throw InvalidArgument("zero_slice must be a boolean", "zero_slice");
  }
  d.has_zero_slice = z.get<bool>();
  d.Validate();
  return d;
}

Json ToJson(const law::ParametricCoefficients& c, law::LawForm form) {
  Json out;
  out["E"] = c.e;
  out["A"] = c.a;
  out["alpha"] = c.alpha;
  out["B"] = c.b;
  out["beta"] = c.beta;
  out["C"] = c.c;
  out["gamma"] = c.gamma;
  if (form == law::LawForm::kL2) out["alpha2"] = c.alpha2;
  return out;
}

Json BandJson(const planner::Band& band) {
  return {{"min", band.min}, {"max", band.max}};
}

}  // namespace

std::string Dump(const Json& json) { return json.dump() + "\n"; }

Json Parse(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw InvalidArgument(std::string(what) + " is not valid JSON: " + e.what(),
                          std::string(what));
  }
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path, "path");
  std::ostringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), path);
}

void WriteTextFile(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path, "path");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw InvalidArgument("failed writing " + path, "path");
}

Json Number(double value) {
  if (value == kInf) return "inf";
  if (!std::isfinite(value)) {
    throw NumericFailure("cannot encode non-finite value " +
                         FormatNumber(value));
  }
  return value;
}

double GetNumber(const Json& json, std::string_view key) {
  return AsNumber(Require(json, key), key);
}

// ---------------------------------------------------------------------------
// Grids.

Json ToJson(const grid::MeasurementGrid& grid) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  Json axes;
  axes["m"] = grid.model_sizes;
  axes["t"] = grid.iterations;
  axes["nbr"] = grid.nbrs;
  if (!grid.learning_rates.empty()) axes["lr"] = grid.learning_rates;
  out["axes"] = std::move(axes);
  out["loss"] = grid.loss;
  out["state"] = grid::GridStateName(grid.state);
  out["provenance"] = ToJson(grid.provenance);
  return out;
}

grid::MeasurementGrid GridFromJson(const Json& json) {
  CheckSchema(json);
  grid::MeasurementGrid g;
  const Json& axes = Require(json, "axes");
  g.model_sizes = GetDoubles(axes, "m");
  g.iterations = GetInts(axes, "t");
  g.nbrs = GetDoubles(axes, "nbr");
  if (Has(axes, "lr")) g.learning_rates = GetDoubles(axes, "lr");
  g.loss = GetDoubles(json, "loss");
  g.state = grid::ParseGridState(GetString(json, "state"));
  if (Has(json, "provenance")) {
    g.provenance = ProvenanceFromJson(Require(json, "provenance"));
  }
  g.Validate();
  return g;
}

Json ToJson(const grid::PowerLawFit& fit) {
  Json out;
  out["E"] = fit.e;
  out["A"] = fit.a;
  out["alpha"] = fit.alpha;
  out["fit_range"] = Pair(fit.t_min, fit.t_max);
  out["residual"] = fit.residual;
  out["points"] = fit.points;
  return out;
}

// ---------------------------------------------------------------------------
// Laws.

Json ToJson(const law::LawDomain& d) {
  Json out;
  out["model_params"] = Pair(d.m_min, d.m_max);
  out["iterations"] = Pair(d.t_min, d.t_max);
  out["noise_batch_ratio"] = Pair(d.nbr_min, d.nbr_max);
  out["zero_slice"] = d.has_zero_slice;
  return out;
}

Json ToJson(const law::FittedLaw& fitted) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["kind"] = law::LawKindName(fitted.kind());
  if (const law::ParametricModel* p = fitted.parametric()) {
    out["form"] = law::LawFormName(p->law.form);
    out["coefficients"] = ToJson(p->law.coef, p->law.form);
    out["nbr_transform"] = {{"shift", p->law.transform.shift},
                            {"scale", p->law.transform.scale}};
    out["examples_per_step"] = p->examples_per_step;
    out["domain"] = ToJson(p->domain);
    out["fit_metadata"] = p->fit ? ToJson(*p->fit) : Json();
  } else {
    const law::InterpolatedLaw& i = *fitted.interpolated();
    out["form"] = nullptr;
    Json axes;
    axes["m"] = i.model_sizes();
    axes["t"] = i.iterations();
    axes["nbr"] = i.nbrs();
    out["axes"] = std::move(axes);
    out["tensor"] = i.private_loss();
    out["zero_slice"] = i.zero_loss();
    out["domain"] = ToJson(i.domain());
    out["source_state"] = grid::GridStateName(i.source_state());
    out["provenance"] = ToJson(i.provenance());
    out["fit_metadata"] = nullptr;
  }
  return out;
}

law::FittedLaw LawFromJson(const Json& json) {
  CheckSchema(json);
  const std::string kind = GetString(json, "kind");
  if (kind == "parametric") {
    law::ParametricModel p;
    p.law.form = law::ParseLawForm(GetString(json, "form"));
    const Json& c = Require(json, "coefficients");
    p.law.coef.e = GetNumber(c, "E");
    p.law.coef.a = GetNumber(c, "A");
    p.law.coef.alpha = GetNumber(c, "alpha");
    p.law.coef.b = GetNumber(c, "B");
    p.law.coef.beta = GetNumber(c, "beta");
    p.law.coef.c = GetNumber(c, "C");
    p.law.coef.gamma = GetNumber(c, "gamma");
    if (p.law.form == law::LawForm::kL2) {
      p.law.coef.alpha2 = GetNumber(c, "alpha2");
    }
    if (Has(json, "nbr_transform")) {
      const Json& t = Require(json, "nbr_transform");
      p.law.transform.shift = GetNumber(t, "shift");
      p.law.transform.scale = GetNumber(t, "scale");
    }
    p.law.Validate();
    if (Has(json, "examples_per_step")) {
      p.examples_per_step = GetNumber(json, "examples_per_step");
      if (!(p.examples_per_step > 0) || !std::isfinite(p.examples_per_step)) {
        throw InvalidArgument("examples_per_step must be positive",
                              "examples_per_step");
      }
    }
    if (Has(json, "domain")) p.domain = DomainFromJson(Require(json, "domain"));
    if (Has(json, "fit_metadata")) {
      p.fit = FitMetadataFromJson(Require(json, "fit_metadata"));
    }
    return p;
  }
  if (kind == "interp") {
    const Json& axes = Require(json, "axes");
    grid::GridProvenance provenance;
    if (Has(json, "provenance")) {
      provenance = ProvenanceFromJson(Require(json, "provenance"));
    }
    grid::GridState state = grid::GridState::kMonotone;
    if (Has(json, "source_state")) {
      state = grid::ParseGridState(GetString(json, "source_state"));
    }
    std::vector<double> zero;
    if (Has(json, "zero_slice")) zero = GetDoubles(json, "zero_slice");
    return law::InterpolatedLaw::FromParts(
        GetDoubles(axes, "m"), GetInts(axes, "t"), GetDoubles(axes, "nbr"),
        GetDoubles(json, "tensor"), std::move(zero), state,
        std::move(provenance));
  }
  throw InvalidArgument("unknown law kind '" + kind +
                            "' (expected interp or parametric)",
                        "kind");
}

Json LawSummary(const law::FittedLaw& fitted) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["kind"] = law::LawKindName(fitted.kind());
  if (const law::ParametricModel* p = fitted.parametric()) {
    out["form"] = law::LawFormName(p->law.form);
    out["coefficients"] = ToJson(p->law.coef, p->law.form);
    out["domain"] = ToJson(p->domain);
    out["provenance"] = nullptr;
    out["fit_metadata"] = p->fit ? ToJson(*p->fit) : Json();
  } else {
    const law::InterpolatedLaw& i = *fitted.interpolated();
    out["form"] = nullptr;
    out["shape"] = {i.model_sizes().size(), i.iterations().size(),
                    i.nbrs().size()};
    out["domain"] = ToJson(i.domain());
    out["provenance"] = ToJson(i.provenance());
    out["fit_metadata"] = nullptr;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Accounting.

Json ToJson(const accounting::Calibration& c) {
  Json out;
  out["noise_batch_ratio"] = c.nbr.value();
  out["noise_multiplier"] = c.noise_multiplier;
  out["epsilon_achieved"] = c.epsilon;
  out["batching_branch"] = accounting::BatchingName(c.branch);
  return out;
}

Json ToJson(const accounting::PrivacyProfile& profile) {
  Json out = Json::array();
  for (const accounting::ProfilePoint& p : profile.points) {
    out.push_back({{"epsilon", p.epsilon},
                   {"delta", p.delta},
                   {"bound", profile.bound == accounting::BoundKind::kExact
                                 ? "exact"
                                 : "upper"}});
  }
  return out;
}

Json ToJson(const accounting::VectorField& field) {
  Json out;
  out["x_axis"] = accounting::BudgetAxisName(field.x_axis);
  out["y_axis"] = accounting::BudgetAxisName(field.y_axis);
  out["iterations"] = field.iterations;
  out["delta"] = field.delta;
  Json points = Json::array();
  for (const accounting::VectorFieldPoint& p : field.points) {
    points.push_back({{"x", p.x},
                      {"y", p.y},
                      {"noise_batch_ratio", p.nbr},
                      {"dx", p.dx},
                      {"dy", p.dy}});
  }
  out["points"] = std::move(points);
  return out;
}

// ---------------------------------------------------------------------------
// Planning.

Json ToJson(const planner::Budgets& b) {
  Json out;
  out["compute"] = Number(b.compute);
  out["epsilon"] = Number(b.privacy.epsilon);
  out["delta"] = b.privacy.delta;
  out["data"] = Number(b.data_size);
  return out;
}

Json ToJson(const planner::TrainingConfig& c) {
  Json out;
  out["model_params"] = c.model_params;
  out["batch_size"] = c.batch_size;
  out["iterations"] = c.iterations;
  out["seq_len"] = c.seq_len;
  out["compute"] = c.compute();
  out["token_model_ratio"] = c.token_model_ratio();
  return out;
}

Json ToJson(const planner::PlanResult& r) {
  Json out;
  out["config"] = ToJson(r.config);
  out["noise_batch_ratio"] = r.nbr.value();
  out["noise_multiplier"] = r.nbr.noise_multiplier(r.config.batch_size);
  out["batching_branch"] =
      r.branch ? Json(accounting::BatchingName(*r.branch)) : Json();
  out["epsilon_achieved"] = r.epsilon_achieved;
  out["predicted_loss"] = r.predicted_loss ? Json(*r.predicted_loss) : Json();
  out["token_model_ratio"] = r.token_model_ratio();
  out["in_domain"] = r.in_domain();
  out["status"] = planner::PlanStatusName(r.status);
  if (!r.note.empty()) out["note"] = r.note;
  return out;
}

Json ToJson(const planner::AllocationBand& band) {
  Json out;
  out["threshold"] = band.threshold;
  out["count"] = band.count;
  out["model_params"] = BandJson(band.model_params);
  out["batch_size"] = BandJson(band.batch_size);
  out["iterations"] = BandJson(band.iterations);
  out["token_model_ratio"] = BandJson(band.token_model_ratio);
  out["noise_batch_ratio"] = BandJson(band.nbr);
  return out;
}

Json ToJson(const planner::Allocation& a) {
  Json out;
  out["best"] = ToJson(a.best);
  out["band"] = ToJson(a.band);
  out["counts"] = {{"enumerated", a.enumerated},
                   {"evaluated", a.evaluated},
                   {"out_of_domain", a.out_of_domain},
                   {"infeasible", a.infeasible}};
  return out;
}

Json ToJson(const planner::SweepSeries& s) {
  Json out;
  out["axis"] = planner::SweepAxisName(s.axis);
  out["fixed"] = ToJson(s.fixed);
  Json points = Json::array();
  for (const planner::SweepPoint& p : s.points) {
    Json point;
    point["x"] = Number(p.x);
    point["loss"] = p.loss;
    const Json alloc = ToJson(p.allocation);
    point["best"] = alloc["best"];
    point["band"] = alloc["band"];
    point["counts"] = alloc["counts"];
    points.push_back(std::move(point));
  }
  out["points"] = std::move(points);
  return out;
}

Json ToJson(const std::vector<planner::TokenRatioPoint>& ratios) {
  Json out = Json::array();
  for (const planner::TokenRatioPoint& p : ratios) {
    out.push_back({{"compute", p.compute},
                   {"ratio", p.ratio},
                   {"band", BandJson(p.band)}});
  }
  return out;
}

Json ToJson(const planner::BaselineComparison& c) {
  Json out;
  out["compute"] = c.compute;
  out["data"] = c.data_size;
  out["epsilons"] = c.epsilons;
  Json optimal = Json::array();
  for (const planner::PlanResult& r : c.optimal) optimal.push_back(ToJson(r));
  out["optimal"] = std::move(optimal);
  Json baselines = Json::array();
  for (const planner::BaselineSeries& s : c.baselines) {
    Json series;
    series["name"] = s.baseline.name;
    series["config"] = ToJson(s.baseline.config);
    Json points = Json::array();
    for (const planner::BaselinePoint& p : s.points) {
      points.push_back({{"epsilon", p.epsilon},
                        {"result", ToJson(p.result)},
                        {"savings", p.savings}});
    }
    series["points"] = std::move(points);
    baselines.push_back(std::move(series));
  }
  out["baselines"] = std::move(baselines);
  return out;
}

std::vector<planner::Baseline> BaselinesFromJson(const Json& json) {
  CheckSchema(json);
  const Json& list = Require(json, "baselines");
  if (!list.is_array() || list.empty()) {
    throw InvalidArgument("baselines must be a nonempty array", "baselines");
  }
  std::vector<planner::Baseline> out;
  for (const Json& b : list) {
    planner::Baseline base;
    base.name = GetString(b, "name");
    base.config.model_params = GetNumber(b, "model_params");
    base.config.batch_size = GetNumber(b, "batch_size");
    base.config.iterations = GetInt(b, "iterations");
    if (Has(b, "seq_len")) base.config.seq_len = GetNumber(b, "seq_len");
    base.config.Validate();
    out.push_back(std::move(base));
  }
  return out;
}

Json ToJson(const Error& error) {
  Json out;
  out["code"] = ErrorCodeName(error.code());
  out["message"] = error.what();
  out["field"] = error.field().empty() ? Json() : Json(error.field());
  return out;
}

std::string SweepCsv(const planner::SweepSeries& series,
                     std::string_view quantity) {
  using Getter = double (*)(const planner::PlanResult&);
  using BandGetter = const planner::Band& (*)(const planner::AllocationBand&);
  Getter value = nullptr;
  BandGetter band = nullptr;
  if (quantity == "model_params") {
    value = [](const planner::PlanResult& r) { return r.config.model_params; };
    band = [](const planner::AllocationBand& b) -> const planner::Band& {
      return b.model_params;
    };
  } else if (quantity == "batch_size") {
    value = [](const planner::PlanResult& r) { return r.config.batch_size; };
    band = [](const planner::AllocationBand& b) -> const planner::Band& {
      return b.batch_size;
    };
  } else if (quantity == "iterations") {
    value = [](const planner::PlanResult& r) {
      return static_cast<double>(r.config.iterations);
    };
    band = [](const planner::AllocationBand& b) -> const planner::Band& {
      return b.iterations;
    };
  } else if (quantity == "token_model_ratio") {
    value = [](const planner::PlanResult& r) { return r.token_model_ratio(); };
    band = [](const planner::AllocationBand& b) -> const planner::Band& {
      return b.token_model_ratio;
    };
  } else if (quantity == "nbr") {
    value = [](const planner::PlanResult& r) { return r.nbr.value(); };
    band = [](const planner::AllocationBand& b) -> const planner::Band& {
      return b.nbr;
    };
  } else if (quantity != "loss") {
    throw InvalidArgument(
        "unknown quantity '" + std::string(quantity) +
            "' (expected loss, model_params, batch_size, iterations, "
            "token_model_ratio or nbr)",
        "quantity");
  }
  std::string out = band ? "x,value,band_min,band_max\n" : "x,value\n";
  for (const planner::SweepPoint& p : series.points) {
    out += FormatNumber(p.x);
    out += ',';
    if (band == nullptr) {
      out += FormatNumber(p.loss);
    } else {
      const planner::Band& b = band(p.allocation.band);
      out += FormatNumber(value(p.allocation.best)) + ',' +
             FormatNumber(b.min) + ',' + FormatNumber(b.max);
    }
    out += '\n';
  }
  return out;
}

}  // namespace dpscale::io
