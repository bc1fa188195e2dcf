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

#include "cli.h"

#include <csignal>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "dpscale/error.h"
#include "dpscale/grid.h"
#include "dpscale/http_api.h"
#include "dpscale/lawfit.h"
#include "dpscale/parametric_law.h"
#include "dpscale/planner.h"
#include "dpscale/serialize.h"
#include "dpscale/service.h"

namespace dpscale::cli {
namespace {

using io::Json;

bool EndsWith(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

grid::MeasurementGrid ReadGrid(const std::string& path) {
  if (EndsWith(path, ".csv")) return grid::LoadGridCsvFile(path);
  return io::GridFromJson(io::ReadJsonFile(path));
}

// Writes `text` to `path`, or to `out` when no path was given.
void Emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    io::WriteTextFile(path, text);
  }
}

void WriteGrid(const grid::MeasurementGrid& g, const std::string& path,
               std::ostream& out) {
  if (EndsWith(path, ".csv")) {
    std::ostringstream ss;
    grid::WriteGridCsv(g, ss);
    io::WriteTextFile(path, ss.str());
  } else {
    Emit(path, io::Dump(io::ToJson(g)), out);
  }
}

law::FittedLaw ReadLaw(const std::string& path) {
  return io::LawFromJson(io::ReadJsonFile(path));
}

// Registers `--flag` whose value is stored under `key` in `params`.
void Param(CLI::App* app, service::Params& params, const std::string& flag,
           const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&params, key](const std::string& v) { params[key] = v; }, help);
}

std::vector<int64_t> Cadence(int64_t from, int64_t to, int64_t step) {
  if (from < 1 || to < from || step < 1) {
    throw InvalidArgument("iteration cadence needs 1 <= from <= to, step >= 1",
                          "iterations");
  }
  if ((to - from) / step > 100000) {
    throw InvalidArgument("iteration cadence has too many points",
                          "iterations");
  }
  std::vector<int64_t> out;
  for (int64_t t = from; t <= to; t += step) out.push_back(t);
  return out;
}

std::vector<double> DefaultNbrs() {
  std::vector<double> out = {0};
  for (int k = 23; k >= 6; --k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

httplib::Server* g_server = nullptr;

void StopServer(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Compute-optimal planning for differentially private training",
               "dpscale"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  service::Params params;
  std::function<void()> action;

  // calibrate -------------------------------------------------------------
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Noise-batch ratio for a privacy budget");
  Param(calibrate, params, "--epsilon", "epsilon", "Privacy budget epsilon");
  Param(calibrate, params, "--delta", "delta", "Privacy budget delta");
  Param(calibrate, params, "--data", "data", "Data budget N (individuals)");
  Param(calibrate, params, "--batch", "batch", "Expected batch size B");
  Param(calibrate, params, "--steps", "steps", "Training iterations T");
  Param(calibrate, params, "--batching", "batching",
        "poisson, deterministic or both (default both)");

  // synth -----------------------------------------------------------------
  CLI::App* synth = app.add_subcommand("synth", "Synthetic raw grid from a law");
  std::string synth_law, synth_out;
  std::vector<double> synth_models = {4.5e6, 1.1e7, 4.1e7, 1.1e8, 3.35e8, 7.8e8};
  std::vector<double> synth_nbrs = DefaultNbrs();
  std::vector<double> synth_lrs = {1e-3};
  int64_t t_from = 1000, t_to = 128000, t_step = 1000;
  double noise = 0;
  uint64_t seed = 0;
  synth->add_option("--law", synth_law,
                    "Parametric law JSON (default: built-in synthetic law)");
  synth->add_option("--models", synth_models, "Model sizes")->delimiter(',');
  synth->add_option("--nbrs", synth_nbrs, "Noise-batch ratios")->delimiter(',');
  synth->add_option("--learning-rates", synth_lrs, "Learning rates")
      ->delimiter(',');
  synth->add_option("--t-from", t_from, "First recorded iteration");
  synth->add_option("--t-to", t_to, "Last recorded iteration");
  synth->add_option("--t-step", t_step, "Recording cadence");
  synth->add_option("--noise", noise, "Gaussian noise standard deviation");
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--out", synth_out, "Output grid (.csv or .json)")
      ->required();

  // clean -----------------------------------------------------------------
  CLI::App* clean = app.add_subcommand(
      "clean", "Smooth and project a grid (no-op on cleaned grids)");
  std::string clean_in, clean_out;
  int window = 10;
  clean->add_option("--in", clean_in, "Input grid (.csv or .json)")->required();
  clean->add_option("--out", clean_out, "Output grid JSON (default stdout)");
  clean->add_option("--window", window, "Rolling-average window");

  // extrapolate -----------------------------------------------------------
  CLI::App* extrapolate = app.add_subcommand(
      "extrapolate", "Extend a cleaned grid over iterations");
  std::string ex_in, ex_out;
  std::vector<int64_t> ex_target;
  int64_t ex_to = grid::kMaxExtrapolatedIterations;
  grid::ExtrapolationOptions ex_opts;
  extrapolate->add_option("--in", ex_in, "Monotone grid JSON")->required();
  extrapolate->add_option("--out", ex_out, "Output grid JSON (default stdout)");
  extrapolate
      ->add_option("--target", ex_target,
                   "Iteration axis to produce (default: doublings up to --to)")
      ->delimiter(',');
  extrapolate->add_option("--to", ex_to, "Largest iteration count");
  extrapolate->add_option("--fit-min", ex_opts.fit_min, "Fit range start");
  extrapolate->add_option("--fit-max", ex_opts.fit_max, "Fit range end");

  // fit-interp ------------------------------------------------------------
  CLI::App* fit_interp =
      app.add_subcommand("fit-interp", "Log-space interpolating law");
  std::string fi_in, fi_out;
  fit_interp->add_option("--in", fi_in, "Cleaned grid JSON")->required();
  fit_interp->add_option("--out", fi_out, "Law JSON (default stdout)");

  // fit-parametric --------------------------------------------------------
  CLI::App* fit_param =
      app.add_subcommand("fit-parametric", "Huber fit of the L1/L2 forms");
  std::string fp_in, fp_out, fp_form = "L2", fp_objective = "raw";
  law::FitOptions fp_opts;
  fit_param->add_option("--in", fp_in, "Cleaned grid JSON")->required();
  fit_param->add_option("--out", fp_out, "Law JSON")->required();
  fit_param->add_option("--form", fp_form, "L1 or L2");
  fit_param->add_option("--objective", fp_objective, "raw or log");
  fit_param->add_option("--huber-delta", fp_opts.huber_delta, "Huber delta");
  fit_param->add_option("--starts", fp_opts.starts, "Number of starts");
  fit_param->add_option("--seed", fp_opts.seed, "Start sequence offset");
  fit_param->add_option("--min-iterations", fp_opts.filters.min_iterations,
                        "Keep rows with more iterations");
  fit_param->add_option("--min-nbr", fp_opts.filters.min_nbr,
                        "Keep rows with a larger noise-batch ratio");
  fit_param->add_option("--max-loss", fp_opts.filters.max_loss,
                        "Keep rows with loss at most this");

  // plan ------------------------------------------------------------------
  CLI::App* plan = app.add_subcommand("plan", "Compute-optimal configuration");
  std::string law_path, budgets_path, plan_format = "json";
  plan->add_option("--law", law_path, "Law JSON")->required();
  Param(plan, params, "--compute", "compute", "Compute budget (FLOPs)");
  Param(plan, params, "--epsilon", "epsilon", "Privacy budget (inf: none)");
  Param(plan, params, "--delta", "delta", "Privacy delta");
  Param(plan, params, "--data", "data", "Data budget N");
  Param(plan, params, "--seq-len", "seq_len", "Sequence length");
  Param(plan, params, "--density", "density", "Lattice points per decade");
  Param(plan, params, "--near-optimal", "near_optimal", "Band tolerance");
  Param(plan, params, "--tolerance", "tolerance",
        "Saturation tolerance (with --budgets)");
  plan->add_option("--budgets", budgets_path,
                   "Saturating-budget fixture: one table row per entry");
  plan->add_option("--format", plan_format, "json or table")
      ->check(CLI::IsMember({"json", "table"}));
  double timeout_s = 30;
  plan->add_option("--timeout", timeout_s, "Time budget (s)");

  // sweep -----------------------------------------------------------------
  CLI::App* sweep = app.add_subcommand("sweep", "Optimum along one budget");
  std::string sweep_format = "json", quantity = "loss", sweep_out;
  sweep->add_option("--law", law_path, "Law JSON")->required();
  Param(sweep, params, "--axis", "axis", "compute, privacy or data");
  Param(sweep, params, "--from", "from", "First budget value");
  Param(sweep, params, "--to", "to", "Last budget value");
  Param(sweep, params, "--points", "points", "Number of budget values");
  Param(sweep, params, "--compute", "compute", "Fixed compute budget");
  Param(sweep, params, "--epsilon", "epsilon", "Fixed privacy budget");
  Param(sweep, params, "--delta", "delta", "Privacy delta");
  Param(sweep, params, "--data", "data", "Fixed data budget");
  Param(sweep, params, "--seq-len", "seq_len", "Sequence length");
  Param(sweep, params, "--density", "density", "Lattice points per decade");
  Param(sweep, params, "--near-optimal", "near_optimal", "Band tolerance");
  Param(sweep, params, "--tolerance", "tolerance", "Saturation tolerance");
  sweep->add_option("--format", sweep_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  sweep->add_option("--quantity", quantity,
                    "CSV column: loss, model_params, batch_size, iterations, "
                    "token_model_ratio or nbr");
  sweep->add_option("--out", sweep_out, "Output file (default stdout)");
  sweep->add_option("--timeout", timeout_s, "Time budget (s)");

  // vector-field ----------------------------------------------------------
  CLI::App* vfield = app.add_subcommand(
      "vector-field", "Marginal noise reduction from doubling budgets");
  Param(vfield, params, "--x", "x", "x axis: privacy, compute or data");
  Param(vfield, params, "--y", "y", "y axis: privacy, compute or data");
  Param(vfield, params, "--x-from", "x_from", "First x exponent (base 2)");
  Param(vfield, params, "--x-to", "x_to", "Last x exponent (base 2)");
  Param(vfield, params, "--y-from", "y_from", "First y exponent (base 2)");
  Param(vfield, params, "--y-to", "y_to", "Last y exponent (base 2)");
  Param(vfield, params, "--epsilon", "epsilon", "Fixed privacy budget");
  Param(vfield, params, "--batch", "batch", "Fixed batch size");
  Param(vfield, params, "--data", "data", "Fixed data budget");
  Param(vfield, params, "--steps", "steps", "Training iterations");
  Param(vfield, params, "--delta", "delta", "Privacy delta");

  // baselines -------------------------------------------------------------
  CLI::App* baselines = app.add_subcommand(
      "baselines", "Fixed configurations against the compute-optimal one");
  std::string baselines_path;
  std::vector<double> epsilons = {1, 2, 4, 8, 16, 32, 64, 128};
  double bl_compute = 1e19, bl_data = 1e7, bl_delta = -1, bl_density = 16;
  int savings_points = 25;
  baselines->add_option("--law", law_path, "Law JSON")->required();
  baselines->add_option("--config", baselines_path, "Baselines JSON")
      ->required();
  baselines->add_option("--epsilons", epsilons, "Privacy budgets")
      ->delimiter(',');
  baselines->add_option("--compute", bl_compute, "Compute budget");
  baselines->add_option("--data", bl_data, "Data budget");
  baselines->add_option("--delta", bl_delta, "Privacy delta");
  baselines->add_option("--density", bl_density, "Lattice points per decade");
  baselines->add_option("--savings-points", savings_points,
                        "Size of the compute grid searched for matched loss");

  // serve -----------------------------------------------------------------
  CLI::App* serve = app.add_subcommand("serve", "HTTP JSON API");
  std::string host = "127.0.0.1";
  int port = -1;
  bool cors = false;
  serve->add_option("--law", law_path, "Law JSON to load");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (default $DPSCALE_PORT or 8080)");
  serve->add_flag("--cors", cors, "Allow cross-origin requests");
  serve->add_option("--timeout", timeout_s, "Per-request time budget (s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    service::ServiceConfig config = service::ConfigFromEnvironment();
    config.timeout =
        std::chrono::milliseconds(static_cast<int64_t>(timeout_s * 1000));
    if (*calibrate) {
      out << io::Dump(service::Service(config).Calibrate(params));
    } else if (*synth) {
      law::ParametricLaw coeffs = law::DefaultSyntheticLaw();
      double examples_per_step = grid::kDefaultExamplesPerStep;
      if (!synth_law.empty()) {
        const law::FittedLaw l = ReadLaw(synth_law);
        if (l.parametric() == nullptr) {
          throw InvalidArgument("synth needs a parametric law", "law");
        }
        coeffs = l.parametric()->law;
        examples_per_step = l.parametric()->examples_per_step;
      }
      grid::SynthAxes axes{synth_models, Cadence(t_from, t_to, t_step),
                           synth_nbrs, synth_lrs};
      WriteGrid(grid::SynthGrid(coeffs, axes, noise, seed, examples_per_step),
                synth_out, out);
    } else if (*clean) {
      grid::MeasurementGrid g = ReadGrid(clean_in);
      switch (g.state) {
        case grid::GridState::kRaw:
          g = grid::Clean(g, window);
          break;
        case grid::GridState::kSmoothed:
          g = grid::MakeMonotone(g);
          break;
        case grid::GridState::kMonotone:
        case grid::GridState::kExtrapolated:
          break;  // already clean
      }
      WriteGrid(g, clean_out, out);
    } else if (*extrapolate) {
      const grid::MeasurementGrid g = ReadGrid(ex_in);
      std::vector<int64_t> target = ex_target;
      if (target.empty()) {
        target = g.iterations;
        if (target.empty()) {
          throw InvalidArgument("grid has no iterations", "in");
        }
        for (int64_t t = target.back() * 2; t <= ex_to; t *= 2) {
          target.push_back(t);
        }
      }
      WriteGrid(grid::Extrapolate(g, target, ex_opts), ex_out, out);
    } else if (*fit_interp) {
      const law::FittedLaw l = law::InterpolatedLaw::Build(ReadGrid(fi_in));
      Emit(fi_out, io::Dump(io::ToJson(l)), out);
    } else if (*fit_param) {
      fp_opts.form = law::ParseLawForm(fp_form);
      fp_opts.objective = law::ParseFitObjective(fp_objective);
      const std::vector<law::ParametricSample> rows =
          law::SamplesFromGrid(ReadGrid(fp_in));
      const law::FittedLaw l = law::FitParametric(rows, fp_opts);
      io::WriteTextFile(fp_out, io::Dump(io::ToJson(l)));
      const Json full = io::ToJson(l);
      out << io::Dump({{"form", full["form"]},
                       {"coefficients", full["coefficients"]},
                       {"fit_metadata", full["fit_metadata"]}});
    } else if (*plan) {
      const service::Service svc(config, ReadLaw(law_path));
      if (!budgets_path.empty()) {
        const Json table =
            svc.SaturatingTable(io::ReadJsonFile(budgets_path), params);
        out << (plan_format == "table" ? service::FormatSaturatingTable(table)
                                       : io::Dump(table));
      } else {
        if (plan_format == "table") {
          throw InvalidArgument("--format table needs --budgets", "format");
        }
        out << io::Dump(svc.Plan(params));
      }
    } else if (*sweep) {
      const service::Service svc(config, ReadLaw(law_path));
      planner::SweepSeries s;
      const Json series = svc.Sweep(params, &s);
      if (sweep_format == "json") {
        Emit(sweep_out, io::Dump(series), out);
      } else {
        Emit(sweep_out, io::SweepCsv(s, quantity), out);
      }
    } else if (*vfield) {
      out << io::Dump(service::Service(config).VectorField(params));
    } else if (*baselines) {
      const law::FittedLaw l = ReadLaw(law_path);
      const Json fixture = io::ReadJsonFile(baselines_path);
      const std::vector<planner::Baseline> list =
          io::BaselinesFromJson(fixture);
      planner::Budgets b;
      b.compute = bl_compute;
      b.data_size = bl_data;
      b.privacy.delta = bl_delta > 0 ? bl_delta : config.default_delta;
      planner::PlanOptions o;
      o.lattice_density = bl_density;
      o.max_configs = config.max_configs;
      if (savings_points < 2) {
        throw InvalidArgument("savings-points must be at least 2",
                              "savings_points");
      }
      const std::vector<double> grid =
          planner::GeometricGrid(bl_compute / 1e3, bl_compute, savings_points);
      out << io::Dump(io::ToJson(
          planner::CompareBaselines(list, b, l, epsilons, grid, o)));
    } else if (*serve) {
      std::optional<law::FittedLaw> l;
      if (!law_path.empty()) l = ReadLaw(law_path);
      const service::Service svc(config, std::move(l));
      if (port < 0) port = service::PortFromEnvironment(8080);
      httplib::Server server;
      http::RegisterRoutes(server, svc, {.cors = cors});
      g_server = &server;
      std::signal(SIGINT, StopServer);
      std::signal(SIGTERM, StopServer);
      if (!server.bind_to_port(host, port)) {
        throw InvalidArgument("cannot bind " + host + ":" +
                                  std::to_string(port),
                              "port");
      }
      err << "dpscale: serving /api/v1 on " << host << ":" << port
          << std::endl;
      server.listen_after_bind();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    err << "dpscale: " << ErrorCodeName(e.code()) << ": " << e.what();
    if (!e.field().empty()) err << " (field " << e.field() << ")";
    err << "\n";
    return service::ExitCode(e.code());
  } catch (const std::exception& e) {
    err << "dpscale: error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace dpscale::cli
