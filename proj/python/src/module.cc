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

// Python bindings for the accounting core, fitted laws and the request
// service. Service methods return the same compact JSON text as the CLI and
// the /api/v1 endpoints; the dpscale package decodes it into dicts.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpscale/accounting.h"
#include "dpscale/error.h"
#include "dpscale/lawfit.h"
#include "dpscale/serialize.h"
#include "dpscale/service.h"

namespace py = pybind11;

namespace dpscale {
namespace {

using accounting::AccountingSetup;
using accounting::Batching;
using accounting::NoiseBatchRatio;

// Raises dpscale.Error with `code` and `field` attributes set.
void TranslateError(const py::object& type, const Error& e) {
  py::object exc = type(e.what());
  exc.attr("code") = std::string(ErrorCodeName(e.code()));
  exc.attr("field") = e.field();
  PyErr_SetObject(type.ptr(), exc.ptr());
}

std::string Call(
    const service::Service& s,
    io::Json (service::Service::*op)(const service::Params&) const,
    const service::Params& params) {
  io::Json out;
  {
    py::gil_scoped_release release;
    out = (s.*op)(params);
  }
  return io::Dump(out);
}

}  // namespace
}  // namespace dpscale

PYBIND11_MODULE(_core, m) {
  using namespace dpscale;
  m.doc() = "Differential-privacy accounting and compute-optimal planning";

  static py::exception<Error> error_type(m, "Error", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      TranslateError(error_type, e);
    }
  });

  m.def("analytic_gaussian_delta", &accounting::AnalyticGaussianDelta,
        py::arg("noise_multiplier"), py::arg("epsilon"),
        "Exact delta(epsilon) of the Gaussian mechanism.");
  m.def("analytic_gaussian_epsilon", &accounting::AnalyticGaussianEpsilon,
        py::arg("noise_multiplier"), py::arg("delta"),
        "Smallest epsilon of the Gaussian mechanism at the given delta.");
  m.def("rdp_subsampled_gaussian", &accounting::RdpSubsampledGaussian,
        py::arg("noise_multiplier"), py::arg("q"), py::arg("order"),
        "Renyi divergence of one Poisson-subsampled Gaussian step.");
  m.def("default_orders", [] {
    const auto orders = accounting::DefaultOrders();
    return std::vector<double>(orders.begin(), orders.end());
  });

  m.def(
      "epsilon_of",
      [](double data, double batch, int64_t steps, double nbr, double delta,
         const std::string& batching) {
        const AccountingSetup setup{data, batch, steps,
                                    accounting::ParseBatching(batching)};
        return accounting::EpsilonOf(setup, NoiseBatchRatio(nbr), delta);
      },
      py::kw_only(), py::arg("data"), py::arg("batch"), py::arg("steps"),
      py::arg("nbr"), py::arg("delta") = accounting::kDefaultDelta,
      py::arg("batching") = "poisson");

  m.def(
      "mia_advantage",
      [](double data, double batch, int64_t steps, double nbr,
         const std::string& batching) {
        const AccountingSetup setup{data, batch, steps,
                                    accounting::ParseBatching(batching)};
        const accounting::MiaAdvantage a =
            accounting::MiaAdvantageOf(setup, NoiseBatchRatio(nbr));
        return py::make_tuple(a.value,
                              std::string(accounting::BoundKindName(a.bound)));
      },
      py::kw_only(), py::arg("data"), py::arg("batch"), py::arg("steps"),
      py::arg("nbr"), py::arg("batching") = "poisson",
      "(advantage, bound) where bound is 'exact' or 'upper_bound'.");

  py::class_<law::FittedLaw>(m, "Law")
      .def_static(
          "from_json",
          [](const std::string& text) {
            return io::LawFromJson(io::Parse(text, "law"));
          },
          py::arg("text"))
      .def_static(
          "load",
          [](const std::string& path) {
            return io::LawFromJson(io::ReadJsonFile(path));
          },
          py::arg("path"))
      .def_property_readonly("kind",
                             [](const law::FittedLaw& l) {
                               return std::string(law::LawKindName(l.kind()));
                             })
      .def("query", &law::FittedLaw::Query, py::arg("model_params"),
           py::arg("iterations"), py::arg("nbr"),
           "Predicted cross-entropy; raises for points outside the domain.")
      .def("to_json",
           [](const law::FittedLaw& l) { return io::Dump(io::ToJson(l)); });

  py::class_<service::Service>(m, "Service")
      .def(py::init([](std::optional<law::FittedLaw> law, double delta,
                       int64_t timeout_ms, int64_t max_configs) {
             service::ServiceConfig config;
             config.default_delta = delta;
             config.timeout = std::chrono::milliseconds(timeout_ms);
             config.max_configs = max_configs;
             return service::Service(config, std::move(law));
           }),
           py::arg("law") = py::none(), py::kw_only(),
           py::arg("delta") = accounting::kDefaultDelta,
           py::arg("timeout_ms") = 30000, py::arg("max_configs") = 1000000)
      .def_property_readonly("has_law", &service::Service::has_law)
      .def("health",
           [](const service::Service& s) { return io::Dump(s.Health()); })
      .def("law", [](const service::Service& s) { return io::Dump(s.Law()); })
      .def("calibrate",
           [](const service::Service& s, const service::Params& p) {
             return Call(s, &service::Service::Calibrate, p);
           })
      .def("plan",
           [](const service::Service& s, const service::Params& p) {
             return Call(s, &service::Service::Plan, p);
           })
      .def("sweep",
           [](const service::Service& s, const service::Params& p) {
             io::Json out;
             {
               py::gil_scoped_release release;
               out = s.Sweep(p);
             }
             return io::Dump(out);
           })
      .def("vector_field",
           [](const service::Service& s, const service::Params& p) {
             return Call(s, &service::Service::VectorField, p);
           });
}
