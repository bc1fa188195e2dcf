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

#include "dpscale/http_api.h"

#include <exception>
#include <string>

#include <httplib.h>

#include "dpscale/error.h"
#include "dpscale/serialize.h"

namespace dpscale::http {
namespace {

Response ErrorResponse(int status, const io::Json& body) {
  return {status, io::Dump(body)};
}

}  // namespace

Response Handle(const service::Service& service, std::string_view path,
                const service::Params& params) {
  if (!path.starts_with(kApiPrefix)) {
    return ErrorResponse(404, {{"code", "not_found"},
                               {"message", "unknown path"},
                               {"field", nullptr}});
  }
  const std::string_view route = path.substr(kApiPrefix.size());
  try {
    if (route == "/health") {
      if (!params.empty()) {
        throw InvalidArgument("health takes no parameters",
                              params.begin()->first);
      }
      return {200, io::Dump(service.Health())};
    }
    if (route == "/calibrate") return {200, io::Dump(service.Calibrate(params))};
    if (route == "/plan") return {200, io::Dump(service.Plan(params))};
    if (route == "/sweep") return {200, io::Dump(service.Sweep(params))};
    if (route == "/vector-field") {
      return {200, io::Dump(service.VectorField(params))};
    }
    if (route == "/law") {
      if (!params.empty()) {
        throw InvalidArgument("law takes no parameters", params.begin()->first);
      }
      return {200, io::Dump(service.Law())};
    }
  } catch (const Error& e) {
    return ErrorResponse(service::HttpStatus(e.code()), io::ToJson(e));
  } catch (const std::exception& e) {
    return ErrorResponse(500, {{"code", "internal"},
                               {"message", e.what()},
                               {"field", nullptr}});
  }
  return ErrorResponse(404, {{"code", "not_found"},
                             {"message", "unknown endpoint " +
                                             std::string(path)},
                             {"field", nullptr}});
}

void RegisterRoutes(httplib::Server& server, const service::Service& service,
                    const ServerOptions& options) {
  const bool cors = options.cors;
  auto handler = [&service, cors](const httplib::Request& req,
                                  httplib::Response& res) {
    service::Params params;
    for (const auto& [key, value] : req.params) {
      if (params.contains(key)) {
        const Response r = ErrorResponse(
            400, io::ToJson(InvalidArgument(
                     "parameter '" + key + "' given more than once", key)));
        res.status = r.status;
        res.set_content(r.body, "application/json");
        return;
      }
      params.emplace(key, value);
    }
    const Response r = Handle(service, req.path, params);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get(R"(/api/v1/.*)", handler);
  if (cors) {
    server.set_post_routing_handler(
        [](const httplib::Request&, httplib::Response& res) {
          res.set_header("Access-Control-Allow-Origin", "*");
        });
    server.Options(R"(/api/v1/.*)",
                   [](const httplib::Request&, httplib::Response& res) {
                     res.set_header("Access-Control-Allow-Methods", "GET");
                     res.set_header("Access-Control-Allow-Headers",
                                    "Content-Type");
                     res.status = 204;
                   });
  }
}

}  // namespace dpscale::http
