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

// The /api/v1 HTTP interface over a Service.

#ifndef DPSCALE_HTTP_API_H_
#define DPSCALE_HTTP_API_H_

#include <string>
#include <string_view>

#include "dpscale/service.h"

namespace httplib {
class Server;
}  // namespace httplib

namespace dpscale::http {

inline constexpr std::string_view kApiPrefix = "/api/v1";

struct Response {
  int status = 200;
  std::string body;  // JSON followed by a newline
};

// Routes one GET request (path without query string) to the service. Errors
// become {code, message, field} bodies with the matching status; unknown
// paths are 404.
Response Handle(const service::Service& service, std::string_view path,
                const service::Params& params);

struct ServerOptions {
  bool cors = false;  // adds Access-Control-Allow-Origin: *
};

// Installs the GET handlers for every endpoint on `server`.
void RegisterRoutes(httplib::Server& server, const service::Service& service,
                    const ServerOptions& options = {});

}  // namespace dpscale::http

#endif  // DPSCALE_HTTP_API_H_
