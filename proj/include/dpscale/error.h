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

#ifndef DPSCALE_ERROR_H_
#define DPSCALE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpscale {

// Coarse error categories. The CLI maps them onto exit codes and the HTTP
// service onto status codes, so keep the set small.
enum class ErrorCode {
  kInvalidArgument,     // malformed or out-of-range input (exit 2, HTTP 400)
  kOutOfDomain,         // query outside a fitted law's domain (exit 2, HTTP 422)
  kFailedPrecondition,  // wrong pipeline state or incomplete data (exit 2, 400)
  kNumeric,             // bisection/fit failure (exit 3, HTTP 422)
  kDeadlineExceeded,    // request-level timeout (exit 3, HTTP 503)
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = "")
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const { return code_; }
  // Name of the offending parameter or axis, empty when not applicable.
  const std::string& field() const { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

inline Error InvalidArgument(const std::string& message,
                             std::string field = "") {
  return Error(ErrorCode::kInvalidArgument, message, std::move(field));
}
inline Error OutOfDomain(const std::string& message, std::string field = "") {
  return Error(ErrorCode::kOutOfDomain, message, std::move(field));
}
inline Error FailedPrecondition(const std::string& message) {
  return Error(ErrorCode::kFailedPrecondition, message);
}
inline Error NumericFailure(const std::string& message) {
  return Error(ErrorCode::kNumeric, message);
}
inline Error DeadlineExceeded(const std::string& message) {
  return Error(ErrorCode::kDeadlineExceeded, message);
}

}  // namespace dpscale

#endif  // DPSCALE_ERROR_H_
