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

// The dpscale command-line tool as a callable entry point.

#ifndef DPSCALE_TOOLS_CLI_H_
#define DPSCALE_TOOLS_CLI_H_

#include <ostream>

namespace dpscale::cli {

// Runs one command line. Reports go to `out`, diagnostics to `err`. Returns
// the process exit code: 0 on success, 2 for invalid input, 3 for numeric
// failures.
int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace dpscale::cli

#endif  // DPSCALE_TOOLS_CLI_H_
