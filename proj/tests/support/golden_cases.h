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

// Golden-file cases shared by the interface tests and the acceptance binary:
// every case names a file under tests/golden and knows how to regenerate it.

#ifndef DPSCALE_TESTS_SUPPORT_GOLDEN_CASES_H_
#define DPSCALE_TESTS_SUPPORT_GOLDEN_CASES_H_

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "dpscale/http_api.h"
#include "dpscale/serialize.h"
#include "dpscale/service.h"

namespace dpscale::testing {

inline const std::string kSourceDir = DPSCALE_SOURCE_DIR;
inline const std::string kGoldenDir = kSourceDir + "/tests/golden/";
inline const std::string kSyntheticLawPath =
    kSourceDir + "/data/synthetic_law.json";

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool UpdatingGoldens() {
  return std::getenv("DPSCALE_UPDATE_GOLDEN") != nullptr;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

inline CliResult RunCli(std::vector<std::string> args) {
  args.insert(args.begin(), "dpscale");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code =
      cli::Run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("dpscale_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter_++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string operator/(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

inline service::Service LoadedService() {
  return service::Service(
      {}, io::LawFromJson(io::ReadJsonFile(kSyntheticLawPath)));
}

// CLI invocations whose stdout is pinned.
struct CliCase {
  std::string golden;
  std::vector<std::string> args;
};

inline std::vector<CliCase> CliGoldenCases() {
  const std::string law = kSyntheticLawPath;
  return {
      {"cli_calibrate.json",
       {"calibrate", "--epsilon", "8", "--data", "1e7", "--batch", "65536",
        "--steps", "16000"}},
      {"cli_plan.json",
       {"plan", "--law", law, "--compute", "1e19", "--epsilon", "4", "--data",
        "1e7", "--density", "8"}},
      {"cli_sweep.json",
       {"sweep", "--law", law, "--axis", "compute", "--from", "1e16", "--to",
        "1e20", "--points", "5", "--epsilon", "1", "--data", "1e7",
        "--density", "8"}},
      {"cli_sweep_model_params.csv",
       {"sweep", "--law", law, "--axis", "compute", "--from", "1e16", "--to",
        "1e20", "--points", "5", "--epsilon", "1", "--data", "1e7",
        "--density", "8", "--format", "csv", "--quantity", "model_params"}},
      {"cli_vector_field.json",
       {"vector-field", "--x", "privacy", "--y", "compute", "--x-from", "0",
        "--x-to", "3", "--y-from", "10", "--y-to", "12"}},
      {"cli_baselines.json",
       {"baselines", "--law", law, "--config",
        kSourceDir + "/data/baselines.json", "--epsilons", "1,8,64",
        "--density", "8", "--savings-points", "7"}},
  };
}

// /api/v1 requests whose response body is pinned.
struct ApiCase {
  std::string golden;
  std::string path;
  service::Params params;
  int status;
};

inline std::vector<ApiCase> ApiGoldenCases() {
  return {
      {"api_health.json", "/api/v1/health", {}, 200},
      {"api_law.json", "/api/v1/law", {}, 200},
      {"api_calibrate.json",
       "/api/v1/calibrate",
       {{"epsilon", "8"}, {"data", "1e7"}, {"batch", "65536"},
        {"steps", "16000"}},
       200},
      {"api_plan.json",
       "/api/v1/plan",
       {{"compute", "1e19"}, {"epsilon", "4"}, {"data", "1e7"},
        {"density", "8"}},
       200},
      {"api_sweep.json",
       "/api/v1/sweep",
       {{"axis", "privacy"}, {"from", "1"}, {"to", "16"}, {"points", "3"},
        {"compute", "1e19"}, {"data", "1e7"}, {"density", "8"}},
       200},
      {"api_vector_field.json",
       "/api/v1/vector-field",
       {{"x", "data"}, {"y", "compute"}, {"x_from", "20"}, {"x_to", "21"},
        {"y_from", "10"}, {"y_to", "11"}},
       200},
      {"api_error_malformed.json",
       "/api/v1/plan",
       {{"compute", "1e19"}, {"epsilon", "four"}, {"data", "1e7"}},
       400},
      {"api_error_unknown_param.json",
       "/api/v1/calibrate",
       {{"epsilon", "1"}, {"data", "1e7"}, {"batch", "1"}, {"steps", "1"},
        {"eps", "2"}},
       400},
      {"api_error_domain.json",
       "/api/v1/plan",
       {{"compute", "1e5"}, {"epsilon", "1"}, {"data", "1e7"}},
       422},
      {"api_error_not_found.json", "/api/v1/nothing", {}, 404},
  };
}

// Runs synth -> clean -> extrapolate -> fit-interp through the CLI and returns
// the artifact of every stage keyed by golden name. Empty on failure, with the
// failing stage's stderr in `error`.
inline std::map<std::string, std::string> PipelineArtifacts(
    std::string* error) {
  TempDir dir;
  const std::vector<std::pair<std::string, std::vector<std::string>>> stages =
      {{"grid_raw.csv",
        {"synth", "--models", "1e7,1e8", "--nbrs", "0,1e-6,1e-5",
         "--learning-rates", "0.001,0.003", "--t-from", "1000", "--t-to",
         "8000", "--t-step", "1000", "--noise", "0.01", "--seed", "3", "--out",
         dir / "grid_raw.csv"}},
       {"grid_clean.json",
        {"clean", "--in", dir / "grid_raw.csv", "--window", "3", "--out",
         dir / "grid_clean.json"}},
       {"grid_extrapolated.json",
        {"extrapolate", "--in", dir / "grid_clean.json", "--to", "32000",
         "--fit-min", "2000", "--fit-max", "8000", "--out",
         dir / "grid_extrapolated.json"}},
       {"law_interp.json",
        {"fit-interp", "--in", dir / "grid_extrapolated.json", "--out",
         dir / "law_interp.json"}}};
  std::map<std::string, std::string> artifacts;
  for (const auto& [name, args] : stages) {
    const CliResult r = RunCli(args);
    if (r.code != 0) {
      *error = name + ": " + r.err;
      return {};
    }
    artifacts[name] = ReadFile(dir / name);
  }
  return artifacts;
}

inline std::string ParametricLawGolden() {
  return io::Dump(
      io::ToJson(io::LawFromJson(io::ReadJsonFile(kSyntheticLawPath))));
}

}  // namespace dpscale::testing

#endif  // DPSCALE_TESTS_SUPPORT_GOLDEN_CASES_H_
