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

// Golden-file tests pinning the CLI reports, the /api/v1 responses and the
// artifact formats. Set DPSCALE_UPDATE_GOLDEN=1 to rewrite the golden files.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>
#include <httplib.h>

#include "dpscale/accounting.h"
#include "dpscale/http_api.h"
#include "dpscale/serialize.h"
#include "dpscale/service.h"
#include "support/golden_cases.h"

namespace dpscale {
namespace {

using ::testing::HasSubstr;
using testing::ApiCase;
using testing::CliCase;
using testing::CliResult;
using testing::LoadedService;
using testing::ReadFile;
using testing::RunCli;
using testing::TempDir;

const std::string& kSource = testing::kSourceDir;
const std::string& kLaw = testing::kSyntheticLawPath;

void ExpectGolden(const std::string& name, const std::string& actual) {
  const std::string path = testing::kGoldenDir + name;
  if (testing::UpdatingGoldens()) {
    std::ofstream(path, std::ios::binary) << actual;
    return;
  }
  ASSERT_TRUE(std::filesystem::exists(path)) << "missing golden file " << path;
  EXPECT_EQ(actual, ReadFile(path)) << "golden mismatch: " << name;
}

// --- Artifact formats ------------------------------------------------------

TEST(GoldenTest, PipelineArtifacts) {
  std::string error;
  const auto artifacts = testing::PipelineArtifacts(&error);
  ASSERT_FALSE(artifacts.empty()) << error;
  for (const auto& [name, content] : artifacts) ExpectGolden(name, content);
}

TEST(GoldenTest, CleaningIsIdempotent) {
  TempDir dir;
  std::string error;
  const auto artifacts = testing::PipelineArtifacts(&error);
  ASSERT_FALSE(artifacts.empty()) << error;
  io::WriteTextFile(dir / "clean.json", artifacts.at("grid_clean.json"));
  const CliResult r = RunCli({"clean", "--in", dir / "clean.json", "--out",
                              dir / "clean2.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ReadFile(dir / "clean2.json"), artifacts.at("grid_clean.json"));
}

TEST(GoldenTest, ParametricLawJson) {
  ExpectGolden("law_parametric.json", testing::ParametricLawGolden());
}

// --- CLI reports -----------------------------------------------------------

TEST(GoldenTest, CliReports) {
  for (const CliCase& c : testing::CliGoldenCases()) {
    const CliResult r = RunCli(c.args);
    ASSERT_EQ(r.code, 0) << c.golden << ": " << r.err;
    ExpectGolden(c.golden, r.out);
  }
}

TEST(GoldenTest, PlanTableHasPublishedColumns) {
  TempDir dir;
  io::WriteTextFile(dir / "budgets.json", R"({
    "compute_grid": {"from": 1e16, "to": 1e22, "points": 7},
    "rows": [{"data": 1e6, "epsilon": 1}, {"data": 1e6, "epsilon": 4},
             {"data": 1e7, "epsilon": 1}]})");
  const CliResult r =
      RunCli({"plan", "--law", kLaw, "--budgets", dir / "budgets.json",
              "--format", "table", "--density", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string header = r.out.substr(0, r.out.find('\n'));
  EXPECT_EQ(header,
            "Data    | Privacy | Compute | Cross Entropy | Model Size | "
            "Iterations | Batch Size | Token / Model");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  ExpectGolden("cli_plan_table.txt", r.out);
}

TEST(CliTest, SweepLossColumnIsNonincreasing) {
  const CliResult r = RunCli(
      {"sweep", "--law", kLaw, "--axis", "compute", "--from", "1e16", "--to",
       "1e24", "--points", "9", "--epsilon", "2", "--data", "1e6",
       "--density", "8", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,value");
  double previous = 1e300;
  int rows = 0;
  while (std::getline(in, line)) {
    const double loss = std::stod(line.substr(line.find(',') + 1));
    EXPECT_LE(loss, previous);
    previous = loss;
    ++rows;
  }
  EXPECT_EQ(rows, 9);
}

TEST(CliTest, CalibrateRoundTripsWithLibrary) {
  const CliResult r = RunCli({"calibrate", "--epsilon", "2", "--delta", "1e-6",
                              "--data", "50000", "--batch", "500", "--steps",
                              "3000", "--batching", "poisson"});
  ASSERT_EQ(r.code, 0) << r.err;
  const io::Json j = io::Parse(r.out);
  const accounting::Calibration c = accounting::CalibrateNbr(
      {2, 1e-6}, {50000, 500, 3000}, accounting::BatchingChoice::kPoisson);
  EXPECT_EQ(j["noise_batch_ratio"].get<double>(), c.nbr.value());
  EXPECT_EQ(j["epsilon_achieved"].get<double>(), c.epsilon);
  EXPECT_EQ(j["batching_branch"], "poisson");
  EXPECT_FALSE(j.contains("candidates"));
}

TEST(CliTest, BothBatchingReportsTheLowerBranch) {
  const CliResult r = RunCli({"calibrate", "--epsilon", "4", "--data", "1e4",
                              "--batch", "1e4", "--steps", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const io::Json j = io::Parse(r.out);
  const double p = j["candidates"]["poisson"]["noise_batch_ratio"];
  const double d = j["candidates"]["deterministic"]["noise_batch_ratio"];
  EXPECT_EQ(j["noise_batch_ratio"].get<double>(), std::min(p, d));
  EXPECT_EQ(j["batching_branch"], p < d ? "poisson" : "deterministic");
}

TEST(CliTest, ExitCodes) {
  CliResult r = RunCli({"calibrate", "--epsilon", "-1", "--data", "1e7",
                        "--batch", "1", "--steps", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_THAT(r.err, HasSubstr("field epsilon"));
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(RunCli({"calibrate", "--frobnicate", "1"}).code, 2);
  EXPECT_EQ(RunCli({}).code, 2);
  EXPECT_EQ(RunCli({"--help"}).code, 0);
  EXPECT_EQ(RunCli({"plan", "--law", "/nonexistent.json", "--compute", "1e19",
                    "--epsilon", "1", "--data", "1e7"})
                .code,
            2);
  // Out of the law's domain.
  EXPECT_EQ(RunCli({"plan", "--law", kLaw, "--compute", "1e5", "--epsilon",
                    "1", "--data", "1e7"})
                .code,
            2);
  // Budget unattainable within the noise bracket.
  r = RunCli({"calibrate", "--epsilon", "1e-9", "--delta", "1e-300", "--data",
              "1", "--batch", "1", "--steps", "1000000"});
  EXPECT_EQ(r.code, 3) << r.err;
  // Exhausted time budget.
  r = RunCli({"plan", "--law", kLaw, "--compute", "1e19", "--epsilon", "1",
              "--data", "1e7", "--timeout", "0"});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_THAT(r.err, HasSubstr("deadline_exceeded"));
}

TEST(CliTest, EnvironmentOverridesDelta) {
  ::setenv("DPSCALE_DELTA", "1e-5", 1);
  const CliResult r = RunCli({"calibrate", "--epsilon", "1", "--data", "1e6",
                              "--batch", "1000", "--steps", "100"});
  ::unsetenv("DPSCALE_DELTA");
  ASSERT_EQ(r.code, 0) << r.err;
  const accounting::Calibration c =
      accounting::CalibrateNbr({1, 1e-5}, {1e6, 1000, 100});
  EXPECT_EQ(io::Parse(r.out)["noise_batch_ratio"].get<double>(),
            c.nbr.value());
  ::setenv("DPSCALE_PORT", "80a", 1);
  EXPECT_THROW(service::PortFromEnvironment(8080), Error);
  ::setenv("DPSCALE_PORT", "9001", 1);
  EXPECT_EQ(service::PortFromEnvironment(8080), 9001);
  ::unsetenv("DPSCALE_PORT");
  EXPECT_EQ(service::PortFromEnvironment(8080), 8080);
}

TEST(CliTest, VectorFieldComponentsFollowTheDefinition) {
  const CliResult r = RunCli({"vector-field", "--x", "privacy", "--y", "data",
                              "--x-from", "1", "--x-to", "2", "--y-from",
                              "20", "--y-to", "20", "--batch", "4096"});
  ASSERT_EQ(r.code, 0) << r.err;
  const io::Json j = io::Parse(r.out);
  const accounting::CalibrationOptions fine{.relative_width = 1e-9};
  auto nbr = [&](double eps, double data) {
    return accounting::CalibrateNbr({eps, 1e-8}, {data, 4096, 16000},
                                    accounting::BatchingChoice::kLowerOfBoth,
                                    fine)
        .nbr.value();
  };
  const io::Json& p = j["points"][0];
  EXPECT_EQ(p["x"], 2.0);
  EXPECT_DOUBLE_EQ(p["dx"].get<double>(), nbr(2, 1 << 20) / nbr(4, 1 << 20) - 1);
  EXPECT_DOUBLE_EQ(p["dy"].get<double>(), nbr(2, 1 << 20) / nbr(2, 1 << 21) - 1);
  // Halving the ratio is a component of length one.
  EXPECT_EQ(nbr(2, 1 << 20) / (nbr(2, 1 << 20) / 2) - 1, 1.0);
}

// --- HTTP API --------------------------------------------------------------

TEST(ApiGoldenTest, Responses) {
  const service::Service svc = LoadedService();
  const std::vector<ApiCase> cases = testing::ApiGoldenCases();
  for (const ApiCase& c : cases) {
    const http::Response r = http::Handle(svc, c.path, c.params);
    EXPECT_EQ(r.status, c.status) << c.golden << ": " << r.body;
    ExpectGolden(c.golden, r.body);
  }
  const io::Json err =
      io::Parse(http::Handle(svc, "/api/v1/plan", cases[6].params).body);
  EXPECT_EQ(err["code"], "invalid_argument");
  EXPECT_EQ(err["field"], "epsilon");
}

TEST(ApiTest, PlanMatchesCli) {
  const http::Response api = http::Handle(
      LoadedService(), "/api/v1/plan",
      {{"compute", "3e18"}, {"epsilon", "2"}, {"data", "1e6"},
       {"density", "8"}, {"near_optimal", "0.02"}});
  const CliResult cli =
      RunCli({"plan", "--law", kLaw, "--compute", "3e18", "--epsilon", "2",
              "--data", "1e6", "--density", "8", "--near-optimal", "0.02"});
  ASSERT_EQ(cli.code, 0) << cli.err;
  EXPECT_EQ(api.status, 200);
  EXPECT_EQ(api.body, cli.out);
}

TEST(ApiTest, MissingLawIsAPreconditionFailure) {
  const service::Service svc;
  const http::Response r = http::Handle(
      svc, "/api/v1/plan", {{"compute", "1e19"}, {"epsilon", "1"},
                            {"data", "1e7"}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(io::Parse(r.body)["code"], "failed_precondition");
  EXPECT_EQ(io::Parse(http::Handle(svc, "/api/v1/health", {}).body)
                ["law_loaded"],
            false);
}

TEST(ApiTest, EnumerationGuards) {
  service::ServiceConfig config;
  config.timeout = std::chrono::milliseconds(0);
  const service::Service slow(config, io::LawFromJson(io::ReadJsonFile(kLaw)));
  http::Response r = http::Handle(
      slow, "/api/v1/plan", {{"compute", "1e19"}, {"epsilon", "1"},
                             {"data", "1e7"}});
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(io::Parse(r.body)["code"], "deadline_exceeded");
  // 1000 points per decade over both axes exceeds the lattice cap.
  r = http::Handle(LoadedService(), "/api/v1/plan",
                   {{"compute", "1e19"}, {"epsilon", "1"}, {"data", "1e7"},
                    {"density", "1000"}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(io::Parse(r.body)["field"], "lattice_density");
}

TEST(ApiTest, LiveServerServesIdenticalConcurrentResponses) {
  const service::Service svc = LoadedService();
  httplib::Server server;
  http::RegisterRoutes(server, svc, {.cors = true});
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string query =
      "/api/v1/plan?compute=1e18&epsilon=8&data=1e7&density=8";
  std::vector<std::future<std::string>> calls;
  for (int i = 0; i < 4; ++i) {
    calls.push_back(std::async(std::launch::async, [&] {
      httplib::Client client("127.0.0.1", port);
      const auto res = client.Get(query);
      return res ? std::to_string(res->status) + " " +
                       res->get_header_value("Access-Control-Allow-Origin") +
                       " " + res->body
                 : std::string("no response");
    }));
  }
  const http::Response direct = http::Handle(
      svc, "/api/v1/plan",
      {{"compute", "1e18"}, {"epsilon", "8"}, {"data", "1e7"},
       {"density", "8"}});
  for (auto& call : calls) EXPECT_EQ(call.get(), "200 * " + direct.body);

  httplib::Client client("127.0.0.1", port);
  const auto bad = client.Get("/api/v1/calibrate?epsilon=x&data=1&batch=1&steps=1");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(io::Parse(bad->body)["field"], "epsilon");
  const auto dup = client.Get("/api/v1/health?a=1&a=2");
  ASSERT_TRUE(dup);
  EXPECT_EQ(dup->status, 400);

  server.stop();
  thread.join();
}

}  // namespace
}  // namespace dpscale
