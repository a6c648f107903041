// Copyright 2026 The gridgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gridgame/cli.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace gridgame {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json FixtureJson(const std::string& name) {
  std::ifstream in(testing::FixturePath(name));
  return json::parse(in);
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("gridgame_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string ValidationMessage(const json& doc) {
  try {
    ParseScenario(doc);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidationError) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "expected a validation error";
  return "";
}

int RunCli(const std::string& args, std::string* out = nullptr) {
  const fs::path log = TempDir("cli") / "stdout.txt";
  const std::string cmd =
      std::string(GRIDGAME_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (out != nullptr) *out = ReadFile(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(ScenarioTest, LoadsFixture) {
  const Scenario sc = testing::LoadFixture("ieee14.json");
  EXPECT_EQ(sc.spec.network().buses().size(), 14u);
  EXPECT_EQ(sc.spec.network().slack(), BusId(2));
  ASSERT_EQ(sc.spec.num_players(), 3u);
  EXPECT_EQ(sc.spec.players()[0].bus, BusId(3));
  EXPECT_EQ(sc.spec.players()[1].bus, BusId(6));
  EXPECT_EQ(sc.spec.players()[2].bus, BusId(14));
  EXPECT_EQ(sc.spec.players()[0].p_gen_max, 1.0);
  EXPECT_EQ(sc.spec.network().At(BusId(3)).p_load, 1.2);
  EXPECT_EQ(sc.spec.network().At(BusId(1)).p_gen_fixed, 2.8);
  EXPECT_EQ(sc.config.delta, 1e-4);
  EXPECT_EQ(sc.config.scheme, Scheme::kIua);
}

TEST(ScenarioTest, TauArityNamesPath) {
  json doc = FixtureJson("ieee14_rua.json");
  doc["algorithm"]["tau"] = {0.6, 0.6};
  EXPECT_NE(ValidationMessage(doc).find("algorithm.tau"), std::string::npos);
}

TEST(ScenarioTest, TauWithIuaRejected) {
  json doc = FixtureJson("ieee14.json");
  doc["algorithm"]["tau"] = {0.6, 0.6, 0.6};
  EXPECT_NE(ValidationMessage(doc).find("algorithm.tau"), std::string::npos);
}

TEST(ScenarioTest, UnknownKeysNamePath) {
  json doc = FixtureJson("ieee14.json");
  doc["buses"][4]["voltage"] = 1.0;
  EXPECT_NE(ValidationMessage(doc).find("buses[4].voltage"), std::string::npos);
  json top = FixtureJson("ieee14.json");
  top["extra"] = 1;
  EXPECT_NE(ValidationMessage(top).find("extra"), std::string::npos);
  json alg = FixtureJson("ieee14.json");
  alg["algorithm"]["gain"] = 1;
  EXPECT_NE(ValidationMessage(alg).find("algorithm.gain"), std::string::npos);
}

TEST(ScenarioTest, BadTeamWeights) {
  json doc = FixtureJson("ieee14.json");
  doc["team_weights"] = {0.5, 0.3, 0.3};
  EXPECT_NE(ValidationMessage(doc).find("team_weights"), std::string::npos);
}

TEST(ScenarioTest, BadValuesRejected) {
  json kind = FixtureJson("ieee14.json");
  kind["buses"][0]["kind"] = "battery";
  EXPECT_NE(ValidationMessage(kind).find("buses[0].kind"), std::string::npos);
  json x = FixtureJson("ieee14.json");
  x["branches"][0]["x_pu"] = 0.0;
  EXPECT_NE(ValidationMessage(x).find("branches[0].x_pu"), std::string::npos);
  json fault = FixtureJson("ieee14_outage.json");
  fault["faults"][0]["bus"] = 3;
  EXPECT_NE(ValidationMessage(fault).find("faults"), std::string::npos);
  json missing = FixtureJson("ieee14.json");
  missing["market"].erase("zeta");
  EXPECT_NE(ValidationMessage(missing).find("market.zeta"), std::string::npos);
}

TEST(ScenarioTest, ParseErrorReportsLine) {
  try {
    ParseScenarioText("{\n  \"base_mva\": 100,\n  \"slack\": ,\n}", "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("bad.json:3"), std::string::npos) << e.what();
  }
}

TEST(ScenarioTest, MissingFileIsIoError) {
  try {
    LoadScenario("/nonexistent/scenario.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

TEST(ScenarioTest, RoundTrip) {
  for (const char* name : {"ieee14.json", "ieee14_pda.json", "ieee14_line_trip.json",
                           "ieee14_shutdown.json", "three_bus.json"}) {
    const Scenario a = testing::LoadFixture(name);
    const Scenario b = ParseScenario(ScenarioToJson(a));
    const Network& na = a.spec.network();
    const Network& nb = b.spec.network();
    EXPECT_EQ(na.base_mva(), nb.base_mva());
    EXPECT_EQ(na.slack(), nb.slack());
    ASSERT_EQ(na.buses().size(), nb.buses().size());
    for (std::size_t k = 0; k < na.buses().size(); ++k) {
      EXPECT_EQ(na.buses()[k].id, nb.buses()[k].id);
      EXPECT_EQ(na.buses()[k].kind, nb.buses()[k].kind);
      EXPECT_NEAR(na.buses()[k].p_load, nb.buses()[k].p_load, 1e-15);
      EXPECT_NEAR(na.buses()[k].p_gen_fixed, nb.buses()[k].p_gen_fixed, 1e-15);
    }
    ASSERT_EQ(na.branches().size(), nb.branches().size());
    for (std::size_t k = 0; k < na.branches().size(); ++k) {
      EXPECT_EQ(na.branches()[k].from, nb.branches()[k].from);
      EXPECT_EQ(na.branches()[k].to, nb.branches()[k].to);
      EXPECT_NEAR(na.branches()[k].susceptance, nb.branches()[k].susceptance,
                  1e-12 * na.branches()[k].susceptance);
    }
    ASSERT_EQ(a.spec.num_players(), b.spec.num_players());
    for (std::size_t i = 0; i < a.spec.num_players(); ++i) {
      EXPECT_EQ(a.spec.players()[i].bus, b.spec.players()[i].bus);
      EXPECT_EQ(a.spec.players()[i].psi, b.spec.players()[i].psi);
      EXPECT_EQ(a.spec.players()[i].eta, b.spec.players()[i].eta);
      EXPECT_NEAR(a.spec.players()[i].p_gen_max, b.spec.players()[i].p_gen_max, 1e-15);
    }
    EXPECT_EQ(a.spec.market().zeta, b.spec.market().zeta);
    EXPECT_EQ(a.spec.team_weights(), b.spec.team_weights());
    EXPECT_EQ(a.config.scheme, b.config.scheme);
    EXPECT_EQ(a.config.tau, b.config.tau);
    EXPECT_NEAR(a.config.delta, b.config.delta, 1e-18);
    EXPECT_EQ(a.config.max_steps, b.config.max_steps);
    EXPECT_EQ(a.config.seed, b.config.seed);
    EXPECT_EQ(a.timeline.events(), b.timeline.events());
  }
}

TEST(CliTest, SolveTextAndJson) {
  const Scenario sc = testing::LoadFixture("ieee14.json");
  std::ostringstream text, js;
  EXPECT_EQ(CmdSolve(sc, OutputFormat::kText, text), kExitOk);
  EXPECT_NE(text.str().find("LOE="), std::string::npos);
  EXPECT_NE(text.str().find("capacity"), std::string::npos);
  EXPECT_EQ(CmdSolve(sc, OutputFormat::kJson, js), kExitOk);
  const json report = json::parse(js.str());
  ASSERT_EQ(report["equilibrium"].size(), 3u);
  const Equilibrium eq = SolveNeDirect(sc.spec);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(report["equilibrium"][i]["p_gen_mw"].get<double>(), 100.0 * eq.p_gen(i), 1e-9);
  }
  EXPECT_TRUE(report["conditions"]["iua_condition_met"].get<bool>());
}

TEST(CliTest, CheckVerdicts) {
  std::ostringstream a, b, c;
  EXPECT_EQ(CmdCheck(testing::LoadFixture("ieee14.json"), OutputFormat::kText, a), kExitOk);
  EXPECT_NE(a.str().find("c1=0.764 < 1: satisfied"), std::string::npos) << a.str();
  EXPECT_EQ(CmdCheck(testing::LoadFixture("three_bus.json"), OutputFormat::kText, b),
            kExitConditionNotMet);
  EXPECT_NE(b.str().find("c1=1.000: NOT satisfied"), std::string::npos) << b.str();
  EXPECT_EQ(CmdCheck(testing::LoadFixture("ieee14_pda.json"), OutputFormat::kText, c), kExitOk);
  EXPECT_NE(c.str().find("=0.611 < tau_min=0.650: satisfied"), std::string::npos) << c.str();
}

TEST(CliTest, RunWritesArtifacts) {
  const fs::path dir = TempDir("run");
  const Scenario sc = testing::LoadFixture("ieee14_outage.json");
  std::ostringstream out;
  ASSERT_EQ(CmdRun(sc, dir, OutputFormat::kText, out), kExitOk);
  const std::string csv = ReadFile(dir / "trajectory.csv");
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "step,bus,p_gen_mw,theta_rad,step_change_mw");
  int rows = 0, last_step = -1;
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::vector<std::string> fields;
    while (std::getline(cells, cell, ',')) fields.push_back(cell);
    ASSERT_EQ(fields.size(), 5u) << line;
    for (std::size_t k = 2; k < 5; ++k) {
      const auto dot = fields[k].find('.');
      ASSERT_NE(dot, std::string::npos);
      EXPECT_EQ(fields[k].size() - dot - 1, 6u) << fields[k];
    }
    last_step = std::stoi(fields[0]);
    ++rows;
  }
  EXPECT_EQ(rows, 3 * (last_step + 1));
  const std::string summary = ReadFile(dir / "summary.txt");
  EXPECT_NE(summary.find("terminal_status: converged"), std::string::npos);
  for (const char* svg : {"generation.svg", "angles.svg"}) {
    const std::string s = ReadFile(dir / svg);
    EXPECT_EQ(s.rfind("<?xml", 0), 0u);
    EXPECT_NE(s.find("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\""),
              std::string::npos);
    EXPECT_NE(s.find("</svg>"), std::string::npos);
    EXPECT_EQ(s.find("nan"), std::string::npos);
  }
  EXPECT_NE(ReadFile(dir / "generation.svg").find("generation (MW)"), std::string::npos);
  EXPECT_NE(ReadFile(dir / "angles.svg").find("angle (radians)"), std::string::npos);
  fs::remove_all(dir);
}

TEST(CliTest, RunIsByteIdentical) {
  const fs::path a = TempDir("det_a"), b = TempDir("det_b");
  const Scenario sc = testing::LoadFixture("ieee14_line_trip.json");
  std::ostringstream sink;
  CmdRun(sc, a, OutputFormat::kText, sink);
  CmdRun(sc, b, OutputFormat::kText, sink);
  EXPECT_EQ(ReadFile(a / "trajectory.csv"), ReadFile(b / "trajectory.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(CliTest, MaxStepsRecordedInSummary) {
  const fs::path dir = TempDir("maxsteps");
  Scenario sc = testing::LoadFixture("ieee14.json");
  sc.config.max_steps = 1;
  sc.config.delta = 1e-15;
  std::ostringstream sink;
  CmdRun(sc, dir, OutputFormat::kText, sink);
  EXPECT_NE(ReadFile(dir / "summary.txt").find("terminal_status: max_steps"), std::string::npos);
  fs::remove_all(dir);
}

TEST(CliTest, BinaryExitCodes) {
  const std::string fx = std::string(GRIDGAME_FIXTURE_DIR) + "/";
  std::string out;
  EXPECT_EQ(RunCli("solve " + fx + "ieee14.json", &out), 0) << out;
  EXPECT_EQ(RunCli("--format json solve " + fx + "ieee14.json", &out), 0) << out;
  EXPECT_NO_THROW(json::parse(out));
  EXPECT_EQ(RunCli("check " + fx + "ieee14.json"), 0);
  EXPECT_EQ(RunCli("check " + fx + "three_bus.json", &out), 2) << out;
  EXPECT_EQ(RunCli("check /nonexistent.json"), 1);
  EXPECT_EQ(RunCli("frobnicate"), 1);
  EXPECT_EQ(RunCli(""), 1);

  const fs::path dir = TempDir("bin");
  const fs::path bad = dir / "islanding.json";
  json doc = FixtureJson("three_bus.json");
  doc["faults"] = {{{"at_step", 2}, {"kind", "line_trip"}, {"from", 2}, {"to", 3}}};
  std::ofstream(bad) << doc.dump();
  EXPECT_EQ(RunCli("run " + bad.string() + " --out " + (dir / "o").string(), &out), 1) << out;

  const fs::path seeded_a = dir / "a", seeded_b = dir / "b";
  EXPECT_EQ(RunCli("--seed 42 run " + fx + "ieee14_pda.json --out " + seeded_a.string()), 0);
  EXPECT_EQ(RunCli("run " + fx + "ieee14_pda.json --seed 42 --out " + seeded_b.string()), 0);
  EXPECT_EQ(ReadFile(seeded_a / "trajectory.csv"), ReadFile(seeded_b / "trajectory.csv"));
  EXPECT_NE(ReadFile(seeded_a / "summary.txt").find("seed: 42"), std::string::npos);
  fs::remove_all(dir);
}

TEST(CliTest, SolverErrorExitCode) {
  EXPECT_EQ(ExitCodeFor(Error(ErrorCode::kNoConvergentActiveSet, "x")), kExitSolver);
  EXPECT_EQ(ExitCodeFor(Error(ErrorCode::kDisconnectedNetwork, "x")), kExitSolver);
  EXPECT_EQ(ExitCodeFor(Error(ErrorCode::kParseError, "x")), kExitUsage);
}

}  // namespace
}  // namespace gridgame
