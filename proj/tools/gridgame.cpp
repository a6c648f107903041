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

// gridgame solve <scenario.json>
// gridgame run <scenario.json> --out <dir>
// gridgame check <scenario.json>
// Global flags: --format text|json, --seed <u64>.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "gridgame/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Microgrid generation game solver and simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string format = "text";
  std::optional<std::uint64_t> seed;
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"text", "json"}));
  app.add_option("--seed", seed, "Override the scenario's RNG seed");

  std::string scenario_path;
  std::string out_dir = "gridgame-out";
  CLI::App* solve = app.add_subcommand("solve", "Compute the Nash equilibrium directly");
  solve->add_option("scenario", scenario_path, "Scenario file")->required();
  CLI::App* run = app.add_subcommand("run", "Simulate the configured update scheme");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory");
  CLI::App* check = app.add_subcommand("check", "Evaluate the convergence conditions");
  check->add_option("scenario", scenario_path, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return gridgame::kExitUsage;
  }

  const auto fmt = format == "json" ? gridgame::OutputFormat::kJson
                                    : gridgame::OutputFormat::kText;
  try {
    gridgame::Scenario sc = gridgame::LoadScenario(scenario_path);
    if (seed) sc.config.seed = *seed;
    if (*solve) return gridgame::CmdSolve(sc, fmt, std::cout);
    if (*run) return gridgame::CmdRun(sc, out_dir, fmt, std::cout);
    return gridgame::CmdCheck(sc, fmt, std::cout);
  } catch (const gridgame::Error& e) {
    std::cerr << e.what() << '\n';
    return gridgame::ExitCodeFor(e);
  }
}
