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

// The solve, run and check commands. Each writes to a stream and returns the
// process exit code:
//   0 success, 1 usage or input error, 2 condition not met (check only),
//   3 solver error.

#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gridgame/dynamics.hpp"
#include "gridgame/errors.hpp"
#include "gridgame/faults.hpp"
#include "gridgame/game.hpp"
#include "gridgame/report.hpp"
#include "gridgame/scenario.hpp"

namespace gridgame {

enum class OutputFormat { kText, kJson };

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConditionNotMet = 2;
inline constexpr int kExitSolver = 3;

inline int ExitCodeFor(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kParseError:
    case ErrorCode::kValidationError:
    case ErrorCode::kIoError:
      return kExitUsage;
    default:
      return kExitSolver;
  }
}

struct RunReport {
  std::vector<BusId> buses;
  std::vector<double> p_gen_mw;
  std::vector<double> theta_rad;
  std::vector<std::string> active_set;
  std::optional<int> steps;
  std::optional<std::string> terminal_status;
  ContractionReport conditions;
  std::optional<double> loe;
  std::vector<std::string> artifacts;
};

inline nlohmann::json ToJson(const ContractionReport& c) {
  return {{"ratio_max", c.ratio_max},
          {"c1", c.c1},
          {"c2", c.c2},
          {"tau_max", c.tau_max},
          {"tau_min", c.tau_min},
          {"iua_condition_met", c.iua_condition_met},
          {"rua_condition_met", c.rua_condition_met}};
}

inline nlohmann::json ToJson(const RunReport& r) {
  nlohmann::json players = nlohmann::json::array();
  for (std::size_t k = 0; k < r.buses.size(); ++k) {
    nlohmann::json p = {{"bus", r.buses[k].value}, {"p_gen_mw", r.p_gen_mw[k]}};
    if (k < r.theta_rad.size()) p["theta_rad"] = r.theta_rad[k];
    if (k < r.active_set.size()) p["status"] = r.active_set[k];
    players.push_back(std::move(p));
  }
  nlohmann::json out = {{"equilibrium", std::move(players)},
                        {"conditions", ToJson(r.conditions)}};
  out["steps"] = r.steps ? nlohmann::json(*r.steps) : nlohmann::json(nullptr);
  if (r.terminal_status) out["terminal_status"] = *r.terminal_status;
  out["loe"] = r.loe ? nlohmann::json(*r.loe) : nlohmann::json(nullptr);
  out["artifacts"] = r.artifacts;
  return out;
}

inline RunReport SolveReport(const Scenario& sc) {
  const GameSpec& spec = sc.spec;
  const double base = spec.network().base_mva();
  const Equilibrium eq = SolveNeDirect(spec);
  RunReport r;
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    r.buses.push_back(spec.players()[i].bus);
    r.p_gen_mw.push_back(eq.p_gen(idx) * base);
    r.theta_rad.push_back(eq.angles.values(spec.Row(i)));
    r.active_set.emplace_back(ToString(eq.active_set[i]));
  }
  r.conditions = CheckConditions(spec, sc.config);
  if (spec.team_weights()) r.loe = LossOfEfficiency(spec);
  return r;
}

inline int CmdSolve(const Scenario& sc, OutputFormat format, std::ostream& out) {
  const RunReport r = SolveReport(sc);
  if (format == OutputFormat::kJson) {
    out << ToJson(r).dump(2) << '\n';
    return kExitOk;
  }
  out << "bus  p_gen_mw     theta_rad   status\n";
  for (std::size_t k = 0; k < r.buses.size(); ++k) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-4d %-12s %-11s %s\n", r.buses[k].value,
                  Fixed(r.p_gen_mw[k], 6).c_str(), Fixed(r.theta_rad[k], 6).c_str(),
                  r.active_set[k].c_str());
    out << line;
  }
  out << "ratio_max=" << Fixed(r.conditions.ratio_max) << " c1=" << Fixed(r.conditions.c1)
      << " c2=" << Fixed(r.conditions.c2) << '\n';
  out << "LOE=" << (r.loe ? Fixed(*r.loe) : std::string("n/a (no team_weights)")) << '\n';
  return kExitOk;
}

inline std::string ConditionLine(const ContractionReport& c, Scheme scheme) {
  std::ostringstream o;
  if (scheme == Scheme::kIua) {
    o << "c1=" << Fixed(c.c1, 3)
      << (c.iua_condition_met ? " < 1: satisfied" : ": NOT satisfied");
  } else {
    o << "tau_max*c1=" << Fixed(c.tau_max, 3) << "*" << Fixed(c.c1, 3) << "="
      << Fixed(c.tau_max * c.c1, 3)
      << (c.rua_condition_met ? " < " : " >= ") << "tau_min=" << Fixed(c.tau_min, 3)
      << (c.rua_condition_met ? ": satisfied" : ": NOT satisfied");
  }
  return o.str();
}

inline int CmdCheck(const Scenario& sc, OutputFormat format, std::ostream& out) {
  const ContractionReport c = CheckConditions(sc.spec, sc.config);
  const bool met = sc.config.scheme == Scheme::kIua ? c.iua_condition_met
                                                    : c.rua_condition_met;
  if (format == OutputFormat::kJson) {
    nlohmann::json j = ToJson(c);
    j["scheme"] = std::string(ToString(sc.config.scheme));
    j["satisfied"] = met;
    out << j.dump(2) << '\n';
  } else {
    out << "scheme=" << ToString(sc.config.scheme) << '\n'
        << "ratio_max=" << Fixed(c.ratio_max, 3) << '\n'
        << "c1=" << Fixed(c.c1, 3) << '\n'
        << "c2=" << Fixed(c.c2, 3) << '\n'
        << ConditionLine(c, sc.config.scheme) << '\n';
  }
  return met ? kExitOk : kExitConditionNotMet;
}

namespace internal {

inline void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

}  // namespace internal

inline int CmdRun(const Scenario& sc, const std::filesystem::path& out_dir,
                  OutputFormat format, std::ostream& out) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create " + out_dir.string() + ": " + ec.message());
  }
  const GameSpec& spec = sc.spec;
  const double base = spec.network().base_mva();
  const RunResult res = RunDetailed(spec, sc.config, std::nullopt, sc.timeline);
  const Trajectory& traj = res.trajectory;

  std::ostringstream csv;
  WriteTrajectoryCsv(csv, traj, base);
  internal::WriteFile(out_dir / "trajectory.csv", csv.str());
  internal::WriteFile(out_dir / "generation.svg",
                      SvgLineChart("Generation by microgrid", "step",
                                   "generation (MW)", GenerationSeries(traj, base)));
  internal::WriteFile(out_dir / "angles.svg",
                      SvgLineChart("Bus voltage angle", "step", "angle (radians)",
                                   AngleSeries(traj)));

  RunReport r;
  const StepRecord& last = traj.steps.back();
  r.buses = traj.buses;
  for (std::size_t k = 0; k < traj.buses.size(); ++k) {
    r.p_gen_mw.push_back(last.p_gen[k] * base);
    r.theta_rad.push_back(last.theta[k]);
  }
  r.steps = traj.terminal_step;
  r.terminal_status = std::string(ToString(traj.status));
  r.conditions = CheckConditions(res.final_spec, [&] {
    SchemeConfig c = sc.config;
    c.tau.clear();
    for (const PlayerParams& p : res.final_spec.players()) {
      for (std::size_t i = 0; i < spec.num_players(); ++i) {
        if (spec.players()[i].bus == p.bus && !sc.config.tau.empty()) {
          c.tau.push_back(sc.config.tau[i]);
        }
      }
    }
    return c;
  }());
  if (res.final_spec.team_weights() && res.final_spec.num_players() > 0) {
    r.loe = LossOfEfficiency(res.final_spec);
  }
  r.artifacts = {(out_dir / "trajectory.csv").string(),
                 (out_dir / "summary.txt").string(),
                 (out_dir / "generation.svg").string(),
                 (out_dir / "angles.svg").string()};

  const Equilibrium direct = SolveNeDirect(res.final_spec);
  double deviation = 0.0;
  for (std::size_t i = 0; i < res.final_spec.num_players(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    deviation = std::max(deviation, std::abs(res.final_state(idx) - direct.p_net(idx)));
  }

  std::ostringstream summary;
  summary << "scheme: " << ToString(sc.config.scheme) << '\n'
          << "seed: " << sc.config.seed << '\n'
          << "delta_mw: " << Fixed(sc.config.delta * base) << '\n'
          << "max_steps: " << sc.config.max_steps << '\n'
          << "terminal_status: " << ToString(traj.status) << '\n'
          << "terminal_step: " << traj.terminal_step << '\n';
  for (const FaultEvent& ev : sc.timeline.events()) {
    summary << "fault: " << ev.Describe() << '\n';
  }
  for (std::size_t k = 0; k < r.buses.size(); ++k) {
    summary << "bus " << r.buses[k].value << ": p_gen_mw=" << Fixed(r.p_gen_mw[k])
            << " theta_rad=" << Fixed(r.theta_rad[k]) << '\n';
  }
  const InjectionVector final_injection{res.final_spec.FullInjection(res.final_state)};
  summary << "slack_injection_mw: " << Fixed(SlackInjection(final_injection) * base) << '\n';
  summary << "direct_equilibrium_deviation_mw: " << Fixed(deviation * base) << '\n'
          << "ratio_max: " << Fixed(r.conditions.ratio_max) << '\n'
          << "c1: " << Fixed(r.conditions.c1) << '\n'
          << "c2: " << Fixed(r.conditions.c2) << '\n'
          << "condition: " << ConditionLine(r.conditions, sc.config.scheme) << '\n'
          << "loe: " << (r.loe ? Fixed(*r.loe) : std::string("n/a")) << '\n';
  internal::WriteFile(out_dir / "summary.txt", summary.str());

  if (format == OutputFormat::kJson) {
    out << ToJson(r).dump(2) << '\n';
  } else {
    out << summary.str();
  }
  return kExitOk;
}

}  // namespace gridgame
