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

// Decentralized update schemes.
//
//   IUA  every player best-responds to the previous profile each step.
//   RUA  each player best-responds with probability tau_i, else holds.
//   PDA  as RUA, but gbar_{-i} comes from the measured bus angle,
//        gbar_{-i} = theta_i - s_ii P_i.
//
// All angles of a PDA step are read once from the profile at the start of the
// step. Random draws are taken one per player per step in player order, so RUA
// and PDA runs with the same seed make the same update decisions.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gridgame/errors.hpp"
#include "gridgame/faults.hpp"
#include "gridgame/game.hpp"
#include "gridgame/grid.hpp"

namespace gridgame {

enum class Scheme { kIua, kRua, kPda };

inline std::string_view ToString(Scheme s) {
  switch (s) {
    case Scheme::kIua: return "iua";
    case Scheme::kRua: return "rua";
    case Scheme::kPda: return "pda";
  }
  return "unknown";
}

struct SchemeConfig {
  Scheme scheme = Scheme::kIua;
  std::vector<double> tau;  // one per player, RUA and PDA only
  double delta = 1e-6;      // per-unit
  int max_steps = 1000;
  std::uint64_t seed = 0;
};

inline void ValidateConfig(const SchemeConfig& cfg, std::size_t num_players) {
  if (!(cfg.delta > 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "delta must be positive");
  }
  if (cfg.max_steps < 0) {
    throw Error(ErrorCode::kInvalidSpec, "max_steps must be nonnegative");
  }
  if (cfg.scheme == Scheme::kIua) {
    if (!cfg.tau.empty()) {
      throw Error(ErrorCode::kInvalidSpec, "tau is not used by iua");
    }
    return;
  }
  if (cfg.tau.size() != num_players) {
    throw Error(ErrorCode::kInvalidSpec, "tau needs one entry per player");
  }
  for (double t : cfg.tau) {
    if (!(t > 0.0 && t < 1.0)) {
      throw Error(ErrorCode::kInvalidSpec, "tau entries must lie in (0, 1)");
    }
  }
}

// Uniform draws in [0, 1) from the top 53 bits of a 64-bit Mersenne Twister.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct ContractionReport {
  double ratio_max = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double tau_max = 1.0;
  double tau_min = 1.0;
  bool iua_condition_met = false;
  bool rua_condition_met = false;
};

inline double RatioMax(const GameSpec& spec) {
  const auto& s = spec.sensitivity().matrix;
  double r = 0.0;
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    const double sii = s(spec.Row(i), spec.Row(i));
    for (std::size_t j = 0; j < spec.num_players(); ++j) {
      if (i != j) r = std::max(r, s(spec.Row(i), spec.Row(j)) / sii);
    }
  }
  return r;
}

inline ContractionReport CheckConditions(const GameSpec& spec,
                                         const SchemeConfig& cfg) {
  ContractionReport rep;
  rep.ratio_max = RatioMax(spec);
  const double others =
      spec.num_players() > 0 ? static_cast<double>(spec.num_players() - 1) : 0.0;
  rep.c1 = rep.ratio_max * others;
  if (!cfg.tau.empty()) {
    rep.tau_max = *std::max_element(cfg.tau.begin(), cfg.tau.end());
    rep.tau_min = *std::min_element(cfg.tau.begin(), cfg.tau.end());
  }
  rep.c2 = rep.tau_max * rep.c1 + 1.0 - rep.tau_min;
  // Strict inequalities, tightened by a round-off margin.
  constexpr double kMargin = 1e-9;
  rep.iua_condition_met = rep.c1 < 1.0 - kMargin;
  rep.rua_condition_met = rep.tau_max * rep.c1 < rep.tau_min - kMargin;
  return rep;
}

inline Eigen::VectorXd StepIua(const GameSpec& spec, const Eigen::VectorXd& state) {
  Eigen::VectorXd next(state.size());
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    next(static_cast<Eigen::Index>(i)) =
        BestResponse(spec.Derived(i), OthersAggregate(spec, i, state));
  }
  return next;
}

inline Eigen::VectorXd StepRua(const GameSpec& spec, const Eigen::VectorXd& state,
                               const std::vector<double>& tau, Rng& rng) {
  Eigen::VectorXd next = state;
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    if (rng.Uniform() < tau[i]) {
      next(static_cast<Eigen::Index>(i)) =
          BestResponse(spec.Derived(i), OthersAggregate(spec, i, state));
    }
  }
  return next;
}

// gbar_{-i} recovered from a bus-angle reading.
inline double MeasuredAggregate(double s_ii, double theta_i, double p_i) {
  return theta_i - s_ii * p_i;
}

inline Eigen::VectorXd StepPda(const GameSpec& spec, const Eigen::VectorXd& state,
                               const std::vector<double>& tau, Rng& rng) {
  const Eigen::VectorXd theta =
      spec.sensitivity().matrix * spec.FullInjection(state);
  Eigen::VectorXd next = state;
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    if (rng.Uniform() < tau[i]) {
      const PlayerDerived& d = spec.Derived(i);
      const auto idx = static_cast<Eigen::Index>(i);
      next(idx) = BestResponse(
          d, MeasuredAggregate(d.s_ii, theta(spec.Row(i)), state(idx)));
    }
  }
  return next;
}

// Largest move any player would make from `state` if all updated at once.
// PDA players evaluate it from their own angle readings.
inline double ResponseResidual(const GameSpec& spec, const Eigen::VectorXd& state,
                               Scheme scheme) {
  const Eigen::VectorXd theta =
      spec.sensitivity().matrix * spec.FullInjection(state);
  double r = 0.0;
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    const PlayerDerived& d = spec.Derived(i);
    const auto idx = static_cast<Eigen::Index>(i);
    const double g_bar =
        scheme == Scheme::kPda
            ? MeasuredAggregate(d.s_ii, theta(spec.Row(i)), state(idx))
            : OthersAggregate(spec, i, state);
    r = std::max(r, std::abs(BestResponse(d, g_bar) - state(idx)));
  }
  return r;
}

enum class TerminalStatus { kConverged, kMaxSteps };

inline std::string_view ToString(TerminalStatus s) {
  return s == TerminalStatus::kConverged ? "converged" : "max_steps";
}

struct StepRecord {
  int step = 0;
  std::vector<double> p_gen;  // per tracked bus, per-unit
  std::vector<double> theta;  // per tracked bus, radians
  double step_change = 0.0;   // infinity norm against the previous step
  std::optional<double> error;
};

// Per-step record of a run. Buses are the players at the start of the run; a
// shut-down player is reported with zero generation.
struct Trajectory {
  std::vector<BusId> buses;
  std::vector<StepRecord> steps;
  TerminalStatus status = TerminalStatus::kMaxSteps;
  int terminal_step = 0;
  std::vector<int> fault_steps;
};

// Zero generation for every player, the starting point of the algorithm.
inline Eigen::VectorXd ZeroGeneration(const GameSpec& spec) {
  return spec.LowerBounds();
}

struct RunResult {
  Trajectory trajectory;
  GameSpec final_spec;
  Eigen::VectorXd final_state;
};

// Iterates the configured scheme from `initial` (zero generation if absent).
// Fault events scheduled at step n are applied after the step-n update. The run
// stops once the step change is within delta and no event is still pending,
// or after max_steps updates. Under RUA and PDA a step in which no player
// happened to update also moves nothing, so those schemes additionally require
// the response residual to be within delta. With a reference, each step records its
// max-norm distance to the reference generation.
inline RunResult RunDetailed(const GameSpec& spec, const SchemeConfig& cfg,
                             std::optional<Eigen::VectorXd> initial = std::nullopt,
                             const ScenarioTimeline& timeline = {},
                             const Equilibrium* reference = nullptr) {
  ValidateConfig(cfg, spec.num_players());
  Eigen::VectorXd state = initial ? *initial : ZeroGeneration(spec);
  if (!spec.IsFeasible(state)) {
    throw Error(ErrorCode::kInfeasibleInitial,
                "initial profile lies outside the players' intervals");
  }

  GameSpec current = spec;
  std::map<BusId, double> tau_by_bus;
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    tau_by_bus[spec.players()[i].bus] = cfg.tau.empty() ? 1.0 : cfg.tau[i];
  }
  std::vector<double> tau = cfg.tau;
  Rng rng(cfg.seed);

  Trajectory traj;
  for (const PlayerParams& p : spec.players()) traj.buses.push_back(p.bus);

  auto record = [&](int step, const std::vector<double>* previous) {
    StepRecord rec;
    rec.step = step;
    const Eigen::VectorXd theta =
        current.sensitivity().matrix * current.FullInjection(state);
    for (BusId bus : traj.buses) {
      const std::optional<std::size_t> idx = current.FindPlayer(bus);
      rec.p_gen.push_back(idx ? state(static_cast<Eigen::Index>(*idx)) +
                                    current.PlayerLoad(*idx)
                              : 0.0);
      rec.theta.push_back(
          theta(static_cast<Eigen::Index>(current.sensitivity().IndexOf(bus))));
    }
    if (previous != nullptr) {
      for (std::size_t k = 0; k < rec.p_gen.size(); ++k) {
        rec.step_change =
            std::max(rec.step_change, std::abs(rec.p_gen[k] - (*previous)[k]));
      }
    }
    if (reference != nullptr) {
      double e = 0.0;
      for (std::size_t k = 0; k < traj.buses.size(); ++k) {
        double target = 0.0;
        for (std::size_t r = 0; r < spec.num_players(); ++r) {
          if (spec.players()[r].bus == traj.buses[k]) {
            target = reference->p_gen(static_cast<Eigen::Index>(r));
          }
        }
        e = std::max(e, std::abs(rec.p_gen[k] - target));
      }
      rec.error = e;
    }
    traj.steps.push_back(std::move(rec));
  };

  const auto& events = timeline.events();
  std::size_t next_event = 0;
  auto apply_due = [&](int step) {
    while (next_event < events.size() && events[next_event].at_step == step) {
      const FaultEvent& ev = events[next_event];
      std::optional<std::size_t> removed;
      if (ev.kind == FaultKind::kMicrogridShutdown) {
        removed = current.FindPlayer(ev.bus);
      }
      current = ApplyFault(current, ev);
      if (removed) {
        Eigen::VectorXd trimmed(state.size() - 1);
        for (Eigen::Index k = 0, m = 0; k < state.size(); ++k) {
          if (k != static_cast<Eigen::Index>(*removed)) trimmed(m++) = state(k);
        }
        state = std::move(trimmed);
        if (!tau.empty()) {
          tau.erase(tau.begin() + static_cast<std::ptrdiff_t>(*removed));
        }
      }
      traj.fault_steps.push_back(step);
      ++next_event;
    }
    // Events scheduled before the current step can no longer fire.
    while (next_event < events.size() && events[next_event].at_step < step) {
      ++next_event;
    }
  };

  record(0, nullptr);
  apply_due(0);
  for (int n = 1; n <= cfg.max_steps; ++n) {
    switch (cfg.scheme) {
      case Scheme::kIua: state = StepIua(current, state); break;
      case Scheme::kRua: state = StepRua(current, state, tau, rng); break;
      case Scheme::kPda: state = StepPda(current, state, tau, rng); break;
    }
    const std::vector<double> previous = traj.steps.back().p_gen;
    record(n, &previous);
    apply_due(n);
    if (traj.steps.back().step_change <= cfg.delta && next_event >= events.size() &&
        (cfg.scheme == Scheme::kIua ||
         ResponseResidual(current, state, cfg.scheme) <= cfg.delta)) {
      // A fault applied at this very step changes the game; keep iterating.
      if (traj.fault_steps.empty() || traj.fault_steps.back() != n) {
        traj.status = TerminalStatus::kConverged;
        traj.terminal_step = n;
        return {std::move(traj), std::move(current), std::move(state)};
      }
    }
  }
  traj.status = TerminalStatus::kMaxSteps;
  traj.terminal_step = cfg.max_steps;
  return {std::move(traj), std::move(current), std::move(state)};
}

inline Trajectory Run(const GameSpec& spec, const SchemeConfig& cfg,
                      std::optional<Eigen::VectorXd> initial = std::nullopt,
                      const ScenarioTimeline& timeline = {},
                      const Equilibrium* reference = nullptr) {
  return RunDetailed(spec, cfg, std::move(initial), timeline, reference)
      .trajectory;
}

// Ratios of successive max-norm errors against `reference`, skipping steps
// whose error is already below 1e-12.
inline std::vector<double> ContractionDiagnostic(const Trajectory& traj,
                                                 const Equilibrium& reference,
                                                 const std::vector<BusId>& players) {
  std::vector<double> errors;
  for (const StepRecord& rec : traj.steps) {
    double e = 0.0;
    for (std::size_t k = 0; k < traj.buses.size(); ++k) {
      double target = 0.0;
      for (std::size_t r = 0; r < players.size(); ++r) {
        if (players[r] == traj.buses[k]) {
          target = reference.p_gen(static_cast<Eigen::Index>(r));
        }
      }
      e = std::max(e, std::abs(rec.p_gen[k] - target));
    }
    errors.push_back(e);
  }
  std::vector<double> ratios;
  for (std::size_t n = 0; n + 1 < errors.size(); ++n) {
    if (errors[n] > 1e-12) ratios.push_back(errors[n + 1] / errors[n]);
  }
  return ratios;
}

inline std::vector<double> ContractionDiagnostic(const Trajectory& traj,
                                                 const GameSpec& spec,
                                                 const Equilibrium& reference) {
  std::vector<BusId> players;
  for (const PlayerParams& p : spec.players()) players.push_back(p.bus);
  return ContractionDiagnostic(traj, reference, players);
}

}  // namespace gridgame
