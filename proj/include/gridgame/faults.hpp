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

// Structural faults: generator outage, microgrid shutdown and line trip.
// Every fault maps a GameSpec to a new GameSpec.

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gridgame/errors.hpp"
#include "gridgame/game.hpp"
#include "gridgame/grid.hpp"

namespace gridgame {

enum class FaultKind { kGeneratorOutage, kMicrogridShutdown, kLineTrip };

inline std::string_view ToString(FaultKind k) {
  switch (k) {
    case FaultKind::kGeneratorOutage: return "generator_outage";
    case FaultKind::kMicrogridShutdown: return "microgrid_shutdown";
    case FaultKind::kLineTrip: return "line_trip";
  }
  return "unknown";
}

struct FaultEvent {
  int at_step = 0;
  FaultKind kind = FaultKind::kGeneratorOutage;
  BusId bus;   // outage and shutdown
  BusId from;  // line trip
  BusId to;    // line trip

  static FaultEvent GeneratorOutage(int step, BusId bus) {
    return {step, FaultKind::kGeneratorOutage, bus, BusId(), BusId()};
  }
  static FaultEvent MicrogridShutdown(int step, BusId bus) {
    return {step, FaultKind::kMicrogridShutdown, bus, BusId(), BusId()};
  }
  static FaultEvent LineTrip(int step, BusId from, BusId to) {
    return {step, FaultKind::kLineTrip, BusId(), from, to};
  }

  // Identity of the faulted element, independent of the step.
  std::tuple<FaultKind, int, int> Target() const {
    if (kind == FaultKind::kLineTrip) {
      return {kind, std::min(from.value, to.value), std::max(from.value, to.value)};
    }
    return {kind, bus.value, 0};
  }

  std::string Describe() const {
    std::string s(ToString(kind));
    if (kind == FaultKind::kLineTrip) {
      s += " " + ToString(from) + "-" + ToString(to);
    } else {
      s += " bus " + ToString(bus);
    }
    return s + " at step " + std::to_string(at_step);
  }

  friend bool operator==(const FaultEvent&, const FaultEvent&) = default;
};

class ScenarioTimeline {
 public:
  ScenarioTimeline() = default;
  explicit ScenarioTimeline(std::vector<FaultEvent> events)
      : events_(std::move(events)) {
    for (std::size_t k = 0; k < events_.size(); ++k) {
      if (events_[k].at_step < 0) {
        throw Error(ErrorCode::kInvalidSpec,
                    "fault step must be nonnegative: " + events_[k].Describe());
      }
      if (k > 0 && events_[k].at_step < events_[k - 1].at_step) {
        throw Error(ErrorCode::kInvalidSpec, "fault events must be sorted by step");
      }
      for (std::size_t m = 0; m < k; ++m) {
        if (events_[m].at_step == events_[k].at_step &&
            events_[m].Target() == events_[k].Target()) {
          throw Error(ErrorCode::kInvalidSpec,
                      "duplicate fault target: " + events_[k].Describe());
        }
      }
    }
  }

  const std::vector<FaultEvent>& events() const { return events_; }
  bool empty() const { return events_.empty(); }

 private:
  std::vector<FaultEvent> events_;
};

inline GameSpec ApplyFault(const GameSpec& spec, const FaultEvent& ev) {
  const Network& net = spec.network();
  switch (ev.kind) {
    case FaultKind::kGeneratorOutage: {
      const Bus* bus = net.Find(ev.bus);
      if (bus == nullptr || bus->kind != BusKind::kGenerator) {
        throw Error(ErrorCode::kUnknownTarget,
                    "no fixed generator at bus " + ToString(ev.bus));
      }
      Bus out = *bus;
      out.p_gen_fixed = 0.0;
      return GameSpec(net.WithBus(out), spec.sensitivity(), spec.players(),
                      spec.market(), spec.team_weights());
    }
    case FaultKind::kMicrogridShutdown: {
      const std::optional<std::size_t> idx = spec.FindPlayer(ev.bus);
      if (!idx) {
        throw Error(ErrorCode::kUnknownTarget,
                    "no microgrid player at bus " + ToString(ev.bus));
      }
      Bus out = net.At(ev.bus);
      out.kind = BusKind::kLoad;
      out.p_gen_fixed = 0.0;
      std::vector<PlayerParams> players = spec.players();
      players.erase(players.begin() + static_cast<std::ptrdiff_t>(*idx));
      std::optional<std::vector<double>> weights;
      if (spec.team_weights() && !players.empty()) {
        std::vector<double> w = *spec.team_weights();
        w.erase(w.begin() + static_cast<std::ptrdiff_t>(*idx));
        double sum = 0.0;
        for (double a : w) sum += a;
        for (double& a : w) a /= sum;
        weights = std::move(w);
      }
      return GameSpec(net.WithBus(out), spec.sensitivity(), std::move(players),
                      spec.market(), std::move(weights));
    }
    case FaultKind::kLineTrip: {
      auto [tripped, touched] = net.WithBranchStatus(ev.from, ev.to, false);
      if (touched == 0) {
        throw Error(ErrorCode::kUnknownTarget, "no branch " + ToString(ev.from) +
                                                   "-" + ToString(ev.to));
      }
      if (!tripped.IsConnected()) {
        throw Error(ErrorCode::kDisconnectedNetwork,
                    "tripping " + ToString(ev.from) + "-" + ToString(ev.to) +
                        " islands the network");
      }
      return GameSpec(std::move(tripped), spec.players(), spec.market(),
                      spec.team_weights());
    }
  }
  throw Error(ErrorCode::kUnknownTarget, "unknown fault kind");
}

inline Equilibrium PostFaultEquilibrium(const GameSpec& spec,
                                        const FaultEvent& ev) {
  return SolveNeDirect(ApplyFault(spec, ev));
}

inline GameSpec ApplyFaults(GameSpec spec, const std::vector<FaultEvent>& events) {
  for (const FaultEvent& ev : events) spec = ApplyFault(spec, ev);
  return spec;
}

}  // namespace gridgame
