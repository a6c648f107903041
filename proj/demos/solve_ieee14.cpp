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

// Solves the 14-bus game directly, then replays it with the measurement-driven
// scheme and trips line 8-14 halfway through.

#include <cstdio>

#include "gridgame/gridgame.hpp"
#include "gridgame/scenario.hpp"

int main() {
  gridgame::Scenario sc =
      gridgame::LoadScenario(GRIDGAME_FIXTURE_DIR "/ieee14_line_trip.json");
  const double base = sc.spec.network().base_mva();

  const gridgame::Equilibrium ne = gridgame::SolveNeDirect(sc.spec);
  for (std::size_t i = 0; i < sc.spec.num_players(); ++i) {
    std::printf("bus %2d  %8.3f MW  %s\n", sc.spec.players()[i].bus.value,
                ne.p_gen(static_cast<Eigen::Index>(i)) * base,
                std::string(gridgame::ToString(ne.active_set[i])).c_str());
  }

  const gridgame::Trajectory traj =
      gridgame::Run(sc.spec, sc.config, std::nullopt, sc.timeline);
  const gridgame::StepRecord& last = traj.steps.back();
  std::printf("%s after %d steps\n",
              std::string(gridgame::ToString(traj.status)).c_str(),
              traj.terminal_step);
  for (std::size_t k = 0; k < traj.buses.size(); ++k) {
    std::printf("bus %2d  %8.3f MW\n", traj.buses[k].value, last.p_gen[k] * base);
  }
  return 0;
}
