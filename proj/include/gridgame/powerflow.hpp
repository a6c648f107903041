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

#pragma once

#include <Eigen/Dense>

#include <map>
#include <utility>

#include "gridgame/errors.hpp"
#include "gridgame/grid.hpp"

namespace gridgame {

// Net injection P_i = P_i^g - P_i^l per non-slack bus, in NonSlackOrder.
struct InjectionVector {
  Eigen::VectorXd values;
};

// Bus angles in radians for the non-slack buses; the slack sits at 0.
struct AngleProfile {
  Eigen::VectorXd values;
};

using MicrogridGeneration = std::map<BusId, double>;
using LineFlows = std::map<std::pair<BusId, BusId>, double>;

// Microgrid buses absent from `microgrid_gen` read as zero generation.
inline InjectionVector InjectionsFromState(
    const Network& net, const MicrogridGeneration& microgrid_gen) {
  for (const auto& [bus, power] : microgrid_gen) {
    const Bus* b = net.Find(bus);
    if (b == nullptr || b->kind != BusKind::kMicrogrid) {
      throw Error(ErrorCode::kUnknownBus,
                  "bus " + ToString(bus) + " is not a microgrid bus");
    }
  }
  const std::vector<BusId> order = net.NonSlackOrder();
  InjectionVector p;
  p.values.resize(static_cast<Eigen::Index>(order.size()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Bus& b = net.At(order[k]);
    double gen = b.p_gen_fixed;
    if (auto it = microgrid_gen.find(b.id); it != microgrid_gen.end()) {
      gen += it->second;
    }
    p.values(static_cast<Eigen::Index>(k)) = gen - b.p_load;
  }
  return p;
}

inline AngleProfile SolveAngles(const SensitivityMatrix& s,
                                const InjectionVector& p) {
  if (static_cast<std::size_t>(p.values.size()) != s.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "injection vector has " + std::to_string(p.values.size()) +
                    " entries, sensitivity matrix has " +
                    std::to_string(s.size()));
  }
  return AngleProfile{s.matrix * p.values};
}

// Angle at any bus of `net`, slack included.
inline double AngleAt(const Network& net, const AngleProfile& theta,
                      BusId bus) {
  if (bus == net.slack()) return 0.0;
  const std::vector<BusId> order = net.NonSlackOrder();
  return theta.values(static_cast<Eigen::Index>(IndexIn(order, bus)));
}

// Both orientations are present: flows[{i, j}] == -flows[{j, i}]. Parallel
// branches are summed; out-of-service branches contribute exactly zero.
inline LineFlows ComputeLineFlows(const Network& net,
                                  const AngleProfile& theta) {
  LineFlows flows;
  for (const Branch& br : net.branches()) {
    double f = 0.0;
    if (br.in_service) {
      f = br.susceptance *
          (AngleAt(net, theta, br.from) - AngleAt(net, theta, br.to));
    }
    flows[{br.from, br.to}] += f;
    flows[{br.to, br.from}] -= f;
  }
  return flows;
}

// The slack absorbs the residual so total injection is zero.
inline double SlackInjection(const InjectionVector& p) {
  return -p.values.sum();
}

}  // namespace gridgame
