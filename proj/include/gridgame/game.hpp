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

// The renewable-generation game among microgrids.
//
// Each player i chooses its generation P_i^g in [0, P_{i,max}^g] and pays
//
//   U_i = psi_i P_i^g + zeta (P_i^l - P_i^g) + 1/2 eta_i^2 theta_i^2,
//
// where theta_i is its bus angle under DC power flow, theta = S P. Money terms
// are evaluated in MW (internal per-unit powers times the network base), angle
// terms in radians. Strategies are expressed as net injections
// P_i = P_i^g - P_i^l, so player i's feasible interval is
// [-P_i^l, P_{i,max}^g - P_i^l].
//
// Setting dU_i/dP_i = 0 gives the clamped best response
//
//   P_i = clamp((gamma_i - gbar_{-i}) / s_ii, -P_i^l, P_i^max),
//   gamma_i = base (zeta - psi_i) / (eta_i^2 s_ii),
//   gbar_{-i} = sum_{j != i} s_ij P_j,
//
// and the Nash equilibrium is the fixed point of all clamped responses. It is
// unique because S restricted to the player buses is positive definite.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gridgame/errors.hpp"
#include "gridgame/grid.hpp"
#include "gridgame/powerflow.hpp"

namespace gridgame {

struct PlayerParams {
  BusId bus;
  double psi = 0.0;        // $/MWh generation cost
  double eta = 1.0;        // angle-regulation weight
  double p_gen_max = 0.0;  // per-unit capacity
};

struct Market {
  double zeta = 0.0;  // $/MWh sale price
};

struct PlayerDerived {
  double gamma = 0.0;
  double s_ii = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
};

enum class ActiveStatus { kInner, kAtZeroGen, kAtCapacity };

inline std::string_view ToString(ActiveStatus s) {
  switch (s) {
    case ActiveStatus::kInner: return "inner";
    case ActiveStatus::kAtZeroGen: return "zero-gen";
    case ActiveStatus::kAtCapacity: return "capacity";
  }
  return "unknown";
}

struct Equilibrium {
  Eigen::VectorXd p_net;  // per player, per-unit
  Eigen::VectorXd p_gen;  // per player, per-unit
  AngleProfile angles;    // all non-slack buses
  std::vector<ActiveStatus> active_set;
};

// Network, its sensitivity matrix and the players. Value type; every fault or
// parameter change produces a new GameSpec.
class GameSpec {
 public:
  GameSpec(Network net, std::vector<PlayerParams> players, Market market,
           std::optional<std::vector<double>> team_weights = std::nullopt)
      : net_(std::move(net)),
        s_(BuildSensitivity(net_)),
        players_(std::move(players)),
        market_(market),
        team_weights_(std::move(team_weights)) {
    Init();
  }

  // For callers that already hold S for `net` (fault handling rebuilds it
  // once and reuses it).
  GameSpec(Network net, SensitivityMatrix s, std::vector<PlayerParams> players,
           Market market,
           std::optional<std::vector<double>> team_weights = std::nullopt)
      : net_(std::move(net)),
        s_(std::move(s)),
        players_(std::move(players)),
        market_(market),
        team_weights_(std::move(team_weights)) {
    Init();
  }

  const Network& network() const { return net_; }
  const SensitivityMatrix& sensitivity() const { return s_; }
  const std::vector<PlayerParams>& players() const { return players_; }
  const Market& market() const { return market_; }
  const std::optional<std::vector<double>>& team_weights() const {
    return team_weights_;
  }
  std::size_t num_players() const { return players_.size(); }

  // MW per internal power unit, applied to the money terms of the cost.
  double price_scale() const { return net_.base_mva(); }

  // Row of player i in S.
  Eigen::Index Row(std::size_t i) const { return rows_[i]; }
  double PlayerLoad(std::size_t i) const { return net_.At(players_[i].bus).p_load; }
  const PlayerDerived& Derived(std::size_t i) const { return derived_[i]; }

  std::optional<std::size_t> FindPlayer(BusId bus) const {
    for (std::size_t i = 0; i < players_.size(); ++i) {
      if (players_[i].bus == bus) return i;
    }
    return std::nullopt;
  }

  // Injection of every non-slack bus with player rows left at zero
  // generation.
  const Eigen::VectorXd& BaseInjection() const { return base_injection_; }

  // Full injection vector once the players inject `player_net`.
  Eigen::VectorXd FullInjection(const Eigen::VectorXd& player_net) const {
    CheckPlayerVector(player_net);
    Eigen::VectorXd p = base_injection_;
    for (std::size_t i = 0; i < players_.size(); ++i) {
      p(rows_[i]) = player_net(static_cast<Eigen::Index>(i));
    }
    return p;
  }

  Eigen::VectorXd LowerBounds() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(players_.size()));
    for (std::size_t i = 0; i < players_.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = derived_[i].p_min;
    }
    return v;
  }

  Eigen::VectorXd UpperBounds() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(players_.size()));
    for (std::size_t i = 0; i < players_.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = derived_[i].p_max;
    }
    return v;
  }

  bool IsFeasible(const Eigen::VectorXd& player_net, double tol = 1e-12) const {
    if (static_cast<std::size_t>(player_net.size()) != players_.size()) {
      return false;
    }
    for (std::size_t i = 0; i < players_.size(); ++i) {
      const double p = player_net(static_cast<Eigen::Index>(i));
      if (!std::isfinite(p) || p < derived_[i].p_min - tol ||
          p > derived_[i].p_max + tol) {
        return false;
      }
    }
    return true;
  }

  void CheckPlayerVector(const Eigen::VectorXd& v) const {
    if (static_cast<std::size_t>(v.size()) != players_.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "expected " + std::to_string(players_.size()) +
                      " player entries, got " + std::to_string(v.size()));
    }
  }

 private:
  void Init() {
    if (!std::isfinite(market_.zeta)) {
      throw Error(ErrorCode::kInvalidSpec, "market price must be finite");
    }
    std::set<BusId> seen;
    for (const PlayerParams& p : players_) {
      const Bus* bus = net_.Find(p.bus);
      if (bus == nullptr) {
        throw Error(ErrorCode::kUnknownBus, "player bus " + ToString(p.bus));
      }
      if (bus->kind != BusKind::kMicrogrid) {
        throw Error(ErrorCode::kInvalidSpec,
                    "player bus " + ToString(p.bus) + " is not a microgrid");
      }
      if (!seen.insert(p.bus).second) {
        throw Error(ErrorCode::kInvalidSpec,
                    "duplicate player bus " + ToString(p.bus));
      }
      if (!(p.eta > 0.0) || !std::isfinite(p.eta)) {
        throw Error(ErrorCode::kInvalidSpec,
                    "eta must be positive for player " + ToString(p.bus));
      }
      if (!(p.p_gen_max >= 0.0) || !std::isfinite(p.p_gen_max) ||
          !std::isfinite(p.psi)) {
        throw Error(ErrorCode::kInvalidSpec,
                    "bad capacity or cost for player " + ToString(p.bus));
      }
    }
    if (team_weights_) {
      const auto& w = *team_weights_;
      if (w.size() != players_.size()) {
        throw Error(ErrorCode::kInvalidSpec,
                    "team_weights needs one weight per player");
      }
      double sum = 0.0;
      for (double a : w) {
        if (!(a > 0.0 && a < 1.0) && !(players_.size() == 1 && a == 1.0)) {
          throw Error(ErrorCode::kInvalidSpec,
                      "team weights must lie in (0, 1)");
        }
        sum += a;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::kInvalidSpec, "team weights must sum to 1");
      }
    }
    if (s_.bus_order != net_.NonSlackOrder()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "sensitivity matrix ordering does not match the network");
    }

    const InjectionVector base = InjectionsFromState(net_, {});
    base_injection_ = base.values;
    rows_.clear();
    derived_.clear();
    for (const PlayerParams& p : players_) {
      const Eigen::Index row = static_cast<Eigen::Index>(s_.IndexOf(p.bus));
      rows_.push_back(row);
      PlayerDerived d;
      d.s_ii = s_.matrix(row, row);
      d.gamma = price_scale() * (market_.zeta - p.psi) / (p.eta * p.eta * d.s_ii);
      const double load = net_.At(p.bus).p_load;
      d.p_min = -load;
      d.p_max = p.p_gen_max - load;
      derived_.push_back(d);
    }
  }

  Network net_;
  SensitivityMatrix s_;
  std::vector<PlayerParams> players_;
  Market market_;
  std::optional<std::vector<double>> team_weights_;
  std::vector<Eigen::Index> rows_;
  std::vector<PlayerDerived> derived_;
  Eigen::VectorXd base_injection_;
};

inline PlayerDerived DerivePlayer(const GameSpec& spec, std::size_t i) {
  return spec.Derived(i);
}

// Direct cost evaluation; p_gen in per-unit, theta in radians, result in $/h.
inline double Cost(const GameSpec& spec, std::size_t i, double p_gen,
                   double theta) {
  const PlayerParams& p = spec.players()[i];
  const double load = spec.PlayerLoad(i);
  const double k = spec.price_scale();
  return k * (p.psi * p_gen + spec.market().zeta * (load - p_gen)) +
         0.5 * p.eta * p.eta * theta * theta;
}

// Cost with the angle eliminated through theta_i = sum_j s_ij P_j.
inline double ReducedCost(const GameSpec& spec, std::size_t i,
                          const Eigen::VectorXd& player_net) {
  const Eigen::VectorXd full = spec.FullInjection(player_net);
  const double theta = spec.sensitivity().matrix.row(spec.Row(i)).dot(full);
  const double p_gen =
      player_net(static_cast<Eigen::Index>(i)) + spec.PlayerLoad(i);
  return Cost(spec, i, p_gen, theta);
}

// gbar_{-i}: angle contribution at player i's bus from every other bus,
// summed directly.
inline double OthersAggregate(const GameSpec& spec, std::size_t i,
                              const Eigen::VectorXd& player_net) {
  const Eigen::VectorXd full = spec.FullInjection(player_net);
  const Eigen::Index row = spec.Row(i);
  const auto& s = spec.sensitivity().matrix;
  double g = 0.0;
  for (Eigen::Index j = 0; j < full.size(); ++j) {
    if (j != row) g += s(row, j) * full(j);
  }
  return g;
}

inline double UnconstrainedResponse(const PlayerDerived& d, double g_bar) {
  return (d.gamma - g_bar) / d.s_ii;
}

inline double BestResponse(const PlayerDerived& d, double g_bar) {
  const double u = UnconstrainedResponse(d, g_bar);
  if (u <= d.p_min) return d.p_min;
  if (u >= d.p_max) return d.p_max;
  return u;
}

inline std::vector<ActiveStatus> ClassifyBounds(const GameSpec& spec,
                                                const Eigen::VectorXd& p) {
  std::vector<ActiveStatus> out;
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    const PlayerDerived& d = spec.Derived(i);
    const double v = p(static_cast<Eigen::Index>(i));
    if (v <= d.p_min) {
      out.push_back(ActiveStatus::kAtZeroGen);
    } else if (v >= d.p_max) {
      out.push_back(ActiveStatus::kAtCapacity);
    } else {
      out.push_back(ActiveStatus::kInner);
    }
  }
  return out;
}

inline Equilibrium MakeEquilibrium(const GameSpec& spec, Eigen::VectorXd p_net,
                                   std::vector<ActiveStatus> active_set) {
  Equilibrium eq;
  eq.p_gen = p_net;
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    eq.p_gen(static_cast<Eigen::Index>(i)) += spec.PlayerLoad(i);
  }
  eq.angles.values = spec.sensitivity().matrix * spec.FullInjection(p_net);
  eq.p_net = std::move(p_net);
  eq.active_set = std::move(active_set);
  return eq;
}

namespace internal {

inline double BoundTolerance(const PlayerDerived& d) {
  return 1e-12 * std::max(1.0, d.p_max - d.p_min);
}

}  // namespace internal

// Active-set solve of the fixed-point system. Starts from the all-inner
// partition, solves the reduced linear system for the inner players with the
// boundary players pinned, then moves the lowest-index player whose status is
// inconsistent with its clamp branch. A revisited partition means numerical
// trouble and is reported rather than looped on.
inline Equilibrium SolveNeDirect(const GameSpec& spec) {
  const std::size_t n = spec.num_players();
  const auto& s = spec.sensitivity().matrix;
  std::vector<ActiveStatus> status(n, ActiveStatus::kInner);
  std::set<std::vector<ActiveStatus>> visited;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

  while (true) {
    if (!visited.insert(status).second) {
      throw Error(ErrorCode::kNoConvergentActiveSet,
                  "active-set iteration revisited a partition after " +
                      std::to_string(visited.size()) + " partitions");
    }
    std::vector<std::size_t> inner;
    for (std::size_t i = 0; i < n; ++i) {
      const PlayerDerived& d = spec.Derived(i);
      const auto idx = static_cast<Eigen::Index>(i);
      switch (status[i]) {
        case ActiveStatus::kInner: inner.push_back(i); break;
        case ActiveStatus::kAtZeroGen: p(idx) = d.p_min; break;
        case ActiveStatus::kAtCapacity: p(idx) = d.p_max; break;
      }
    }
    if (!inner.empty()) {
      // Rows of theta_i = gamma_i for the inner players, boundary players and
      // fixed buses moved to the right-hand side.
      const auto m = static_cast<Eigen::Index>(inner.size());
      Eigen::MatrixXd a(m, m);
      Eigen::VectorXd rhs(m);
      Eigen::VectorXd pinned = p;
      for (std::size_t i : inner) pinned(static_cast<Eigen::Index>(i)) = 0.0;
      const Eigen::VectorXd fixed = spec.FullInjection(pinned);
      for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t i = inner[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < m; ++c) {
          a(r, c) = s(spec.Row(i), spec.Row(inner[static_cast<std::size_t>(c)]));
        }
        rhs(r) = spec.Derived(i).gamma - s.row(spec.Row(i)).dot(fixed);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (!lu.isInvertible()) {
        throw Error(ErrorCode::kSingularReducedSystem,
                    "reduced system for " + std::to_string(m) +
                        " inner players is singular");
      }
      const Eigen::VectorXd x = lu.solve(rhs);
      if (!x.allFinite()) {
        throw Error(ErrorCode::kSingularReducedSystem,
                    "reduced system produced non-finite injections");
      }
      for (Eigen::Index r = 0; r < m; ++r) {
        p(static_cast<Eigen::Index>(inner[static_cast<std::size_t>(r)])) = x(r);
      }
    }

    bool moved = false;
    for (std::size_t i = 0; i < n && !moved; ++i) {
      const PlayerDerived& d = spec.Derived(i);
      const double tol = internal::BoundTolerance(d);
      const double v = p(static_cast<Eigen::Index>(i));
      if (status[i] == ActiveStatus::kInner) {
        if (v <= d.p_min + tol) {
          status[i] = ActiveStatus::kAtZeroGen;
          moved = true;
        } else if (v >= d.p_max - tol) {
          status[i] = ActiveStatus::kAtCapacity;
          moved = true;
        }
        continue;
      }
      const double u = UnconstrainedResponse(d, OthersAggregate(spec, i, p));
      if (status[i] == ActiveStatus::kAtZeroGen && u > d.p_min + tol) {
        status[i] = u >= d.p_max ? ActiveStatus::kAtCapacity : ActiveStatus::kInner;
        moved = true;
      } else if (status[i] == ActiveStatus::kAtCapacity && u < d.p_max - tol) {
        status[i] = u <= d.p_min ? ActiveStatus::kAtZeroGen : ActiveStatus::kInner;
        moved = true;
      }
    }
    if (!moved) return MakeEquilibrium(spec, p, status);
  }
}

struct TeamOptions {
  double tolerance = 1e-9;
  int max_iterations = 100000;
};

// Weighted social cost sum_i alpha_i U_i as a function of the player
// injections.
inline double TeamObjective(const GameSpec& spec,
                            const Eigen::VectorXd& player_net) {
  const auto& w = spec.team_weights().value();
  double f = 0.0;
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    f += w[i] * ReducedCost(spec, i, player_net);
  }
  return f;
}

// Projected gradient descent with backtracking on the team objective. Stops
// when the projected gradient step, measured at step length 1/L (L the
// curvature of the objective), is below `tolerance` in the max norm.
inline Equilibrium SolveTeam(const GameSpec& spec, TeamOptions opts = {}) {
  if (!spec.team_weights()) {
    throw Error(ErrorCode::kInvalidSpec, "team problem needs team_weights");
  }
  const std::size_t n = spec.num_players();
  const auto ni = static_cast<Eigen::Index>(n);
  const auto& s = spec.sensitivity().matrix;
  const auto& w = *spec.team_weights();
  const double k = spec.price_scale();

  // theta_players = base + J p, with J = S restricted to player rows and
  // columns.
  Eigen::MatrixXd jac(ni, ni);
  for (Eigen::Index r = 0; r < ni; ++r) {
    for (Eigen::Index c = 0; c < ni; ++c) {
      jac(r, c) = s(spec.Row(static_cast<std::size_t>(r)),
                    spec.Row(static_cast<std::size_t>(c)));
    }
  }
  Eigen::VectorXd weight(ni), linear(ni);
  for (std::size_t i = 0; i < n; ++i) {
    const PlayerParams& pp = spec.players()[i];
    weight(static_cast<Eigen::Index>(i)) = w[i] * pp.eta * pp.eta;
    linear(static_cast<Eigen::Index>(i)) = w[i] * k * (pp.psi - spec.market().zeta);
  }
  const Eigen::VectorXd theta0 = [&] {
    Eigen::VectorXd t(ni);
    const Eigen::VectorXd base = spec.FullInjection(Eigen::VectorXd::Zero(ni));
    for (std::size_t i = 0; i < n; ++i) {
      t(static_cast<Eigen::Index>(i)) = s.row(spec.Row(i)).dot(base);
    }
    return t;
  }();
  auto objective = [&](const Eigen::VectorXd& p) {
    const Eigen::VectorXd th = theta0 + jac * p;
    return linear.dot(p) + 0.5 * th.dot(weight.cwiseProduct(th));
  };
  auto gradient = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    const Eigen::VectorXd th = theta0 + jac * p;
    return linear + jac.transpose() * weight.cwiseProduct(th);
  };
  const Eigen::VectorXd lo = spec.LowerBounds();
  const Eigen::VectorXd hi = spec.UpperBounds();
  auto project = [&](Eigen::VectorXd p) {
    return p.cwiseMax(lo).cwiseMin(hi);
  };

  const Eigen::MatrixXd hess = jac.transpose() * weight.asDiagonal() * jac;
  const double curvature =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();

  Eigen::VectorXd p = project(Eigen::VectorXd::Zero(ni));
  double step = 1.0 / curvature;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Eigen::VectorXd g = gradient(p);
    const Eigen::VectorXd mapped = project(p - g / curvature);
    if ((mapped - p).lpNorm<Eigen::Infinity>() <= opts.tolerance) {
      return MakeEquilibrium(spec, p, ClassifyBounds(spec, p));
    }
    const double f = objective(p);
    step *= 2.0;
    while (true) {
      const Eigen::VectorXd cand = project(p - step * g);
      const Eigen::VectorXd d = cand - p;
      if (objective(cand) <= f + g.dot(d) + d.squaredNorm() / (2.0 * step) ||
          step < 1e-3 / curvature) {
        p = cand;
        break;
      }
      step *= 0.5;
    }
  }
  throw Error(ErrorCode::kMaxIterationsExceeded,
              "team problem did not converge in " +
                  std::to_string(opts.max_iterations) + " iterations");
}

// Ratio of the weighted social cost at the Nash equilibrium to the team
// optimum.
inline double LossOfEfficiency(const GameSpec& spec) {
  const Equilibrium ne = SolveNeDirect(spec);
  const Equilibrium tp = SolveTeam(spec);
  return TeamObjective(spec, ne.p_net) / TeamObjective(spec, tp.p_net);
}

// Oracle for BestResponse: scans the reduced cost over player i's interval,
// then refines the best bracket by golden-section search. Uses only the cost
// function and S, never gamma.
inline double BruteForceBestResponse(const GameSpec& spec, std::size_t i,
                                     const Eigen::VectorXd& player_net,
                                     int grid_points = 100000) {
  const PlayerDerived& d = spec.Derived(i);
  Eigen::VectorXd p = player_net;
  const auto idx = static_cast<Eigen::Index>(i);
  auto f = [&](double x) {
    p(idx) = x;
    return ReducedCost(spec, i, p);
  };
  if (d.p_max <= d.p_min) return d.p_min;
  const double h = (d.p_max - d.p_min) / grid_points;
  double best_x = d.p_min;
  double best_f = f(d.p_min);
  for (int k = 1; k <= grid_points; ++k) {
    const double x = k == grid_points ? d.p_max : d.p_min + k * h;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  double a = std::max(d.p_min, best_x - h);
  double b = std::min(d.p_max, best_x + h);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double e = a + inv_phi * (b - a);
  double fc = f(c), fe = f(e);
  while (b - a > 1e-9) {
    if (fc < fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + inv_phi * (b - a);
      fe = f(e);
    }
  }
  double x = 0.5 * (a + b);
  // Bounds are exact when the minimum sits on them.
  if (f(d.p_min) <= f(x) && x - d.p_min <= 2e-9) x = d.p_min;
  if (f(d.p_max) <= f(x) && d.p_max - x <= 2e-9) x = d.p_max;
  return x;
}

}  // namespace gridgame
