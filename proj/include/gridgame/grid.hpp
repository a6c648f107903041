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

// Network model for the DC power-flow game: buses, branches, the reduced
// susceptance (Laplacian) matrix and its inverse, the sensitivity matrix S
// that maps net injections to bus voltage angles.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gridgame/errors.hpp"

namespace gridgame {

// External bus number, as printed on single-line diagrams.
struct BusId {
  int value = 0;

  constexpr BusId() = default;
  constexpr explicit BusId(int v) : value(v) {}
  friend constexpr auto operator<=>(BusId, BusId) = default;
};

inline std::string ToString(BusId id) { return std::to_string(id.value); }

enum class BusKind { kSlack, kGenerator, kLoad, kMicrogrid };

inline std::string_view ToString(BusKind kind) {
  switch (kind) {
    case BusKind::kSlack: return "slack";
    case BusKind::kGenerator: return "generator";
    case BusKind::kLoad: return "load";
    case BusKind::kMicrogrid: return "microgrid";
  }
  return "unknown";
}

// Powers are per-unit on the owning network's base.
struct Bus {
  BusId id;
  BusKind kind = BusKind::kLoad;
  double p_load = 0.0;
  double p_gen_fixed = 0.0;
};

struct Branch {
  BusId from;
  BusId to;
  double susceptance = 0.0;  // per-unit, 1/x
  bool in_service = true;

  bool Connects(BusId a, BusId b) const {
    return (from == a && to == b) || (from == b && to == a);
  }
};

// Immutable after construction. Mutating operations return modified copies.
class Network {
 public:
  Network(std::vector<Bus> buses, std::vector<Branch> branches,
          double base_mva = 100.0)
      : buses_(std::move(buses)),
        branches_(std::move(branches)),
        base_mva_(base_mva) {
    Validate();
  }

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  double base_mva() const { return base_mva_; }
  BusId slack() const { return slack_; }

  const Bus* Find(BusId id) const {
    auto it = std::find_if(buses_.begin(), buses_.end(),
                           [id](const Bus& b) { return b.id == id; });
    return it == buses_.end() ? nullptr : &*it;
  }

  const Bus& At(BusId id) const {
    const Bus* bus = Find(id);
    if (bus == nullptr) {
      throw Error(ErrorCode::kUnknownBus, "bus " + ToString(id));
    }
    return *bus;
  }

  // Non-slack buses in ascending external id; this is the row/column order of
  // every reduced matrix built from the network.
  std::vector<BusId> NonSlackOrder() const {
    std::vector<BusId> order;
    for (const Bus& b : buses_) {
      if (b.kind != BusKind::kSlack) order.push_back(b.id);
    }
    std::sort(order.begin(), order.end());
    return order;
  }

  Network WithBus(const Bus& replacement) const {
    Network copy = *this;
    for (Bus& b : copy.buses_) {
      if (b.id == replacement.id) {
        b = replacement;
        copy.Validate();
        return copy;
      }
    }
    throw Error(ErrorCode::kUnknownBus, "bus " + ToString(replacement.id));
  }

  // Sets the status of every branch joining `a` and `b`. Returns the number of
  // branches touched.
  std::pair<Network, int> WithBranchStatus(BusId a, BusId b,
                                           bool in_service) const {
    Network copy = *this;
    int touched = 0;
    for (Branch& br : copy.branches_) {
      if (br.Connects(a, b)) {
        br.in_service = in_service;
        ++touched;
      }
    }
    return {std::move(copy), touched};
  }

  // Connectivity of the in-service graph, optionally ignoring one branch
  // index.
  bool IsConnected(std::optional<std::size_t> skip_branch = std::nullopt) const {
    if (buses_.empty()) return true;
    std::vector<std::size_t> parent(buses_.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto root = [&parent](std::size_t i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    auto index_of = [&](BusId id) {
      return static_cast<std::size_t>(
          std::find_if(buses_.begin(), buses_.end(),
                       [id](const Bus& b) { return b.id == id; }) -
          buses_.begin());
    };
    std::size_t components = buses_.size();
    for (std::size_t k = 0; k < branches_.size(); ++k) {
      const Branch& br = branches_[k];
      if (!br.in_service || (skip_branch && *skip_branch == k)) continue;
      std::size_t a = root(index_of(br.from));
      std::size_t b = root(index_of(br.to));
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
    return components == 1;
  }

 private:
  void Validate() {
    if (!(base_mva_ > 0.0) || !std::isfinite(base_mva_)) {
      throw Error(ErrorCode::kInvalidNetwork, "base_mva must be positive");
    }
    std::set<BusId> seen;
    int slack_count = 0;
    for (const Bus& b : buses_) {
      if (b.id.value <= 0) {
        throw Error(ErrorCode::kInvalidNetwork,
                    "bus ids must be positive, got " + ToString(b.id));
      }
      if (!seen.insert(b.id).second) {
        throw Error(ErrorCode::kDuplicateBus, "bus " + ToString(b.id));
      }
      if (!(b.p_load >= 0.0) || !(b.p_gen_fixed >= 0.0) ||
          !std::isfinite(b.p_load) || !std::isfinite(b.p_gen_fixed)) {
        throw Error(ErrorCode::kInvalidNetwork,
                    "bus " + ToString(b.id) + " has negative or non-finite power");
      }
      if ((b.kind == BusKind::kLoad || b.kind == BusKind::kMicrogrid) &&
          b.p_gen_fixed != 0.0) {
        throw Error(ErrorCode::kInvalidNetwork,
                    std::string(ToString(b.kind)) + " bus " + ToString(b.id) +
                        " has fixed generation");
      }
      if (b.kind == BusKind::kSlack) {
        ++slack_count;
        slack_ = b.id;
      }
    }
    if (slack_count != 1) {
      throw Error(ErrorCode::kInvalidNetwork,
                  "expected exactly one slack bus, found " +
                      std::to_string(slack_count));
    }
    for (const Branch& br : branches_) {
      if (br.from == br.to) {
        throw Error(ErrorCode::kInvalidNetwork,
                    "branch " + ToString(br.from) + "-" + ToString(br.to) +
                        " is a self loop");
      }
      if (!seen.contains(br.from) || !seen.contains(br.to)) {
        throw Error(ErrorCode::kUnknownBus,
                    "branch " + ToString(br.from) + "-" + ToString(br.to) +
                        " references a missing bus");
      }
      if (br.in_service && !(br.susceptance > 0.0 && std::isfinite(br.susceptance))) {
        throw Error(ErrorCode::kInvalidNetwork,
                    "branch " + ToString(br.from) + "-" + ToString(br.to) +
                        " needs positive susceptance");
      }
    }
  }

  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  double base_mva_ = 100.0;
  BusId slack_;
};

// Index lookup shared by the reduced matrices.
inline std::size_t IndexIn(const std::vector<BusId>& order, BusId id) {
  auto it = std::lower_bound(order.begin(), order.end(), id);
  if (it == order.end() || *it != id) {
    throw Error(ErrorCode::kUnknownBus,
                "bus " + ToString(id) + " is not a non-slack bus");
  }
  return static_cast<std::size_t>(it - order.begin());
}

// The reduced Laplacian -B: slack row and column removed.
struct ReducedSusceptance {
  Eigen::MatrixXd matrix;
  std::vector<BusId> bus_order;

  std::size_t IndexOf(BusId id) const { return IndexIn(bus_order, id); }
};

// S = -B^{-1}; theta = S * P.
struct SensitivityMatrix {
  Eigen::MatrixXd matrix;
  std::vector<BusId> bus_order;

  std::size_t size() const { return bus_order.size(); }
  std::size_t IndexOf(BusId id) const { return IndexIn(bus_order, id); }
  double operator()(std::size_t i, std::size_t j) const { return matrix(i, j); }
};

inline ReducedSusceptance BuildReducedSusceptance(const Network& net) {
  if (!net.IsConnected()) {
    throw Error(ErrorCode::kDisconnectedNetwork,
                "in-service branches do not connect every bus to the slack");
  }
  ReducedSusceptance rb;
  rb.bus_order = net.NonSlackOrder();
  const auto n = static_cast<Eigen::Index>(rb.bus_order.size());
  rb.matrix = Eigen::MatrixXd::Zero(n, n);
  const BusId slack = net.slack();
  for (const Branch& br : net.branches()) {
    if (!br.in_service) continue;
    const double b = br.susceptance;
    const bool from_slack = br.from == slack;
    const bool to_slack = br.to == slack;
    if (!from_slack) {
      auto i = static_cast<Eigen::Index>(rb.IndexOf(br.from));
      rb.matrix(i, i) += b;
    }
    if (!to_slack) {
      auto j = static_cast<Eigen::Index>(rb.IndexOf(br.to));
      rb.matrix(j, j) += b;
    }
    if (!from_slack && !to_slack) {
      auto i = static_cast<Eigen::Index>(rb.IndexOf(br.from));
      auto j = static_cast<Eigen::Index>(rb.IndexOf(br.to));
      rb.matrix(i, j) -= b;
      rb.matrix(j, i) -= b;
    }
  }
  return rb;
}

// Solves N systems against the SPD reduced Laplacian.
inline SensitivityMatrix BuildSensitivity(const ReducedSusceptance& rb) {
  const auto n = rb.matrix.rows();
  if (n != rb.matrix.cols() ||
      static_cast<std::size_t>(n) != rb.bus_order.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "reduced susceptance shape");
  }
  SensitivityMatrix s;
  s.bus_order = rb.bus_order;
  if (n == 0) {
    s.matrix.resize(0, 0);
    return s;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(rb.matrix);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularMatrix,
                "reduced susceptance is not positive definite");
  }
  s.matrix = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const double scale = rb.matrix.cwiseAbs().maxCoeff();
  const double residual =
      (rb.matrix * s.matrix - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!std::isfinite(residual) || residual > 1e-6 * std::max(1.0, scale)) {
    throw Error(ErrorCode::kSingularMatrix,
                "reduced susceptance is numerically singular");
  }
  return s;
}

inline SensitivityMatrix BuildSensitivity(const Network& net) {
  return BuildSensitivity(BuildReducedSusceptance(net));
}

enum class Lemma1Property { kSymmetry, kNonnegativity, kPositiveDiagonal };

inline std::string_view ToString(Lemma1Property p) {
  switch (p) {
    case Lemma1Property::kSymmetry: return "symmetry";
    case Lemma1Property::kNonnegativity: return "nonnegativity";
    case Lemma1Property::kPositiveDiagonal: return "positive diagonal";
  }
  return "unknown";
}

struct Lemma1Violation {
  BusId row;
  BusId col;
  Lemma1Property property;
  double value;
};

inline std::vector<Lemma1Violation> ValidateLemma1(const SensitivityMatrix& s) {
  std::vector<Lemma1Violation> out;
  const auto n = s.matrix.rows();
  if (n == 0) return out;
  const double scale = s.matrix.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    const BusId bi = s.bus_order[static_cast<std::size_t>(i)];
    if (!(s.matrix(i, i) > 0.0)) {
      out.push_back({bi, bi, Lemma1Property::kPositiveDiagonal, s.matrix(i, i)});
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const BusId bj = s.bus_order[static_cast<std::size_t>(j)];
      if (j > i && std::abs(s.matrix(i, j) - s.matrix(j, i)) > 1e-10 * scale) {
        out.push_back({bi, bj, Lemma1Property::kSymmetry,
                       s.matrix(i, j) - s.matrix(j, i)});
      }
      // Report each off-diagonal pair once, at its upper-triangle position.
      if (i != j && s.matrix(i, j) < -1e-12 &&
          (j > i || !(s.matrix(j, i) < -1e-12))) {
        out.push_back({bi, bj, Lemma1Property::kNonnegativity, s.matrix(i, j)});
      }
    }
  }
  return out;
}

}  // namespace gridgame
