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

#include "gridgame/dynamics.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gridgame/report.hpp"
#include "test_util.hpp"

namespace gridgame {
namespace {

using testing::MaxAbsDiff;

Eigen::VectorXd RandomFeasible(const GameSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd p(static_cast<Eigen::Index>(spec.num_players()));
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    const PlayerDerived& d = spec.Derived(i);
    p(static_cast<Eigen::Index>(i)) = d.p_min + u(rng) * (d.p_max - d.p_min);
  }
  return p;
}

SchemeConfig Config(Scheme scheme, std::vector<double> tau, std::uint64_t seed,
                    double delta = 1e-9, int max_steps = 2000) {
  SchemeConfig c;
  c.scheme = scheme;
  c.tau = std::move(tau);
  c.seed = seed;
  c.delta = delta;
  c.max_steps = max_steps;
  return c;
}

TEST(DynamicsTest, ConditionReportFixture) {
  const Scenario sc = testing::LoadFixture("ieee14.json");
  const ContractionReport c = CheckConditions(sc.spec, sc.config);
  EXPECT_NEAR(c.ratio_max, 0.382, 0.002);
  EXPECT_NEAR(c.c1, 2.0 * c.ratio_max, 1e-15);
  EXPECT_TRUE(c.iua_condition_met);
  const ContractionReport r =
      CheckConditions(sc.spec, Config(Scheme::kRua, {0.6, 0.6, 0.6}, 0));
  EXPECT_TRUE(r.rua_condition_met);
  EXPECT_NEAR(r.c2, 0.6 * r.c1 + 0.4, 1e-15);
  const ContractionReport p =
      CheckConditions(sc.spec, Config(Scheme::kPda, {0.65, 0.7, 0.8}, 0));
  EXPECT_TRUE(p.rua_condition_met);
  EXPECT_NEAR(p.c2, 0.8 * p.c1 + 0.35, 1e-15);
}

TEST(DynamicsTest, ConditionReportThreeBusNotMet) {
  const ContractionReport c = CheckConditions(testing::ThreeBusSpec(), SchemeConfig{});
  EXPECT_NEAR(c.ratio_max, 1.0, 1e-12);
  EXPECT_NEAR(c.c1, 1.0, 1e-12);
  EXPECT_FALSE(c.iua_condition_met);
}

TEST(DynamicsTest, ConfigValidation) {
  const GameSpec spec = testing::ThreeBusSpec();
  EXPECT_THROW(ValidateConfig(Config(Scheme::kIua, {0.5, 0.5}, 0), 2), Error);
  EXPECT_THROW(ValidateConfig(Config(Scheme::kRua, {0.5}, 0), 2), Error);
  EXPECT_THROW(ValidateConfig(Config(Scheme::kRua, {0.5, 1.0}, 0), 2), Error);
  EXPECT_THROW(ValidateConfig(Config(Scheme::kPda, {0.5, 0.5}, 0, 0.0), 2), Error);
  EXPECT_NO_THROW(ValidateConfig(Config(Scheme::kPda, {0.5, 0.5}, 0), 2));
}

TEST(DynamicsTest, RngIsSeededAndUnit) {
  Rng a(9), b(9), c(10);
  bool differs = false;
  for (int k = 0; k < 1000; ++k) {
    const double x = a.Uniform();
    EXPECT_EQ(x, b.Uniform());
    differs |= x != c.Uniform();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_TRUE(differs);
}

TEST(DynamicsTest, FixedPointIsInvariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const GameSpec spec = testing::RandomSpec(rng);
    const Equilibrium eq = SolveNeDirect(spec);
    const std::vector<double> tau(spec.num_players(), 0.5);
    EXPECT_LT(MaxAbsDiff(StepIua(spec, eq.p_net), eq.p_net), 1e-9);
    Rng r1(static_cast<std::uint64_t>(trial)), r2(static_cast<std::uint64_t>(trial));
    EXPECT_LT(MaxAbsDiff(StepRua(spec, eq.p_net, tau, r1), eq.p_net), 1e-9);
    EXPECT_LT(MaxAbsDiff(StepPda(spec, eq.p_net, tau, r2), eq.p_net), 1e-9);
  }
}

TEST(DynamicsTest, SinglePlayerOneStep) {
  Network net({{BusId(1), BusKind::kSlack, 0, 0}, {BusId(2), BusKind::kMicrogrid, 0.5, 0}},
              {{BusId(1), BusId(2), 4.0, true}}, 1.0);
  const GameSpec spec(net, {{BusId(2), 100.0, 20.0, 3.0}}, Market{140.0});
  const Eigen::VectorXd next = StepIua(spec, ZeroGeneration(spec));
  EXPECT_NEAR(next(0), SolveNeDirect(spec).p_net(0), 1e-15);
}

TEST(DynamicsTest, RuaBranches) {
  std::mt19937_64 rng(4);
  const GameSpec spec = testing::RandomSpec(rng);
  const Eigen::VectorXd p = RandomFeasible(spec, rng);
  // Every draw below 1 - 2^-53 updates.
  const std::vector<double> all(spec.num_players(), 1.0 - 0x1.0p-53);
  Rng r(1);
  EXPECT_EQ(StepRua(spec, p, all, r), StepIua(spec, p));
  // No draw of a seed falls below 1e-300 in a few steps.
  const std::vector<double> none(spec.num_players(), 1e-300);
  Rng q(1);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(StepRua(spec, p, none, q), p);
}

// Only players whose draw falls below tau move, and they move to the IUA value.
TEST(DynamicsTest, RuaUpdatesFollowDraws) {
  std::mt19937_64 rng(5);
  const GameSpec spec = testing::RandomSpec(rng);
  const Eigen::VectorXd p = RandomFeasible(spec, rng);
  std::vector<double> tau(spec.num_players(), 0.5);
  Rng step_rng(77), mirror(77);
  const Eigen::VectorXd next = StepRua(spec, p, tau, step_rng);
  const Eigen::VectorXd full = StepIua(spec, p);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const bool update = mirror.Uniform() < 0.5;
    EXPECT_EQ(next(i), update ? full(i) : p(i));
  }
}

TEST(DynamicsTest, MeasuredAggregateIdentity) {
  std::mt19937_64 rng(6);
  EXPECT_EQ(MeasuredAggregate(0.3, 0.17, 0.0), 0.17);
  for (int trial = 0; trial < 200; ++trial) {
    const GameSpec spec = testing::RandomSpec(rng, {false, false});
    const Eigen::VectorXd p = RandomFeasible(spec, rng);
    const Eigen::VectorXd theta = spec.sensitivity().matrix * spec.FullInjection(p);
    for (std::size_t i = 0; i < spec.num_players(); ++i) {
      const double measured = MeasuredAggregate(spec.Derived(i).s_ii, theta(spec.Row(i)),
                                                p(static_cast<Eigen::Index>(i)));
      EXPECT_NEAR(measured, OthersAggregate(spec, i, p), 1e-12);
    }
  }
}

// Same seed and tau: identical update decisions, values equal up to the
// round-off separating the two aggregate routes.
TEST(DynamicsTest, PdaTracksRua) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const GameSpec spec = testing::RandomSpec(rng);
    const std::vector<double> tau(spec.num_players(), 0.55);
    const auto seed = static_cast<std::uint64_t>(100 + trial);
    const Trajectory rua = gridgame::Run(spec, Config(Scheme::kRua, tau, seed, 1e-9, 300));
    const Trajectory pda = gridgame::Run(spec, Config(Scheme::kPda, tau, seed, 1e-9, 300));
    ASSERT_EQ(rua.steps.size(), pda.steps.size());
    for (std::size_t n = 0; n < rua.steps.size(); ++n) {
      for (std::size_t k = 0; k < rua.buses.size(); ++k) {
        EXPECT_NEAR(rua.steps[n].p_gen[k], pda.steps[n].p_gen[k], 1e-12);
        EXPECT_EQ(rua.steps[n].p_gen[k] == rua.steps[n ? n - 1 : 0].p_gen[k],
                  pda.steps[n].p_gen[k] == pda.steps[n ? n - 1 : 0].p_gen[k]);
      }
    }
  }
}

TEST(DynamicsTest, Determinism) {
  const Scenario sc = testing::LoadFixture("ieee14_line_trip.json");
  std::ostringstream a, b;
  WriteTrajectoryCsv(a, gridgame::Run(sc.spec, sc.config, std::nullopt, sc.timeline), 100.0);
  WriteTrajectoryCsv(b, gridgame::Run(sc.spec, sc.config, std::nullopt, sc.timeline), 100.0);
  EXPECT_EQ(a.str(), b.str());
}

TEST(DynamicsTest, InfeasibleInitialRejected) {
  const GameSpec spec = testing::ThreeBusSpec();
  Eigen::VectorXd p(2);
  p << -1.0, 0.0;
  try {
    gridgame::Run(spec, SchemeConfig{}, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleInitial);
  }
}

TEST(DynamicsTest, MaxStepsStatus) {
  const Scenario sc = testing::LoadFixture("ieee14.json");
  const Trajectory t = gridgame::Run(sc.spec, Config(Scheme::kIua, {}, 0, 1e-15, 1));
  EXPECT_EQ(t.status, TerminalStatus::kMaxSteps);
  EXPECT_EQ(t.steps.size(), 2u);
}

TEST(DynamicsTest, IdleStepDoesNotStopRandomSchemes) {
  const Scenario sc = testing::LoadFixture("ieee14.json");
  const std::vector<double> never(3, 1e-300);
  for (Scheme s : {Scheme::kRua, Scheme::kPda}) {
    const Trajectory t = gridgame::Run(sc.spec, Config(s, never, 0, 1e-4, 20));
    EXPECT_EQ(t.status, TerminalStatus::kMaxSteps);
    EXPECT_EQ(t.steps.back().step_change, 0.0);
  }
  const Equilibrium eq = SolveNeDirect(sc.spec);
  const std::vector<double> tau(3, 0.3);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (Scheme s : {Scheme::kRua, Scheme::kPda}) {
      const RunResult r = RunDetailed(sc.spec, Config(s, tau, seed, 1e-9, 500));
      ASSERT_EQ(r.trajectory.status, TerminalStatus::kConverged);
      EXPECT_LE(ResponseResidual(r.final_spec, r.final_state, s), 1e-9);
      EXPECT_LT(MaxAbsDiff(r.final_state, eq.p_net), 1e-8) << "seed " << seed;
    }
  }
}

TEST(DynamicsTest, StepsAreFeasible) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const GameSpec spec = testing::RandomSpec(rng, {false, false});
    const std::vector<double> tau(spec.num_players(), 0.7);
    for (Scheme s : {Scheme::kIua, Scheme::kRua, Scheme::kPda}) {
      const Trajectory t = gridgame::Run(spec, Config(s, s == Scheme::kIua ? std::vector<double>{} : tau,
                                            static_cast<std::uint64_t>(trial), 1e-9, 200),
                               RandomFeasible(spec, rng));
      for (const StepRecord& rec : t.steps) {
        for (std::size_t i = 0; i < spec.num_players(); ++i) {
          EXPECT_GE(rec.p_gen[i], -1e-12);
          EXPECT_LE(rec.p_gen[i], spec.players()[i].p_gen_max + 1e-12);
        }
      }
    }
  }
}

// Every per-step error ratio of an IUA run stays within c1.
TEST(DynamicsTest, IuaContraction) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const GameSpec spec = trial == 0 ? testing::LoadFixture("ieee14.json").spec
                                     : testing::RandomSpec(rng);
    const ContractionReport c = CheckConditions(spec, SchemeConfig{});
    ASSERT_TRUE(c.iua_condition_met);
    const Equilibrium eq = SolveNeDirect(spec);
    const Trajectory t = gridgame::Run(spec, Config(Scheme::kIua, {}, 0, 1e-13, 500),
                             RandomFeasible(spec, rng), {}, &eq);
    for (double r : ContractionDiagnostic(t, spec, eq)) EXPECT_LE(r, c.c1 + 1e-9);
  }
}

TEST(DynamicsTest, DiagnosticEmptyAtEquilibrium) {
  const Scenario sc = testing::LoadFixture("ieee14.json");
  const Equilibrium eq = SolveNeDirect(sc.spec);
  const Trajectory t = gridgame::Run(sc.spec, sc.config, eq.p_net);
  EXPECT_TRUE(ContractionDiagnostic(t, sc.spec, eq).empty());
}

// Uniqueness: random feasible starts all reach the direct solution.
TEST(DynamicsTest, IuaFromRandomStartsOnFixture) {
  const Scenario sc = testing::LoadFixture("ieee14.json");
  const Equilibrium eq = SolveNeDirect(sc.spec);
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const RunResult r = RunDetailed(sc.spec, Config(Scheme::kIua, {}, 0, 1e-9, 500),
                                    RandomFeasible(sc.spec, rng));
    EXPECT_EQ(r.trajectory.status, TerminalStatus::kConverged);
    EXPECT_LT(MaxAbsDiff(r.final_state, eq.p_net), 1e-5);
  }
}

// All three schemes, 100 seeds each, on 50 condition-satisfying specs.
TEST(DynamicsTest, SchemesReachDirectSolution) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const GameSpec spec = testing::RandomSpec(rng);
    const Equilibrium eq = SolveNeDirect(spec);
    std::vector<double> tau;
    const double c1 = CheckConditions(spec, SchemeConfig{}).c1;
    // tau_max * c1 < tau_min holds for tau in [0.6, 0.6 + margin).
    const double spread = std::min(0.3, 0.6 * (1.0 / std::max(c1, 1e-9) - 1.0) * 0.9);
    for (std::size_t i = 0; i < spec.num_players(); ++i) {
      tau.push_back(0.6 + spread * static_cast<double>(i) /
                              static_cast<double>(spec.num_players()));
    }
    ASSERT_TRUE(CheckConditions(spec, Config(Scheme::kRua, tau, 0)).rua_condition_met);
    const RunResult iua = RunDetailed(spec, Config(Scheme::kIua, {}, 0, 1e-9, 5000));
    EXPECT_LT(MaxAbsDiff(iua.final_state, eq.p_net), 1e-5);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      for (Scheme s : {Scheme::kRua, Scheme::kPda}) {
        const RunResult r = RunDetailed(spec, Config(s, tau, seed, 1e-9, 5000));
        ASSERT_EQ(r.trajectory.status, TerminalStatus::kConverged);
        EXPECT_LT(MaxAbsDiff(r.final_state, eq.p_net), 1e-5)
            << "trial " << trial << " seed " << seed;
      }
    }
  }
}

}  // namespace
}  // namespace gridgame
