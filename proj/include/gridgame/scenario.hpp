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

// Scenario files: JSON documents describing the network (MW at the
// interface), the players, the update scheme and a fault timeline.
//
//   {
//     "base_mva": 100, "slack": 2,
//     "buses": [{"id": 1, "kind": "generator", "p_load_mw": 0, "p_gen_mw": 280}],
//     "branches": [{"from": 1, "to": 2, "x_pu": 0.07}],
//     "market": {"zeta": 140},
//     "players": [{"bus": 3, "psi": 120, "eta": 3e4, "p_gen_max_mw": 100}],
//     "algorithm": {"scheme": "pda", "tau": [0.65, 0.7, 0.8],
//                   "delta_mw": 0.01, "max_steps": 200, "seed": 7},
//     "team_weights": [0.5, 0.5],
//     "faults": [{"at_step": 19, "kind": "line_trip", "from": 8, "to": 14}]
//   }
//
// Unknown keys are rejected.

#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gridgame/dynamics.hpp"
#include "gridgame/errors.hpp"
#include "gridgame/faults.hpp"
#include "gridgame/game.hpp"
#include "gridgame/grid.hpp"

namespace gridgame {

struct Scenario {
  GameSpec spec;
  SchemeConfig config;
  ScenarioTimeline timeline;
};

namespace internal {

using nlohmann::json;

[[noreturn]] inline void Invalid(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::kValidationError, path + ": " + msg);
}

inline void RejectUnknown(const json& obj, const std::string& path,
                          std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) Invalid(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) {
      Invalid(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

inline std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline const json& Required(const json& obj, const std::string& path,
                            const char* key) {
  if (!obj.contains(key)) Invalid(Join(path, key), "missing");
  return obj.at(key);
}

inline double Number(const json& v, const std::string& path) {
  if (!v.is_number()) Invalid(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) Invalid(path, "expected a finite number");
  return d;
}

inline double NumberOr(const json& obj, const std::string& path, const char* key,
                       double fallback) {
  return obj.contains(key) ? Number(obj.at(key), Join(path, key)) : fallback;
}

inline int Integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) Invalid(path, "expected an integer");
  return v.get<int>();
}

inline std::string Text(const json& v, const std::string& path) {
  if (!v.is_string()) Invalid(path, "expected a string");
  return v.get<std::string>();
}

inline const json& Array(const json& v, const std::string& path) {
  if (!v.is_array()) Invalid(path, "expected an array");
  return v;
}

inline std::string Index(const std::string& path, std::size_t k) {
  return path + "[" + std::to_string(k) + "]";
}

// Domain constructors throw their own error codes; at the file boundary they
// all become validation errors tagged with the section.
template <typename F>
auto Validated(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kValidationError) throw;
    Invalid(path, e.what());
  }
}

inline BusKind ParseKind(const std::string& s, const std::string& path) {
  if (s == "slack") return BusKind::kSlack;
  if (s == "generator") return BusKind::kGenerator;
  if (s == "load") return BusKind::kLoad;
  if (s == "microgrid") return BusKind::kMicrogrid;
  Invalid(path, "unknown bus kind \"" + s + "\"");
}

inline std::string KindName(BusKind k) {
  switch (k) {
    case BusKind::kSlack: return "slack";
    case BusKind::kGenerator: return "generator";
    case BusKind::kLoad: return "load";
    case BusKind::kMicrogrid: return "microgrid";
  }
  return "load";
}

}  // namespace internal

inline Scenario ParseScenario(const nlohmann::json& doc) {
  using internal::Index;
  using internal::Invalid;
  using internal::Join;
  using internal::Number;
  using internal::Required;
  internal::RejectUnknown(doc, "",
                          {"base_mva", "slack", "buses", "branches", "market",
                           "players", "algorithm", "team_weights", "faults"});

  const double base = internal::NumberOr(doc, "", "base_mva", 100.0);
  if (!(base > 0.0)) Invalid("base_mva", "must be positive");
  const int slack = internal::Integer(Required(doc, "", "slack"), "slack");

  std::vector<Bus> buses;
  const auto& jbuses = internal::Array(Required(doc, "", "buses"), "buses");
  for (std::size_t k = 0; k < jbuses.size(); ++k) {
    const std::string path = Index("buses", k);
    const auto& jb = jbuses[k];
    internal::RejectUnknown(jb, path, {"id", "kind", "p_load_mw", "p_gen_mw"});
    Bus b;
    b.id = BusId(internal::Integer(Required(jb, path, "id"), Join(path, "id")));
    b.kind = internal::ParseKind(
        internal::Text(Required(jb, path, "kind"), Join(path, "kind")),
        Join(path, "kind"));
    b.p_load = internal::NumberOr(jb, path, "p_load_mw", 0.0) / base;
    b.p_gen_fixed = internal::NumberOr(jb, path, "p_gen_mw", 0.0) / base;
    if (b.kind == BusKind::kSlack && b.id.value != slack) {
      Invalid(Join(path, "kind"), "slack bus differs from \"slack\"");
    }
    if (b.id.value == slack && b.kind != BusKind::kSlack) {
      Invalid(Join(path, "kind"), "bus named by \"slack\" must have kind slack");
    }
    buses.push_back(b);
  }

  std::vector<Branch> branches;
  const auto& jbr = internal::Array(Required(doc, "", "branches"), "branches");
  for (std::size_t k = 0; k < jbr.size(); ++k) {
    const std::string path = Index("branches", k);
    const auto& j = jbr[k];
    internal::RejectUnknown(j, path, {"from", "to", "x_pu"});
    Branch br;
    br.from = BusId(internal::Integer(Required(j, path, "from"), Join(path, "from")));
    br.to = BusId(internal::Integer(Required(j, path, "to"), Join(path, "to")));
    const double x = Number(Required(j, path, "x_pu"), Join(path, "x_pu"));
    if (!(x > 0.0)) Invalid(Join(path, "x_pu"), "must be positive");
    br.susceptance = 1.0 / x;
    br.in_service = true;
    branches.push_back(br);
  }

  Network net = internal::Validated("network", [&] {
    return Network(buses, branches, base);
  });

  const auto& jm = Required(doc, "", "market");
  internal::RejectUnknown(jm, "market", {"zeta"});
  Market market{Number(Required(jm, "market", "zeta"), "market.zeta")};

  std::vector<PlayerParams> players;
  const auto& jp = internal::Array(Required(doc, "", "players"), "players");
  for (std::size_t k = 0; k < jp.size(); ++k) {
    const std::string path = Index("players", k);
    const auto& j = jp[k];
    internal::RejectUnknown(j, path, {"bus", "psi", "eta", "p_gen_max_mw"});
    PlayerParams p;
    p.bus = BusId(internal::Integer(Required(j, path, "bus"), Join(path, "bus")));
    p.psi = Number(Required(j, path, "psi"), Join(path, "psi"));
    p.eta = Number(Required(j, path, "eta"), Join(path, "eta"));
    p.p_gen_max =
        Number(Required(j, path, "p_gen_max_mw"), Join(path, "p_gen_max_mw")) / base;
    players.push_back(p);
  }

  std::optional<std::vector<double>> weights;
  if (doc.contains("team_weights")) {
    const auto& jw = internal::Array(doc.at("team_weights"), "team_weights");
    std::vector<double> w;
    for (std::size_t k = 0; k < jw.size(); ++k) {
      w.push_back(Number(jw[k], Index("team_weights", k)));
    }
    weights = std::move(w);
  }

  GameSpec spec = internal::Validated(weights ? "team_weights" : "players", [&] {
    return GameSpec(net, players, market, weights);
  });

  SchemeConfig cfg;
  cfg.delta = 1e-6;
  if (doc.contains("algorithm")) {
    const auto& ja = doc.at("algorithm");
    internal::RejectUnknown(ja, "algorithm",
                            {"scheme", "tau", "delta_mw", "max_steps", "seed"});
    if (ja.contains("scheme")) {
      const std::string s = internal::Text(ja.at("scheme"), "algorithm.scheme");
      if (s == "iua") {
        cfg.scheme = Scheme::kIua;
      } else if (s == "rua") {
        cfg.scheme = Scheme::kRua;
      } else if (s == "pda") {
        cfg.scheme = Scheme::kPda;
      } else {
        Invalid("algorithm.scheme", "expected iua, rua or pda");
      }
    }
    if (ja.contains("tau")) {
      if (cfg.scheme == Scheme::kIua) {
        Invalid("algorithm.tau", "not used by scheme iua");
      }
      const auto& jt = internal::Array(ja.at("tau"), "algorithm.tau");
      for (std::size_t k = 0; k < jt.size(); ++k) {
        cfg.tau.push_back(Number(jt[k], Index("algorithm.tau", k)));
      }
    }
    if (cfg.scheme != Scheme::kIua && cfg.tau.size() != spec.num_players()) {
      Invalid("algorithm.tau", "needs one entry per player (" +
                                   std::to_string(spec.num_players()) + ")");
    }
    cfg.delta = internal::NumberOr(ja, "algorithm", "delta_mw", 1e-6 * base) / base;
    if (ja.contains("max_steps")) {
      cfg.max_steps = internal::Integer(ja.at("max_steps"), "algorithm.max_steps");
    }
    if (ja.contains("seed")) {
      const auto& js = ja.at("seed");
      if (!js.is_number_unsigned() && !(js.is_number_integer() && js.get<std::int64_t>() >= 0)) {
        Invalid("algorithm.seed", "expected a nonnegative integer");
      }
      cfg.seed = js.get<std::uint64_t>();
    }
  } else {
    cfg.delta = 1e-6;
  }
  internal::Validated("algorithm", [&] {
    ValidateConfig(cfg, spec.num_players());
    return 0;
  });

  std::vector<FaultEvent> events;
  if (doc.contains("faults")) {
    const auto& jf = internal::Array(doc.at("faults"), "faults");
    for (std::size_t k = 0; k < jf.size(); ++k) {
      const std::string path = Index("faults", k);
      const auto& j = jf[k];
      internal::RejectUnknown(j, path, {"at_step", "kind", "bus", "from", "to"});
      const int step =
          internal::Integer(Required(j, path, "at_step"), Join(path, "at_step"));
      const std::string kind =
          internal::Text(Required(j, path, "kind"), Join(path, "kind"));
      auto bus_of = [&](const char* key) {
        return BusId(internal::Integer(Required(j, path, key), Join(path, key)));
      };
      auto forbid = [&](std::initializer_list<const char*> keys) {
        for (const char* key : keys) {
          if (j.contains(key)) Invalid(Join(path, key), "not used by " + kind);
        }
      };
      if (kind == "generator_outage") {
        forbid({"from", "to"});
        events.push_back(FaultEvent::GeneratorOutage(step, bus_of("bus")));
      } else if (kind == "microgrid_shutdown") {
        forbid({"from", "to"});
        events.push_back(FaultEvent::MicrogridShutdown(step, bus_of("bus")));
      } else if (kind == "line_trip") {
        forbid({"bus"});
        events.push_back(FaultEvent::LineTrip(step, bus_of("from"), bus_of("to")));
      } else {
        Invalid(Join(path, "kind"), "unknown fault kind \"" + kind + "\"");
      }
    }
  }
  ScenarioTimeline timeline =
      internal::Validated("faults", [&] { return ScenarioTimeline(events); });
  // Targets must exist when their turn comes; checking the whole sequence up
  // front catches typos before a run starts.
  internal::Validated("faults", [&] {
    ApplyFaults(spec, timeline.events());
    return 0;
  });

  return Scenario{std::move(spec), std::move(cfg), std::move(timeline)};
}

inline Scenario ParseScenarioText(const std::string& text,
                                  const std::string& source = "<input>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Report a line number alongside the library's byte offset.
    std::size_t line = 1;
    for (std::size_t k = 0; k < text.size() && k + 1 < e.byte; ++k) {
      if (text[k] == '\n') ++line;
    }
    throw Error(ErrorCode::kParseError,
                source + ":" + std::to_string(line) + ": " + e.what());
  }
  return ParseScenario(doc);
}

inline Scenario LoadScenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseScenarioText(buf.str(), path);
}

// Inverse of ParseScenario, in MW.
inline nlohmann::json ScenarioToJson(const Scenario& sc) {
  using nlohmann::json;
  const Network& net = sc.spec.network();
  const double base = net.base_mva();
  json doc;
  doc["base_mva"] = base;
  doc["slack"] = net.slack().value;
  json buses = json::array();
  for (const Bus& b : net.buses()) {
    buses.push_back({{"id", b.id.value},
                     {"kind", internal::KindName(b.kind)},
                     {"p_load_mw", b.p_load * base},
                     {"p_gen_mw", b.p_gen_fixed * base}});
  }
  doc["buses"] = std::move(buses);
  json branches = json::array();
  for (const Branch& br : net.branches()) {
    branches.push_back({{"from", br.from.value},
                        {"to", br.to.value},
                        {"x_pu", 1.0 / br.susceptance}});
  }
  doc["branches"] = std::move(branches);
  doc["market"] = {{"zeta", sc.spec.market().zeta}};
  json players = json::array();
  for (const PlayerParams& p : sc.spec.players()) {
    players.push_back({{"bus", p.bus.value},
                       {"psi", p.psi},
                       {"eta", p.eta},
                       {"p_gen_max_mw", p.p_gen_max * base}});
  }
  doc["players"] = std::move(players);
  json alg = {{"scheme", std::string(ToString(sc.config.scheme))},
              {"delta_mw", sc.config.delta * base},
              {"max_steps", sc.config.max_steps},
              {"seed", sc.config.seed}};
  if (!sc.config.tau.empty()) alg["tau"] = sc.config.tau;
  doc["algorithm"] = std::move(alg);
  if (sc.spec.team_weights()) doc["team_weights"] = *sc.spec.team_weights();
  json faults = json::array();
  for (const FaultEvent& ev : sc.timeline.events()) {
    json f = {{"at_step", ev.at_step}, {"kind", std::string(ToString(ev.kind))}};
    if (ev.kind == FaultKind::kLineTrip) {
      f["from"] = ev.from.value;
      f["to"] = ev.to.value;
    } else {
      f["bus"] = ev.bus.value;
    }
    faults.push_back(std::move(f));
  }
  doc["faults"] = std::move(faults);
  return doc;
}

}  // namespace gridgame
