#pragma once

#include <string>

#include "json.hpp"
#include "ttx/compartment.hpp"
#include "ttx/error.hpp"
#include "ttx/params.hpp"
#include "ttx/perspectives.hpp"
#include "ttx/simulate.hpp"
#include "ttx/state.hpp"

namespace ttx {

using json = nlohmann::json;

inline json to_json(const Occupancy& occ) {
  json j = json::object();
  for (auto c : kAllCompartments) j[std::string(to_string(c))] = occ[index(c)];
  return j;
}

inline json to_json(const PropagationParams& p) {
  json j = json::object();
  for (auto name : param_names()) j[std::string(name)] = get_param(p, name);
  return j;
}

inline json to_json(const DeltaSet& deltas) {
  json j = json::object();
  for (const auto& d : deltas) j[d.param] = json{{std::string(to_string(d.op)), d.value}};
  return j;
}

inline json to_json(const CompartmentState& s) {
  json j{{"mode", std::string(to_string(s.mode))}, {"time", s.time}};
  if (s.mode == SimMode::Agent) {
    json labels = json::array();
    for (auto c : s.labels) labels.push_back(std::string(to_string(c)));
    j["labels"] = std::move(labels);
  } else {
    json occ = json::array();
    for (const auto& o : s.occupancy) occ.push_back(json(std::vector<double>(o.begin(), o.end())));
    j["occupancy"] = std::move(occ);
  }
  return j;
}

inline CompartmentState state_from_json(const json& j) {
  CompartmentState s;
  s.mode = parse_sim_mode(j.at("mode").get<std::string>());
  s.time = j.at("time").get<double>();
  if (s.mode == SimMode::Agent) {
    for (const auto& l : j.at("labels")) {
      auto c = parse_compartment(l.get<std::string>());
      if (!c) fail(ErrorCode::Schema, "unknown compartment label: " + l.get<std::string>());
      s.labels.push_back(*c);
    }
  } else {
    for (const auto& row : j.at("occupancy")) {
      auto v = row.get<std::vector<double>>();
      if (v.size() != kCompartmentCount) fail(ErrorCode::Schema, "occupancy rows need 6 entries");
      Occupancy o{};
      std::copy(v.begin(), v.end(), o.begin());
      s.occupancy.push_back(o);
    }
  }
  return s;
}

inline json to_json(const PerspectiveSnapshot& s) {
  return json{{"time", s.time},
              {"networkSituation", {{"histogram", to_json(s.histogram)}, {"healthyFraction", s.healthyFraction}}},
              {"serviceAvailability", s.serviceAvailability},
              {"cyberRisk", s.cyberRisk}};
}

inline json to_json(const Trajectory& t) {
  json samples = json::array();
  for (const auto& s : t.samples) samples.push_back(to_json(s));
  json j{{"runId", t.runId},
         {"seed", t.seed},
         {"samples", std::move(samples)},
         {"finalState", to_json(t.finalState)},
         {"finalParams", to_json(t.finalParams)}};
  if (!t.warnings.empty()) j["warnings"] = t.warnings;
  return j;
}

}  // namespace ttx
