#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ttx/compartment.hpp"
#include "ttx/error.hpp"
#include "ttx/topology.hpp"

namespace ttx {

enum class SimMode { MeanField, Agent };

inline std::string_view to_string(SimMode m) { return m == SimMode::MeanField ? "meanfield" : "agent"; }

inline SimMode parse_sim_mode(std::string_view s) {
  if (s == "meanfield" || s == "MEAN_FIELD") return SimMode::MeanField;
  if (s == "agent" || s == "AGENT") return SimMode::Agent;
  fail(ErrorCode::InvalidArgument, "unknown simulation mode: " + std::string(s));
}

inline constexpr double kConservationTolerance = 1e-9;
inline constexpr double kNegativityTolerance = 1e-12;

/// Per-node compartment occupancy at one instant.
///
/// Mean-field states hold a probability vector per node; agent states hold
/// one label per node. `time` is in hours.
struct CompartmentState {
  SimMode mode = SimMode::MeanField;
  std::vector<Occupancy> occupancy;
  std::vector<Compartment> labels;
  double time = 0.0;

  static CompartmentState mean_field(std::vector<Occupancy> occ, double t = 0.0) {
    return {SimMode::MeanField, std::move(occ), {}, t};
  }
  static CompartmentState agent(std::vector<Compartment> labels, double t = 0.0) {
    return {SimMode::Agent, {}, std::move(labels), t};
  }
  static CompartmentState uniform(SimMode mode, std::size_t nodes, Compartment c, double t = 0.0) {
    if (mode == SimMode::Agent) return agent(std::vector<Compartment>(nodes, c), t);
    return mean_field(std::vector<Occupancy>(nodes, indicator(c)), t);
  }

  std::size_t size() const { return mode == SimMode::Agent ? labels.size() : occupancy.size(); }

  Occupancy at(std::size_t node) const {
    return mode == SimMode::Agent ? indicator(labels[node]) : occupancy[node];
  }

  bool operator==(const CompartmentState&) const = default;
};

inline void validate_state(const CompartmentState& state, const Topology& topo) {
  if (state.size() != topo.size()) {
    fail(ErrorCode::InvalidArgument, "state has " + std::to_string(state.size()) + " nodes, topology has " +
                                         std::to_string(topo.size()));
  }
  if (!(state.time >= 0.0) || !std::isfinite(state.time)) fail(ErrorCode::InvalidArgument, "state time must be >= 0");
  if (state.mode == SimMode::Agent) {
    if (!state.occupancy.empty()) fail(ErrorCode::InvalidArgument, "agent state carries mean-field occupancy");
    return;
  }
  for (std::size_t n = 0; n < state.occupancy.size(); ++n) {
    double sum = 0.0;
    for (double p : state.occupancy[n]) {
      if (!std::isfinite(p) || p < -kNegativityTolerance) {
        fail(ErrorCode::InvalidArgument, "negative or non-finite occupancy on node " + topo.nodes()[n].id);
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kConservationTolerance) {
      fail(ErrorCode::InvalidArgument, "occupancy of node " + topo.nodes()[n].id + " does not sum to 1");
    }
  }
}

}  // namespace ttx
