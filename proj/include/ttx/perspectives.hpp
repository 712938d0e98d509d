#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ttx/compartment.hpp"
#include "ttx/error.hpp"
#include "ttx/params.hpp"
#include "ttx/state.hpp"
#include "ttx/topology.hpp"

namespace ttx {

/// Weights behind the three monitored perspectives. Scenario files may
/// override any of them.
struct PerspectiveWeights {
  // Fraction of a node's service still delivered in each compartment (S,E,R,D,U,X).
  Occupancy availability = {1.0, 0.9, 1.0, 0.4, 0.0, 0.0};
  double riskCompromised = 0.6;
  double riskThreat = 0.4;

  bool operator==(const PerspectiveWeights&) const = default;
};

inline void validate(const PerspectiveWeights& w) {
  for (double a : w.availability) {
    if (!(a >= 0.0 && a <= 1.0)) fail(ErrorCode::InvalidArgument, "availability weights must lie in [0,1]");
  }
  if (!(w.riskCompromised >= 0.0) || !(w.riskThreat >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "risk weights must be >= 0");
  }
}

struct PerspectiveSnapshot {
  double time = 0.0;
  Occupancy histogram{};  // node-uniform mean occupancy per compartment
  double healthyFraction = 0.0;
  double serviceAvailability = 0.0;
  double cyberRisk = 0.0;

  bool operator==(const PerspectiveSnapshot&) const = default;
};

inline PerspectiveSnapshot compute_perspectives(const CompartmentState& state, const Topology& topo,
                                                const PropagationParams& params,
                                                const PerspectiveWeights& weights = {}) {
  if (state.size() != topo.size() || state.size() == 0) {
    fail(ErrorCode::InvalidArgument, "state does not match topology");
  }
  const auto n = static_cast<double>(state.size());
  double total_weight = 0.0;
  for (const auto& node : topo.nodes()) total_weight += node.serviceWeight;

  PerspectiveSnapshot snap;
  snap.time = state.time;
  double availability = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Occupancy occ = state.at(i);
    double node_avail = 0.0;
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
      snap.histogram[c] += occ[c] / n;
      node_avail += weights.availability[c] * occ[c];
    }
    availability += topo.nodes()[i].serviceWeight / total_weight * node_avail;
  }
  const auto& h = snap.histogram;
  const double susceptible = h[index(Compartment::S)];
  const double compromised =
      h[index(Compartment::E)] + h[index(Compartment::D)] + h[index(Compartment::U)] + h[index(Compartment::X)];
  snap.healthyFraction = std::clamp(susceptible + h[index(Compartment::R)], 0.0, 1.0);
  snap.serviceAvailability = std::clamp(availability, 0.0, 1.0);
  snap.cyberRisk =
      std::clamp(weights.riskCompromised * compromised + weights.riskThreat * params.threatLevel * susceptible, 0.0, 1.0);
  return snap;
}

}  // namespace ttx
