#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ttx/compartment.hpp"
#include "ttx/error.hpp"
#include "ttx/params.hpp"
#include "ttx/state.hpp"
#include "ttx/topology.hpp"

namespace ttx {

/// Seeded random stream for agent mode. Uniform variates are built from the
/// raw 64-bit engine output so results do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

template <typename OccupancyAt>
double force_of_infection(std::size_t node, const Topology& topo, const PropagationParams& p, OccupancyAt&& occ_at) {
  if (p.beta == 0.0) return 0.0;
  double pressure = 0.0;
  for (const auto& c : topo.contacts(node)) {
    const Occupancy& m = occ_at(c.source);
    pressure += c.rate * (p.kappaE * m[index(Compartment::E)] + m[index(Compartment::D)]);
  }
  return p.beta * pressure;
}

inline Occupancy node_derivative(const Occupancy& y, double lambda, const PropagationParams& p) {
  const double s = y[0], e = y[1], r = y[2], d = y[3], u = y[4], x = y[5];
  Occupancy dy{};
  dy[index(Compartment::S)] = -(lambda + p.eta) * s + p.omega * r + p.nu * x;
  dy[index(Compartment::E)] = lambda * s - (p.sigma + p.alpha) * e;
  dy[index(Compartment::D)] = p.sigma * e - (p.upsilon + p.rho) * d;
  dy[index(Compartment::U)] = p.upsilon * d - (p.xi + p.gamma) * u;
  dy[index(Compartment::X)] = p.xi * u - p.nu * x;
  dy[index(Compartment::R)] = p.eta * s + p.alpha * e + p.rho * d + p.gamma * u - p.omega * r;
  return dy;
}

inline void network_derivative(const std::vector<Occupancy>& y, const Topology& topo, const PropagationParams& p,
                               std::vector<Occupancy>& out) {
  out.resize(y.size());
  for (std::size_t n = 0; n < y.size(); ++n) {
    double lambda = force_of_infection(n, topo, p, [&](std::size_t m) -> const Occupancy& { return y[m]; });
    out[n] = node_derivative(y[n], lambda, p);
  }
}

}  // namespace detail

/// Per-hour rate at which susceptible mass on `nodeId` becomes exposed.
inline double force_of_infection(std::string_view nodeId, const CompartmentState& state, const PropagationParams& params,
                                 const Topology& topo) {
  std::size_t node = topo.index_of(nodeId);
  if (state.size() != topo.size()) fail(ErrorCode::InvalidArgument, "state does not match topology");
  if (state.mode == SimMode::Agent) {
    std::vector<Occupancy> occ(state.size());
    for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = state.at(i);
    return detail::force_of_infection(node, topo, params, [&](std::size_t m) -> const Occupancy& { return occ[m]; });
  }
  return detail::force_of_infection(node, topo, params,
                                    [&](std::size_t m) -> const Occupancy& { return state.occupancy[m]; });
}

/// One classical fourth-order Runge-Kutta step of the coupled network ODE.
///
/// Tiny negative excursions (>= -1e-12) are clamped and the node vector is
/// renormalized; anything larger, or a non-finite value, is rejected.
inline CompartmentState mean_field_step(const CompartmentState& state, const PropagationParams& params,
                                        const Topology& topo, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::InvalidArgument, "dt must be > 0");
  if (state.mode != SimMode::MeanField) fail(ErrorCode::InvalidArgument, "mean_field_step requires a mean-field state");
  if (state.size() != topo.size()) fail(ErrorCode::InvalidArgument, "state does not match topology");

  const auto& y = state.occupancy;
  const std::size_t n = y.size();
  std::vector<Occupancy> k1, k2, k3, k4, tmp(n);

  auto axpy = [&](const std::vector<Occupancy>& k, double h) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < kCompartmentCount; ++c) tmp[i][c] = y[i][c] + h * k[i][c];
  };

  detail::network_derivative(y, topo, params, k1);
  axpy(k1, 0.5 * dt);
  detail::network_derivative(tmp, topo, params, k2);
  axpy(k2, 0.5 * dt);
  detail::network_derivative(tmp, topo, params, k3);
  axpy(k3, dt);
  detail::network_derivative(tmp, topo, params, k4);

  CompartmentState next = CompartmentState::mean_field(std::vector<Occupancy>(n), state.time + dt);
  for (std::size_t i = 0; i < n; ++i) {
    bool clamped = false;
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
      double v = y[i][c] + dt / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
      if (!std::isfinite(v)) {
        fail(ErrorCode::Numerical, "non-finite occupancy on node " + topo.nodes()[i].id + " at t=" +
                                       std::to_string(next.time) + "; parameters blow up at dt=" + std::to_string(dt));
      }
      if (v < 0.0) {
        if (v < -kNegativityTolerance) {
          fail(ErrorCode::Numerical, "occupancy " + std::string(to_string(kAllCompartments[c])) + " on node " +
                                         topo.nodes()[i].id + " fell to " + std::to_string(v) +
                                         "; reduce dt (currently " + std::to_string(dt) + ")");
        }
        v = 0.0;
        clamped = true;
      }
      next.occupancy[i][c] = v;
    }
    if (clamped) {
      double sum = 0.0;
      for (double v : next.occupancy[i]) sum += v;
      for (double& v : next.occupancy[i]) v /= sum;
    }
  }
  return next;
}

/// Outgoing transitions of a single agent, in a fixed order.
struct Transition {
  Compartment to;
  double rate;
};

struct Transitions {
  std::array<Transition, 2> items{};
  std::size_t count = 0;
};

inline Transitions outgoing_transitions(Compartment from, double lambda, const PropagationParams& p) {
  switch (from) {
    case Compartment::S: return {{{{Compartment::E, lambda}, {Compartment::R, p.eta}}}, 2};
    case Compartment::E: return {{{{Compartment::D, p.sigma}, {Compartment::R, p.alpha}}}, 2};
    case Compartment::D: return {{{{Compartment::U, p.upsilon}, {Compartment::R, p.rho}}}, 2};
    case Compartment::U: return {{{{Compartment::X, p.xi}, {Compartment::R, p.gamma}}}, 2};
    case Compartment::X: return {{{{Compartment::S, p.nu}}}, 1};
    case Compartment::R: return {{{{Compartment::S, p.omega}}}, 1};
  }
  return {};
}

/// Samples the next label from the competing transitions: transition k gets
/// weight 1-exp(-r_k dt), the remaining mass stays put. Weights that sum past
/// one are normalized. `u` is a uniform variate in [0,1).
inline Compartment sample_transition(Compartment from, double lambda, const PropagationParams& p, double dt, double u) {
  auto trans = outgoing_transitions(from, lambda, p);
  double weights[2] = {0.0, 0.0};
  double total = 0.0;
  for (std::size_t k = 0; k < trans.count; ++k) {
    weights[k] = -std::expm1(-trans.items[k].rate * dt);
    total += weights[k];
  }
  double scale = total > 1.0 ? 1.0 / total : 1.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < trans.count; ++k) {
    acc += weights[k] * scale;
    if (weights[k] > 0.0 && u < acc) return trans.items[k].to;
  }
  return from;
}

/// One stochastic step for every node. Forces of infection are evaluated on
/// the labels at the start of the step; exactly one variate is drawn per node.
inline CompartmentState agent_step(const CompartmentState& state, const PropagationParams& params,
                                   const Topology& topo, double dt, Rng& rng) {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::InvalidArgument, "dt must be > 0");
  if (state.mode != SimMode::Agent) fail(ErrorCode::InvalidArgument, "agent_step requires an agent state");
  if (state.size() != topo.size()) fail(ErrorCode::InvalidArgument, "state does not match topology");

  std::vector<Occupancy> occ(state.size());
  for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = indicator(state.labels[i]);

  CompartmentState next = CompartmentState::agent(state.labels, state.time + dt);
  for (std::size_t i = 0; i < occ.size(); ++i) {
    double lambda = 0.0;
    if (state.labels[i] == Compartment::S) {
      lambda = detail::force_of_infection(i, topo, params, [&](std::size_t m) -> const Occupancy& { return occ[m]; });
    }
    next.labels[i] = sample_transition(state.labels[i], lambda, params, dt, rng.uniform());
  }
  return next;
}

}  // namespace ttx
