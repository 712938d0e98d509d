#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ttx/dynamics.hpp"
#include "ttx/error.hpp"
#include "ttx/params.hpp"
#include "ttx/perspectives.hpp"
#include "ttx/state.hpp"
#include "ttx/topology.hpp"

namespace ttx {

inline constexpr double kDefaultDt = 0.05;

/// A delta set that takes effect `offset` hours after the start of a run.
struct TimedDelta {
  double offset = 0.0;
  DeltaSet deltas;

  bool operator==(const TimedDelta&) const = default;
};

struct SimulationOptions {
  double dt = kDefaultDt;
  std::size_t sampleStride = 1;  // snapshot every k-th step (the last step is always sampled)
  bool keepStates = false;       // fill Trajectory::rawStates alongside the samples
  PerspectiveWeights weights;
};

struct Trajectory {
  int runId = 1;
  std::uint64_t seed = 0;
  std::vector<PerspectiveSnapshot> samples;
  std::vector<CompartmentState> rawStates;
  CompartmentState finalState;
  PropagationParams finalParams;
  std::vector<std::string> warnings;

  bool operator==(const Trajectory&) const = default;
};

/// Integrates (mean-field) or samples (agent) the propagation model from
/// `initial` for `horizon` hours.
///
/// Step boundaries are snapped to delta offsets, so each delta set is applied
/// exactly once, after the step that ends at its offset. Sample times and the
/// final state clock are absolute: `initial.time + offset`.
inline Trajectory simulate(const Topology& topo, const PropagationParams& params,
                           const std::vector<TimedDelta>& timed, double horizon, SimMode mode,
                           std::uint64_t seed, const CompartmentState& initial,
                           const SimulationOptions& options = {}, int runId = 1) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) fail(ErrorCode::InvalidArgument, "horizon must be > 0");
  if (!(options.dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be > 0");
  if (options.sampleStride == 0) fail(ErrorCode::InvalidArgument, "sampleStride must be >= 1");
  if (runId < 1) fail(ErrorCode::InvalidArgument, "runId must be >= 1");
  if (initial.mode != mode) fail(ErrorCode::InvalidArgument, "initial state mode does not match simulation mode");
  validate(params);
  validate_state(initial, topo);
  for (std::size_t k = 0; k < timed.size(); ++k) {
    if (!(timed[k].offset >= 0.0 && timed[k].offset <= horizon)) {
      fail(ErrorCode::InvalidArgument, "delta time " + std::to_string(timed[k].offset) + " outside [0, horizon]");
    }
    if (k > 0 && timed[k].offset < timed[k - 1].offset) fail(ErrorCode::InvalidArgument, "deltas are not time-sorted");
  }

  Trajectory traj;
  traj.runId = runId;
  traj.seed = seed;
  Rng rng(seed);
  PropagationParams current = params;
  CompartmentState state = initial;
  const double t0 = initial.time;

  auto record = [&] {
    traj.samples.push_back(compute_perspectives(state, topo, current, options.weights));
    if (options.keepStates) traj.rawStates.push_back(state);
  };
  std::size_t next_delta = 0;
  auto apply_due = [&](double offset) {
    while (next_delta < timed.size() && timed[next_delta].offset <= offset) {
      auto res = apply_param_deltas(current, timed[next_delta].deltas);
      current = res.params;
      for (auto& w : res.warnings) traj.warnings.push_back(std::move(w));
      ++next_delta;
    }
  };

  record();
  apply_due(0.0);

  std::vector<double> boundaries;
  for (const auto& td : timed) {
    if (td.offset > 0.0 && td.offset < horizon && (boundaries.empty() || boundaries.back() != td.offset)) {
      boundaries.push_back(td.offset);
    }
  }
  boundaries.push_back(horizon);

  std::size_t step_count = 0;
  double seg_start = 0.0;
  for (std::size_t b = 0; b < boundaries.size(); ++b) {
    const double seg_end = boundaries[b];
    const double len = seg_end - seg_start;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(len / options.dt - 1e-9)));
    const double h = len / static_cast<double>(steps);
    for (std::size_t k = 1; k <= steps; ++k) {
      state = mode == SimMode::MeanField ? mean_field_step(state, current, topo, h)
                                         : agent_step(state, current, topo, h, rng);
      state.time = k == steps ? t0 + seg_end : t0 + seg_start + len * static_cast<double>(k) / static_cast<double>(steps);
      ++step_count;
      const bool last = b + 1 == boundaries.size() && k == steps;
      if (last || step_count % options.sampleStride == 0) record();
    }
    apply_due(seg_end);
    seg_start = seg_end;
  }
  traj.finalState = std::move(state);
  traj.finalParams = current;
  return traj;
}

}  // namespace ttx
