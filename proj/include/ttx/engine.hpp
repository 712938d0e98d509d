#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ttx/dynamics.hpp"
#include "ttx/error.hpp"
#include "ttx/params.hpp"
#include "ttx/scenario.hpp"
#include "ttx/simulate.hpp"
#include "ttx/state.hpp"

namespace ttx {

/// The five steps every event goes through, in order.
enum class CycleStep { Presentation, ModelApplication, Interpretation, Discussion, Conclusions };

inline constexpr int kCycleStepCount = 5;

inline std::string_view to_string(CycleStep s) {
  switch (s) {
    case CycleStep::Presentation: return "PRESENTATION";
    case CycleStep::ModelApplication: return "MODEL_APPLICATION";
    case CycleStep::Interpretation: return "INTERPRETATION";
    case CycleStep::Discussion: return "DISCUSSION";
    case CycleStep::Conclusions: return "CONCLUSIONS";
  }
  return "PRESENTATION";
}

/// Composite course-of-action score with its ingredients.
struct ScoreBreakdown {
  double score = 0.0;
  double meanServiceAvailability = 0.0;
  double meanCyberRisk = 0.0;
  std::vector<double> perRun;

  bool operator==(const ScoreBreakdown&) const = default;
};

struct EventCycle {
  int eventIndex = 1;
  CycleStep step = CycleStep::Presentation;
  std::vector<Trajectory> runs;
  std::optional<std::string> chosenCourse;
  std::string discussionNotes;
  std::string conclusionNotes;
  bool concluded = false;
  std::vector<int> visitedSteps{static_cast<int>(CycleStep::Presentation)};
  std::optional<ScoreBreakdown> runScore;     // event window
  std::optional<ScoreBreakdown> chosenScore;  // projection of the chosen course

  bool operator==(const EventCycle&) const = default;
};

/// A parameter change scheduled at an absolute simulation time.
struct ScheduledDelta {
  double at = 0.0;
  DeltaSet deltas;
  std::string source;

  bool operator==(const ScheduledDelta&) const = default;
};

/// Canonical state carried from one event to the next.
struct Timeline {
  std::optional<CompartmentState> carried;
  PropagationParams params;
  std::vector<ScheduledDelta> pending;

  bool operator==(const Timeline&) const = default;
};

inline Timeline initial_timeline(const Scenario& sc) { return {sc.initial_state(), sc.baseParams, {}}; }

/// Opens event `i`. Every earlier event must already be concluded.
inline EventCycle start_event(const Scenario& sc, const std::vector<EventCycle>& cycles, int i) {
  if (i < 1 || i > sc.event_count()) fail(ErrorCode::NotFound, "no such event: " + std::to_string(i));
  if (static_cast<std::size_t>(i - 1) != cycles.size()) {
    fail(ErrorCode::IllegalTransition, "cannot start event " + std::to_string(i) + ": " +
                                           std::to_string(cycles.size()) + " event(s) opened so far");
  }
  for (const auto& c : cycles) {
    if (!c.concluded) {
      fail(ErrorCode::IllegalTransition,
           "cannot start event " + std::to_string(i) + ": event " + std::to_string(c.eventIndex) + " is not concluded");
    }
  }
  EventCycle cycle;
  cycle.eventIndex = i;
  return cycle;
}

namespace detail {

inline void move_to(EventCycle& cycle, CycleStep next) {
  if (cycle.concluded) fail(ErrorCode::IllegalTransition, "event already concluded");
  if (static_cast<int>(next) != static_cast<int>(cycle.step) + 1) {
    fail(ErrorCode::IllegalTransition, "illegal step transition " + std::string(to_string(cycle.step)) + " -> " +
                                           std::string(to_string(next)));
  }
  cycle.step = next;
  cycle.visitedSteps.push_back(static_cast<int>(next));
}

inline PropagationParams jittered(const PropagationParams& p, const Scenario& sc, std::uint64_t seed) {
  if (!sc.simulation.jitter || sc.simulation.mode != SimMode::MeanField) return p;
  // Separate stream from the agent sampler: mix the seed before use.
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  PropagationParams out = p;
  out.beta *= 1.0 + 0.1 * (2.0 * rng.uniform() - 1.0);
  out.sigma *= 1.0 + 0.1 * (2.0 * rng.uniform() - 1.0);
  return out;
}

// Converts absolute scheduled deltas inside [start, start + horizon] to run offsets.
inline std::vector<TimedDelta> window_deltas(const std::vector<ScheduledDelta>& scheduled, double start, double horizon) {
  std::vector<TimedDelta> out;
  for (const auto& s : scheduled) {
    if (s.at >= start && s.at <= start + horizon) out.push_back({std::max(0.0, s.at - start), s.deltas});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.offset < b.offset; });
  return out;
}

inline std::vector<ScheduledDelta> event_schedule(const Scenario&, const Event& ev, const Timeline& tl) {
  std::vector<ScheduledDelta> all = tl.pending;
  if (!ev.deltas.empty()) all.push_back({ev.atTime, ev.deltas, "event " + std::to_string(ev.index)});
  return all;
}

inline PropagationParams params_after(const PropagationParams& p, const std::vector<TimedDelta>& deltas) {
  PropagationParams out = p;
  for (const auto& d : deltas) out = apply_param_deltas(out, d.deltas).params;
  return out;
}

inline std::vector<Trajectory> run_ensemble(const Scenario& sc, const std::vector<CompartmentState>& starts,
                                            const PropagationParams& params, const std::vector<TimedDelta>& deltas,
                                            double horizon) {
  std::vector<Trajectory> runs;
  const auto opts = sc.options();
  for (int r = 1; r <= sc.simulation.runs; ++r) {
    const std::uint64_t seed = sc.simulation.baseSeed + static_cast<std::uint64_t>(r);
    const auto& start = starts[std::min(starts.size() - 1, static_cast<std::size_t>(r - 1))];
    runs.push_back(simulate(sc.topology, jittered(params, sc, seed), deltas, horizon, sc.simulation.mode, seed, start,
                            opts, r));
  }
  return runs;
}

}  // namespace detail

/// Attaches the s ensemble runs for the cycle's event window and moves the
/// cycle from PRESENTATION to MODEL_APPLICATION.
inline void run_event_simulations(const Scenario& sc, EventCycle& cycle, const Timeline& tl) {
  if (cycle.concluded || cycle.step != CycleStep::Presentation) {
    fail(ErrorCode::IllegalTransition,
         "illegal step transition " + std::string(to_string(cycle.step)) + " -> MODEL_APPLICATION");
  }
  if (!tl.carried) fail(ErrorCode::InvalidArgument, "missing carried state");
  const Event& ev = sc.event(cycle.eventIndex);
  const double start = sc.window_start(ev.index);
  if (tl.carried->time != start) {
    fail(ErrorCode::InvalidArgument, "carried state time " + std::to_string(tl.carried->time) +
                                         " does not match event window start " + std::to_string(start));
  }
  auto deltas = detail::window_deltas(detail::event_schedule(sc, ev, tl), start, sc.simulation.horizonPerEvent);
  auto runs = detail::run_ensemble(sc, {*tl.carried}, tl.params, deltas, sc.simulation.horizonPerEvent);
  detail::move_to(cycle, CycleStep::ModelApplication);
  cycle.runs = std::move(runs);
}

/// Moves MODEL_APPLICATION -> INTERPRETATION -> DISCUSSION -> CONCLUSIONS.
/// PRESENTATION -> MODEL_APPLICATION goes through run_event_simulations.
inline void advance_step(EventCycle& cycle) {
  if (cycle.step == CycleStep::Presentation) {
    fail(ErrorCode::IllegalTransition, "PRESENTATION -> MODEL_APPLICATION requires running the event simulations");
  }
  if (cycle.step == CycleStep::Conclusions) {
    fail(ErrorCode::IllegalTransition, cycle.concluded ? "event already concluded"
                                                       : "CONCLUSIONS is the last step; conclude the event instead");
  }
  detail::move_to(cycle, static_cast<CycleStep>(static_cast<int>(cycle.step) + 1));
}

inline ScoreBreakdown score_projection(const std::vector<Trajectory>& runs) {
  if (runs.empty()) fail(ErrorCode::InvalidArgument, "cannot score an empty trajectory list");
  ScoreBreakdown out;
  for (const auto& t : runs) {
    if (t.samples.empty()) fail(ErrorCode::InvalidArgument, "cannot score a trajectory without samples");
    double avail = 0.0, risk = 0.0;
    for (const auto& s : t.samples) {
      avail += s.serviceAvailability;
      risk += s.cyberRisk;
    }
    avail /= static_cast<double>(t.samples.size());
    risk /= static_cast<double>(t.samples.size());
    out.perRun.push_back(0.5 * avail - 0.5 * risk);
    out.meanServiceAvailability += avail;
    out.meanCyberRisk += risk;
  }
  const auto n = static_cast<double>(runs.size());
  out.meanServiceAvailability /= n;
  out.meanCyberRisk /= n;
  for (double s : out.perRun) out.score += s / n;
  return out;
}

namespace detail {

// Timeline as it stands at the end of the cycle's event window.
inline Timeline end_of_window(const Scenario& sc, const EventCycle& cycle, const Timeline& tl) {
  const Event& ev = sc.event(cycle.eventIndex);
  const double start = sc.window_start(ev.index);
  const double end = start + sc.simulation.horizonPerEvent;
  auto schedule = event_schedule(sc, ev, tl);
  Timeline out;
  out.carried = cycle.runs.front().finalState;
  out.params = params_after(tl.params, window_deltas(schedule, start, sc.simulation.horizonPerEvent));
  for (const auto& s : schedule) {
    if (s.at > end) out.pending.push_back(s);
  }
  return out;
}

inline std::vector<Trajectory> project(const Scenario& sc, const EventCycle& cycle, const Timeline& tl,
                                       const CourseOfAction* coa, double horizon) {
  if (!(horizon > 0.0)) fail(ErrorCode::InvalidArgument, "projection horizon must be > 0");
  if (cycle.runs.empty()) fail(ErrorCode::IllegalTransition, "event simulations have not run");
  Timeline at_end = end_of_window(sc, cycle, tl);
  const double now = at_end.carried->time;
  auto schedule = at_end.pending;
  if (coa && !coa->deltas.empty()) schedule.push_back({now + coa->leadTime, coa->deltas, "course " + coa->id});
  std::vector<CompartmentState> starts;
  for (const auto& r : cycle.runs) starts.push_back(r.finalState);
  return run_ensemble(sc, starts, at_end.params, window_deltas(schedule, now, horizon), horizon);
}

}  // namespace detail

/// What-if projection of a course of action from the end of the event window.
/// Run r continues from run r's end state with the same seed schedule as the
/// event runs. Nothing in `cycle` or `tl` is modified.
inline std::vector<Trajectory> project_course_of_action(const Scenario& sc, const EventCycle& cycle,
                                                        const Timeline& tl, std::string_view coaId, double horizon) {
  if (cycle.step != CycleStep::Discussion) {
    fail(ErrorCode::IllegalTransition,
         "what-if projections need step DISCUSSION, current step is " + std::string(to_string(cycle.step)));
  }
  const CourseOfAction* coa = sc.event(cycle.eventIndex).find_course(coaId);
  if (!coa) fail(ErrorCode::NotFound, "unknown course of action: " + std::string(coaId));
  return detail::project(sc, cycle, tl, coa, horizon);
}

/// Continuation of the event window with no course applied.
inline std::vector<Trajectory> project_baseline(const Scenario& sc, const EventCycle& cycle, const Timeline& tl,
                                                double horizon) {
  return detail::project(sc, cycle, tl, nullptr, horizon);
}

inline void choose_course(const Scenario& sc, EventCycle& cycle, std::string_view coaId) {
  if (cycle.concluded) fail(ErrorCode::IllegalTransition, "event already concluded");
  if (cycle.step != CycleStep::Discussion && cycle.step != CycleStep::Conclusions) {
    fail(ErrorCode::IllegalTransition,
         "a course can only be chosen during DISCUSSION or CONCLUSIONS, current step is " +
             std::string(to_string(cycle.step)));
  }
  if (!sc.event(cycle.eventIndex).find_course(coaId)) {
    fail(ErrorCode::NotFound, "unknown course of action: " + std::string(coaId));
  }
  cycle.chosenCourse = std::string(coaId);
}

/// Closes the cycle and returns the timeline for the next event: run 1's end
/// state, the window's canonical parameters, and the chosen course scheduled
/// at end-of-window + leadTime.
inline Timeline conclude_event(const Scenario& sc, EventCycle& cycle, const Timeline& tl,
                               std::optional<std::string> chosenCoaId, std::string conclusionNotes) {
  if (cycle.concluded) fail(ErrorCode::IllegalTransition, "event already concluded");
  if (cycle.step != CycleStep::Discussion && cycle.step != CycleStep::Conclusions) {
    fail(ErrorCode::IllegalTransition,
         "cannot conclude event from step " + std::string(to_string(cycle.step)) + "; need DISCUSSION or CONCLUSIONS");
  }
  const Event& ev = sc.event(cycle.eventIndex);
  if (!chosenCoaId) chosenCoaId = cycle.chosenCourse;
  const CourseOfAction* coa = nullptr;
  if (chosenCoaId) {
    coa = ev.find_course(*chosenCoaId);
    if (!coa) fail(ErrorCode::NotFound, "unknown course of action: " + *chosenCoaId);
  }

  Timeline next = detail::end_of_window(sc, cycle, tl);
  cycle.runScore = score_projection(cycle.runs);
  if (coa) {
    cycle.chosenScore = score_projection(detail::project(sc, cycle, tl, coa, sc.simulation.horizonPerEvent));
    if (!coa->deltas.empty()) {
      next.pending.push_back({next.carried->time + coa->leadTime, coa->deltas, "course " + coa->id});
    }
  }
  if (cycle.step == CycleStep::Discussion) detail::move_to(cycle, CycleStep::Conclusions);
  cycle.chosenCourse = chosenCoaId;
  if (!conclusionNotes.empty()) cycle.conclusionNotes = std::move(conclusionNotes);
  cycle.concluded = true;
  return next;
}

}  // namespace ttx
