#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ttx/engine.hpp"
#include "ttx/error.hpp"
#include "ttx/session.hpp"
#include "ttx/store.hpp"

namespace ttx {

enum class CoaPolicy { First, None, Best };

inline CoaPolicy parse_coa_policy(std::string_view s) {
  if (s == "first") return CoaPolicy::First;
  if (s == "none") return CoaPolicy::None;
  if (s == "best") return CoaPolicy::Best;
  fail(ErrorCode::InvalidArgument, "unknown course-of-action policy: " + std::string(s));
}

namespace detail {

inline std::optional<std::string> pick_course(const SessionStore& store, const std::string& sessionId, CoaPolicy policy) {
  auto sc = store.session_scenario(sessionId);
  auto session = store.snapshot(sessionId);
  const Event& ev = sc->event(session.current_cycle()->eventIndex);
  if (ev.courses.empty() || policy == CoaPolicy::None) return std::nullopt;
  if (policy == CoaPolicy::First) return ev.courses.front().id;
  std::optional<std::string> best;
  double best_score = 0.0;
  for (const auto& coa : ev.courses) {
    auto runs = project_course_of_action(*sc, *session.current_cycle(), session.timeline, coa.id,
                                         sc->simulation.horizonPerEvent);
    double score = score_projection(runs).score;
    if (!best || score > best_score) {
      best = coa.id;
      best_score = score;
    }
  }
  return best;
}

}  // namespace detail

/// Plays every event cycle of a fresh session without human input and
/// moves the session into CLOSURE. Returns the session id.
inline std::string run_headless(SessionStore& store, const std::string& scenarioId, CoaPolicy policy,
                                const Participants& who = {1, 0, ""}) {
  const std::string actor = "headless";
  auto id = store.create_session(scenarioId, who, actor);
  auto sc = store.scenario(scenarioId);
  store.advance(id, Action::BeginExecution, json::object(), actor);
  for (int i = 1; i <= sc->event_count(); ++i) {
    store.advance(id, Action::NextStep, json::object(), actor);  // -> MODEL_APPLICATION
    store.advance(id, Action::NextStep, json::object(), actor);  // -> INTERPRETATION
    store.advance(id, Action::NextStep, json::object(), actor);  // -> DISCUSSION
    auto coa = detail::pick_course(store, id, policy);
    if (coa) store.advance(id, Action::SubmitCoa, json{{"coaId", *coa}}, actor);
    store.advance(id, Action::SubmitNotes, json{{"text", "Discussion held; course " + coa.value_or("none") + " agreed."}}, actor);
    store.advance(id, Action::NextStep, json::object(), actor);  // -> CONCLUSIONS
    store.advance(id, Action::SubmitNotes,
                  json{{"text", "Event " + std::to_string(i) + " concluded with course " + coa.value_or("none") + "."}},
                  actor);
    store.advance(id, Action::NextStep, json::object(), actor);  // conclude (and open the next event)
  }
  store.advance(id, Action::BeginClosure, json::object(), actor);
  return id;
}

}  // namespace ttx
