#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ttx/analytics.hpp"
#include "ttx/digest.hpp"
#include "ttx/engine.hpp"
#include "ttx/error.hpp"
#include "ttx/json_io.hpp"
#include "ttx/regression.hpp"
#include "ttx/scenario.hpp"
#include "ttx/survey.hpp"

namespace ttx {

enum class SessionPhase { Preliminary, Execution, Closure, Archived };

inline std::string_view to_string(SessionPhase p) {
  switch (p) {
    case SessionPhase::Preliminary: return "PRELIMINARY";
    case SessionPhase::Execution: return "EXECUTION";
    case SessionPhase::Closure: return "CLOSURE";
    case SessionPhase::Archived: return "ARCHIVED";
  }
  return "PRELIMINARY";
}

/// Facilitator actions accepted by `advance`.
enum class Action { BeginExecution, NextStep, SubmitCoa, SubmitNotes, BeginClosure, Archive };

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::BeginExecution: return "BEGIN_EXECUTION";
    case Action::NextStep: return "NEXT_STEP";
    case Action::SubmitCoa: return "SUBMIT_COA";
    case Action::SubmitNotes: return "SUBMIT_NOTES";
    case Action::BeginClosure: return "BEGIN_CLOSURE";
    case Action::Archive: return "ARCHIVE";
  }
  return "NEXT_STEP";
}

inline Action parse_action(std::string_view s) {
  for (auto a : {Action::BeginExecution, Action::NextStep, Action::SubmitCoa, Action::SubmitNotes,
                 Action::BeginClosure, Action::Archive}) {
    if (to_string(a) == s) return a;
  }
  fail(ErrorCode::InvalidArgument, "unknown action: " + std::string(s));
}

inline constexpr std::string_view kCreateAction = "CREATE";
inline constexpr std::string_view kSurveyAction = "INGEST_SURVEY";

struct Participants {
  int np = 1;          // participants
  int no = 0;          // observers
  std::string gs;      // group size label, e.g. "3-4"

  bool operator==(const Participants&) const = default;
};

struct LogRecord {
  std::uint64_t seq = 0;
  std::string timestamp;
  std::string actor;
  std::string action;
  json payload;
  std::string digest;  // SHA-256 of payload.dump()
};

inline json to_json(const LogRecord& r) {
  return json{{"seq", r.seq},       {"timestamp", r.timestamp}, {"actor", r.actor},
              {"action", r.action}, {"payload", r.payload},     {"digest", r.digest}};
}

inline LogRecord log_record_from_json(const json& j) {
  LogRecord r;
  r.seq = j.at("seq").get<std::uint64_t>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.actor = j.at("actor").get<std::string>();
  r.action = j.at("action").get<std::string>();
  r.payload = j.at("payload");
  r.digest = j.at("digest").get<std::string>();
  if (sha256_hex(r.payload.dump()) != r.digest) {
    fail(ErrorCode::Io, "log record " + std::to_string(r.seq) + " fails its payload digest");
  }
  return r;
}

/// A published perspective snapshot on the live stream.
struct StreamRecord {
  std::uint64_t seq = 0;
  int eventIndex = 0;
  int runId = 0;
  PerspectiveSnapshot snapshot;
};

inline json to_json(const StreamRecord& r) {
  return json{{"seq", r.seq}, {"event", r.eventIndex}, {"runId", r.runId}, {"snapshot", to_json(r.snapshot)}};
}

struct ExerciseSession {
  std::string sessionId;
  std::string scenarioId;
  SessionPhase phase = SessionPhase::Preliminary;
  Participants participants;
  std::vector<EventCycle> cycles;
  Timeline timeline;
  std::vector<SurveyResponse> surveys;
  std::vector<std::string> preliminaryNotes;
  std::vector<std::string> closureNotes;
  std::vector<LogRecord> log;
  std::vector<StreamRecord> stream;
  std::string createdAt;
  std::string updatedAt;

  EventCycle* current_cycle() { return cycles.empty() ? nullptr : &cycles.back(); }
  const EventCycle* current_cycle() const { return cycles.empty() ? nullptr : &cycles.back(); }
  std::uint64_t last_seq() const { return log.empty() ? 0 : log.back().seq; }
};

// ---------------------------------------------------------------------------
// Serialization

inline json to_json(const ScoreBreakdown& s) {
  return json{{"score", s.score},
              {"meanServiceAvailability", s.meanServiceAvailability},
              {"meanCyberRisk", s.meanCyberRisk},
              {"perRun", s.perRun}};
}

inline json to_json(const EventCycle& c, bool with_runs) {
  json j{{"event", c.eventIndex},
         {"step", std::string(to_string(c.step))},
         {"concluded", c.concluded},
         {"discussionNotes", c.discussionNotes},
         {"conclusionNotes", c.conclusionNotes},
         {"runCount", c.runs.size()}};
  j["chosenCourse"] = c.chosenCourse ? json(*c.chosenCourse) : json(nullptr);
  json visited = json::array();
  for (int s : c.visitedSteps) visited.push_back(std::string(to_string(static_cast<CycleStep>(s))));
  j["visitedSteps"] = std::move(visited);
  if (c.runScore) j["runScore"] = to_json(*c.runScore);
  if (c.chosenScore) j["chosenScore"] = to_json(*c.chosenScore);
  if (with_runs) {
    json runs = json::array();
    for (const auto& r : c.runs) runs.push_back(to_json(r));
    j["runs"] = std::move(runs);
  }
  return j;
}

inline json to_json(const Timeline& t) {
  json pending = json::array();
  for (const auto& p : t.pending) pending.push_back({{"at", p.at}, {"deltas", to_json(p.deltas)}, {"source", p.source}});
  return json{{"carried", t.carried ? to_json(*t.carried) : json(nullptr)},
              {"params", to_json(t.params)},
              {"pending", std::move(pending)}};
}

inline json to_json(const SurveyResponse& r) {
  json j{{"Y", r.y}, {"X19", r.comment}};
  for (std::size_t k = 1; k <= kSurveyNumericVars; ++k) j["X" + std::to_string(k)] = r.var(k);
  return j;
}

inline SurveyResponse survey_response_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, where + ": expected an object");
  if (j.size() != kSurveyColumns) {
    fail(ErrorCode::InvalidArgument, where + ": expected " + std::to_string(kSurveyColumns) + " columns, got " +
                                         std::to_string(j.size()));
  }
  SurveyResponse r;
  auto number = [&](const std::string& key) {
    if (!j.contains(key)) fail(ErrorCode::InvalidArgument, where + ": missing column " + key);
    if (!j.at(key).is_number()) fail(ErrorCode::InvalidArgument, where + ": " + key + " is not a number");
    return j.at(key).get<double>();
  };
  r.y = number("Y");
  for (std::size_t k = 1; k <= kSurveyNumericVars; ++k) r.x[k - 1] = number("X" + std::to_string(k));
  if (!j.contains("X19") || !j.at("X19").is_string()) fail(ErrorCode::InvalidArgument, where + ": X19 must be text");
  r.comment = j.at("X19").get<std::string>();
  return r;
}

/// Full canonical state (everything but timestamps and the log itself).
inline json state_json(const ExerciseSession& s) {
  json cycles = json::array();
  for (const auto& c : s.cycles) cycles.push_back(to_json(c, true));
  json surveys = json::array();
  for (const auto& r : s.surveys) surveys.push_back(to_json(r));
  return json{{"sessionId", s.sessionId},
              {"scenarioId", s.scenarioId},
              {"phase", std::string(to_string(s.phase))},
              {"participants", {{"np", s.participants.np}, {"no", s.participants.no}, {"gs", s.participants.gs}}},
              {"cycles", std::move(cycles)},
              {"timeline", to_json(s.timeline)},
              {"surveys", std::move(surveys)},
              {"preliminaryNotes", s.preliminaryNotes},
              {"closureNotes", s.closureNotes}};
}

inline std::string state_hash(const ExerciseSession& s) { return sha256_hex(state_json(s).dump()); }

/// Compact session view for clients: no trajectory series.
inline json session_view(const ExerciseSession& s, const Scenario& sc) {
  json cycles = json::array();
  for (const auto& c : s.cycles) cycles.push_back(to_json(c, false));
  json v{{"sessionId", s.sessionId},
         {"scenarioId", s.scenarioId},
         {"phase", std::string(to_string(s.phase))},
         {"participants", {{"np", s.participants.np}, {"no", s.participants.no}, {"gs", s.participants.gs}}},
         {"eventCount", sc.event_count()},
         {"simulations", sc.simulation.runs},
         {"perspectives", sc.simulation.perspectives},
         {"cycles", std::move(cycles)},
         {"surveyCount", s.surveys.size()},
         {"logSeq", s.last_seq()},
         {"streamSeq", s.stream.empty() ? 0 : s.stream.back().seq},
         {"createdAt", s.createdAt},
         {"updatedAt", s.updatedAt}};
  if (const auto* c = s.current_cycle(); c && s.phase == SessionPhase::Execution) {
    const Event& ev = sc.event(c->eventIndex);
    json courses = json::array();
    for (const auto& coa : ev.courses) {
      courses.push_back({{"id", coa.id}, {"title", coa.title}, {"rationale", coa.rationale},
                         {"leadTime", coa.leadTime}, {"costLabel", coa.costLabel}});
    }
    v["current"] = {{"event", c->eventIndex},
                    {"phase", std::string(to_string(ev.phase))},
                    {"step", std::string(to_string(c->step))},
                    {"narrative", ev.narrative},
                    {"contextNotes", ev.contextNotes},
                    {"guidingQuestions", ev.guidingQuestions},
                    {"courses", std::move(courses)}};
  }
  return v;
}

// ---------------------------------------------------------------------------
// State transitions. Every mutation goes through apply_record so a replay of
// the log runs exactly the code that produced it.

namespace detail {

[[noreturn]] inline void illegal(const ExerciseSession& s, std::string_view requested, const std::string& why = "") {
  std::string msg = "illegal transition: " + std::string(requested) + " in phase " + std::string(to_string(s.phase));
  if (const auto* c = s.current_cycle(); c && s.phase == SessionPhase::Execution) {
    msg += ", event " + std::to_string(c->eventIndex) + " step " + std::string(to_string(c->step));
  }
  if (!why.empty()) msg += " (" + why + ")";
  fail(ErrorCode::IllegalTransition, msg);
}

inline void publish_runs(ExerciseSession& s, const EventCycle& c) {
  for (const auto& run : c.runs) {
    for (const auto& snap : run.samples) {
      s.stream.push_back({s.stream.size() + 1, c.eventIndex, run.runId, snap});
    }
  }
}

inline void apply_advance(ExerciseSession& s, const Scenario& sc, Action action, const json& payload) {
  const std::string_view name = to_string(action);
  switch (action) {
    case Action::BeginExecution: {
      if (s.phase != SessionPhase::Preliminary) illegal(s, name);
      s.phase = SessionPhase::Execution;
      s.cycles.push_back(start_event(sc, s.cycles, 1));
      return;
    }
    case Action::NextStep: {
      if (s.phase != SessionPhase::Execution) illegal(s, name);
      EventCycle& c = *s.current_cycle();
      if (c.concluded) illegal(s, name, "all events concluded; begin closure");
      if (c.step == CycleStep::Presentation) {
        run_event_simulations(sc, c, s.timeline);
        publish_runs(s, c);
      } else if (c.step == CycleStep::Conclusions) {
        s.timeline = conclude_event(sc, c, s.timeline, c.chosenCourse, "");
        if (c.eventIndex < sc.event_count()) s.cycles.push_back(start_event(sc, s.cycles, c.eventIndex + 1));
      } else {
        advance_step(c);
      }
      return;
    }
    case Action::SubmitCoa: {
      if (s.phase != SessionPhase::Execution) illegal(s, name);
      if (!payload.contains("coaId") || !payload.at("coaId").is_string()) {
        fail(ErrorCode::InvalidArgument, "SUBMIT_COA needs a string coaId");
      }
      choose_course(sc, *s.current_cycle(), payload.at("coaId").get<std::string>());
      return;
    }
    case Action::SubmitNotes: {
      if (!payload.contains("text") || !payload.at("text").is_string()) {
        fail(ErrorCode::InvalidArgument, "SUBMIT_NOTES needs a string text");
      }
      auto text = payload.at("text").get<std::string>();
      if (s.phase == SessionPhase::Preliminary) {
        s.preliminaryNotes.push_back(std::move(text));
      } else if (s.phase == SessionPhase::Closure) {
        s.closureNotes.push_back(std::move(text));
      } else if (s.phase == SessionPhase::Execution) {
        EventCycle& c = *s.current_cycle();
        if (c.concluded) illegal(s, name, "event already concluded");
        if (c.step == CycleStep::Discussion) {
          c.discussionNotes = std::move(text);
        } else if (c.step == CycleStep::Conclusions) {
          c.conclusionNotes = std::move(text);
        } else {
          illegal(s, name, "notes are taken during DISCUSSION or CONCLUSIONS");
        }
      } else {
        illegal(s, name);
      }
      return;
    }
    case Action::BeginClosure: {
      if (s.phase != SessionPhase::Execution) illegal(s, name);
      const auto concluded = std::count_if(s.cycles.begin(), s.cycles.end(), [](const auto& c) { return c.concluded; });
      if (concluded != sc.event_count()) {
        illegal(s, name, std::to_string(concluded) + " of " + std::to_string(sc.event_count()) + " events concluded");
      }
      s.phase = SessionPhase::Closure;
      return;
    }
    case Action::Archive: {
      if (s.phase != SessionPhase::Closure) illegal(s, name);
      s.phase = SessionPhase::Archived;
      return;
    }
  }
}

inline std::vector<SurveyResponse> survey_rows_from_payload(const json& payload) {
  std::vector<SurveyResponse> rows;
  std::vector<std::string> errors;
  if (payload.contains("csv")) {
    if (!payload.at("csv").is_string()) fail(ErrorCode::InvalidArgument, "csv must be a string");
    auto parsed = parse_survey_csv(payload.at("csv").get<std::string>());
    rows = std::move(parsed.rows);
    errors = std::move(parsed.errors);
  } else if (payload.contains("rows") && payload.at("rows").is_array()) {
    std::size_t i = 0;
    for (const auto& j : payload.at("rows")) {
      const std::string where = "row " + std::to_string(++i);
      try {
        auto r = survey_response_from_json(j, where);
        auto errs = validate_response(r, where);
        if (errs.empty()) {
          rows.push_back(std::move(r));
        } else {
          errors.insert(errors.end(), errs.begin(), errs.end());
        }
      } catch (const Error& e) {
        errors.emplace_back(e.what());
      }
    }
  } else {
    fail(ErrorCode::InvalidArgument, "survey payload needs either csv or rows");
  }
  if (!errors.empty()) {
    std::string msg = "survey rejected: " + errors.front();
    for (std::size_t k = 1; k < errors.size(); ++k) msg += "; " + errors[k];
    fail(ErrorCode::InvalidArgument, msg);
  }
  return rows;
}

}  // namespace detail

inline ExerciseSession create_session_state(const Scenario& sc, std::string sessionId, const Participants& who) {
  if (who.np < 1) fail(ErrorCode::InvalidArgument, "np (participants) must be >= 1");
  if (who.no < 0) fail(ErrorCode::InvalidArgument, "no (observers) must be >= 0");
  ExerciseSession s;
  s.sessionId = std::move(sessionId);
  s.scenarioId = sc.id;
  s.participants = who;
  s.timeline = initial_timeline(sc);
  return s;
}

/// Applies one log record to the session. CREATE records are handled by
/// the caller (they construct the session).
inline void apply_record(ExerciseSession& s, const Scenario& sc, const LogRecord& rec) {
  if (rec.action == kSurveyAction) {
    if (s.phase != SessionPhase::Closure) detail::illegal(s, kSurveyAction, "surveys are collected during CLOSURE");
    auto rows = detail::survey_rows_from_payload(rec.payload);
    s.surveys.insert(s.surveys.end(), rows.begin(), rows.end());
  } else {
    detail::apply_advance(s, sc, parse_action(rec.action), rec.payload);
  }
}

inline Participants participants_from_json(const json& j) {
  Participants p;
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "participants must be an object");
  if (!j.contains("np") || !j.at("np").is_number_integer()) fail(ErrorCode::InvalidArgument, "participants.np must be an integer");
  p.np = j.at("np").get<int>();
  if (j.contains("no")) {
    if (!j.at("no").is_number_integer()) fail(ErrorCode::InvalidArgument, "participants.no must be an integer");
    p.no = j.at("no").get<int>();
  }
  if (j.contains("gs")) p.gs = j.at("gs").get<std::string>();
  return p;
}

/// Rebuilds a session from its log alone.
inline ExerciseSession replay(const Scenario& sc, const std::vector<LogRecord>& log) {
  if (log.empty() || log.front().action != kCreateAction) fail(ErrorCode::Io, "log does not start with CREATE");
  const auto& create = log.front().payload;
  ExerciseSession s = create_session_state(sc, create.at("sessionId").get<std::string>(),
                                           participants_from_json(create.at("participants")));
  if (create.at("scenarioId").get<std::string>() != sc.id) fail(ErrorCode::Io, "log belongs to another scenario");
  s.createdAt = log.front().timestamp;
  for (std::size_t k = 0; k < log.size(); ++k) {
    if (log[k].seq != k + 1) fail(ErrorCode::Io, "log sequence gap at record " + std::to_string(k + 1));
    if (k > 0) apply_record(s, sc, log[k]);
    s.updatedAt = log[k].timestamp;
  }
  s.log = log;
  return s;
}

// ---------------------------------------------------------------------------
// Report

namespace detail {

inline json series_json(const std::vector<PerspectiveSnapshot>& samples) {
  json out = json::array();
  for (const auto& s : samples) out.push_back(to_json(s));
  return out;
}

inline std::vector<PerspectiveSnapshot> mean_series(const std::vector<Trajectory>& runs) {
  std::vector<PerspectiveSnapshot> mean = runs.front().samples;
  for (auto& snap : mean) snap = PerspectiveSnapshot{snap.time, {}, 0.0, 0.0, 0.0};
  const auto n = static_cast<double>(runs.size());
  for (const auto& run : runs) {
    for (std::size_t k = 0; k < mean.size() && k < run.samples.size(); ++k) {
      const auto& s = run.samples[k];
      for (std::size_t c = 0; c < kCompartmentCount; ++c) mean[k].histogram[c] += s.histogram[c] / n;
      mean[k].healthyFraction += s.healthyFraction / n;
      mean[k].serviceAvailability += s.serviceAvailability / n;
      mean[k].cyberRisk += s.cyberRisk / n;
    }
  }
  return mean;
}

}  // namespace detail

inline json survey_aggregates(const std::vector<SurveyResponse>& rows) {
  json out{{"n", rows.size()}};
  json footnotes = json::array();
  footnotes.push_back(
      "paperModel.multipleCorrelation stores the reported correlation 0.935 as the multiple correlation "
      "coefficient sqrt(R^2); the source wording could also mean inter-predictor correlation.");
  footnotes.push_back("paperModel statistics are carried as reported; the underlying responses are unpublished.");
  const auto pm = paper_model();
  out["paperModel"] = {{"rSquared", pm.rSquared},
                       {"adjustedRSquared", pm.adjustedRSquared},
                       {"residualStdDev", pm.residualStdDev},
                       {"multipleCorrelation", pm.multipleCorrelation},
                       {"n", pm.n},
                       {"p", pm.p}};
  out["footnotes"] = std::move(footnotes);
  if (rows.empty()) return out;

  const auto d = descriptive_stats(rows);
  json proportions = json::object();
  for (std::size_t k = 0; k < kSurveyBinaryVars; ++k) proportions["X" + std::to_string(k + 1)] = round_to(d.proportions[k], 3);
  json means = json::object();
  means["Y"] = round_to(d.meanY, 3);
  for (std::size_t k = kSurveyBinaryVars; k < kSurveyNumericVars; ++k) means["X" + std::to_string(k + 1)] = round_to(d.means[k], 3);
  out["proportions"] = std::move(proportions);
  out["means"] = std::move(means);
  out["composites"] = {{"generalEvaluation", round_to(d.generalEvaluation, 3)},
                       {"scenarioEvaluation", round_to(d.scenarioEvaluation, 3)},
                       {"modelAccuracy", round_to(d.modelAccuracy, 3)}};
  try {
    const auto fit = fit_ols(rows);
    json coef = json::object();
    for (std::size_t k = 0; k < fit.coefficients.size(); ++k) coef[fit.names[k]] = round_to(fit.coefficients[k], 4);
    out["fit"] = {{"intercept", round_to(fit.intercept, 4)},
                  {"coefficients", std::move(coef)},
                  {"rSquared", round_to(fit.rSquared, 4)},
                  {"adjustedRSquared", round_to(fit.adjustedRSquared, 4)},
                  {"residualStdDev", round_to(fit.residualStdDev, 4)},
                  {"multipleCorrelation", round_to(fit.multipleCorrelation, 4)},
                  {"n", fit.n}};
  } catch (const Error& e) {
    out["fit"] = {{"error", e.what()}};
  }
  return out;
}

/// Deterministic closure report: identical sessions produce identical bytes.
inline json export_report(const ExerciseSession& s, const Scenario& sc) {
  if (s.phase != SessionPhase::Closure && s.phase != SessionPhase::Archived) {
    fail(ErrorCode::IllegalTransition, "report is available from CLOSURE on; session is in " +
                                           std::string(to_string(s.phase)));
  }
  json events = json::array();
  json series = json::array();
  std::string lessons;
  for (const auto& c : s.cycles) {
    if (!c.concluded) continue;
    const Event& ev = sc.event(c.eventIndex);
    json e{{"event", c.eventIndex},
           {"phase", std::string(to_string(ev.phase))},
           {"narrative", ev.narrative},
           {"discussionNotes", c.discussionNotes},
           {"conclusionNotes", c.conclusionNotes},
           {"chosenCourse", c.chosenCourse ? json(*c.chosenCourse) : json(nullptr)}};
    if (c.chosenCourse) e["chosenCourseTitle"] = ev.find_course(*c.chosenCourse)->title;
    if (c.runScore) e["runScore"] = to_json(*c.runScore);
    if (c.chosenScore) e["chosenScore"] = to_json(*c.chosenScore);
    events.push_back(std::move(e));

    json runs = json::array();
    for (const auto& r : c.runs) runs.push_back({{"runId", r.runId}, {"seed", r.seed}, {"samples", detail::series_json(r.samples)}});
    series.push_back({{"event", c.eventIndex}, {"runs", std::move(runs)}, {"mean", detail::series_json(detail::mean_series(c.runs))}});
    if (!c.conclusionNotes.empty()) lessons += "Event " + std::to_string(c.eventIndex) + ": " + c.conclusionNotes + "\n";
  }
  for (const auto& n : s.closureNotes) lessons += n + "\n";
  return json{{"sessionId", s.sessionId},
              {"scenario", {{"id", sc.id}, {"title", sc.title}}},
              {"phase", std::string(to_string(s.phase))},
              {"participants", {{"np", s.participants.np}, {"no", s.participants.no}, {"gs", s.participants.gs}}},
              {"events", std::move(events)},
              {"perspectiveSeries", std::move(series)},
              {"surveys", survey_aggregates(s.surveys)},
              {"lessonsLearned", lessons}};
}

}  // namespace ttx
