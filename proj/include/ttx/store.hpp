#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "ttx/engine.hpp"
#include "ttx/error.hpp"
#include "ttx/scenario.hpp"
#include "ttx/session.hpp"

namespace ttx {

using Clock = std::function<std::string()>;

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char frac[8];
  std::snprintf(frac, sizeof frac, ".%03dZ", static_cast<int>(ms));
  return std::string(buf) + frac;
}

/// Owns every exercise session and, when given a data directory, persists
/// each one as `<root>/<sessionId>/{scenario.json, log.jsonl, surveys.csv}`.
///
/// Reads see the last published snapshot of a session. Mutations are serialized per
/// session; a mutation that arrives while another is in flight, or whose
/// `expectedSeq` is stale, is rejected with ErrorCode::Conflict.
class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> root = std::nullopt, Clock clock = utc_now)
      : root_(std::move(root)), clock_(std::move(clock)) {
    if (root_) std::filesystem::create_directories(*root_);
  }

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  // -- scenarios ------------------------------------------------------------

  void register_scenario(Scenario sc) {
    std::unique_lock lock(mutex_);
    auto id = sc.id;
    scenarios_[id] = std::make_shared<const Scenario>(std::move(sc));
  }

  /// Registers every `*.json` scenario file in `dir`.
  void load_scenarios(const std::filesystem::path& dir) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") register_scenario(load_scenario_file(entry.path().string()));
    }
  }

  std::shared_ptr<const Scenario> scenario(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = scenarios_.find(id);
    if (it == scenarios_.end()) fail(ErrorCode::NotFound, "unknown scenario: " + id);
    return it->second;
  }

  std::vector<std::string> scenario_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : scenarios_) ids.push_back(id);
    return ids;
  }

  // -- lifecycle ------------------------------------------------------------

  std::string create_session(const std::string& scenarioId, const Participants& who,
                             const std::string& actor = "facilitator") {
    auto sc = scenario(scenarioId);
    std::unique_lock lock(mutex_);
    char id[32];
    do {
      // skip ids left on disk by an earlier process that was not recovered
      std::snprintf(id, sizeof id, "sess-%04llu", static_cast<unsigned long long>(++next_id_));
    } while (sessions_.count(id) || (root_ && std::filesystem::exists(*root_ / id)));
    auto slot = std::make_unique<Slot>();
    slot->scenario = sc;
    auto s = create_session_state(*sc, id, who);
    LogRecord rec = make_record(s, actor, std::string(kCreateAction),
                                json{{"sessionId", id},
                                     {"scenarioId", scenarioId},
                                     {"participants", {{"np", who.np}, {"no", who.no}, {"gs", who.gs}}}});
    s.createdAt = rec.timestamp;
    s.updatedAt = rec.timestamp;
    s.log.push_back(rec);
    slot->current = std::make_shared<const ExerciseSession>(std::move(s));
    if (root_) {
      auto dir = *root_ / id;
      std::filesystem::create_directories(dir);
      write_file(dir / "scenario.json", sc->document.dump(2) + "\n");
      append_log(dir, rec);
    }
    sessions_[id] = std::move(slot);
    return id;
  }

  json advance(const std::string& sessionId, Action action, const json& payload = json::object(),
               const std::string& actor = "facilitator", std::optional<std::uint64_t> expectedSeq = std::nullopt) {
    return mutate(sessionId, std::string(to_string(action)), payload, actor, expectedSeq);
  }

  /// Validates and stores survey rows (CSV text or JSON rows). All-or-nothing.
  json ingest_survey(const std::string& sessionId, const json& payload, const std::string& actor = "facilitator") {
    auto view = mutate(sessionId, std::string(kSurveyAction), payload, actor, std::nullopt);
    auto s = find(sessionId).load();
    if (root_) write_file(*root_ / sessionId / "surveys.csv", to_survey_csv(s->surveys));
    return json{{"accepted", true}, {"stored", s->surveys.size()}, {"session", std::move(view)}};
  }

  // -- reads ----------------------------------------------------------------

  json view(const std::string& sessionId) const {
    return read(sessionId, [](const ExerciseSession& s, const Scenario& sc) { return session_view(s, sc); });
  }

  json runs(const std::string& sessionId, int eventIndex) const {
    return read(sessionId, [&](const ExerciseSession& s, const Scenario&) {
      for (const auto& c : s.cycles) {
        if (c.eventIndex == eventIndex) {
          if (c.runs.empty()) fail(ErrorCode::NotFound, "event " + std::to_string(eventIndex) + " has no runs yet");
          json runs = json::array();
          for (const auto& r : c.runs) runs.push_back(to_json(r));
          return json{{"event", eventIndex}, {"runs", std::move(runs)}};
        }
      }
      fail(ErrorCode::NotFound, "event " + std::to_string(eventIndex) + " has not started");
    });
  }

  /// What-if projection of a course on the current event. Read-only.
  json whatif(const std::string& sessionId, const std::string& coaId, double horizon) const {
    return read(sessionId, [&](const ExerciseSession& s, const Scenario& sc) {
      const auto* c = s.current_cycle();
      if (s.phase != SessionPhase::Execution || !c) {
        fail(ErrorCode::IllegalTransition, "what-if projections need an active event");
      }
      auto runs = project_course_of_action(sc, *c, s.timeline, coaId, horizon);
      json out_runs = json::array();
      for (const auto& r : runs) out_runs.push_back(to_json(r));
      return json{{"event", c->eventIndex}, {"coaId", coaId}, {"horizon", horizon},
                  {"runs", std::move(out_runs)}, {"score", to_json(score_projection(runs))}};
    });
  }

  json report(const std::string& sessionId) const {
    return read(sessionId, [](const ExerciseSession& s, const Scenario& sc) { return export_report(s, sc); });
  }

  SessionPhase phase(const std::string& sessionId) const { return find(sessionId).load()->phase; }

  std::string hash(const std::string& sessionId) const {
    return read(sessionId, [](const ExerciseSession& s, const Scenario&) { return state_hash(s); });
  }

  ExerciseSession snapshot(const std::string& sessionId) const {
    return read(sessionId, [](const ExerciseSession& s, const Scenario&) { return s; });
  }

  std::shared_ptr<const Scenario> session_scenario(const std::string& sessionId) const {
    return find(sessionId).scenario;
  }

  /// Stream records with seq > `after`. When `wait` is set, blocks until at
  /// least one is available, the session is archived, or `timeout` passes.
  std::vector<StreamRecord> stream_since(const std::string& sessionId, std::uint64_t after, bool wait,
                                         std::chrono::milliseconds timeout = std::chrono::seconds(15)) const {
    const Slot& slot = find(sessionId);
    std::shared_ptr<const ExerciseSession> s;
    {
      std::unique_lock lock(slot.guard);
      if (wait) {
        slot.published.wait_for(lock, timeout, [&] {
          return slot.current->stream.size() > after || slot.current->phase == SessionPhase::Archived;
        });
      }
      s = slot.current;
    }
    const auto& st = s->stream;
    if (after >= st.size()) return {};
    return {st.begin() + static_cast<std::ptrdiff_t>(after), st.end()};
  }

  // -- recovery -------------------------------------------------------------

  /// Reloads every persisted session under the data directory by replaying
  /// its log against its own scenario copy.
  void recover() {
    if (!root_) return;
    for (const auto& entry : std::filesystem::directory_iterator(*root_)) {
      if (!entry.is_directory()) continue;
      auto dir = entry.path();
      if (!std::filesystem::exists(dir / "log.jsonl")) continue;
      auto sc = std::make_shared<const Scenario>(load_scenario_file((dir / "scenario.json").string()));
      auto log = read_log(dir / "log.jsonl");
      auto slot = std::make_unique<Slot>();
      slot->scenario = sc;
      slot->current = std::make_shared<const ExerciseSession>(replay(*sc, log));
      std::unique_lock lock(mutex_);
      const auto& id = slot->current->sessionId;
      unsigned long long num = 0;
      if (std::sscanf(id.c_str(), "sess-%llu", &num) == 1) next_id_ = std::max<std::uint64_t>(next_id_, num);
      if (!scenarios_.count(sc->id)) scenarios_[sc->id] = sc;
      sessions_[id] = std::move(slot);
    }
  }

  static std::vector<LogRecord> read_log(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) fail(ErrorCode::Io, "cannot open log: " + file.string());
    std::vector<LogRecord> out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      out.push_back(log_record_from_json(json::parse(line)));
    }
    return out;
  }

  std::optional<std::filesystem::path> session_dir(const std::string& sessionId) const {
    if (!root_) return std::nullopt;
    return *root_ / sessionId;
  }

 private:
  // Readers take the current immutable snapshot under a short lock and work
  // on it unlocked, so a long read never delays a writer's publish.
  struct Slot {
    std::shared_ptr<const Scenario> scenario;
    std::shared_ptr<const ExerciseSession> current;
    mutable std::mutex guard;
    mutable std::condition_variable published;
    std::mutex writer;

    std::shared_ptr<const ExerciseSession> load() const {
      std::lock_guard lock(guard);
      return current;
    }
  };

  Slot& find(const std::string& sessionId) const {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(sessionId);
    if (it == sessions_.end()) fail(ErrorCode::NotFound, "unknown session: " + sessionId);
    return *it->second;
  }

  template <typename F>
  auto read(const std::string& sessionId, F&& f) const -> std::invoke_result_t<F, const ExerciseSession&, const Scenario&> {
    const Slot& slot = find(sessionId);
    return f(*slot.load(), *slot.scenario);
  }

  LogRecord make_record(const ExerciseSession& s, const std::string& actor, std::string action, json payload) const {
    LogRecord rec;
    rec.seq = s.last_seq() + 1;
    rec.timestamp = clock_();
    rec.actor = actor;
    rec.action = std::move(action);
    rec.digest = sha256_hex(payload.dump());
    rec.payload = std::move(payload);
    return rec;
  }

  json mutate(const std::string& sessionId, std::string action, const json& payload, const std::string& actor,
              std::optional<std::uint64_t> expectedSeq) {
    Slot& slot = find(sessionId);
    std::unique_lock writer(slot.writer, std::try_to_lock);
    if (!writer.owns_lock()) {
      fail(ErrorCode::Conflict, "another mutation of session " + sessionId + " is in progress");
    }
    auto prev = slot.load();
    if (expectedSeq && *expectedSeq != prev->last_seq()) {
      fail(ErrorCode::Conflict, "stale request: expected log seq " + std::to_string(*expectedSeq) + ", session is at " +
                                    std::to_string(prev->last_seq()));
    }
    ExerciseSession next = *prev;
    LogRecord rec = make_record(next, actor, std::move(action), payload.is_null() ? json::object() : payload);
    apply_record(next, *slot.scenario, rec);
    next.log.push_back(rec);
    next.updatedAt = rec.timestamp;
    if (root_) append_log(*root_ / sessionId, rec);
    auto published = std::make_shared<const ExerciseSession>(std::move(next));
    {
      std::lock_guard lock(slot.guard);
      slot.current = published;
    }
    slot.published.notify_all();
    return session_view(*published, *slot.scenario);
  }

  static void write_file(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + file.string());
    out << text;
  }

  static void append_log(const std::filesystem::path& dir, const LogRecord& rec) {
    std::ofstream out(dir / "log.jsonl", std::ios::app);
    if (!out) fail(ErrorCode::Io, "cannot append to log in " + dir.string());
    out << to_json(rec).dump() << "\n";
    out.flush();
  }

  std::optional<std::filesystem::path> root_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const Scenario>> scenarios_;
  std::map<std::string, std::unique_ptr<Slot>> sessions_;
  std::uint64_t next_id_ = 0;
};

}  // namespace ttx
