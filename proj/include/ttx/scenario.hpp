#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ttx/compartment.hpp"
#include "ttx/error.hpp"
#include "ttx/json_io.hpp"
#include "ttx/params.hpp"
#include "ttx/perspectives.hpp"
#include "ttx/simulate.hpp"
#include "ttx/state.hpp"
#include "ttx/topology.hpp"

namespace ttx {

enum class CrisisPhase { PreCrisis, Crisis, PostCrisis };

inline std::string_view to_string(CrisisPhase p) {
  switch (p) {
    case CrisisPhase::PreCrisis: return "PRE_CRISIS";
    case CrisisPhase::Crisis: return "CRISIS";
    case CrisisPhase::PostCrisis: return "POST_CRISIS";
  }
  return "CRISIS";
}

struct CourseOfAction {
  std::string id;
  std::string title;
  std::string rationale;
  DeltaSet deltas;
  double leadTime = 0.0;  // hours between the decision and the deltas taking effect
  std::string costLabel;
};

struct Event {
  int index = 1;
  CrisisPhase phase = CrisisPhase::Crisis;
  double atTime = 0.0;
  std::string narrative;
  std::string contextNotes;
  DeltaSet deltas;
  std::vector<std::string> guidingQuestions;
  std::vector<CourseOfAction> courses;

  const CourseOfAction* find_course(std::string_view id) const {
    for (const auto& c : courses) {
      if (c.id == id) return &c;
    }
    return nullptr;
  }
};

struct SimulationConfig {
  int runs = 1;              // s
  int perspectives = 3;      // pm, fixed
  double horizonPerEvent = 24.0;
  double dt = kDefaultDt;
  SimMode mode = SimMode::MeanField;
  std::uint64_t baseSeed = 0;
  bool jitter = false;       // +/-10% per-run jitter on beta and sigma (mean-field only)
  std::size_t sampleStride = 1;
};

/// A fully validated exercise scenario.
///
/// Event i simulates the window [t0 + (i-1)H, t0 + iH] where H is
/// horizonPerEvent; its atTime must fall inside that window.
struct Scenario {
  std::string id;
  std::string title;
  std::string description;
  Topology topology;
  PropagationParams baseParams;
  std::vector<Occupancy> initialOccupancy;
  std::vector<Event> events;
  SimulationConfig simulation;
  PerspectiveWeights weights;
  json document;  // source document, kept for persistence

  int event_count() const { return static_cast<int>(events.size()); }

  const Event& event(int i) const {
    if (i < 1 || i > event_count()) fail(ErrorCode::NotFound, "no such event: " + std::to_string(i));
    return events[static_cast<std::size_t>(i - 1)];
  }

  double window_start(int i) const { return static_cast<double>(i - 1) * simulation.horizonPerEvent; }

  CompartmentState initial_state() const {
    if (simulation.mode == SimMode::MeanField) return CompartmentState::mean_field(initialOccupancy);
    std::vector<Compartment> labels;
    for (const auto& occ : initialOccupancy) {
      auto it = std::find(occ.begin(), occ.end(), 1.0);
      labels.push_back(kAllCompartments[static_cast<std::size_t>(it - occ.begin())]);
    }
    return CompartmentState::agent(std::move(labels));
  }

  SimulationOptions options() const {
    SimulationOptions o;
    o.dt = simulation.dt;
    o.sampleStride = simulation.sampleStride;
    o.weights = weights;
    return o;
  }
};

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  [[noreturn]] void error(const std::string& msg) const { fail(ErrorCode::Schema, path_ + ": " + msg); }

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  void expect_object(std::initializer_list<std::string_view> allowed) const {
    if (!j_.is_object()) error("expected an object");
    for (const auto& [key, _] : j_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) error("unknown key '" + key + "'");
    }
  }

  bool has(std::string_view key) const { return j_.contains(std::string(key)); }

  Reader at(std::string_view key) const {
    if (!has(key)) error("missing required key '" + std::string(key) + "'");
    return Reader(j_.at(std::string(key)), path_ + "." + std::string(key));
  }

  Reader at(std::size_t i) const { return Reader(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::size_t array_size() const {
    if (!j_.is_array()) error("expected an array");
    return j_.size();
  }

  std::string str() const {
    if (!j_.is_string()) error("expected a string");
    return j_.get<std::string>();
  }
  double num() const {
    if (!j_.is_number()) error("expected a number");
    return j_.get<double>();
  }
  std::int64_t integer() const {
    if (!j_.is_number_integer()) error("expected an integer");
    return j_.get<std::int64_t>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) error("expected a boolean");
    return j_.get<bool>();
  }

  std::string str_or(std::string_view key, std::string fallback) const { return has(key) ? at(key).str() : fallback; }
  double num_or(std::string_view key, double fallback) const { return has(key) ? at(key).num() : fallback; }

 private:
  const json& j_;
  std::string path_;
};

inline DeltaSet read_deltas(const Reader& r) {
  if (!r.raw().is_object()) r.error("expected an object of parameter deltas");
  DeltaSet out;
  for (const auto& [name, body] : r.raw().items()) {
    Reader d(body, r.path() + "." + name);
    if (!is_param_name(name)) d.error("unknown parameter: " + name);
    if (!body.is_object() || body.size() != 1) d.error("expected exactly one of {set, add, mul}");
    auto it = body.begin();
    auto op = parse_delta_op(it.key());
    if (!op) d.error("unknown delta operation '" + it.key() + "'");
    out.push_back({name, *op, Reader(it.value(), d.path() + "." + it.key()).num()});
  }
  return out;
}

inline PropagationParams read_params(const Reader& r) {
  if (!r.raw().is_object()) r.error("expected an object");
  PropagationParams p;
  for (const auto& [name, value] : r.raw().items()) {
    Reader v(value, r.path() + "." + name);
    if (!is_param_name(name)) v.error("unknown parameter: " + name);
    set_param(p, name, v.num());
  }
  try {
    validate(p);
  } catch (const Error& e) {
    r.error(e.what());
  }
  return p;
}

inline CrisisPhase read_phase(const Reader& r) {
  auto s = r.str();
  if (s == "PRE_CRISIS") return CrisisPhase::PreCrisis;
  if (s == "CRISIS") return CrisisPhase::Crisis;
  if (s == "POST_CRISIS") return CrisisPhase::PostCrisis;
  r.error("phase must be PRE_CRISIS, CRISIS or POST_CRISIS");
}

inline Occupancy read_occupancy(const Reader& r) {
  if (r.raw().is_string()) {
    auto c = parse_compartment(r.str());
    if (!c) r.error("unknown compartment '" + r.str() + "'");
    return indicator(*c);
  }
  if (!r.raw().is_object()) r.error("expected a compartment label or an object of fractions");
  Occupancy occ{};
  double sum = 0.0;
  for (const auto& [key, value] : r.raw().items()) {
    auto c = parse_compartment(key);
    Reader v(value, r.path() + "." + key);
    if (!c) v.error("unknown compartment '" + key + "'");
    double f = v.num();
    if (f < 0.0) v.error("fraction must be >= 0");
    occ[index(*c)] = f;
    sum += f;
  }
  if (std::abs(sum - 1.0) > kConservationTolerance) r.error("fractions must sum to 1");
  return occ;
}

}  // namespace detail

/// Parses and validates a scenario document. Every diagnostic carries a
/// JSON path such as `$.events[2].courses[0].leadTime`.
inline Scenario load_scenario(const json& doc) {
  using detail::Reader;
  Reader root(doc, "$");
  root.expect_object({"meta", "topology", "params", "initialState", "events", "simulation", "perspectiveWeights"});

  Scenario sc;
  sc.document = doc;

  auto meta = root.at("meta");
  meta.expect_object({"id", "title", "description"});
  sc.id = meta.at("id").str();
  if (sc.id.empty()) meta.at("id").error("must not be empty");
  sc.title = meta.str_or("title", sc.id);
  sc.description = meta.str_or("description", "");

  auto topo = root.at("topology");
  topo.expect_object({"nodes", "edges", "directed"});
  std::vector<Node> nodes;
  auto jn = topo.at("nodes");
  for (std::size_t i = 0; i < jn.array_size(); ++i) {
    auto n = jn.at(i);
    n.expect_object({"id", "label", "kind", "serviceWeight"});
    Node node;
    node.id = n.at("id").str();
    node.label = n.str_or("label", node.id);
    if (n.has("kind")) {
      auto kind = parse_node_kind(n.at("kind").str());
      if (!kind) n.at("kind").error("kind must be IT, OT, NETWORK or SERVICE");
      node.kind = *kind;
    }
    node.serviceWeight = n.num_or("serviceWeight", 1.0);
    nodes.push_back(std::move(node));
  }
  std::vector<Edge> edges;
  if (topo.has("edges")) {
    auto je = topo.at("edges");
    for (std::size_t i = 0; i < je.array_size(); ++i) {
      auto e = je.at(i);
      e.expect_object({"from", "to", "contactRate"});
      edges.push_back({e.at("from").str(), e.at("to").str(), e.num_or("contactRate", 1.0)});
    }
  }
  bool directed = topo.has("directed") && topo.at("directed").boolean();
  try {
    sc.topology = build_topology(std::move(nodes), std::move(edges), directed);
  } catch (const Error& e) {
    topo.error(e.what());
  }

  sc.baseParams = detail::read_params(root.at("params"));

  sc.initialOccupancy.assign(sc.topology.size(), indicator(Compartment::S));
  if (root.has("initialState")) {
    auto init = root.at("initialState");
    if (!init.raw().is_object()) init.error("expected an object keyed by node id");
    for (const auto& [id, value] : init.raw().items()) {
      Reader v(value, init.path() + "." + id);
      auto idx = sc.topology.find(id);
      if (!idx) v.error("unknown node id '" + id + "'");
      sc.initialOccupancy[*idx] = detail::read_occupancy(v);
    }
  }

  auto sim = root.at("simulation");
  sim.expect_object({"s", "horizonPerEvent", "dt", "mode", "baseSeed", "jitter", "sampleStride"});
  sc.simulation.runs = static_cast<int>(sim.at("s").integer());
  if (sc.simulation.runs < 1) sim.at("s").error("must be >= 1");
  sc.simulation.horizonPerEvent = sim.at("horizonPerEvent").num();
  if (!(sc.simulation.horizonPerEvent > 0.0)) sim.at("horizonPerEvent").error("must be > 0");
  sc.simulation.dt = sim.num_or("dt", kDefaultDt);
  if (!(sc.simulation.dt > 0.0)) sim.at("dt").error("must be > 0");
  if (sim.has("mode")) {
    try {
      sc.simulation.mode = parse_sim_mode(sim.at("mode").str());
    } catch (const Error&) {
      sim.at("mode").error("mode must be meanfield or agent");
    }
  }
  if (sim.has("baseSeed")) {
    auto seed = sim.at("baseSeed").integer();
    if (seed < 0) sim.at("baseSeed").error("must be >= 0");
    sc.simulation.baseSeed = static_cast<std::uint64_t>(seed);
  }
  if (sim.has("jitter")) sc.simulation.jitter = sim.at("jitter").boolean();
  if (sim.has("sampleStride")) {
    auto stride = sim.at("sampleStride").integer();
    if (stride < 1) sim.at("sampleStride").error("must be >= 1");
    sc.simulation.sampleStride = static_cast<std::size_t>(stride);
  }
  if (sc.simulation.mode == SimMode::Agent) {
    for (std::size_t i = 0; i < sc.initialOccupancy.size(); ++i) {
      const auto& occ = sc.initialOccupancy[i];
      if (std::count(occ.begin(), occ.end(), 1.0) != 1) {
        root.at("initialState").error("agent mode needs a single label for node '" + sc.topology.nodes()[i].id + "'");
      }
    }
  }

  if (root.has("perspectiveWeights")) {
    auto pw = root.at("perspectiveWeights");
    pw.expect_object({"availability", "riskCompromised", "riskThreat"});
    if (pw.has("availability")) {
      auto av = pw.at("availability");
      av.expect_object({"S", "E", "R", "D", "U", "X"});
      for (const auto& [key, value] : av.raw().items()) {
        sc.weights.availability[index(*parse_compartment(key))] = Reader(value, av.path() + "." + key).num();
      }
    }
    sc.weights.riskCompromised = pw.num_or("riskCompromised", sc.weights.riskCompromised);
    sc.weights.riskThreat = pw.num_or("riskThreat", sc.weights.riskThreat);
    try {
      validate(sc.weights);
    } catch (const Error& e) {
      pw.error(e.what());
    }
  }

  auto events = root.at("events");
  if (events.array_size() == 0) events.error("a scenario needs at least one event");
  for (std::size_t k = 0; k < events.array_size(); ++k) {
    auto e = events.at(k);
    e.expect_object({"i", "phase", "atTime", "narrative", "contextNotes", "paramDeltas", "guidingQuestions", "courses"});
    Event ev;
    ev.index = static_cast<int>(e.at("i").integer());
    if (ev.index != static_cast<int>(k) + 1) {
      e.at("i").error("event index out of order: expected " + std::to_string(k + 1));
    }
    ev.phase = detail::read_phase(e.at("phase"));
    ev.atTime = e.at("atTime").num();
    if (ev.atTime < 0.0) e.at("atTime").error("must be >= 0");
    ev.narrative = e.str_or("narrative", "");
    ev.contextNotes = e.str_or("contextNotes", "");
    if (e.has("paramDeltas")) ev.deltas = detail::read_deltas(e.at("paramDeltas"));
    if (e.has("guidingQuestions")) {
      auto gq = e.at("guidingQuestions");
      for (std::size_t q = 0; q < gq.array_size(); ++q) ev.guidingQuestions.push_back(gq.at(q).str());
    }
    if (e.has("courses")) {
      auto cs = e.at("courses");
      for (std::size_t c = 0; c < cs.array_size(); ++c) {
        auto jc = cs.at(c);
        jc.expect_object({"id", "title", "rationale", "paramDeltas", "leadTime", "costLabel"});
        CourseOfAction coa;
        coa.id = jc.at("id").str();
        if (coa.id.empty()) jc.at("id").error("must not be empty");
        if (ev.find_course(coa.id)) jc.at("id").error("duplicate course id '" + coa.id + "'");
        coa.title = jc.str_or("title", coa.id);
        coa.rationale = jc.str_or("rationale", "");
        if (jc.has("paramDeltas")) coa.deltas = detail::read_deltas(jc.at("paramDeltas"));
        coa.leadTime = jc.num_or("leadTime", 0.0);
        if (coa.leadTime < 0.0) jc.at("leadTime").error("must be >= 0");
        coa.costLabel = jc.str_or("costLabel", "");
        ev.courses.push_back(std::move(coa));
      }
    }
    if (!sc.events.empty()) {
      const Event& prev = sc.events.back();
      if (ev.atTime < prev.atTime) e.at("atTime").error("events not time-ordered");
      if (static_cast<int>(ev.phase) < static_cast<int>(prev.phase)) e.at("phase").error("event phases must not go backwards");
    }
    sc.events.push_back(std::move(ev));
  }
  for (const auto& ev : sc.events) {
    double start = sc.window_start(ev.index);
    double end = start + sc.simulation.horizonPerEvent;
    if (ev.atTime < start || ev.atTime > end) {
      events.at(static_cast<std::size_t>(ev.index - 1))
          .at("atTime")
          .error("must fall inside the event window [" + std::to_string(start) + ", " + std::to_string(end) + "]");
    }
  }
  return sc;
}

inline Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Schema, std::string("scenario is not valid JSON: ") + e.what());
  }
  return load_scenario(doc);
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace ttx
