#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ttx/analysis_report.hpp"
#include "ttx/headless.hpp"
#include "ttx/scenario.hpp"
#include "ttx/service.hpp"
#include "ttx/store.hpp"

namespace fs = std::filesystem;
using ttx::json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ttx::Error(ttx::ErrorCode::Io, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RunOptions {
  std::string scenario;
  bool headless = false;
  std::optional<long long> seed;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  std::string policy = "first";
};

int cmd_run(const RunOptions& o) {
  if (!o.headless) {
    std::cerr << "interactive exercises are run through `ttx serve`; pass --headless to auto-play\n";
    return 2;
  }
  json doc = json::parse(read_text(o.scenario));
  if (o.seed) {
    if (*o.seed < 0) throw ttx::Error(ttx::ErrorCode::InvalidArgument, "--seed must be >= 0");
    doc["simulation"]["baseSeed"] = *o.seed;
  }
  if (o.mode) doc["simulation"]["mode"] = std::string(ttx::to_string(ttx::parse_sim_mode(*o.mode)));
  auto scenario = ttx::load_scenario(doc);
  const auto policy = ttx::parse_coa_policy(o.policy);

  std::optional<fs::path> root;
  if (o.out) root = fs::path(*o.out);
  ttx::SessionStore store(root);
  const std::string scenarioId = scenario.id;
  store.register_scenario(std::move(scenario));
  auto id = ttx::run_headless(store, scenarioId, policy);
  auto session = store.snapshot(id);
  auto sc = store.session_scenario(id);

  std::cout << "session " << id << " scenario " << scenarioId << " mode "
            << ttx::to_string(sc->simulation.mode) << " policy " << o.policy << "\n";
  for (const auto& c : session.cycles) {
    std::cout << "event " << c.eventIndex << " [" << ttx::to_string(sc->event(c.eventIndex).phase) << "] steps "
              << c.visitedSteps.size() << " runs " << c.runs.size() << " perspectives "
              << sc->simulation.perspectives << " course " << c.chosenCourse.value_or("none") << " score "
              << std::fixed << std::setprecision(4) << c.runScore->score << "\n";
  }
  const auto hash = ttx::state_hash(session);
  auto log = root ? ttx::SessionStore::read_log(*root / id / "log.jsonl") : session.log;
  const auto replayed = ttx::state_hash(ttx::replay(*sc, log));
  std::cout << "phase " << ttx::to_string(session.phase) << "\n";
  std::cout << "log records " << log.size() << "\n";
  std::cout << "state hash " << hash << "\n";
  std::cout << "replay hash " << replayed << (replayed == hash ? " (match)" : " (MISMATCH)") << "\n";
  if (root) {
    std::ofstream(*root / id / "report.json") << store.report(id).dump(2) << "\n";
    std::cout << "report " << (*root / id / "report.json").string() << "\n";
  }
  return replayed == hash ? 0 : 1;
}

ttx::SessionStore* g_store = nullptr;
ttx::Service* g_service = nullptr;

int cmd_serve(int port, const std::string& host, const std::string& scenarios, const std::optional<std::string>& data) {
  std::optional<fs::path> root;
  if (data) root = fs::path(*data);
  ttx::SessionStore store(root);
  if (!scenarios.empty() && fs::is_directory(scenarios)) store.load_scenarios(scenarios);
  store.recover();
  ttx::Service service(store);
  g_store = &store;
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  std::cout << "serving " << store.scenario_ids().size() << " scenario(s) on http://" << host << ":" << port << "\n"
            << std::flush;
  if (!service.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

void print_text(const json& r) {
  std::cout << "respondents: " << r["n"].get<std::size_t>() << "\n";
  if (r.contains("descriptive")) {
    const auto& d = r["descriptive"];
    std::cout << "\nprior experience (share answering 1)\n";
    for (const auto& [k, v] : d["proportions"].items()) {
      std::cout << "  " << k << "  " << std::fixed << std::setprecision(1) << v.get<double>() * 100.0 << "%\n";
    }
    std::cout << "\nmeans\n";
    for (const auto& [k, v] : d["means"].items()) std::cout << "  " << k << "  " << std::setprecision(3) << v.get<double>() << "\n";
    std::cout << "\ncomposites (0-5)\n";
    for (const auto& [k, v] : d["composites"].items()) std::cout << "  " << k << "  " << std::setprecision(3) << v.get<double>() << "\n";
  }
  auto model = [](const char* title, const json& m) {
    std::cout << "\n" << title << "\n";
    if (m.contains("error")) {
      std::cout << "  " << m["error"].get<std::string>() << "\n";
      return;
    }
    std::cout << std::fixed << std::setprecision(4) << "  intercept  " << m["intercept"].get<double>() << "\n";
    for (int k = 1; k <= 13; ++k) {
      auto key = "X" + std::to_string(k);
      std::cout << "  " << key << (k < 10 ? "         " : "        ") << m["coefficients"][key].get<double>() << "\n";
    }
    std::cout << "  R^2 " << m["rSquared"].get<double>() << "  adj R^2 " << m["adjustedRSquared"].get<double>()
              << "  residual sd " << m["residualStdDev"].get<double>() << "  multiple R "
              << m["multipleCorrelation"].get<double>() << "  n " << m["n"].get<int>() << "\n";
  };
  if (r.contains("fit")) model("OLS fit of Y on X1..X13", r["fit"]);
  if (r.contains("paperModel")) {
    model("published evaluation model (reported statistics)", r["paperModel"]);
    if (r["paperModel"].contains("onThisSurvey")) {
      const auto& o = r["paperModel"]["onThisSurvey"];
      std::cout << "  on this survey: SSR " << o["ssr"].get<double>() << "  RMSE " << o["rmse"].get<double>() << "\n";
    }
    std::cout << "  note: " << r["paperModel"]["note"].get<std::string>() << "\n";
  }
  if (r.contains("scenarios")) {
    std::cout << "\nprospective scenarios\n";
    for (const auto& s : r["scenarios"]["table"]) {
      std::cout << "  " << std::left << std::setw(12) << s["name"].get<std::string>() << std::right << " reference Y "
                << std::setprecision(1) << s["referenceY"].get<double>() << "  predicted " << std::setprecision(4)
                << s["predictedY"].get<double>() << "\n";
    }
    if (r["scenarios"].contains("surveyMean")) {
      const auto& m = r["scenarios"]["surveyMean"];
      std::cout << "  survey mean is closest to " << m["nearest"].get<std::string>() << " (distance "
                << m["distance"].get<double>() << ", predicted Y " << m["predictedY"].get<double>() << ")\n";
      for (const auto& [k, v] : r["scenarios"]["rowCounts"].items()) std::cout << "  rows nearest " << k << ": " << v << "\n";
    }
  }
}

int cmd_analyze(const std::optional<std::string>& survey, bool fit, bool paper, bool scen,
                const std::optional<std::string>& json_out) {
  std::vector<ttx::SurveyResponse> rows;
  if (survey) {
    auto parsed = ttx::parse_survey_csv(read_text(*survey));
    if (!parsed.ok()) {
      for (const auto& e : parsed.errors) std::cerr << *survey << ": " << e << "\n";
      return 1;
    }
    rows = std::move(parsed.rows);
  } else if (fit) {
    std::cerr << "--fit needs --survey\n";
    return 2;
  }
  ttx::AnalysisSections want;
  if (fit || paper || scen) want = {true, fit, paper, scen};
  if (!survey) want.fit = false;
  auto report = ttx::analyze_survey(rows, want);
  print_text(report);
  if (json_out) std::ofstream(*json_out) << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid tabletop exercise platform for maritime cyber crises"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Play a scenario");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run_cmd->add_flag("--headless", run.headless, "Auto-play every event cycle");
  run_cmd->add_option("--seed", run.seed, "Override simulation.baseSeed");
  run_cmd->add_option("--mode", run.mode, "meanfield or agent")->check(CLI::IsMember({"meanfield", "agent"}));
  run_cmd->add_option("--out", run.out, "Directory for the session log and report");
  run_cmd->add_option("--coa-policy", run.policy, "Course selection: first, none or best")
      ->check(CLI::IsMember({"first", "none", "best"}));

  int port = 8080;
  if (const char* env = std::getenv("TTX_PORT")) port = std::atoi(env);
  std::string host = "127.0.0.1";
  std::string scenarios = TTX_DEFAULT_SCENARIO_DIR;
  std::optional<std::string> data;
  auto* serve_cmd = app.add_subcommand("serve", "Run the facilitator service");
  serve_cmd->add_option("--port", port, "Listen port (default $TTX_PORT or 8080)");
  serve_cmd->add_option("--host", host, "Listen address");
  serve_cmd->add_option("--scenarios", scenarios, "Directory of scenario files");
  serve_cmd->add_option("--data", data, "Session persistence directory");

  std::optional<std::string> survey, json_out;
  bool fit = false, paper = false, scen = false;
  auto* analyze_cmd = app.add_subcommand("analyze", "Survey statistics and the evaluation regression");
  analyze_cmd->add_option("--survey", survey, "Survey table (CSV, header Y,X1,...,X19)")->check(CLI::ExistingFile);
  analyze_cmd->add_flag("--fit", fit, "Fit Y on X1..X13 by least squares");
  analyze_cmd->add_flag("--paper-model", paper, "Evaluate the published regression model");
  analyze_cmd->add_flag("--scenarios", scen, "Prospective scenario predictions and classification");
  analyze_cmd->add_option("--json", json_out, "Also write the structured report to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*serve_cmd) return cmd_serve(port, host, scenarios, data);
    if (*analyze_cmd) return cmd_analyze(survey, fit, paper, scen, json_out);
  } catch (const ttx::Error& e) {
    std::cerr << "error [" << ttx::to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
