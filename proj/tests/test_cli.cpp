#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <thread>

#include "support.hpp"
#include "ttx/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using ttx::json;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

Result sh(const std::string& args) {
  std::string cmd = std::string(TTX_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ttx-cli-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Asks the kernel for an unused port and releases it again.
int free_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof addr;
  int port = -1;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0 &&
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0) {
    port = ntohs(addr.sin_port);
  }
  ::close(fd);
  return port;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string field(const std::string& out, const std::string& prefix) {
  std::smatch m;
  std::regex re(prefix + " (\\S+)");
  return std::regex_search(out, m, re) ? m[1].str() : "";
}

}  // namespace

TEST(Cli, HeadlessRunPlaysEveryEvent) {
  auto dir = scratch("run");
  auto r = sh("run --scenario " + q(ttx::test::bundled_scenario_path()) + " --headless --out " + q(dir));
  ASSERT_EQ(r.status, 0) << r.out;
  for (int i = 1; i <= 5; ++i) {
    EXPECT_NE(r.out.find("event " + std::to_string(i) + " ["), std::string::npos) << r.out;
  }
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n') >= 10, true);
  EXPECT_NE(r.out.find("steps 5 runs 3 perspectives 3"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("phase CLOSURE"), std::string::npos);
  EXPECT_NE(r.out.find("(match)"), std::string::npos);
  auto id = field(r.out, "session");
  ASSERT_FALSE(id.empty());
  EXPECT_TRUE(fs::exists(dir / id / "log.jsonl"));
  EXPECT_TRUE(fs::exists(dir / id / "scenario.json"));
  json rep = json::parse(std::ifstream(dir / id / "report.json"));
  EXPECT_EQ(rep["events"].size(), 5u);
  EXPECT_EQ(rep["phase"], "CLOSURE");
  fs::remove_all(dir);
}

TEST(Cli, RunsAreDeterministicPerSeed) {
  auto path = q(ttx::test::bundled_scenario_path());
  for (const char* mode : {"meanfield", "agent"}) {
    auto a = sh("run --scenario " + path + " --headless --mode " + mode + " --seed 7 --coa-policy best");
    auto b = sh("run --scenario " + path + " --headless --mode " + mode + " --seed 7 --coa-policy best");
    ASSERT_EQ(a.status, 0) << a.out;
    EXPECT_EQ(field(a.out, "state hash"), field(b.out, "state hash")) << mode;
    EXPECT_NE(a.out.find("(match)"), std::string::npos);
  }
  auto s7 = sh("run --scenario " + path + " --headless --mode agent --seed 7");
  auto s8 = sh("run --scenario " + path + " --headless --mode agent --seed 8");
  EXPECT_NE(field(s7.out, "state hash"), field(s8.out, "state hash"));
}

TEST(Cli, CoursePolicies) {
  auto path = q(ttx::test::bundled_scenario_path());
  auto none = sh("run --scenario " + path + " --headless --coa-policy none");
  ASSERT_EQ(none.status, 0) << none.out;
  EXPECT_NE(none.out.find("course none"), std::string::npos) << none.out;
  auto first = sh("run --scenario " + path + " --headless --coa-policy first");
  EXPECT_EQ(first.status, 0);
  EXPECT_EQ(first.out.find("course none"), std::string::npos) << first.out;
}

TEST(Cli, InvalidArguments) {
  auto path = q(ttx::test::bundled_scenario_path());
  EXPECT_NE(sh("").status, 0);
  EXPECT_NE(sh("run --headless").status, 0);
  EXPECT_NE(sh("run --scenario /no/such/file.json --headless").status, 0);
  EXPECT_NE(sh("run --scenario " + path + " --headless --mode quantum").status, 0);
  EXPECT_NE(sh("run --scenario " + path + " --headless --coa-policy random").status, 0);
  auto interactive = sh("run --scenario " + path);
  EXPECT_EQ(interactive.status, 2);
  EXPECT_NE(interactive.out.find("serve"), std::string::npos);
  EXPECT_NE(sh("analyze --fit").status, 0);
}

TEST(Cli, InvalidScenarioIsRejected) {
  auto dir = scratch("bad");
  json doc = ttx::test::bundled_scenario().document;
  doc["topology"]["edges"][0]["contactRate"] = -1;
  std::ofstream(dir / "bad.json") << doc.dump();
  auto r = sh("run --scenario " + q(dir / "bad.json") + " --headless");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("error [schema]"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("negative contactRate"), std::string::npos) << r.out;
  fs::remove_all(dir);
}

TEST(Cli, AnalyzeWithoutSurvey) {
  auto dir = scratch("analyze");
  auto r = sh("analyze --paper-model --scenarios --json " + q(dir / "a.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("-0.5722"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("2.8165"), std::string::npos);
  EXPECT_NE(r.out.find("3.8320"), std::string::npos);
  EXPECT_NE(r.out.find("4.7645"), std::string::npos);
  json a = json::parse(std::ifstream(dir / "a.json"));
  EXPECT_EQ(a["paperModel"]["coefficients"]["X2"], 0.8471);
  EXPECT_FALSE(a.contains("fit"));
  fs::remove_all(dir);
}

TEST(Cli, AnalyzeSurveyFile) {
  auto dir = scratch("survey");
  std::mt19937_64 rng(11);
  std::vector<ttx::SurveyResponse> rows;
  for (int i = 0; i < 36; ++i) rows.push_back(ttx::test::random_row(rng));
  std::ofstream(dir / "s.csv") << ttx::to_survey_csv(rows);
  auto r = sh("analyze --survey " + q(dir / "s.csv") + " --json " + q(dir / "a.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("respondents: 36"), std::string::npos);
  EXPECT_NE(r.out.find("OLS fit"), std::string::npos);
  json a = json::parse(std::ifstream(dir / "a.json"));
  EXPECT_EQ(a["n"], 36);
  EXPECT_TRUE(a["fit"]["rSquared"].is_number());

  std::ofstream(dir / "bad.csv") << "Y,X1,X2,X3,X4,X5,X6,X7,X8,X9,X10,X11,X12,X13,X14,X15,X16,X17,X18,X19\n"
                                 << "4,1,3,0,1,4,4,4,4,4,4,6,4,4,4,4,4,4,4,\n";
  auto bad = sh("analyze --survey " + q(dir / "bad.csv"));
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.out.find("X2 must be 0 or 1"), std::string::npos) << bad.out;
  EXPECT_NE(bad.out.find("X11 must be in [0,5]"), std::string::npos) << bad.out;
  fs::remove_all(dir);
}

TEST(Cli, ServeAnswersAndPersists) {
  auto data = scratch("serve");
  int port = free_port();
  ASSERT_GT(port, 0);
  pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    std::string p = std::to_string(port), d = data.string();
    ::execl(TTX_CLI_PATH, TTX_CLI_PATH, "serve", "--port", p.c_str(), "--data", d.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  httplib::Client c("127.0.0.1", port);
  httplib::Result res;
  for (int k = 0; k < 100 && !res; ++k) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    res = c.Get("/sessions/none");
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  auto created = c.Post("/sessions", R"({"scenarioId":"maersk-5ev","participants":{"np":10,"no":15,"gs":"3-4"}})",
                        "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  std::string id = json::parse(created->body)["sessionId"];
  ::kill(pid, SIGTERM);
  int st = 0;
  ::waitpid(pid, &st, 0);
  EXPECT_TRUE(WIFEXITED(st)) << "server did not shut down cleanly";
  EXPECT_TRUE(fs::exists(data / id / "log.jsonl"));
  fs::remove_all(data);
}
