#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <future>
#include <random>
#include <regex>
#include <sstream>

#include "cli.hpp"
#include "contexta/error.hpp"
#include "contexta/eval.hpp"
#include "contexta/service/crypto.hpp"
#include "contexta/service/http.hpp"
#include "contexta/sim.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

extern char** environ;

using namespace contexta;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kSource = CONTEXTA_SOURCE_DIR;

struct Run {
  int rc;
  std::string out, err;
};

Run contexta_cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int rc = contexta::cli::run(args, o, e);
  return {rc, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("contexta-cli-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string script(const std::string& name) { return kSource + "/scripts/" + name; }

/// The reply quoted in the paper's late-night example, read from paper.md.
std::string paper_reply() {
  const auto paper = slurp(kSource + "/paper.md");
  std::smatch m;
  const std::regex re("``(It seems like you've been scrolling.*?)''");
  REQUIRE(std::regex_search(paper, m, re));
  return m[1].str();
}

/// `contexta serve` as a child process; the port comes from its banner.
struct ServeProcess {
  pid_t pid = -1;
  int port = 0;
  FILE* out = nullptr;

  ServeProcess(const std::vector<std::string>& env) {
    int fds[2];
    REQUIRE(pipe(fds) == 0);
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, fds[1], 1);
    posix_spawn_file_actions_addclose(&fa, fds[0]);
    std::vector<std::string> args = {CONTEXTA_CLI_BIN, "serve"};
    std::vector<char*> argv, envp;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    std::vector<std::string> envCopy = env;
    for (auto& e : envCopy) envp.push_back(e.data());
    envp.push_back(nullptr);
    REQUIRE(posix_spawn(&pid, CONTEXTA_CLI_BIN, &fa, nullptr, argv.data(), envp.data()) == 0);
    posix_spawn_file_actions_destroy(&fa);
    close(fds[1]);
    out = fdopen(fds[0], "r");
    char line[512] = {};
    if (fgets(line, sizeof line, out)) {
      std::cmatch m;
      if (std::regex_search(line, m, std::regex(R"(:(\d+) \()"))) port = std::stoi(m[1].str());
    }
  }

  int terminate() {
    kill(pid, SIGTERM);
    int status = 0;
    waitpid(pid, &status, 0);
    pid = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  }

  ~ServeProcess() {
    if (pid > 0) terminate();
    if (out) fclose(out);
  }
};

}  // namespace

TEST_CASE("generate writes a valid trace and is deterministic per seed") {
  TempDir tmp;
  REQUIRE(contexta_cli({"generate", "--script", script("fig2_late_night.json"), "--out", tmp / "a.jsonl"}).rc == 0);
  REQUIRE(contexta_cli({"generate", "--script", script("fig2_late_night.json"), "--out", tmp / "b.jsonl"}).rc == 0);
  REQUIRE(contexta_cli({"generate", "--script", script("fig2_late_night.json"), "--seed", "43", "--out", tmp / "c.jsonl"}).rc ==
          0);
  const auto a = crypto::sha256_hex(slurp(tmp / "a.jsonl"));
  CHECK(a == crypto::sha256_hex(slurp(tmp / "b.jsonl")));
  CHECK(a != crypto::sha256_hex(slurp(tmp / "c.jsonl")));

  const auto trace = read_trace_file(tmp / "a.jsonl");
  CHECK(validate_trace(trace).valid());
  REQUIRE(trace.labels.size() >= 1);
  CHECK(trace.labels[0].scenarioId == ScenarioId::ExcessiveAppUsage);
}

TEST_CASE("usage and validation errors exit with 2") {
  TempDir tmp;
  const auto overlap = contexta_cli({"generate", "--script", script("invalid_overlap.json"), "--out", tmp / "x.jsonl"});
  CHECK(overlap.rc == 2);
  CHECK(overlap.err.find("walking") != std::string::npos);
  CHECK(overlap.err.find("running") != std::string::npos);

  CHECK(contexta_cli({}).rc == 2);
  CHECK(contexta_cli({"generate"}).rc == 2);
  CHECK(contexta_cli({"generate", "--script", tmp / "missing.json"}).rc == 2);
  CHECK(contexta_cli({"replay", "--trace", script("fig2_late_night.json"), "--bogus"}).rc == 2);
  CHECK(contexta_cli({"--help"}).rc == 0);

  REQUIRE(contexta_cli({"generate", "--script", script("fig2_late_night.json"), "--out", tmp / "t.jsonl"}).rc == 0);
  CHECK(contexta_cli({"replay", "--trace", tmp / "t.jsonl", "--speed", "zoom"}).rc == 2);
  CHECK(contexta_cli({"replay", "--trace", tmp / "t.jsonl", "--sink", "http://127.0.0.1:1"}).rc == 2);  // no token
  CHECK(contexta_cli({"replay", "--trace", tmp / "t.jsonl", "--sink", "ftp://x", "--token", "t"}).rc == 2);
  CHECK(contexta_cli({"evaluate", "--trace", tmp / "t.jsonl", "--noise-dropout", "1.5"}).rc == 2);

  // a runtime failure is 1: the service is not there
  CHECK(contexta_cli({"replay", "--trace", tmp / "t.jsonl", "--speed", "max", "--sink", "http://127.0.0.1:1", "--token", "t"})
            .rc == 1);
}

TEST_CASE("replaying the late-night demo produces the paper's reply") {
  TempDir tmp;
  REQUIRE(contexta_cli({"generate", "--script", script("fig2_late_night.json"), "--out", tmp / "t.jsonl"}).rc == 0);
  const auto r = contexta_cli({"replay", "--trace", tmp / "t.jsonl", "--speed", "max", "--out", tmp / "records.jsonl"});
  REQUIRE(r.rc == 0);
  CHECK(r.out.find("triggers: 1\nexcessive_app_usage 1\n") != std::string::npos);

  std::istringstream lines(slurp(tmp / "records.jsonl"));
  std::string trig, msg, extra;
  REQUIRE(std::getline(lines, trig));
  REQUIRE(std::getline(lines, msg));
  CHECK_FALSE(std::getline(lines, extra));
  CHECK(parse_trigger(trig).scenarioId == ScenarioId::ExcessiveAppUsage);
  const auto message = parse_message(msg);
  CHECK(message_text(message).starts_with(paper_reply()));
  CHECK(message.sticker.has_value());

  // deterministic records
  REQUIRE(contexta_cli({"replay", "--trace", tmp / "t.jsonl", "--speed", "max", "--quiet", "--out", tmp / "again.jsonl"}).rc ==
          0);
  CHECK(slurp(tmp / "again.jsonl") == slurp(tmp / "records.jsonl"));

  const auto prompts = contexta_cli({"prompt", "--trace", tmp / "t.jsonl"});
  REQUIRE(prompts.rc == 0);
  CHECK(prompts.out.find("Scenario: excessive_app_usage") != std::string::npos);
  CHECK(prompts.out.find("cumulativeUsageMinutes: 120") != std::string::npos);
}

TEST_CASE("a background-only day triggers only the nighttime summary at 23:30") {
  TempDir tmp;
  REQUIRE(contexta_cli({"generate", "--script", script("background_day.json"), "--out", tmp / "bg.jsonl"}).rc == 0);
  const auto r = contexta_cli({"replay", "--trace", tmp / "bg.jsonl", "--speed", "max", "--out", tmp / "rec.jsonl"});
  REQUIRE(r.rc == 0);
  CHECK(r.out.find("triggers: 1\nnighttime_summary 1\n") != std::string::npos);
  CHECK(r.out.find("[2023-11-15 23:30] nighttime_summary") != std::string::npos);
}

TEST_CASE("evaluate scores a corpus and writes a canonical report") {
  TempDir tmp;
  REQUIRE(contexta_cli({"corpus", "--out", tmp / "corpus", "--seeds", "1"}).rc == 0);
  CHECK(list_trace_files(tmp / "corpus").size() == kScenarioCount);

  const auto clean = contexta_cli({"evaluate", "--trace", tmp / "corpus", "--out", tmp / "clean.json"});
  REQUIRE(clean.rc == 0);
  CHECK(clean.out.find("accuracy 1.000 (") != std::string::npos);
  const auto report = json::parse(slurp(tmp / "clean.json"));
  CHECK(report["accuracy"].get<double>() == 1.0);


  const auto noisy = contexta_cli({"evaluate", "--trace", tmp / "corpus", "--noise-dropout", "0.3", "--seed", "5", "--out",
                          tmp / "noisy.json"});
  REQUIRE(noisy.rc == 0);
  const auto nj = json::parse(slurp(tmp / "noisy.json"));
  CHECK(nj["accuracy"].get<double>() >= 0.0);
  CHECK(nj["accuracy"].get<double>() <= 1.0);

  // a trace without labels
  auto unlabeled = read_trace_file(list_trace_files(tmp / "corpus").front());
  unlabeled.labels.clear();
  write_trace_file(tmp / "nolabels.jsonl", unlabeled);
  const auto missing = contexta_cli({"evaluate", "--trace", tmp / "nolabels.jsonl"});
  CHECK(missing.rc == 2);
  CHECK(missing.err.find("MissingLabels") != std::string::npos);
}

TEST_CASE("config file supplies defaults that flags override") {
  TempDir tmp;
  REQUIRE(contexta_cli({"generate", "--script", script("fig2_late_night.json"), "--out", tmp / "t.jsonl"}).rc == 0);
  std::ofstream(tmp / "bad.json") << R"({"replay": {"speed": "zoom"}})";
  std::ofstream(tmp / "flat.json") << R"({"speed": "max", "quiet": true})";
  const auto bad = contexta_cli({"replay", "--config", tmp / "bad.json", "--trace", tmp / "t.jsonl"});
  CHECK(bad.rc == 2);
  CHECK(bad.err.find("'zoom'") != std::string::npos);
  CHECK(contexta_cli({"replay", "--config", tmp / "bad.json", "--trace", tmp / "t.jsonl", "--speed", "max", "--quiet"}).rc == 0);
  const auto flat = contexta_cli({"replay", "--config", tmp / "flat.json", "--trace", tmp / "t.jsonl"});
  CHECK(flat.rc == 0);
  CHECK(flat.out.starts_with("triggers: 1"));
  std::ofstream(tmp / "broken.json") << "{nope";
  CHECK(contexta_cli({"replay", "--config", tmp / "broken.json", "--trace", tmp / "t.jsonl"}).rc == 2);
}

TEST_CASE("serve, register, login and upload a replay end to end") {
  TempDir tmp;
  std::ofstream(tmp / "jwt.key") << "cli-test-key-0123456789";
  {
    const auto bad = contexta_cli({"serve", "--jwt-key-file", tmp / "absent.key"});
    CHECK(bad.rc != 0);
    CHECK(bad.err.find("BadConfig") != std::string::npos);
  }

  ServeProcess serve({"DATA_ROOT=" + tmp / "root", "JWT_KEY_FILE=" + tmp / "jwt.key", "BIND_ADDR=127.0.0.1:0"});
  REQUIRE(serve.port > 0);
  httplib::Client http("127.0.0.1", serve.port);
  auto health = http.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->body == "ok");

  const auto url = "http://127.0.0.1:" + std::to_string(serve.port);
  service::SyncClient client(url);
  client.register_user("demo", "demo-secret");
  const auto token = client.login("demo", "demo-secret");

  REQUIRE(contexta_cli({"generate", "--script", script("fig2_late_night.json"), "--out", tmp / "t.jsonl"}).rc == 0);
  const auto up = contexta_cli({"replay", "--trace", tmp / "t.jsonl", "--speed", "max", "--sink", url, "--token", token});
  REQUIRE(up.rc == 0);
  CHECK(up.out.find("uploaded: 2 records in 1 batches") != std::string::npos);
  const auto again = contexta_cli({"replay", "--trace", tmp / "t.jsonl", "--speed", "max", "--sink", url, "--token", token});
  CHECK(again.out.find("already stored") != std::string::npos);

  auto msgs = http.Get("/api/v1/records/message", {{"Authorization", "Bearer " + token}});
  REQUIRE(msgs);
  const auto page = json::parse(msgs->body);
  REQUIRE(page["records"].size() == 1);
  CHECK(message_text(parse_message(page["records"][0].dump())).starts_with(paper_reply()));

  const auto denied = contexta_cli({"replay", "--trace", tmp / "t.jsonl", "--speed", "max", "--sink", url, "--token", "x.y.z"});
  CHECK(denied.rc == 1);
  CHECK(denied.err.find("AuthFailure") != std::string::npos);

  // the console stops a real-time replay through the control endpoint
  auto slow = std::async(std::launch::async, [&] {
    return contexta_cli({"replay", "--trace", tmp / "t.jsonl", "--speed", "1", "--sink", url, "--token", token, "--quiet"});
  });
  const httplib::Headers auth = {{"Authorization", "Bearer " + token}};
  // commands posted before the replay's first poll are not meant for it, so keep asking
  bool accepted = false;
  for (int i = 0; i < 100 && slow.wait_for(std::chrono::milliseconds(200)) != std::future_status::ready; ++i) {
    auto posted = http.Post("/api/v1/replay/control", auth, R"({"command":"stop"})", "application/json");
    accepted = accepted || (posted && posted->status == 202);
  }
  CHECK(accepted);
  REQUIRE(slow.wait_for(std::chrono::seconds(10)) == std::future_status::ready);
  const auto stopped = slow.get();
  CHECK(stopped.rc == 0);
  CHECK(stopped.out.find("(stopped)") != std::string::npos);

  CHECK(serve.terminate() == 0);
  CHECK(fs::is_directory(tmp.path / "root" / "tenants" / "demo"));
}
