#include "cli.hpp"

#include <pthread.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "contexta/error.hpp"
#include "contexta/eval.hpp"
#include "contexta/perturb.hpp"
#include "contexta/service/crypto.hpp"
#include "contexta/service/http.hpp"
#include "contexta/session.hpp"
#include "contexta/sim.hpp"
#include "json.hpp"

namespace contexta::cli {

namespace {

using json = nlohmann::json;

/// --config files are JSON: top-level scalars apply to whichever subcommand
/// runs, objects named after a subcommand apply to it only.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::vector<std::string> subcommands) : subcommands_(std::move(subcommands)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        for (const auto& [k, v] : value.items()) items.push_back(item({key}, k, v));
      } else {
        for (const auto& sub : subcommands_) items.push_back(item({sub}, key, value));
      }
    }
    return items;
  }

 private:
  static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name, const json& v) {
    CLI::ConfigItem it;
    it.parents = std::move(parents);
    it.name = name;
    if (v.is_array()) {
      for (const auto& x : v) it.inputs.push_back(x.is_string() ? x.get<std::string>() : x.dump());
    } else {
      it.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    return it;
  }

  std::vector<std::string> subcommands_;
};

/// Errors that mean the input or invocation was wrong rather than the run.
bool is_validation_error(const Error& e) {
  static const std::set<std::string> codes = {"InvalidScript",  "BadConfig",       "MissingLabels",
                                              "SchemaViolation", "MalformedRecord", "TemplateError",
                                              "MissingTemplate", "OutOfOrderEvent", "UnknownChannel"};
  return codes.contains(e.code());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BadConfig("cannot write " + path);
  return out;
}

std::string local_stamp(const LocalClock& clock, std::int64_t t) {
  return format_date(clock.date(t)) + " " + format_time_of_day(clock.time_of_day(t));
}

std::optional<NoiseProfile> noise_from(double dropout, double jitter) {
  if (dropout == 0.0 && jitter == 0.0) return std::nullopt;
  if (dropout < 0.0 || dropout >= 1.0) throw BadConfig("--noise-dropout must be in [0, 1)");
  if (jitter < 0.0) throw BadConfig("--noise-jitter must be >= 0");
  NoiseProfile p;
  p.dropoutRate = dropout;
  p.jitterStdDev = jitter;
  return p;
}

// ---- uploads to a service sink ----------------------------------------------

/// Buffers triggers and messages and posts them as sync batches. A flush
/// happens only between distinct timestamps so every batch stays strictly
/// newer than the previous one.
class Uploader {
 public:
  Uploader(service::SyncClient& client, std::ostream& err) : client_(client), err_(err) {}

  void add(const DialogueTurn& turn) {
    pending_.push_back({{"type", "trigger"}, {"record", json::parse(serialize_trigger(turn.trigger))}});
    pending_.push_back({{"type", "message"}, {"record", json::parse(serialize_message(turn.message))}});
    pendingMax_ = turn.message.timestamp;
  }

  void maybe_flush(std::int64_t nextEvent) {
    if (pending_.empty() || nextEvent <= pendingMax_) return;
    if (std::chrono::steady_clock::now() - lastFlush_ < kInterval) return;
    flush();
  }

  void flush() {
    lastFlush_ = std::chrono::steady_clock::now();
    if (pending_.empty()) return;
    json batch;
    // content-addressed so re-running the same replay is an idempotent resend
    batch["batchId"] = "replay-" + crypto::sha256_hex(pending_.dump()).substr(0, 24);
    batch["clientWatermark"] = pendingMax_;
    batch["records"] = std::move(pending_);
    pending_ = json::array();
    try {
      const auto ack = client_.upload(batch);
      ++batches_;
      records_ += ack.accepted;
      if (ack.replayed) ++replayed_;
    } catch (const StaleBatch& e) {
      err_ << "upload skipped: " << e.what() << '\n';
      ++stale_;
    }
  }

  std::size_t batches() const { return batches_; }
  std::size_t records() const { return records_; }
  std::size_t replayed() const { return replayed_; }
  std::size_t stale() const { return stale_; }

 private:
  static constexpr std::chrono::seconds kInterval{60};
  service::SyncClient& client_;
  std::ostream& err_;
  json pending_ = json::array();
  std::int64_t pendingMax_ = 0;
  std::chrono::steady_clock::time_point lastFlush_ = std::chrono::steady_clock::now();
  std::size_t batches_ = 0, records_ = 0, replayed_ = 0, stale_ = 0;
};

/// Relays console commands from the service into the replay's control queue.
class ControlRelay {
 public:
  ControlRelay(service::SyncClient& client, ReplayControl& control, std::uint64_t after)
      : client_(client), control_(control) {
    thread_ = std::jthread([this, after](std::stop_token st) { loop(st, after); });
  }

 private:
  void loop(std::stop_token st, std::uint64_t after) {
    std::mutex m;
    std::condition_variable_any cv;
    while (!st.stop_requested()) {
      try {
        for (const auto& c : client_.poll_control(after)) {
          after = c.seq;
          if (c.command == "pause") control_.pause();
          if (c.command == "resume") control_.resume();
          if (c.command == "stop") control_.stop();
          if (c.command == "speed") control_.set_speed(c.value);
          if (c.command == "seek") control_.seek(static_cast<std::int64_t>(c.value));
        }
      } catch (const std::exception&) {
        // the replay keeps going without remote control
      }
      std::unique_lock lk(m);
      cv.wait_for(lk, st, std::chrono::milliseconds(500), [] { return false; });
    }
  }

  service::SyncClient& client_;
  ReplayControl& control_;
  std::jthread thread_;
};

// ---- subcommands ---------------------------------------------------------------

struct Args {
  std::string script, out, trace, speed = "1", sink = "local", token, templates, stickers, config;
  std::string dataRoot = "data-root", jwtKeyFile, bind = "127.0.0.1:8080";
  std::optional<std::uint64_t> seed;
  double dropout = 0.0, jitter = 0.0;
  unsigned workers = 0, seeds = 10;
  std::string day = "2023-11-15";
  bool quiet = false;
};

int cmd_generate(const Args& a, std::ostream& out, std::ostream& err) {
  auto script = load_script_file(a.script);
  if (a.seed) script.seed = *a.seed;
  if (a.out.empty()) {
    generate_to(script, out);
    return 0;
  }
  auto f = open_out(a.out);
  generate_to(script, f);
  f.close();
  if (!f) throw std::runtime_error("failed writing " + a.out);
  err << "wrote " << a.out << '\n';
  return 0;
}

int cmd_perturb(const Args& a, std::ostream& out, std::ostream&) {
  const auto noise = noise_from(a.dropout, a.jitter).value_or(NoiseProfile{});
  const auto perturbed = perturb(read_trace_file(a.trace), noise, a.seed.value_or(0));
  if (a.out.empty()) {
    write_trace(out, perturbed);
  } else {
    write_trace_file(a.out, perturbed);
  }
  return 0;
}

int cmd_corpus(const Args& a, std::ostream& out, std::ostream&) {
  std::filesystem::create_directories(a.out);
  const auto first = a.seed.value_or(1);
  std::size_t n = 0;
  for (auto id : all_scenarios()) {
    for (std::uint64_t s = first; s < first + a.seeds; ++s) {
      const auto path = std::filesystem::path(a.out) / (std::string(to_string(id)) + "-" + std::to_string(s) + ".jsonl");
      auto f = open_out(path.string());
      generate_to(corpus_script(id, s, a.day), f);
      ++n;
    }
  }
  out << "wrote " << n << " traces to " << a.out << '\n';
  return 0;
}

int cmd_replay(const Args& a, std::ostream& out, std::ostream& err, bool promptsOnly) {
  SessionOptions opts;
  opts.replay.speed = promptsOnly ? std::nullopt : parse_speed(a.speed);
  std::optional<TemplateSet> templates;
  if (!a.templates.empty()) templates = TemplateSet::load_dir(a.templates);
  opts.templates = templates ? &*templates : nullptr;
  FixtureStickerClient stickers(a.stickers.empty() ? std::string(CONTEXTA_DATA_DIR) + "/stickers" : a.stickers);
  opts.stickers = &stickers;

  std::unique_ptr<service::SyncClient> client;
  std::unique_ptr<Uploader> uploader;
  ReplayControl control;
  const bool remote = !promptsOnly && a.sink != "local";
  std::uint64_t controlAfter = 0;
  if (remote) {
    if (!a.sink.starts_with("http://") && !a.sink.starts_with("https://")) {
      throw BadConfig("--sink must be 'local' or a service URL, got '" + a.sink + "'");
    }
    if (a.token.empty()) throw BadConfig("--token is required when --sink is a service URL");
    client = std::make_unique<service::SyncClient>(a.sink, a.token);
    // checks the token and marks the replay active; older commands are not ours
    for (const auto& c : client->poll_control(0)) controlAfter = c.seq;
    uploader = std::make_unique<Uploader>(*client, err);
    opts.replay.control = &control;
  }

  std::ifstream in(a.trace, std::ios::binary);
  if (!in) throw BadConfig("cannot read trace " + a.trace);
  TraceReader reader(in);
  opts.engine.tzOffsetMinutes = reader.header().tzOffsetMinutes;
  const LocalClock clock(reader.header().tzOffsetMinutes);

  std::ofstream records;
  if (!a.out.empty()) records = open_out(a.out);

  SessionHooks hooks;
  hooks.on_turn = [&](const DialogueTurn& turn) {
    if (promptsOnly) {
      out << "=== " << message_id_for(turn.trigger) << " ===\n" << turn.prompt << "\n\n";
    } else if (!a.quiet) {
      out << '[' << local_stamp(clock, turn.trigger.firedAt) << "] " << to_string(turn.trigger.scenarioId) << ": "
          << message_text(turn.message);
      if (turn.message.sticker) out << "  " << *turn.message.sticker;
      out << '\n';
    }
    if (records.is_open()) {
      records << serialize_trigger(turn.trigger) << '\n' << serialize_message(turn.message) << '\n';
    }
    if (uploader) uploader->add(turn);
  };
  if (uploader) hooks.before_event = [&](const SensorEvent& e) { uploader->maybe_flush(e.timestamp); };

  SessionResult result;
  {
    std::unique_ptr<ControlRelay> relay;
    if (remote) relay = std::make_unique<ControlRelay>(*client, control, controlAfter);
    result = run_session([&reader] { return reader.next(); }, opts, hooks);
  }
  if (uploader) {
    try {
      uploader->flush();
    } catch (const Error& e) {
      throw SinkFailure(std::string("final upload failed: ") + e.what());
    }
  }
  if (reader.diagnostics().unknownFields) {
    err << "note: " << reader.diagnostics().unknownFields << " unknown fields ignored\n";
  }
  if (promptsOnly) return 0;

  out << "triggers: " << result.total_triggers() << '\n' << result.summary();
  out << "events: " << result.replay.delivered << (result.replay.stopped ? " (stopped)" : "") << ", wall "
      << static_cast<long long>(result.replay.wallMs) << " ms\n";
  if (uploader) {
    out << "uploaded: " << uploader->records() << " records in " << uploader->batches() << " batches";
    if (uploader->replayed()) out << " (" << uploader->replayed() << " already stored)";
    out << '\n';
  }
  return 0;
}

int cmd_evaluate(const Args& a, std::ostream& out, std::ostream&) {
  const auto files = list_trace_files(a.trace);
  if (files.empty()) throw MissingLabels("no trace files under " + a.trace);
  EvalOptions opts;
  opts.noise = noise_from(a.dropout, a.jitter);
  opts.noiseSeed = a.seed.value_or(0);
  opts.workers = a.workers;
  const auto report = evaluate_many(files.size(), [&](std::size_t i) { return read_trace_file(files[i]); }, opts);
  out << report.to_table();
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    f << report.to_json() << '\n';
  }
  return 0;
}

int cmd_serve(const Args& a, std::ostream& out, std::ostream&) {
  const auto cfg = service::load_service_config(
      {{"DATA_ROOT", a.dataRoot}, {"JWT_KEY_FILE", a.jwtKeyFile}, {"BIND_ADDR", a.bind}});
  service::SyncService svc(cfg);
  service::HttpServer server(svc);
  const int port = server.bind(cfg.bindAddr);
  out << "contexta sync service on " << cfg.bindAddr.substr(0, cfg.bindAddr.rfind(':')) << ':' << port
      << " (data root " << cfg.dataRoot.string() << ")" << std::endl;
  // SIGINT/SIGTERM are taken by a waiter thread instead of a handler
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.run();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);  // wakes the waiter when run() ended on its own
    waiter.join();
  }
  svc.shutdown();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"contexta: context-aware chatbot toolkit", "contexta"};
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::ignore);
  app.fallthrough();  // --config may follow the subcommand
  Args a;

  auto* gen = app.add_subcommand("generate", "Generate a labeled synthetic trace from a scenario script");
  gen->add_option("--script", a.script, "Scenario script (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", a.seed, "Override the script's seed");
  gen->add_option("--out", a.out, "Output trace file (stdout when omitted)");

  auto* per = app.add_subcommand("perturb", "Apply sensor noise to a trace");
  per->add_option("--trace", a.trace, "Input trace")->required()->check(CLI::ExistingFile);
  per->add_option("--out", a.out, "Output trace file (stdout when omitted)");
  per->add_option("--noise-dropout", a.dropout, "Per-event drop probability");
  per->add_option("--noise-jitter", a.jitter, "Timestamp jitter standard deviation, ms");
  per->add_option("--seed", a.seed, "Noise seed");

  auto* cor = app.add_subcommand("corpus", "Write the per-scenario corpus (16 scenarios x N seeds)");
  cor->add_option("--out", a.out, "Output directory")->required();
  cor->add_option("--seeds", a.seeds, "Seeds per scenario")->check(CLI::PositiveNumber);
  cor->add_option("--seed", a.seed, "First seed (default 1)");
  cor->add_option("--day", a.day, "Local date of the traces");

  auto* rep = app.add_subcommand("replay", "Replay a trace through the engine and dialogue pipeline");
  rep->add_option("--trace", a.trace, "Trace file")->required()->check(CLI::ExistingFile);
  rep->add_option("--speed", a.speed, "Multiplier or 'max'");
  rep->add_option("--sink", a.sink, "'local' or a sync service URL");
  rep->add_option("--token", a.token, "Bearer token for a service sink")->envname("CONTEXTA_TOKEN");
  rep->add_option("--templates", a.templates, "Prompt template directory")->check(CLI::ExistingDirectory);
  rep->add_option("--stickers", a.stickers, "Sticker fixture directory")->check(CLI::ExistingDirectory);
  rep->add_option("--out", a.out, "Write triggers and messages as JSON lines");
  rep->add_flag("--quiet", a.quiet, "Print the summary only");

  auto* pr = app.add_subcommand("prompt", "Print the rendered prompt for every trigger in a trace");
  pr->add_option("--trace", a.trace, "Trace file")->required()->check(CLI::ExistingFile);
  pr->add_option("--templates", a.templates, "Prompt template directory")->check(CLI::ExistingDirectory);

  auto* ev = app.add_subcommand("evaluate", "Score engine triggers against trace labels");
  ev->add_option("--trace", a.trace, "Labeled trace file or directory")->required()->check(CLI::ExistingPath);
  ev->add_option("--noise-dropout", a.dropout, "Per-event drop probability");
  ev->add_option("--noise-jitter", a.jitter, "Timestamp jitter standard deviation, ms");
  ev->add_option("--seed", a.seed, "Noise seed");
  ev->add_option("--workers", a.workers, "Worker threads (0: auto)");
  ev->add_option("--out", a.out, "Write the canonical JSON report here");

  auto* srv = app.add_subcommand("serve", "Run the sync service");
  srv->add_option("--data-root", a.dataRoot, "Tenant data directory")->envname("DATA_ROOT");
  srv->add_option("--jwt-key-file", a.jwtKeyFile, "HS256 signing key file")->envname("JWT_KEY_FILE");
  srv->add_option("--bind", a.bind, "host:port")->envname("BIND_ADDR");

  std::vector<std::string> names;
  for (const auto* s : app.get_subcommands({})) names.push_back(s->get_name());
  app.config_formatter(std::make_shared<JsonConfig>(names));
  app.set_config("--config", "", "JSON config file; flags override it");

  std::vector<std::string> argv = {"contexta"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::vector<const char*> cargv;
  for (const auto& s : argv) cargv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(a, out, err);
    if (per->parsed()) return cmd_perturb(a, out, err);
    if (cor->parsed()) return cmd_corpus(a, out, err);
    if (rep->parsed()) return cmd_replay(a, out, err, false);
    if (pr->parsed()) return cmd_replay(a, out, err, true);
    if (ev->parsed()) return cmd_evaluate(a, out, err);
    if (srv->parsed()) return cmd_serve(a, out, err);
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << e.what() << '\n';
    return is_validation_error(e) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace contexta::cli
