#include "contexta/session.hpp"

#include <sstream>

namespace contexta {

std::size_t SessionResult::total_triggers() const {
  std::size_t n = 0;
  for (auto c : triggers) n += c;
  return n;
}

std::string SessionResult::summary() const {
  std::ostringstream out;
  for (auto id : all_scenarios()) {
    const auto n = triggers[static_cast<std::size_t>(id)];
    if (n) out << to_string(id) << ' ' << n << '\n';
  }
  return out.str();
}

namespace {

class SessionSink : public ReplaySink {
 public:
  SessionSink(const SessionOptions& opts, const SessionHooks& hooks, SessionResult& out)
      : opts_(opts),
        hooks_(hooks),
        out_(out),
        templates_(opts.templates ? *opts.templates : TemplateSet::bundled()),
        responder_(opts.responder ? *opts.responder : stub_),
        engine_(opts.engine) {
    reset_pipeline();
  }

  void on_event(const SensorEvent& e) override {
    if (hooks_.before_event) hooks_.before_event(e);
    if (const auto last = engine_.last_timestamp(); last && e.timestamp < *last) {
      engine_ = ContextEngine(opts_.engine);  // rewound by a seek
    }
    for (const auto& t : engine_.ingest(e)) {
      ++out_.triggers[static_cast<std::size_t>(t.scenarioId)];
      out_.turns.push_back(pipeline_->handle(t));
      if (hooks_.on_turn) hooks_.on_turn(out_.turns.back());
    }
  }

 private:
  void reset_pipeline() {
    pipeline_ = std::make_unique<DialoguePipeline>(templates_, responder_, opts_.dialogue);
    pipeline_->set_lexicon(opts_.lexicon ? opts_.lexicon : &Lexicon::bundled());
    pipeline_->set_stickers(opts_.stickers);
    pipeline_->set_speech(opts_.speech);
  }

  const SessionOptions& opts_;
  const SessionHooks& hooks_;
  SessionResult& out_;
  StubResponder stub_;
  const TemplateSet& templates_;
  ResponderClient& responder_;
  ContextEngine engine_;
  std::unique_ptr<DialoguePipeline> pipeline_;
};

}  // namespace

SessionResult run_session(const EventSource& source, const SessionOptions& opts, const SessionHooks& hooks) {
  SessionResult out;
  SessionSink sink(opts, hooks, out);
  out.replay = replay(source, sink, opts.replay);
  return out;
}

SessionResult run_session(const Trace& trace, const SessionOptions& opts, const SessionHooks& hooks) {
  SessionResult out;
  SessionSink sink(opts, hooks, out);
  out.replay = replay(trace, sink, opts.replay);
  return out;
}

std::string session_records(const SessionResult& r) {
  std::string out;
  for (const auto& t : r.turns) {
    out += serialize_trigger(t.trigger);
    out += '\n';
    out += serialize_message(t.message);
    out += '\n';
  }
  return out;
}

}  // namespace contexta
