#pragma once

#include <array>
#include <functional>
#include <vector>

#include "contexta/dialogue.hpp"
#include "contexta/engine.hpp"
#include "contexta/replay.hpp"

namespace contexta {

struct SessionOptions {
  ReplayOptions replay;
  EngineConfig engine;
  DialogueConfig dialogue;
  const TemplateSet* templates = nullptr;  // bundled() when null
  ResponderClient* responder = nullptr;    // a StubResponder when null
  StickerClient* stickers = nullptr;
  const Lexicon* lexicon = nullptr;        // bundled() when null
  SpeechWorker* speech = nullptr;
};

struct SessionResult {
  ReplayReport replay;
  std::vector<DialogueTurn> turns;
  std::array<std::size_t, kScenarioCount> triggers{};
  std::size_t total_triggers() const;
  /// Per-scenario trigger counts, one "name count" line each, nonzero only.
  std::string summary() const;
};

/// Called on the replay thread after each turn, and once per event before
/// it is ingested.
struct SessionHooks {
  std::function<void(const DialogueTurn&)> on_turn;
  std::function<void(const SensorEvent&)> before_event;
};

/// Replays events through a fresh context engine and sends every trigger
/// down the dialogue pipeline. A backward seek restarts the engine.
SessionResult run_session(const EventSource& source, const SessionOptions& opts, const SessionHooks& hooks = {});
SessionResult run_session(const Trace& trace, const SessionOptions& opts, const SessionHooks& hooks = {});

/// One JSON line per trigger and message, in emission order.
std::string session_records(const SessionResult& r);

}  // namespace contexta
