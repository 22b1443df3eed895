#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "fps/message.hpp"
#include "fps/persona.hpp"

namespace fps {

// Tweets are kept short; anything longer is truncated.
inline constexpr std::size_t kTweetCharCap = 560;

// Short-term memory text for a day with an empty inbox.
inline constexpr const char* kNoConversationsSentinel = "No conversations today.";

inline std::string truncate_to(std::string text, std::size_t cap) {
  if (text.size() > cap) text.resize(cap);
  return text;
}

struct Opinion {
  int belief = 0;              // 0 = disbelief, 1 = belief
  std::string tweet;
  std::string reasoning;
  int day = 0;

  bool operator==(const Opinion&) const = default;
};

struct OpinionResult {
  int belief = 0;
  std::string tweet;
  std::string reasoning;
};

// Feature switches for ablation runs. All combinations are legal.
struct AblationFlags {
  bool disable_long_term = false;
  bool disable_short_term = false;
  bool disable_reasoning = false;

  bool operator==(const AblationFlags&) const = default;
};

// The cognition substrate behind the agent pipeline. Implementations must be
// safe to call from multiple threads up to max_parallelism() concurrent
// callers; `seed` identifies the caller's per-agent-per-day random stream so
// results cannot depend on update order.
class OpinionBackend {
 public:
  virtual ~OpinionBackend() = default;

  // Condense today's heard messages into a short-term summary.
  virtual std::string summarize(const std::vector<Message>& inbox) = 0;

  // Fold a day's summary (or raw text) into the long-term memory, keeping
  // the result within char_cap.
  virtual std::string integrate(const std::string& long_term,
                                const std::string& addition,
                                std::size_t char_cap) = 0;

  // Decide the day's belief, tweet, and reasoning from memory and the
  // previous opinion. The returned belief is always 0 or 1.
  virtual OpinionResult form_opinion(const Persona& persona,
                                     const std::string& memory,
                                     const Opinion& previous,
                                     std::uint64_t seed,
                                     bool request_reasoning) = 0;

  virtual std::string name() const = 0;

  // Max concurrent agent updates this backend supports.
  virtual int max_parallelism() const { return 1; }

  std::uint64_t call_count() const { return calls_.load(std::memory_order_relaxed); }

 protected:
  void record_call() { calls_.fetch_add(1, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace fps
