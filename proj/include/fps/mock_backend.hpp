#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fps/backend.hpp"
#include "fps/errors.hpp"
#include "fps/message.hpp"
#include "fps/persona.hpp"
#include "fps/random.hpp"

namespace fps {

// Deterministic trait-parameterized backend. Daily summaries are canonical
// tally lines; long-term memory is a capped list of those lines; the opinion
// rule draws on the evidence accumulated across remembered days, so a single
// day of hearsay moves nobody once long-term memory is disabled.
struct MockBackendConfig {
  double official_weight = 3.0;  // one official message counts as this many disbelieve votes
  int evidence_window_days = 7;  // how many remembered days feed the opinion rule
  SusceptibilityCoeffs coeffs;
  std::uint64_t seed = 0;  // salt mixed into each per-agent-day stream

  bool operator==(const MockBackendConfig&) const = default;
};

// Counts of today's heard messages. `disbelieve` includes each official
// message once; `official` tracks how many of them there were.
struct DailyTally {
  int believe = 0;
  int disbelieve = 0;
  int official = 0;

  bool operator==(const DailyTally&) const = default;
};

inline DailyTally tally_messages(const std::vector<Message>& inbox) {
  DailyTally t;
  for (const Message& msg : inbox) {
    if (msg.kind == MessageKind::official) {
      ++t.official;
      ++t.disbelieve;
    } else if (msg.belief == 1) {
      ++t.believe;
    } else {
      ++t.disbelieve;
    }
  }
  return t;
}

inline std::string format_tally(const DailyTally& t) {
  return "heard " + std::to_string(t.believe) + " believe, " +
         std::to_string(t.disbelieve) + " disbelieve, " +
         std::to_string(t.official) + " official";
}

// Inverse of format_tally. Returns nullopt for anything else.
inline std::optional<DailyTally> parse_tally(std::string_view line) {
  const auto take_int = [](std::string_view& s, int& out) {
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto result = std::from_chars(begin, end, out);
    if (result.ec != std::errc{} || out < 0) return false;
    s.remove_prefix(static_cast<std::size_t>(result.ptr - begin));
    return true;
  };
  const auto take_literal = [](std::string_view& s, std::string_view lit) {
    if (!s.starts_with(lit)) return false;
    s.remove_prefix(lit.size());
    return true;
  };
  DailyTally t;
  if (!take_literal(line, "heard ")) return std::nullopt;
  if (!take_int(line, t.believe)) return std::nullopt;
  if (!take_literal(line, " believe, ")) return std::nullopt;
  if (!take_int(line, t.disbelieve)) return std::nullopt;
  if (!take_literal(line, " disbelieve, ")) return std::nullopt;
  if (!take_int(line, t.official)) return std::nullopt;
  if (!take_literal(line, " official")) return std::nullopt;
  if (!line.empty()) return std::nullopt;
  return t;
}

namespace detail {

inline std::string format_count(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

// Sum the tally entries remembered in an integrated memory text, keeping
// only the most recent window_days of them. Entries are the lines prefixed
// "- "; bare (unintegrated) summaries contribute nothing, so a pipeline
// without long-term memory carries no persuasive evidence.
struct EvidenceSums {
  double believe = 0.0;
  double disbelieve = 0.0;
  bool any = false;
};

inline EvidenceSums sum_remembered_evidence(std::string_view memory, double official_weight,
                                            int window_days = 0) {
  std::vector<DailyTally> entries;
  std::size_t pos = 0;
  while (pos < memory.size()) {
    auto eol = memory.find('\n', pos);
    if (eol == std::string_view::npos) eol = memory.size();
    std::string_view line = memory.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.starts_with("- ")) continue;
    if (const auto t = parse_tally(line.substr(2))) entries.push_back(*t);
  }
  std::size_t first = 0;
  if (window_days > 0 && entries.size() > static_cast<std::size_t>(window_days))
    first = entries.size() - static_cast<std::size_t>(window_days);
  EvidenceSums sums;
  for (std::size_t k = first; k < entries.size(); ++k) {
    sums.believe += entries[k].believe;
    sums.disbelieve += entries[k].disbelieve + (official_weight - 1.0) * entries[k].official;
    sums.any = true;
  }
  return sums;
}

}  // namespace detail

// The mock opinion rule. `believe` and `disbelieve` are weighted vote
// counts; with no votes the belief is a fixed point. A disbeliever flips
// with probability susceptibility * f, a believer with probability
// (1 - susceptibility) * (1 - f), where f is the believing fraction.
inline OpinionResult mock_form_opinion(const MockBackendConfig& config, const Persona& persona,
                                       double believe, double disbelieve,
                                       const Opinion& previous, Rng& rng,
                                       const std::string& topic = "the story") {
  const double total = believe + disbelieve;
  const double sigma = susceptibility_score(persona, config.coeffs);
  const bool has_evidence = total > 0.0;
  const double f = has_evidence ? believe / total : static_cast<double>(previous.belief);
  const double flip_probability =
      previous.belief == 0 ? sigma * f : (1.0 - sigma) * (1.0 - f);
  const bool flip = uniform_unit(rng) < flip_probability;
  const int belief = flip ? 1 - previous.belief : previous.belief;

  OpinionResult result;
  result.belief = belief;
  const std::string for_votes = detail::format_count(believe);
  const std::string against_votes = detail::format_count(disbelieve);
  if (has_evidence) {
    result.tweet = belief == 1
                       ? "Word keeps spreading: " + for_votes + " for, " + against_votes +
                             " against. I believe " + topic + "."
                       : "After weighing " + for_votes + " for and " + against_votes +
                             " against, I doubt " + topic + ".";
  } else {
    result.tweet = belief == 1 ? "No new word on " + topic + "; I still believe it."
                               : "No new word on " + topic + "; I still doubt it.";
  }
  result.reasoning = "Weighted tally " + for_votes + " believe vs " + against_votes +
                     " disbelieve; susceptibility " + detail::format_count(sigma) + "; " +
                     (flip ? "changed" : "kept") + " my stance.";
  result.tweet = truncate_to(std::move(result.tweet), kTweetCharCap);
  return result;
}

class MockBackend : public OpinionBackend {
 public:
  explicit MockBackend(MockBackendConfig config = {}, std::string topic = "the story")
      : config_(std::move(config)), topic_(std::move(topic)) {
    if (config_.official_weight < 1.0)
      throw ConfigError("mock backend: official_weight must be >= 1");
  }

  std::string summarize(const std::vector<Message>& inbox) override {
    record_call();
    if (inbox.empty()) return kNoConversationsSentinel;
    return format_tally(tally_messages(inbox));
  }

  // Appends the day's text as one "- " entry, then drops the oldest entries
  // until the result fits the cap.
  std::string integrate(const std::string& long_term, const std::string& addition,
                        std::size_t char_cap) override {
    record_call();
    std::string entry = "- " + addition;
    if (entry.size() > char_cap) entry.resize(char_cap);
    std::string merged = long_term.empty() ? entry : long_term + "\n" + entry;
    while (merged.size() > char_cap) {
      const auto cut = merged.find('\n');
      if (cut == std::string::npos) {
        merged.resize(char_cap);
        break;
      }
      merged.erase(0, cut + 1);
    }
    return merged;
  }

  OpinionResult form_opinion(const Persona& persona, const std::string& memory,
                             const Opinion& previous, std::uint64_t seed,
                             bool /*request_reasoning*/) override {
    record_call();
    const auto sums = detail::sum_remembered_evidence(memory, config_.official_weight,
                                                      config_.evidence_window_days);
    Rng rng(seed ^ config_.seed);
    return mock_form_opinion(config_, persona, sums.believe, sums.disbelieve, previous, rng,
                             topic_);
  }

  std::string name() const override { return "mock"; }

  const MockBackendConfig& config() const { return config_; }

 private:
  MockBackendConfig config_;
  std::string topic_;
};

}  // namespace fps
