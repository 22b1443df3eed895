#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fps/backend.hpp"
#include "fps/errors.hpp"
#include "fps/message.hpp"
#include "fps/persona.hpp"
#include "fps/population.hpp"

namespace fps {

inline constexpr std::size_t kDefaultLongTermCharCap = 2000;

// Dual memory: short_term holds today's summarized interactions and is
// cleared nightly; long_term is a capped running integration of summaries.
struct MemoryState {
  std::string short_term;
  std::string long_term;
  std::size_t long_term_char_cap = kDefaultLongTermCharCap;

  bool operator==(const MemoryState&) const = default;
};

// Where the agent is in its daily pipeline. The pipeline order is fixed:
// receive* -> reflect_short_term -> reflect_long_term -> update_opinion ->
// end_of_day. Out-of-order calls throw.
enum class DayPhase { idle, summarized, integrated, updated };

struct AgentState {
  Persona persona;
  MemoryState memory;
  Opinion opinion;
  std::vector<int> belief_history;  // one entry per completed day, day 0 first
  std::vector<Message> inbox;
  PopulationLabel label = PopulationLabel::susceptible;
  DayPhase phase = DayPhase::idle;
};

namespace detail {
inline void expect_phase(const AgentState& agent, DayPhase expected, const char* op) {
  if (agent.phase != expected)
    throw std::logic_error(std::string(op) + ": called out of pipeline order");
}
}  // namespace detail

inline AgentState init_agent(Persona persona, bool initially_infected,
                             const std::string& topic,
                             std::size_t long_term_char_cap = kDefaultLongTermCharCap) {
  if (topic.empty()) throw ConfigError("init_agent: topic must not be empty");
  AgentState agent;
  agent.persona = std::move(persona);
  agent.memory.long_term_char_cap = long_term_char_cap;
  agent.opinion.day = 0;
  if (initially_infected) {
    agent.opinion.belief = 1;
    agent.opinion.tweet =
        truncate_to("I'm telling everyone: " + topic + ". This is real.", kTweetCharCap);
    agent.label = PopulationLabel::infected;
  } else {
    agent.opinion.belief = 0;
    agent.opinion.tweet = truncate_to(
        "People keep sharing a story that " + topic + ", but I've seen no solid evidence.",
        kTweetCharCap);
    agent.label = PopulationLabel::susceptible;
  }
  return agent;
}

// Record the initial belief as the day-0 history entry. The simulator calls
// this once after init so label classification sees the day-0 stance.
inline void seal_initial_day(AgentState& agent) {
  if (!agent.belief_history.empty())
    throw std::logic_error("seal_initial_day: history already started");
  agent.belief_history.push_back(agent.opinion.belief);
  agent.label = classify_state(agent.belief_history);
}

// Deliver one message. Only the inbox changes; the opinion updates later.
inline void receive(AgentState& agent, Message msg) {
  detail::expect_phase(agent, DayPhase::idle, "receive");
  agent.inbox.push_back(std::move(msg));
}

inline void reflect_short_term(AgentState& agent, OpinionBackend& backend,
                               const AblationFlags& flags = {}) {
  detail::expect_phase(agent, DayPhase::idle, "reflect_short_term");
  if (!flags.disable_short_term) {
    agent.memory.short_term = agent.inbox.empty() ? std::string(kNoConversationsSentinel)
                                                  : backend.summarize(agent.inbox);
  }
  agent.phase = DayPhase::summarized;
}

namespace detail {
inline std::string concat_raw_messages(const std::vector<Message>& inbox) {
  std::string out;
  for (const Message& msg : inbox) {
    if (!out.empty()) out += " | ";
    out += msg.tweet;
  }
  return out;
}
}  // namespace detail

inline void reflect_long_term(AgentState& agent, OpinionBackend& backend,
                              const AblationFlags& flags = {}) {
  detail::expect_phase(agent, DayPhase::summarized, "reflect_long_term");
  if (flags.disable_long_term) {
    // Long-term memory removed: nothing accumulates across days.
  } else {
    const std::string addition = flags.disable_short_term
                                     ? detail::concat_raw_messages(agent.inbox)
                                     : agent.memory.short_term;
    agent.memory.long_term = truncate_to(
        backend.integrate(agent.memory.long_term, addition, agent.memory.long_term_char_cap),
        agent.memory.long_term_char_cap);
  }
  agent.phase = DayPhase::integrated;
}

inline void update_opinion(AgentState& agent, OpinionBackend& backend, std::uint64_t seed,
                           const AblationFlags& flags = {}) {
  detail::expect_phase(agent, DayPhase::integrated, "update_opinion");
  const int day = agent.opinion.day + 1;
  const bool no_conversations =
      !flags.disable_short_term && agent.memory.short_term == kNoConversationsSentinel;
  if (no_conversations) {
    // Declared no-op: a day without messages leaves the opinion unchanged.
    agent.opinion.day = day;
  } else {
    const std::string& memory_view =
        flags.disable_long_term ? agent.memory.short_term : agent.memory.long_term;
    OpinionResult result = backend.form_opinion(agent.persona, memory_view, agent.opinion,
                                                seed, !flags.disable_reasoning);
    if (result.belief != 0 && result.belief != 1)
      throw std::logic_error("update_opinion: backend returned a non-binary belief");
    agent.opinion.belief = result.belief;
    agent.opinion.tweet = truncate_to(std::move(result.tweet), kTweetCharCap);
    agent.opinion.reasoning = flags.disable_reasoning ? "" : std::move(result.reasoning);
    agent.opinion.day = day;
  }
  agent.belief_history.push_back(agent.opinion.belief);
  agent.phase = DayPhase::updated;
}

inline void end_of_day(AgentState& agent) {
  detail::expect_phase(agent, DayPhase::updated, "end_of_day");
  agent.inbox.clear();
  agent.memory.short_term.clear();
  agent.label = classify_state(agent.belief_history);
  agent.phase = DayPhase::idle;
}

}  // namespace fps
