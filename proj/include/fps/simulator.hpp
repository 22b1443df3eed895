#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fps/agent.hpp"
#include "fps/backend.hpp"
#include "fps/errors.hpp"
#include "fps/persona.hpp"
#include "fps/population.hpp"
#include "fps/random.hpp"

namespace fps {

// The broadcast text delivered by the official agent, with {topic}
// substituted per run.
inline constexpr const char* kRefutationTemplate =
    "As the official spokesperson, I hereby issue a formal statement of refutation "
    "regarding the recent news report circulated on various media platforms "
    "concerning {topic}.";

inline std::string render_refutation(const std::string& topic) {
  std::string text = kRefutationTemplate;
  const auto pos = text.find("{topic}");
  text.replace(pos, 7, topic);
  return truncate_to(std::move(text), kTweetCharCap);
}

// When the official agent broadcasts: never, on listed days, or every k days
// from a start day. Day indices are 1-based.
struct InterventionSchedule {
  enum class Mode { none, on_days, every_k };

  Mode mode = Mode::none;
  std::vector<int> days;  // on_days
  int start_day = 1;      // every_k
  int every = 1;          // every_k

  bool operator==(const InterventionSchedule&) const = default;

  static InterventionSchedule none() { return {}; }

  static InterventionSchedule on_days(std::vector<int> day_list) {
    InterventionSchedule s;
    s.mode = Mode::on_days;
    s.days = std::move(day_list);
    std::sort(s.days.begin(), s.days.end());
    s.days.erase(std::unique(s.days.begin(), s.days.end()), s.days.end());
    return s;
  }

  static InterventionSchedule every_k(int start_day, int k) {
    InterventionSchedule s;
    s.mode = Mode::every_k;
    s.start_day = start_day;
    s.every = k;
    return s;
  }

  std::vector<int> expand(int horizon_days) const {
    switch (mode) {
      case Mode::none: return {};
      case Mode::on_days: return days;
      case Mode::every_k: {
        std::vector<int> out;
        for (int d = start_day; d <= horizon_days; d += every) out.push_back(d);
        return out;
      }
    }
    return {};
  }

  bool active_on(int day, int horizon_days) const {
    const auto expanded = expand(horizon_days);
    return std::binary_search(expanded.begin(), expanded.end(), day);
  }
};

struct SimulationConfig {
  int n_agents = 30;
  int horizon_days = 15;
  int contacts_min = 2;
  int contacts_max = 5;
  int initially_infected = 1;
  std::string topic;
  TraitProfile trait_profile;
  InterventionSchedule intervention;
  std::uint64_t run_seed = 0;
  bool symmetric_contacts = false;
  std::size_t long_term_char_cap = kDefaultLongTermCharCap;
  AblationFlags ablation;
  std::vector<std::string> name_pool;  // empty means the bundled default

  bool operator==(const SimulationConfig&) const = default;

  void validate() const {
    if (topic.empty()) throw ConfigError("config: topic is required");
    if (n_agents < 2) throw ConfigError("config: n_agents must be >= 2");
    if (horizon_days < 1) throw ConfigError("config: horizon_days must be >= 1");
    if (contacts_min < 1)
      throw ConfigError("config: contacts_min must be >= 1");
    if (contacts_max < contacts_min)
      throw ConfigError("config: contacts_max must be >= contacts_min");
    if (contacts_max > n_agents - 1)
      throw ConfigError("config: contacts_max must be <= n_agents - 1");
    if (initially_infected < 0 || initially_infected > n_agents)
      throw ConfigError("config: initially_infected must be in [0, n_agents]");
    if (long_term_char_cap < 1)
      throw ConfigError("config: long_term_char_cap must be >= 1");
    if (intervention.mode == InterventionSchedule::Mode::every_k &&
        (intervention.start_day < 1 || intervention.every < 1))
      throw ConfigError("config: every_k intervention needs start_day >= 1 and k >= 1");
    for (const int d : intervention.expand(horizon_days))
      if (d < 1 || d > horizon_days)
        throw ConfigError("config: intervention day " + std::to_string(d) +
                          " outside [1, horizon_days]");
  }
};

// Directed interaction: the listener hears the speaker's previous-day tweet.
struct InteractionEdge {
  int day = 0;
  int listener = 0;
  int speaker = 0;

  auto operator<=>(const InteractionEdge&) const = default;
};

struct AgentDayRecord {
  int id = 0;
  int day = 0;
  int belief = 0;
  std::string tweet;
  std::string reasoning;
  std::string short_term;
  std::string long_term;
  PopulationLabel label = PopulationLabel::susceptible;
  std::string backend_error;  // empty unless the day's backend calls failed

  bool operator==(const AgentDayRecord&) const = default;
};

// Full record of one run: day 0 is the initialization snapshot, days 1..T
// are simulated.
struct SimulationTrace {
  SimulationConfig config;
  std::uint64_t seed = 0;
  std::string backend_name;
  std::vector<PopulationCounts> counts;
  std::vector<AgentDayRecord> records;
  std::vector<InteractionEdge> edges;
  std::vector<int> intervention_days;
  std::uint64_t backend_calls = 0;
  int backend_failures = 0;

  bool operator==(const SimulationTrace&) const = default;
};

// Per-listener contact draws: each listener hears c ~ U[c_min, c_max]
// distinct speakers, never itself. Output is ordered by listener, then by
// draw order.
inline std::vector<std::pair<int, int>> schedule_interactions(int n_agents, int contacts_min,
                                                              int contacts_max, Rng& rng) {
  if (n_agents < 2) throw ConfigError("schedule_interactions: need at least 2 agents");
  if (contacts_min < 1 || contacts_max < contacts_min || contacts_max > n_agents - 1)
    throw ConfigError("schedule_interactions: invalid contact range");
  std::vector<std::pair<int, int>> edges;
  for (int listener = 0; listener < n_agents; ++listener) {
    const int c = uniform_int(rng, contacts_min, contacts_max);
    for (const int speaker : sample_distinct(rng, n_agents, c, listener))
      edges.emplace_back(listener, speaker);
  }
  return edges;
}

// Deliver the official refutation to every agent when the schedule covers
// this day. Returns the number of messages delivered.
inline int apply_intervention(int day, const InterventionSchedule& schedule,
                              std::vector<AgentState>& agents, const std::string& topic,
                              int horizon_days) {
  if (!schedule.active_on(day, horizon_days)) return 0;
  const std::string tweet = render_refutation(topic);
  for (AgentState& agent : agents) receive(agent, make_official_message(tweet));
  return static_cast<int>(agents.size());
}

inline PopulationCounts tally_populations(const std::vector<AgentState>& agents, int day) {
  PopulationCounts counts;
  counts.day = day;
  for (const AgentState& agent : agents) {
    switch (agent.label) {
      case PopulationLabel::susceptible: ++counts.susceptible; break;
      case PopulationLabel::infected: ++counts.infected; break;
      case PopulationLabel::recovered: ++counts.recovered; break;
    }
  }
  return counts;
}

// Drives the daily loop: message delivery finishes for all agents before any
// agent starts its reflection pipeline; agent pipelines may then run in
// parallel (bounded by the backend's max_parallelism); the day closes when
// every agent is done.
class SimulationEngine {
 public:
  SimulationEngine(SimulationConfig config, OpinionBackend& backend)
      : config_(std::move(config)), backend_(&backend) {
    config_.validate();
    trace_.config = config_;
    trace_.seed = config_.run_seed;
    trace_.backend_name = backend_->name();

    const std::vector<std::string>& pool =
        config_.name_pool.empty() ? default_name_pool() : config_.name_pool;
    Rng persona_rng(derive_seed(config_.run_seed, kPersonaStreamId, 0));
    agents_.reserve(static_cast<std::size_t>(config_.n_agents));
    for (int i = 0; i < config_.n_agents; ++i) {
      Persona persona = generate_persona(persona_rng, i, config_.trait_profile, pool);
      AgentState agent = init_agent(std::move(persona), i < config_.initially_infected,
                                    config_.topic, config_.long_term_char_cap);
      seal_initial_day(agent);
      agents_.push_back(std::move(agent));
    }
    record_day(0);
    trace_.counts.push_back(tally_populations(agents_, 0));
  }

  int current_day() const { return day_; }
  bool done() const { return day_ >= config_.horizon_days; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const SimulationConfig& config() const { return config_; }

  void step_day() {
    if (done()) throw std::logic_error("step_day: horizon already reached");
    const int day = ++day_;

    // Previous-day snapshot: everyone speaks yesterday's opinion.
    std::vector<std::pair<int, std::string>> snapshot;
    snapshot.reserve(agents_.size());
    for (const AgentState& agent : agents_)
      snapshot.emplace_back(agent.opinion.belief, agent.opinion.tweet);

    // Officials are delivered before any peer message.
    if (apply_intervention(day, config_.intervention, agents_, config_.topic,
                           config_.horizon_days) > 0)
      trace_.intervention_days.push_back(day);

    Rng scheduler(derive_seed(config_.run_seed, kSchedulerStreamId,
                              static_cast<std::uint64_t>(day)));
    auto pairs = schedule_interactions(config_.n_agents, config_.contacts_min,
                                       config_.contacts_max, scheduler);
    if (config_.symmetric_contacts) {
      std::set<std::pair<int, int>> unique(pairs.begin(), pairs.end());
      for (const auto& [listener, speaker] : pairs) unique.insert({speaker, listener});
      pairs.assign(unique.begin(), unique.end());
    }

    // Peer delivery in ascending speaker order per listener.
    std::map<int, std::vector<int>> speakers_by_listener;
    for (const auto& [listener, speaker] : pairs)
      speakers_by_listener[listener].push_back(speaker);
    for (auto& [listener, speakers] : speakers_by_listener) {
      std::sort(speakers.begin(), speakers.end());
      for (const int speaker : speakers) {
        const auto& [belief, tweet] = snapshot[static_cast<std::size_t>(speaker)];
        receive(agents_[static_cast<std::size_t>(listener)],
                Message{speaker, belief, tweet, MessageKind::peer});
        trace_.edges.push_back({day, listener, speaker});
      }
    }

    run_agent_phase(day);
    trace_.counts.push_back(tally_populations(agents_, day));
    check_day_invariants();
  }

  SimulationTrace finish() {
    while (!done()) step_day();
    trace_.backend_calls = backend_->call_count();
    return trace_;
  }

 private:
  void record_day(int day) {
    for (const AgentState& agent : agents_) {
      AgentDayRecord row;
      row.id = agent.persona.id;
      row.day = day;
      row.belief = agent.opinion.belief;
      row.tweet = agent.opinion.tweet;
      row.reasoning = agent.opinion.reasoning;
      row.short_term = agent.memory.short_term;
      row.long_term = agent.memory.long_term;
      row.label = agent.label;
      trace_.records.push_back(std::move(row));
    }
  }

  void run_agent_phase(int day) {
    const std::size_t n = agents_.size();
    std::vector<AgentDayRecord> rows(n);
    std::atomic<int> failures{0};

    const auto update_one = [&](std::size_t i) {
      AgentState& agent = agents_[i];
      const MemoryState memory_before = agent.memory;
      const Opinion opinion_before = agent.opinion;
      AgentDayRecord row;
      row.id = agent.persona.id;
      row.day = day;
      try {
        reflect_short_term(agent, *backend_, config_.ablation);
        reflect_long_term(agent, *backend_, config_.ablation);
        update_opinion(agent, *backend_,
                       derive_seed(config_.run_seed, static_cast<std::uint64_t>(agent.persona.id),
                                   static_cast<std::uint64_t>(day)),
                       config_.ablation);
        row.short_term = agent.memory.short_term;
        end_of_day(agent);
      } catch (const BackendError& error) {
        // Retain the previous opinion and drop the day's partial memory work.
        agent.memory = memory_before;
        agent.opinion = opinion_before;
        agent.opinion.day = day;
        agent.belief_history.push_back(agent.opinion.belief);
        agent.inbox.clear();
        agent.memory.short_term.clear();
        agent.label = classify_state(agent.belief_history);
        agent.phase = DayPhase::idle;
        row.backend_error = error.what();
        failures.fetch_add(1, std::memory_order_relaxed);
      }
      row.belief = agent.opinion.belief;
      row.tweet = agent.opinion.tweet;
      row.reasoning = agent.opinion.reasoning;
      row.long_term = agent.memory.long_term;
      row.label = agent.label;
      rows[i] = std::move(row);
    };

    const int workers = std::min(backend_->max_parallelism(), static_cast<int>(n));
    if (workers <= 1) {
      for (std::size_t i = 0; i < n; ++i) update_one(i);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr first_error;
      std::mutex error_mutex;
      std::vector<std::thread> threads;
      threads.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
          for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
              update_one(i);
            } catch (...) {
              const std::lock_guard<std::mutex> lock(error_mutex);
              if (!first_error) first_error = std::current_exception();
            }
          }
        });
      }
      for (std::thread& t : threads) t.join();
      if (first_error) std::rethrow_exception(first_error);
    }

    trace_.backend_failures += failures.load();
    for (auto& row : rows) trace_.records.push_back(std::move(row));
  }

  void check_day_invariants() const {
    const PopulationCounts& today = trace_.counts.back();
    if (today.total() != config_.n_agents)
      throw std::logic_error("simulator: population counts do not partition N");
    int believers = 0;
    for (const AgentState& agent : agents_) believers += agent.opinion.belief;
    if (believers != today.infected)
      throw std::logic_error("simulator: infected count disagrees with raw beliefs");
  }

  SimulationConfig config_;
  OpinionBackend* backend_;
  std::vector<AgentState> agents_;
  SimulationTrace trace_;
  int day_ = 0;
};

inline SimulationTrace run_simulation(const SimulationConfig& config, OpinionBackend& backend) {
  SimulationEngine engine(config, backend);
  return engine.finish();
}

}  // namespace fps
