#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fps/errors.hpp"
#include "fps/llm_backend.hpp"
#include "fps/mock_backend.hpp"
#include "fps/persona.hpp"
#include "fps/simulator.hpp"

namespace fps {

enum class BackendKind { mock, llm };

inline const char* backend_name(BackendKind kind) {
  return kind == BackendKind::mock ? "mock" : "llm";
}

inline BackendKind parse_backend(std::string_view name) {
  if (name == "mock") return BackendKind::mock;
  if (name == "llm") return BackendKind::llm;
  throw ConfigError("unknown backend '" + std::string(name) + "' (expected mock or llm)");
}

inline ProfileKind parse_profile(std::string_view name) {
  if (name == "random") return ProfileKind::random;
  if (name == "credulous") return ProfileKind::credulous;
  if (name == "skeptical") return ProfileKind::skeptical;
  throw ConfigError("unknown trait_profile '" + std::string(name) +
                    "' (expected random, credulous, or skeptical)");
}

// "none" | "on_days(7)" | "on_days(3,9)" | "every_k(1,3)"
inline InterventionSchedule parse_intervention(std::string_view spec) {
  const auto parse_int_list = [](std::string_view text) {
    std::vector<int> values;
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto comma = text.find(',', pos);
      if (comma == std::string_view::npos) comma = text.size();
      int value = 0;
      const auto* begin = text.data() + pos;
      const auto* end = text.data() + comma;
      const auto result = std::from_chars(begin, end, value);
      if (result.ec != std::errc{} || result.ptr != end)
        throw ConfigError("intervention: expected an integer, got '" +
                          std::string(text.substr(pos, comma - pos)) + "'");
      values.push_back(value);
      pos = comma + 1;
    }
    return values;
  };

  if (spec == "none") return InterventionSchedule::none();
  const auto open = spec.find('(');
  if (open == std::string_view::npos || spec.back() != ')')
    throw ConfigError("unknown intervention mode '" + std::string(spec) +
                      "' (expected none, on_days(...), or every_k(start,k))");
  const std::string_view mode = spec.substr(0, open);
  const std::string_view args = spec.substr(open + 1, spec.size() - open - 2);
  if (mode == "on_days") {
    const auto days = parse_int_list(args);
    if (days.empty()) throw ConfigError("intervention: on_days needs at least one day");
    return InterventionSchedule::on_days(days);
  }
  if (mode == "every_k") {
    const auto values = parse_int_list(args);
    if (values.size() != 2)
      throw ConfigError("intervention: every_k takes exactly (start_day, k)");
    return InterventionSchedule::every_k(values[0], values[1]);
  }
  throw ConfigError("unknown intervention mode '" + std::string(mode) +
                    "' (expected none, on_days, or every_k)");
}

inline std::string format_intervention(const InterventionSchedule& schedule) {
  switch (schedule.mode) {
    case InterventionSchedule::Mode::none:
      return "none";
    case InterventionSchedule::Mode::on_days: {
      std::string out = "on_days(";
      for (std::size_t i = 0; i < schedule.days.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(schedule.days[i]);
      }
      return out + ")";
    }
    case InterventionSchedule::Mode::every_k:
      return "every_k(" + std::to_string(schedule.start_day) + "," +
             std::to_string(schedule.every) + ")";
  }
  return "none";
}

// Everything a run needs, as read from a config file plus command-line
// overrides. simulation() materializes the engine-level config (resolving
// the profile and the name pool).
struct AppConfig {
  std::string topic;
  int n_agents = 30;
  int horizon_days = 15;
  int contacts_min = 2;
  int contacts_max = 5;
  int initially_infected = 1;
  ProfileKind profile = ProfileKind::random;
  InterventionSchedule intervention;
  BackendKind backend = BackendKind::mock;
  std::uint64_t seed = 0;
  bool symmetric_contacts = false;
  std::size_t long_term_char_cap = kDefaultLongTermCharCap;
  std::string name_pool_path;  // empty: bundled default pool
  std::string out_dir = "fps-run";
  AblationFlags ablation;
  MockBackendConfig mock;
  LlmBackendConfig llm;

  bool operator==(const AppConfig&) const = default;

  SimulationConfig simulation() const {
    SimulationConfig sim;
    sim.n_agents = n_agents;
    sim.horizon_days = horizon_days;
    sim.contacts_min = contacts_min;
    sim.contacts_max = contacts_max;
    sim.initially_infected = initially_infected;
    sim.topic = topic;
    sim.trait_profile = make_profile(profile);
    sim.intervention = intervention;
    sim.run_seed = seed;
    sim.symmetric_contacts = symmetric_contacts;
    sim.long_term_char_cap = long_term_char_cap;
    sim.ablation = ablation;
    if (!name_pool_path.empty()) sim.name_pool = load_name_pool(name_pool_path);
    return sim;
  }

  void validate() const {
    simulation().validate();
    if (mock.official_weight < 1.0)
      throw ConfigError("config: mock_official_weight must be >= 1");
    if (mock.evidence_window_days < 1)
      throw ConfigError("config: mock_evidence_window_days must be >= 1");
    llm.validate();
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

struct ConfigLine {
  std::string value;
  int line = 0;
};

class ConfigParser {
 public:
  explicit ConfigParser(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      std::string_view view = line;
      // Comments start with '#' outside quotes.
      bool in_quotes = false;
      for (std::size_t i = 0; i < view.size(); ++i) {
        if (view[i] == '"') in_quotes = !in_quotes;
        if (view[i] == '#' && !in_quotes) {
          view = view.substr(0, i);
          break;
        }
      }
      view = trim_view(view);
      if (view.empty()) continue;
      const auto eq = view.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError("config line " + std::to_string(line_number) +
                          ": expected 'key = value'");
      const std::string key(trim_view(view.substr(0, eq)));
      const std::string value(trim_view(view.substr(eq + 1)));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(line_number) + ": empty key");
      if (!entries_.emplace(key, ConfigLine{value, line_number}).second)
        throw ConfigError("config line " + std::to_string(line_number) + ": duplicate key '" +
                          key + "'");
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  // Keys not consumed by any getter are unknown.
  std::vector<std::pair<std::string, int>> unconsumed() const {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& [key, entry] : entries_)
      if (!consumed_.count(key)) out.emplace_back(key, entry.line);
    return out;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const auto* entry = take(key);
    if (!entry) return fallback;
    const std::string& raw = entry->value;
    if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"')
      throw at(key, "expected a quoted string");
    const std::string inner = raw.substr(1, raw.size() - 2);
    if (inner.find('"') != std::string::npos)
      throw at(key, "embedded quotes are not supported");
    return inner;
  }

  long long get_int(const std::string& key, long long fallback) {
    const auto* entry = take(key);
    if (!entry) return fallback;
    long long value = 0;
    if (!parse_number(entry->value, value)) throw at(key, "expected an integer");
    return value;
  }

  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) {
    const auto* entry = take(key);
    if (!entry) return fallback;
    std::uint64_t value = 0;
    if (!parse_number(entry->value, value)) throw at(key, "expected a non-negative integer");
    return value;
  }

  double get_double(const std::string& key, double fallback) {
    const auto* entry = take(key);
    if (!entry) return fallback;
    double value = 0.0;
    if (!parse_number(entry->value, value)) throw at(key, "expected a number");
    return value;
  }

  bool get_bool(const std::string& key, bool fallback) {
    const auto* entry = take(key);
    if (!entry) return fallback;
    if (entry->value == "true") return true;
    if (entry->value == "false") return false;
    throw at(key, "expected true or false");
  }

  std::string get_token(const std::string& key, const std::string& fallback) {
    const auto* entry = take(key);
    return entry ? entry->value : fallback;
  }

  int line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  ConfigError at(const std::string& key, const std::string& message) const {
    const int line = line_of(key);
    return ConfigError("config line " + std::to_string(line) + " (" + key + "): " + message);
  }

 private:
  const ConfigLine* take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }

  template <typename T>
  static bool parse_number(const std::string& text, T& out) {
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    const auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc{} && result.ptr == end;
  }

  std::map<std::string, ConfigLine> entries_;
  std::set<std::string> consumed_;
};

}  // namespace detail

inline AppConfig parse_config_text(const std::string& text) {
  detail::ConfigParser parser(text);
  AppConfig config;

  if (!parser.has("topic")) throw ConfigError("config: missing required key 'topic'");
  config.topic = parser.get_string("topic", "");
  if (config.topic.empty()) throw parser.at("topic", "topic must not be empty");

  config.n_agents = static_cast<int>(parser.get_int("n_agents", config.n_agents));
  config.horizon_days = static_cast<int>(parser.get_int("horizon_days", config.horizon_days));
  config.contacts_min = static_cast<int>(parser.get_int("contacts_min", config.contacts_min));
  config.contacts_max = static_cast<int>(parser.get_int("contacts_max", config.contacts_max));
  config.initially_infected =
      static_cast<int>(parser.get_int("initially_infected", config.initially_infected));
  config.seed = parser.get_uint64("seed", config.seed);
  config.symmetric_contacts = parser.get_bool("symmetric_contacts", config.symmetric_contacts);
  config.long_term_char_cap = static_cast<std::size_t>(
      parser.get_int("long_term_char_cap", static_cast<long long>(config.long_term_char_cap)));
  config.name_pool_path = parser.get_string("name_pool", config.name_pool_path);
  config.out_dir = parser.get_string("out_dir", config.out_dir);

  try {
    config.profile = parse_profile(parser.get_token("trait_profile", "random"));
  } catch (const ConfigError& error) {
    throw parser.at("trait_profile", error.what());
  }
  try {
    config.intervention = parse_intervention(parser.get_token("intervention", "none"));
  } catch (const ConfigError& error) {
    throw parser.at("intervention", error.what());
  }
  try {
    config.backend = parse_backend(parser.get_token("backend", "mock"));
  } catch (const ConfigError& error) {
    throw parser.at("backend", error.what());
  }

  config.ablation.disable_long_term =
      parser.get_bool("ablation_disable_long_term", false);
  config.ablation.disable_short_term =
      parser.get_bool("ablation_disable_short_term", false);
  config.ablation.disable_reasoning =
      parser.get_bool("ablation_disable_reasoning", false);

  config.mock.official_weight =
      parser.get_double("mock_official_weight", config.mock.official_weight);
  config.mock.evidence_window_days = static_cast<int>(
      parser.get_int("mock_evidence_window_days", config.mock.evidence_window_days));
  config.mock.coeffs.agreeableness_weight = parser.get_double(
      "mock_agreeableness_weight", config.mock.coeffs.agreeableness_weight);
  config.mock.coeffs.neuroticism_weight =
      parser.get_double("mock_neuroticism_weight", config.mock.coeffs.neuroticism_weight);
  config.mock.coeffs.education_weight =
      parser.get_double("mock_education_weight", config.mock.coeffs.education_weight);
  config.mock.seed = parser.get_uint64("mock_seed", config.mock.seed);

  config.llm.endpoint_url = parser.get_string("llm_endpoint_url", config.llm.endpoint_url);
  config.llm.model_name = parser.get_string("llm_model_name", config.llm.model_name);
  config.llm.temperature = parser.get_double("llm_temperature", config.llm.temperature);
  config.llm.max_retries =
      static_cast<int>(parser.get_int("llm_max_retries", config.llm.max_retries));
  config.llm.timeout_seconds =
      parser.get_double("llm_timeout_seconds", config.llm.timeout_seconds);
  config.llm.max_concurrent_requests = static_cast<int>(
      parser.get_int("llm_max_concurrent_requests", config.llm.max_concurrent_requests));
  config.llm.retry_backoff_ms =
      static_cast<int>(parser.get_int("llm_retry_backoff_ms", config.llm.retry_backoff_ms));
  config.llm.prompt_dir = parser.get_string("llm_prompt_dir", config.llm.prompt_dir);

  const auto unknown = parser.unconsumed();
  if (!unknown.empty())
    throw ConfigError("config line " + std::to_string(unknown.front().second) +
                      ": unknown key '" + unknown.front().first + "'");

  try {
    config.validate();
  } catch (const ConfigError& error) {
    throw ConfigError(std::string("config: ") + error.what());
  }
  return config;
}

inline AppConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not readable: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

inline std::string write_config(const AppConfig& config) {
  std::ostringstream out;
  out << "topic = \"" << config.topic << "\"\n";
  out << "n_agents = " << config.n_agents << "\n";
  out << "horizon_days = " << config.horizon_days << "\n";
  out << "contacts_min = " << config.contacts_min << "\n";
  out << "contacts_max = " << config.contacts_max << "\n";
  out << "initially_infected = " << config.initially_infected << "\n";
  out << "trait_profile = " << profile_name(config.profile) << "\n";
  out << "intervention = " << format_intervention(config.intervention) << "\n";
  out << "backend = " << backend_name(config.backend) << "\n";
  out << "seed = " << config.seed << "\n";
  out << "symmetric_contacts = " << (config.symmetric_contacts ? "true" : "false") << "\n";
  out << "long_term_char_cap = " << config.long_term_char_cap << "\n";
  out << "name_pool = \"" << config.name_pool_path << "\"\n";
  out << "out_dir = \"" << config.out_dir << "\"\n";
  out << "ablation_disable_long_term = "
      << (config.ablation.disable_long_term ? "true" : "false") << "\n";
  out << "ablation_disable_short_term = "
      << (config.ablation.disable_short_term ? "true" : "false") << "\n";
  out << "ablation_disable_reasoning = "
      << (config.ablation.disable_reasoning ? "true" : "false") << "\n";
  out << "mock_official_weight = " << detail::format_double(config.mock.official_weight)
      << "\n";
  out << "mock_evidence_window_days = " << config.mock.evidence_window_days << "\n";
  out << "mock_agreeableness_weight = "
      << detail::format_double(config.mock.coeffs.agreeableness_weight) << "\n";
  out << "mock_neuroticism_weight = "
      << detail::format_double(config.mock.coeffs.neuroticism_weight) << "\n";
  out << "mock_education_weight = "
      << detail::format_double(config.mock.coeffs.education_weight) << "\n";
  out << "mock_seed = " << config.mock.seed << "\n";
  out << "llm_endpoint_url = \"" << config.llm.endpoint_url << "\"\n";
  out << "llm_model_name = \"" << config.llm.model_name << "\"\n";
  out << "llm_temperature = " << detail::format_double(config.llm.temperature) << "\n";
  out << "llm_max_retries = " << config.llm.max_retries << "\n";
  out << "llm_timeout_seconds = " << detail::format_double(config.llm.timeout_seconds) << "\n";
  out << "llm_max_concurrent_requests = " << config.llm.max_concurrent_requests << "\n";
  out << "llm_retry_backoff_ms = " << config.llm.retry_backoff_ms << "\n";
  out << "llm_prompt_dir = \"" << config.llm.prompt_dir << "\"\n";
  return out.str();
}

}  // namespace fps
