#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fps/backend.hpp"
#include "fps/errors.hpp"
#include "fps/message.hpp"
#include "fps/persona.hpp"
#include "fps/prompts.hpp"

namespace fps {

struct LlmBackendConfig {
  std::string endpoint_url = "http://localhost:8080/v1/chat/completions";
  std::string model_name = "gpt-3.5-turbo";
  std::string api_key;  // usually taken from the FPS_API_KEY environment variable
  double temperature = 1.0;
  int max_retries = 3;
  double timeout_seconds = 30.0;
  int max_concurrent_requests = 4;
  int retry_backoff_ms = 250;
  std::string prompt_dir;  // empty means the built-in templates

  bool operator==(const LlmBackendConfig&) const = default;

  void validate() const {
    if (max_retries < 0) throw ConfigError("llm config: max_retries must be >= 0");
    if (timeout_seconds <= 0.0) throw ConfigError("llm config: timeout must be > 0");
    if (max_concurrent_requests < 1)
      throw ConfigError("llm config: max_concurrent_requests must be >= 1");
    if (retry_backoff_ms < 0) throw ConfigError("llm config: retry_backoff_ms must be >= 0");
  }
};

namespace detail {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("llm config: endpoint_url must start with http:// or https://");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool iequals_prefix(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(text[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  return true;
}

}  // namespace detail

// Extract (belief, tweet, reasoning) from a model reply. A structured
// "Belief:" line wins; otherwise the first standalone 0 or 1 digit decides
// the belief and the whole reply becomes the tweet. Returns nullopt when no
// belief token can be found.
inline std::optional<OpinionResult> parse_opinion_reply(const std::string& content) {
  OpinionResult result;
  bool belief_found = false;
  std::string tweet, reasoning;
  enum class Section { none, tweet, reasoning } section = Section::none;

  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    const std::string_view line = detail::trim_view(
        std::string_view(content).substr(pos, eol - pos));
    pos = eol + 1;

    if (detail::iequals_prefix(line, "belief:")) {
      const auto rest = detail::trim_view(line.substr(7));
      if (!rest.empty() && (rest.front() == '0' || rest.front() == '1')) {
        result.belief = rest.front() - '0';
        belief_found = true;
      }
      section = Section::none;
    } else if (detail::iequals_prefix(line, "tweet:")) {
      tweet = std::string(detail::trim_view(line.substr(6)));
      section = Section::tweet;
    } else if (detail::iequals_prefix(line, "reasoning:")) {
      reasoning = std::string(detail::trim_view(line.substr(10)));
      section = Section::reasoning;
    } else if (!line.empty()) {
      if (section == Section::tweet) {
        tweet += tweet.empty() ? "" : " ";
        tweet += line;
      } else if (section == Section::reasoning) {
        reasoning += reasoning.empty() ? "" : " ";
        reasoning += line;
      }
    }
    if (eol == content.size()) break;
  }

  if (!belief_found) {
    // Fallback: first standalone 0/1 digit anywhere in the reply.
    for (std::size_t i = 0; i < content.size(); ++i) {
      const char c = content[i];
      if (c != '0' && c != '1') continue;
      const bool left_ok =
          i == 0 || !std::isalnum(static_cast<unsigned char>(content[i - 1]));
      const bool right_ok = i + 1 == content.size() ||
                            !std::isalnum(static_cast<unsigned char>(content[i + 1]));
      if (left_ok && right_ok) {
        result.belief = c - '0';
        belief_found = true;
        break;
      }
    }
    if (belief_found) tweet = std::string(detail::trim_view(content));
  }

  if (!belief_found) return std::nullopt;
  if (tweet.empty()) tweet = std::string(detail::trim_view(content));
  if (tweet.empty()) return std::nullopt;
  result.tweet = truncate_to(std::move(tweet), kTweetCharCap);
  result.reasoning = std::move(reasoning);
  return result;
}

// Chat-completions client. Each call opens its own connection, so any number
// of worker threads up to max_concurrent_requests may call concurrently;
// retry state is per call.
class LlmBackend : public OpinionBackend {
 public:
  LlmBackend(LlmBackendConfig config, std::string topic, PromptLibrary prompts)
      : config_(std::move(config)), topic_(std::move(topic)), prompts_(std::move(prompts)) {
    config_.validate();
    url_ = detail::split_url(config_.endpoint_url);
  }

  LlmBackend(const LlmBackendConfig& config, std::string topic)
      : LlmBackend(config, std::move(topic),
                   config.prompt_dir.empty() ? PromptLibrary::builtin()
                                             : PromptLibrary::load_from_dir(config.prompt_dir)) {}

  std::string summarize(const std::vector<Message>& inbox) override {
    record_call();
    std::string messages;
    for (const Message& msg : inbox) {
      messages += msg.kind == MessageKind::official
                      ? std::string("- Official statement (refutes the news): ")
                      : "- Peer " + std::to_string(msg.speaker_id) +
                            (msg.belief == 1 ? " (believes the news): " : " (doubts the news): ");
      messages += "\"" + msg.tweet + "\"\n";
    }
    const std::string user =
        render_prompt(prompts_.summarize, {{"topic", topic_}, {"messages", messages}});
    return complete(kGenericSystemPrompt, user,
                    [](const std::string& content) -> std::optional<std::string> {
                      return content.empty() ? std::nullopt : std::make_optional(content);
                    });
  }

  std::string integrate(const std::string& long_term, const std::string& addition,
                        std::size_t char_cap) override {
    record_call();
    const std::string user = render_prompt(
        prompts_.integrate, {{"long_memory", long_term.empty() ? "(empty)" : long_term},
                             {"short_memory", addition},
                             {"char_cap", std::to_string(char_cap)}});
    return complete(kGenericSystemPrompt, user,
                    [](const std::string& content) -> std::optional<std::string> {
                      return content.empty() ? std::nullopt : std::make_optional(content);
                    });
  }

  OpinionResult form_opinion(const Persona& persona, const std::string& memory,
                             const Opinion& previous, std::uint64_t /*seed*/,
                             bool request_reasoning) override {
    record_call();
    const std::string& source =
        request_reasoning ? prompts_.opinion : prompts_.opinion_no_reasoning;
    const std::string user =
        render_prompt(source, {{"trait", trait_description(persona.traits)},
                               {"education", education_name(persona.education)},
                               {"previous_opinion", previous.tweet},
                               {"long_memory", memory.empty() ? "(empty)" : memory},
                               {"topic", topic_}});
    const std::string system = "You are " + persona.name + ", a " +
                               std::to_string(persona.age) + "-year-old with " +
                               education_name(persona.education) +
                               " education. Your personality: " +
                               trait_description(persona.traits) + ".";
    OpinionResult result;
    complete(system, user, [&result](const std::string& content) -> std::optional<std::string> {
      auto parsed = parse_opinion_reply(content);
      if (!parsed) return std::nullopt;
      result = std::move(*parsed);
      return content;
    });
    if (!request_reasoning) result.reasoning.clear();
    return result;
  }

  std::string name() const override { return "llm"; }
  int max_parallelism() const override { return config_.max_concurrent_requests; }

  std::uint64_t total_retries() const { return total_retries_.load(); }
  std::uint64_t last_call_retries() const { return last_call_retries_.load(); }

  const LlmBackendConfig& config() const { return config_; }

 private:
  static constexpr const char* kGenericSystemPrompt =
      "You are a social media user taking part in daily conversations.";
  static constexpr const char* kReaskSuffix =
      "\n\nYour previous reply could not be parsed. Reply again using exactly the "
      "required format, with nothing before or after it.";

  // One attempt plus max_retries re-asks. `accept` validates/extracts from
  // the reply; rejection counts as a parse failure.
  template <typename Accept>
  std::string complete(const std::string& system, const std::string& user, Accept accept) {
    BackendErrorKind last_kind = BackendErrorKind::parse_exhausted;
    std::string last_detail = "no attempts made";
    std::uint64_t retries = 0;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        ++retries;
        total_retries_.fetch_add(1, std::memory_order_relaxed);
        if (config_.retry_backoff_ms > 0)
          std::this_thread::sleep_for(std::chrono::milliseconds(
              config_.retry_backoff_ms * (1 << std::min(attempt - 1, 6))));
      }
      const std::string prompt = attempt == 0 ? user : user + kReaskSuffix;
      try {
        const std::string content = post_chat(system, prompt);
        if (auto accepted = accept(content)) {
          last_call_retries_.store(retries, std::memory_order_relaxed);
          return *accepted;
        }
        last_kind = BackendErrorKind::parse_exhausted;
        last_detail = "unparseable reply";
      } catch (const BackendError& error) {
        last_kind = error.kind();
        last_detail = error.what();
      }
    }
    last_call_retries_.store(retries, std::memory_order_relaxed);
    throw BackendError(last_kind, last_detail + " after " +
                                      std::to_string(config_.max_retries + 1) + " attempts");
  }

  std::string post_chat(const std::string& system, const std::string& user) {
    nlohmann::json body = {
        {"model", config_.model_name},
        {"messages",
         {{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}}},
        {"temperature", config_.temperature},
    };

    httplib::Client client(url_.base);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<int>(config_.timeout_seconds * 1000)));
    client.set_read_timeout(
        std::chrono::milliseconds(static_cast<int>(config_.timeout_seconds * 1000)));
    httplib::Headers headers;
    if (!config_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + config_.api_key);

    const httplib::Result response =
        client.Post(url_.path, headers, body.dump(), "application/json");
    if (!response)
      throw BackendError(BackendErrorKind::network, httplib::to_string(response.error()));
    if (response->status != 200)
      throw BackendError(BackendErrorKind::http_status,
                         "HTTP " + std::to_string(response->status));

    const auto envelope = nlohmann::json::parse(response->body, nullptr, false);
    if (envelope.is_discarded() || !envelope.contains("choices") ||
        envelope["choices"].empty() || !envelope["choices"][0].contains("message") ||
        !envelope["choices"][0]["message"].contains("content"))
      throw BackendError(BackendErrorKind::parse_exhausted, "malformed completion envelope");
    return envelope["choices"][0]["message"]["content"].get<std::string>();
  }

  LlmBackendConfig config_;
  std::string topic_;
  PromptLibrary prompts_;
  detail::ParsedUrl url_;
  std::atomic<std::uint64_t> total_retries_{0};
  std::atomic<std::uint64_t> last_call_retries_{0};
};

}  // namespace fps
