#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fps/llm_backend.hpp"
#include "fps/mock_backend.hpp"
#include "fps/simulator.hpp"

using namespace fps;

namespace {

std::string ok_envelope(const std::string& content) {
  nlohmann::json envelope = {{"choices", {{{"message", {{"content", content}}}}}}};
  return envelope.dump();
}

// Scripted chat-completions endpoint. Responses are served from a queue;
// once the queue drains, the default response repeats.
class StubChatServer {
 public:
  StubChatServer() {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& request, httplib::Response& response) {
                   requests_.fetch_add(1);
                   const std::lock_guard<std::mutex> lock(mutex_);
                   last_request_body_ = request.body;
                   auth_header_ = request.get_header_value("Authorization");
                   std::pair<int, std::string> reply = default_reply_;
                   if (!scripted_.empty()) {
                     reply = scripted_.front();
                     scripted_.erase(scripted_.begin());
                   }
                   response.status = reply.first;
                   response.set_content(reply.second, "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubChatServer() {
    server_.stop();
    thread_.join();
  }

  void enqueue(int status, const std::string& body) {
    const std::lock_guard<std::mutex> lock(mutex_);
    scripted_.emplace_back(status, body);
  }

  void set_default(int status, const std::string& body) {
    const std::lock_guard<std::mutex> lock(mutex_);
    default_reply_ = {status, body};
  }

  int port() const { return port_; }
  int requests() const { return requests_.load(); }

  std::string last_request_body() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return last_request_body_;
  }

  std::string auth_header() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return auth_header_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  mutable std::mutex mutex_;
  std::vector<std::pair<int, std::string>> scripted_;
  std::pair<int, std::string> default_reply_ = {200, ok_envelope("Belief: 0\nTweet: fine.")};
  std::string last_request_body_;
  std::string auth_header_;
};

LlmBackendConfig stub_config(const StubChatServer& server) {
  LlmBackendConfig config;
  config.endpoint_url =
      "http://127.0.0.1:" + std::to_string(server.port()) + "/v1/chat/completions";
  config.retry_backoff_ms = 0;
  config.timeout_seconds = 5.0;
  return config;
}

Persona sample_persona() {
  Persona p;
  p.id = 3;
  p.name = "Vera";
  p.age = 41;
  p.education = Education::master;
  p.traits.agreeableness = Polarity::high;
  return p;
}

}  // namespace

TEST_CASE("parse_opinion_reply handles the structured format") {
  const auto parsed = parse_opinion_reply(
      "Belief: 1\nTweet: This is clearly happening.\nReasoning: Several people confirmed it.");
  REQUIRE(parsed.has_value());
  CHECK(parsed->belief == 1);
  CHECK(parsed->tweet == "This is clearly happening.");
  CHECK(parsed->reasoning == "Several people confirmed it.");
}

TEST_CASE("parse_opinion_reply tolerates case and multi-line sections") {
  const auto parsed = parse_opinion_reply(
      "belief: 0\ntweet: Not convinced\nat all.\nREASONING: Sources are weak\nand anonymous.");
  REQUIRE(parsed.has_value());
  CHECK(parsed->belief == 0);
  CHECK(parsed->tweet == "Not convinced at all.");
  CHECK(parsed->reasoning == "Sources are weak and anonymous.");
}

TEST_CASE("parse_opinion_reply falls back to the first standalone digit") {
  const auto parsed = parse_opinion_reply("I'd say 1, this checks out.");
  REQUIRE(parsed.has_value());
  CHECK(parsed->belief == 1);
  CHECK(parsed->tweet == "I'd say 1, this checks out.");
  CHECK(parsed->reasoning.empty());

  // Digits embedded in words or numbers do not count.
  CHECK_FALSE(parse_opinion_reply("Around 100 people saw it, maybe 2049 more.").has_value());
}

TEST_CASE("parse_opinion_reply rejects replies without a belief token") {
  CHECK_FALSE(parse_opinion_reply("No idea what to think.").has_value());
  CHECK_FALSE(parse_opinion_reply("").has_value());
}

TEST_CASE("prompt templates render with no leftover placeholders for every persona") {
  const PromptLibrary sources[] = {PromptLibrary::builtin(),
                                   PromptLibrary::load_from_dir(FPS_DATA_DIR "/prompts")};
  for (const PromptLibrary& lib : sources) {
    for (int mask = 0; mask < 32; ++mask) {
      for (const Education edu : kEducationLevels) {
        TraitVector t;
        t.openness = (mask & 1) ? Polarity::high : Polarity::low;
        t.conscientiousness = (mask & 2) ? Polarity::high : Polarity::low;
        t.extraversion = (mask & 4) ? Polarity::high : Polarity::low;
        t.agreeableness = (mask & 8) ? Polarity::high : Polarity::low;
        t.neuroticism = (mask & 16) ? Polarity::high : Polarity::low;

        const std::map<std::string, std::string> opinion_values = {
            {"trait", trait_description(t)},
            {"education", education_name(edu)},
            {"previous_opinion", "previous tweet"},
            {"long_memory", "memory text"},
            {"topic", "the topic"}};
        for (const std::string* tmpl : {&lib.opinion, &lib.opinion_no_reasoning}) {
          const std::string rendered = render_prompt(*tmpl, opinion_values);
          REQUIRE(rendered.find('{') == std::string::npos);
        }
        const std::string summarize = render_prompt(
            lib.summarize, {{"topic", "the topic"}, {"messages", "- someone: \"hi\""}});
        REQUIRE(summarize.find('{') == std::string::npos);
        const std::string integrate =
            render_prompt(lib.integrate, {{"long_memory", "old"},
                                          {"short_memory", "new"},
                                          {"char_cap", "2000"}});
        REQUIRE(integrate.find('{') == std::string::npos);
      }
    }
  }
}

TEST_CASE("render_prompt rejects unknown placeholders") {
  CHECK_THROWS_AS(render_prompt("hello {nope}", {}), ConfigError);
  CHECK_THROWS_AS(render_prompt("broken {", {}), ConfigError);
}

TEST_CASE("llm client parses a well-formed reply") {
  StubChatServer server;
  server.enqueue(200, ok_envelope("Belief: 1\nTweet: Spreading fast, it's real.\nReasoning: "
                                  "Everyone I heard today believes it."));
  LlmBackendConfig config = stub_config(server);
  config.api_key = "test-key";
  LlmBackend backend(config, "the story");

  Opinion previous;
  previous.tweet = "unsure";
  const OpinionResult result =
      backend.form_opinion(sample_persona(), "memory", previous, 0, true);
  CHECK(result.belief == 1);
  CHECK(result.tweet == "Spreading fast, it's real.");
  CHECK(result.reasoning == "Everyone I heard today believes it.");
  CHECK(backend.last_call_retries() == 0);
  CHECK(server.auth_header() == "Bearer test-key");

  const auto body = nlohmann::json::parse(server.last_request_body());
  CHECK(body["model"] == config.model_name);
  CHECK(body["temperature"] == Catch::Approx(1.0));
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["role"] == "user");
}

TEST_CASE("disabling reasoning drops the request and clears the field") {
  StubChatServer server;
  server.enqueue(200, ok_envelope("Belief: 1\nTweet: Sure looks real.\nReasoning: extra"));
  LlmBackend backend(stub_config(server), "the story");

  Opinion previous;
  previous.tweet = "unsure";
  const OpinionResult result =
      backend.form_opinion(sample_persona(), "memory", previous, 0, false);
  CHECK(result.belief == 1);
  CHECK(result.reasoning.empty());

  const auto body = nlohmann::json::parse(server.last_request_body());
  const std::string user = body["messages"][1]["content"];
  CHECK(user.find("Reasoning") == std::string::npos);
  CHECK(user.find("reasoning") == std::string::npos);
}

TEST_CASE("llm client retries malformed replies and then succeeds") {
  StubChatServer server;
  server.enqueue(200, ok_envelope("complete nonsense"));
  server.enqueue(200, ok_envelope("still nothing useful"));
  server.enqueue(200, ok_envelope("Belief: 0\nTweet: Nothing to it.\nReasoning: weak sources"));
  LlmBackend backend(stub_config(server), "the story");

  Opinion previous;
  previous.tweet = "unsure";
  const OpinionResult result =
      backend.form_opinion(sample_persona(), "memory", previous, 0, true);
  CHECK(result.belief == 0);
  CHECK(backend.last_call_retries() == 2);
  CHECK(server.requests() == 3);
}

TEST_CASE("llm client surfaces parse exhaustion after max_retries") {
  StubChatServer server;
  server.set_default(200, ok_envelope("garbage with no answer"));
  LlmBackendConfig config = stub_config(server);
  config.max_retries = 3;
  LlmBackend backend(config, "the story");

  Opinion previous;
  previous.tweet = "unsure";
  try {
    backend.form_opinion(sample_persona(), "memory", previous, 0, true);
    FAIL("expected BackendError");
  } catch (const BackendError& error) {
    CHECK(error.kind() == BackendErrorKind::parse_exhausted);
  }
  CHECK(server.requests() == 4);  // initial attempt + 3 retries
}

TEST_CASE("llm client reports http status failures distinctly") {
  StubChatServer server;
  server.set_default(500, "{}");
  LlmBackendConfig config = stub_config(server);
  config.max_retries = 1;
  LlmBackend backend(config, "the story");
  try {
    backend.summarize({Message{1, 1, "hi", MessageKind::peer}});
    FAIL("expected BackendError");
  } catch (const BackendError& error) {
    CHECK(error.kind() == BackendErrorKind::http_status);
  }
}

TEST_CASE("llm client reports unreachable endpoints as network errors") {
  LlmBackendConfig config;
  config.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";  // nothing listens here
  config.max_retries = 0;
  config.retry_backoff_ms = 0;
  config.timeout_seconds = 2.0;
  LlmBackend backend(config, "the story");
  try {
    backend.integrate("old", "new", 2000);
    FAIL("expected BackendError");
  } catch (const BackendError& error) {
    CHECK(error.kind() == BackendErrorKind::network);
  }
}

TEST_CASE("simulation completes when the llm backend keeps failing") {
  StubChatServer server;
  server.set_default(200, ok_envelope("never parseable"));
  LlmBackendConfig llm_config = stub_config(server);
  llm_config.max_retries = 0;
  LlmBackend backend(llm_config, "the story");

  SimulationConfig config;
  config.topic = "the story";
  config.n_agents = 4;
  config.horizon_days = 3;
  config.contacts_min = 1;
  config.contacts_max = 2;
  config.run_seed = 5;
  const SimulationTrace trace = run_simulation(config, backend);

  // Every agent-day failed, nobody changed opinion, and the run finished.
  CHECK(trace.backend_failures == 4 * 3);
  for (const AgentDayRecord& row : trace.records) {
    if (row.day > 0) REQUIRE_FALSE(row.backend_error.empty());
    REQUIRE(row.belief == (row.id == 0 ? 1 : 0));
  }
  CHECK(trace.counts.back().infected == 1);
}

TEST_CASE("simulation runs end to end against a healthy stub endpoint") {
  StubChatServer server;
  server.set_default(200, ok_envelope("Belief: 1\nTweet: It's true, pass it on.\nReasoning: "
                                      "I trust what I heard."));
  LlmBackend backend(stub_config(server), "the story");

  SimulationConfig config;
  config.topic = "the story";
  config.n_agents = 3;
  config.horizon_days = 2;
  config.contacts_min = 1;
  config.contacts_max = 1;
  config.run_seed = 8;
  const SimulationTrace trace = run_simulation(config, backend);
  CHECK(trace.backend_failures == 0);
  CHECK(trace.counts.back().infected == 3);  // the stub always answers belief 1
  CHECK(trace.backend_calls > 0);
}
