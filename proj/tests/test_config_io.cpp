#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fps/artifacts.hpp"
#include "fps/config.hpp"

using namespace fps;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;

  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("fps_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ignored;
    fs::remove_all(path, ignored);
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

AppConfig tiny_run_config(const fs::path& out_dir, std::uint64_t seed = 3) {
  AppConfig config;
  config.topic = "the dam is failing";
  config.n_agents = 10;
  config.horizon_days = 5;
  config.contacts_min = 1;
  config.contacts_max = 3;
  config.seed = seed;
  config.out_dir = out_dir.string();
  return config;
}

}  // namespace

TEST_CASE("a minimal config gets the documented defaults") {
  const AppConfig config = parse_config_text("topic = \"the story\"\n");
  CHECK(config.n_agents == 30);
  CHECK(config.horizon_days == 15);
  CHECK(config.contacts_min == 2);
  CHECK(config.contacts_max == 5);
  CHECK(config.initially_infected == 1);
  CHECK(config.seed == 0);
  CHECK(config.backend == BackendKind::mock);
  CHECK(config.profile == ProfileKind::random);
  CHECK(config.intervention == InterventionSchedule::none());
  CHECK(config.long_term_char_cap == 2000);
}

TEST_CASE("config parsing reports anchored, specific errors") {
  SECTION("missing topic") {
    CHECK_THROWS_WITH(parse_config_text("n_agents = 30\n"),
                      Catch::Matchers::ContainsSubstring("topic"));
  }
  SECTION("contact range beyond the population") {
    const std::string text = "topic = \"t\"\nn_agents = 10\ncontacts_max = 10\n";
    CHECK_THROWS_WITH(parse_config_text(text),
                      Catch::Matchers::ContainsSubstring("contacts_max"));
  }
  SECTION("unknown intervention mode carries its line") {
    const std::string text = "topic = \"t\"\nintervention = weekly(2)\n";
    CHECK_THROWS_WITH(parse_config_text(text), Catch::Matchers::ContainsSubstring("line 2"));
  }
  SECTION("unknown key carries its line") {
    const std::string text = "topic = \"t\"\n\nnot_a_key = 1\n";
    CHECK_THROWS_WITH(parse_config_text(text), Catch::Matchers::ContainsSubstring("line 3"));
    CHECK_THROWS_WITH(parse_config_text(text),
                      Catch::Matchers::ContainsSubstring("not_a_key"));
  }
  SECTION("duplicate keys are rejected") {
    const std::string text = "topic = \"t\"\ntopic = \"u\"\n";
    CHECK_THROWS_WITH(parse_config_text(text),
                      Catch::Matchers::ContainsSubstring("duplicate"));
  }
  SECTION("strings must be quoted") {
    CHECK_THROWS_WITH(parse_config_text("topic = bare\n"),
                      Catch::Matchers::ContainsSubstring("quoted"));
  }
  SECTION("booleans must be true or false") {
    CHECK_THROWS_WITH(parse_config_text("topic = \"t\"\nsymmetric_contacts = yes\n"),
                      Catch::Matchers::ContainsSubstring("true or false"));
  }
  SECTION("llm limits are validated") {
    CHECK_THROWS_AS(parse_config_text("topic = \"t\"\nllm_max_retries = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("topic = \"t\"\nllm_timeout_seconds = 0\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("topic = \"t\"\nmock_official_weight = 0.5\n"),
                    ConfigError);
  }
}

TEST_CASE("intervention specs parse and expand") {
  CHECK(parse_intervention("none") == InterventionSchedule::none());
  CHECK(parse_intervention("on_days(7)") == InterventionSchedule::on_days({7}));
  CHECK(parse_intervention("every_k(1,3)").expand(15) == std::vector<int>{1, 4, 7, 10, 13});
  CHECK_THROWS_AS(parse_intervention("every_k(1)"), ConfigError);
  CHECK_THROWS_AS(parse_intervention("on_days()"), ConfigError);
  CHECK_THROWS_AS(parse_intervention("sometimes"), ConfigError);
}

TEST_CASE("comments and blank lines are ignored") {
  const AppConfig config = parse_config_text(
      "# run setup\n"
      "\n"
      "topic = \"a # not a comment\"  # trailing comment\n"
      "seed = 9\n");
  CHECK(config.topic == "a # not a comment");
  CHECK(config.seed == 9);
}

TEST_CASE("configs round-trip through write_config") {
  AppConfig config;
  config.topic = "the dam is failing";
  config.n_agents = 12;
  config.horizon_days = 9;
  config.contacts_min = 1;
  config.contacts_max = 4;
  config.initially_infected = 2;
  config.profile = ProfileKind::credulous;
  config.intervention = InterventionSchedule::every_k(2, 3);
  config.backend = BackendKind::llm;
  config.seed = 77;
  config.symmetric_contacts = true;
  config.long_term_char_cap = 512;
  config.out_dir = "runs/exp1";
  config.ablation.disable_reasoning = true;
  config.mock.official_weight = 2.5;
  config.mock.evidence_window_days = 5;
  config.mock.coeffs.education_weight = 0.025;
  config.mock.seed = 11;
  config.llm.endpoint_url = "http://10.0.0.2:9000/v1/chat/completions";
  config.llm.model_name = "local-model";
  config.llm.temperature = 0.25;
  config.llm.max_retries = 5;
  config.llm.timeout_seconds = 12.5;
  config.llm.max_concurrent_requests = 2;
  config.llm.retry_backoff_ms = 10;

  const AppConfig reparsed = parse_config_text(write_config(config));
  CHECK(reparsed == config);

  const AppConfig defaults = parse_config_text("topic = \"t\"\n");
  CHECK(parse_config_text(write_config(defaults)) == defaults);
}

TEST_CASE("counts files round-trip and validate") {
  TempDir tmp;
  const auto path = tmp.path / "counts.csv";
  const std::vector<PopulationCounts> counts = {{0, 29, 1, 0}, {1, 27, 2, 1}, {2, 20, 8, 2}};
  write_counts_csv(path, counts);
  CHECK(read_counts_csv(path) == counts);

  SECTION("header is enforced") {
    std::ofstream out(path);
    out << "d,S,I,R\n0,29,1,0\n";
    out.close();
    CHECK_THROWS_WITH(read_counts_csv(path), Catch::Matchers::ContainsSubstring("row 1"));
  }
  SECTION("partition violations carry the row number") {
    std::ofstream out(path);
    out << "day,S,I,R\n0,29,1,0\n1,29,2,0\n";
    out.close();
    CHECK_THROWS_WITH(read_counts_csv(path), Catch::Matchers::ContainsSubstring("row 3"));
  }
  SECTION("malformed rows carry the row number") {
    std::ofstream out(path);
    out << "day,S,I,R\n0,29,1,0\n1,29;1;0\n";
    out.close();
    CHECK_THROWS_WITH(read_counts_csv(path), Catch::Matchers::ContainsSubstring("row 3"));
  }
  SECTION("writing a bad partition is refused") {
    const std::vector<PopulationCounts> bad = {{0, 29, 1, 0}, {1, 29, 2, 0}};
    CHECK_THROWS_AS(write_counts_csv(path, bad), ArtifactError);
  }
}

TEST_CASE("transcripts round-trip through JSON lines") {
  TempDir tmp;
  const auto path = tmp.path / "transcript.jsonl";
  std::vector<AgentDayRecord> records;
  AgentDayRecord row;
  row.id = 0;
  row.day = 0;
  row.belief = 1;
  row.tweet = "it's real";
  row.reasoning = "saw it";
  row.short_term = "heard 1 believe, 0 disbelieve, 0 official";
  row.long_term = "- heard 1 believe, 0 disbelieve, 0 official";
  row.label = PopulationLabel::infected;
  records.push_back(row);
  row.id = 1;
  row.day = 2;
  row.belief = 0;
  row.label = PopulationLabel::recovered;
  row.backend_error = "parse_exhausted: unparseable reply";
  records.push_back(row);

  write_transcript_jsonl(path, records);
  CHECK(read_transcript_jsonl(path) == records);

  std::ofstream out(path, std::ios::app);
  out << "not json\n";
  out.close();
  CHECK_THROWS_WITH(read_transcript_jsonl(path), Catch::Matchers::ContainsSubstring("line 3"));
}

TEST_CASE("run_command writes all six artifacts") {
  TempDir tmp;
  const AppConfig config = tiny_run_config(tmp.path / "run");
  auto backend = build_backend(config);
  std::ostringstream log;
  const SimulationTrace trace = run_command(config, *backend, log);

  const RunPaths paths{tmp.path / "run"};
  CHECK(fs::exists(paths.counts()));
  CHECK(fs::exists(paths.transcript()));
  CHECK(fs::exists(paths.metrics()));
  CHECK(fs::exists(paths.fit()));
  CHECK(fs::exists(paths.config_echo()));
  CHECK(fs::exists(paths.manifest()));
  CHECK_FALSE(fs::exists(paths.failure_marker()));

  // counts has day 0 through T
  const auto counts = read_counts_csv(paths.counts());
  CHECK(counts.size() == static_cast<std::size_t>(config.horizon_days) + 1);

  // one summary line per day in the log
  CHECK(log.str().find("day 0: S=9 I=1 R=0") != std::string::npos);

  // the manifest distinguishes the backend
  const auto manifest = nlohmann::json::parse(slurp(paths.manifest()));
  CHECK(manifest["backend"] == "mock");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["backend_calls"] == trace.backend_calls);

  // config echo reparses to the original configuration
  CHECK(parse_config_text(slurp(paths.config_echo())) == config);
}

TEST_CASE("identical runs produce byte-identical counts and transcript") {
  TempDir tmp;
  const AppConfig first = tiny_run_config(tmp.path / "a", 42);
  const AppConfig second = tiny_run_config(tmp.path / "b", 42);
  auto backend_a = build_backend(first);
  auto backend_b = build_backend(second);
  std::ostringstream log;
  run_command(first, *backend_a, log);
  run_command(second, *backend_b, log);

  CHECK(slurp(tmp.path / "a" / "counts.csv") == slurp(tmp.path / "b" / "counts.csv"));
  CHECK(slurp(tmp.path / "a" / "transcript.jsonl") ==
        slurp(tmp.path / "b" / "transcript.jsonl"));
}

TEST_CASE("fit_command recovers parameters from a rounded counts file") {
  TempDir tmp;
  const double beta = 0.02, gamma = 0.1, population = 30.0;
  const auto exact = sis_daily_infected(beta, gamma, population, 1.0, 15);
  std::vector<PopulationCounts> counts;
  for (int d = 0; d < 15; ++d) {
    const int infected = static_cast<int>(std::lround(exact[static_cast<std::size_t>(d)]));
    counts.push_back({d, 30 - infected, infected, 0});
  }
  const auto counts_path = tmp.path / "counts.csv";
  const auto fit_path = tmp.path / "fit.json";
  write_counts_csv(counts_path, counts);

  const FitArtifact artifact = fit_command(counts_path, fit_path);
  REQUIRE(artifact.params.status == FitStatus::ok);
  CHECK(std::abs(artifact.params.beta - beta) / beta < 0.10);
  CHECK(std::abs(artifact.params.gamma - gamma) / gamma < 0.10);
  CHECK(artifact.fitted_daily_infected.size() == counts.size());

  const auto body = nlohmann::json::parse(slurp(fit_path));
  CHECK(body["status"] == "ok");
  CHECK(body["fitted_daily_infected"].size() == counts.size());
}

TEST_CASE("fit_command flags an all-zero infected column as degenerate") {
  TempDir tmp;
  std::vector<PopulationCounts> counts;
  for (int d = 0; d < 10; ++d) counts.push_back({d, 30, 0, 0});
  const auto counts_path = tmp.path / "counts.csv";
  write_counts_csv(counts_path, counts);
  const FitArtifact artifact = fit_command(counts_path, tmp.path / "fit.json");
  CHECK(artifact.params.status == FitStatus::degenerate);
}

TEST_CASE("report_command renders a table and is idempotent") {
  TempDir tmp;
  const AppConfig config = tiny_run_config(tmp.path / "run", 12);
  auto backend = build_backend(config);
  std::ostringstream log;
  run_command(config, *backend, log);

  const std::string first = report_command({tmp.path / "run"});
  const std::string second = report_command({tmp.path / "run"});
  CHECK(first == second);
  CHECK(first.find("belief_average") != std::string::npos);
  CHECK(first.find("run") != std::string::npos);

  const std::string metrics_after = slurp(tmp.path / "run" / "metrics.csv");
  const std::string third = report_command({tmp.path / "run"});
  CHECK(slurp(tmp.path / "run" / "metrics.csv") == metrics_after);
}

TEST_CASE("report_command names the missing artifact") {
  TempDir tmp;
  fs::create_directories(tmp.path / "empty_run");
  CHECK_THROWS_WITH(report_command({tmp.path / "empty_run"}),
                    Catch::Matchers::ContainsSubstring("counts.csv"));

  // counts present but transcript missing
  std::vector<PopulationCounts> counts = {{0, 29, 1, 0}, {1, 28, 2, 0}};
  write_counts_csv(tmp.path / "empty_run" / "counts.csv", counts);
  CHECK_THROWS_WITH(report_command({tmp.path / "empty_run"}),
                    Catch::Matchers::ContainsSubstring("transcript.jsonl"));
}

TEST_CASE("an empty transcript yields an error, not a zero-filled report") {
  TempDir tmp;
  fs::create_directories(tmp.path / "run");
  const std::vector<PopulationCounts> counts = {{0, 29, 1, 0}, {1, 28, 2, 0}};
  write_counts_csv(tmp.path / "run" / "counts.csv", counts);
  std::ofstream(tmp.path / "run" / "transcript.jsonl").close();
  CHECK_THROWS_AS(metrics_command(RunPaths{tmp.path / "run"}), ArtifactError);
}
