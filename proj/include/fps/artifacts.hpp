#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fps/config.hpp"
#include "fps/epidemic.hpp"
#include "fps/errors.hpp"
#include "fps/metrics.hpp"
#include "fps/simulator.hpp"

namespace fps {

// Fixed artifact names inside a run directory. A directory holds either all
// six artifacts or a failure marker.
struct RunPaths {
  std::filesystem::path dir;

  std::filesystem::path counts() const { return dir / "counts.csv"; }
  std::filesystem::path transcript() const { return dir / "transcript.jsonl"; }
  std::filesystem::path metrics() const { return dir / "metrics.csv"; }
  std::filesystem::path fit() const { return dir / "fit.json"; }
  std::filesystem::path config_echo() const { return dir / "config.echo.txt"; }
  std::filesystem::path manifest() const { return dir / "manifest.json"; }
  std::filesystem::path failure_marker() const { return dir / "FAILED.txt"; }
};

namespace detail {

inline void require_partition(const PopulationCounts& row, int population, int line) {
  if (row.total() != population)
    throw ArtifactError("counts row " + std::to_string(line) + ": S+I+R = " +
                        std::to_string(row.total()) + " but population is " +
                        std::to_string(population));
}

inline std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace detail

inline void write_counts_csv(const std::filesystem::path& path,
                             std::span<const PopulationCounts> counts) {
  if (counts.empty()) throw ArtifactError("counts: nothing to write");
  const int population = counts.front().total();
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write counts file: " + path.string());
  out << "day,S,I,R\n";
  int line = 2;
  for (const PopulationCounts& row : counts) {
    detail::require_partition(row, population, line++);
    out << row.day << ',' << row.susceptible << ',' << row.infected << ',' << row.recovered
        << '\n';
  }
}

inline std::vector<PopulationCounts> read_counts_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot read counts file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "day,S,I,R")
    throw ArtifactError("counts row 1: expected header 'day,S,I,R'");
  std::vector<PopulationCounts> counts;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    PopulationCounts row;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream fields(line);
    if (!(fields >> row.day >> c1 >> row.susceptible >> c2 >> row.infected >> c3 >>
          row.recovered) ||
        c1 != ',' || c2 != ',' || c3 != ',')
      throw ArtifactError("counts row " + std::to_string(line_number) + ": malformed line '" +
                          line + "'");
    counts.push_back(row);
  }
  if (counts.empty()) throw ArtifactError("counts file has no data rows: " + path.string());
  const int population = counts.front().total();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    detail::require_partition(counts[i], population, static_cast<int>(i) + 2);
    if (counts[i].day != static_cast<int>(i))
      throw ArtifactError("counts row " + std::to_string(i + 2) + ": expected day " +
                          std::to_string(i));
  }
  return counts;
}

inline void write_transcript_jsonl(const std::filesystem::path& path,
                                   std::span<const AgentDayRecord> records) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write transcript file: " + path.string());
  for (const AgentDayRecord& row : records) {
    nlohmann::json record = {
        {"id", row.id},           {"day", row.day},
        {"belief", row.belief},   {"tweet", row.tweet},
        {"reasoning", row.reasoning}, {"short_term", row.short_term},
        {"long_term", row.long_term}, {"label", label_name(row.label)},
    };
    if (!row.backend_error.empty()) record["backend_error"] = row.backend_error;
    out << record.dump() << '\n';
  }
}

inline std::vector<AgentDayRecord> read_transcript_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot read transcript file: " + path.string());
  std::vector<AgentDayRecord> records;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded())
      throw ArtifactError("transcript line " + std::to_string(line_number) + ": invalid JSON");
    try {
      AgentDayRecord row;
      row.id = record.at("id").get<int>();
      row.day = record.at("day").get<int>();
      row.belief = record.at("belief").get<int>();
      row.tweet = record.at("tweet").get<std::string>();
      row.reasoning = record.at("reasoning").get<std::string>();
      row.short_term = record.at("short_term").get<std::string>();
      row.long_term = record.at("long_term").get<std::string>();
      const std::string label = record.at("label").get<std::string>();
      if (label == "susceptible") row.label = PopulationLabel::susceptible;
      else if (label == "infected") row.label = PopulationLabel::infected;
      else if (label == "recovered") row.label = PopulationLabel::recovered;
      else throw ArtifactError("unknown label '" + label + "'");
      if (record.contains("backend_error"))
        row.backend_error = record["backend_error"].get<std::string>();
      records.push_back(std::move(row));
    } catch (const nlohmann::json::exception& error) {
      throw ArtifactError("transcript line " + std::to_string(line_number) + ": " +
                          error.what());
    }
  }
  return records;
}

// Metrics from persisted counts and transcript rows. Final beliefs come from
// the last day's records; the diversity corpus is every simulated-day tweet.
inline MetricsReport compute_metrics(std::span<const PopulationCounts> counts,
                                     std::span<const AgentDayRecord> records) {
  if (counts.size() < 2) throw ArtifactError("metrics: counts must cover day 0 and day 1+");
  if (records.empty()) throw ArtifactError("metrics: transcript is empty");
  const int horizon = static_cast<int>(counts.size()) - 1;

  std::vector<int> final_beliefs;
  std::vector<std::string> tweets;
  for (const AgentDayRecord& row : records) {
    if (row.day == horizon) final_beliefs.push_back(row.belief);
    if (row.day >= 1) tweets.push_back(row.tweet);
  }
  if (final_beliefs.empty())
    throw ArtifactError("metrics: transcript has no final-day records");

  MetricsReport report;
  report.belief_average = belief_average(final_beliefs);
  report.belief_variance = belief_variance(final_beliefs);
  report.infection_rate = infection_rate(counts);
  report.recovery_rate = recovery_rate(counts);
  const auto [peak_fraction, peak_time] = peak_metrics(counts);
  report.peak_fraction = peak_fraction;
  report.peak_time_norm = peak_time;
  report.half_time_norm = half_time_norm(counts);
  report.distinct_1 = distinct_n(tweets, 1);
  report.distinct_2 = distinct_n(tweets, 2);
  return report;
}

inline MetricsReport compute_metrics(const SimulationTrace& trace) {
  return compute_metrics(trace.counts, trace.records);
}

inline constexpr const char* kMetricsCsvHeader =
    "belief_average,belief_variance,infection_rate,recovery_rate,peak_fraction,"
    "peak_time_norm,half_time_norm,distinct_1,distinct_2";

inline void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write metrics file: " + path.string());
  out << kMetricsCsvHeader << '\n';
  out << detail::format_double(report.belief_average) << ','
      << detail::format_double(report.belief_variance) << ','
      << detail::format_double(report.infection_rate) << ','
      << detail::format_double(report.recovery_rate) << ','
      << detail::format_double(report.peak_fraction) << ','
      << detail::format_double(report.peak_time_norm) << ','
      << (report.half_time_norm ? detail::format_double(*report.half_time_norm)
                                : std::string(">1"))
      << ',' << detail::format_double(report.distinct_1) << ','
      << detail::format_double(report.distinct_2) << '\n';
}

struct FitArtifact {
  SisParams params;
  std::vector<double> fitted_daily_infected;  // one value per counts row
};

// Relabel to the two-compartment view and fit; the overlay column aligns
// with the input rows.
inline FitArtifact fit_counts(std::span<const PopulationCounts> counts) {
  if (counts.size() < 3) throw ArtifactError("fit: need at least 3 count rows");
  const auto series = relabel_for_sis(counts);
  const double population = series.susceptible.front() + series.infected.front();
  FitArtifact artifact;
  artifact.params =
      fit_sis(std::span<const double>(series.infected), population, series.infected.front());
  if (artifact.params.status == FitStatus::ok) {
    artifact.fitted_daily_infected =
        sis_daily_infected(artifact.params.beta, artifact.params.gamma, population,
                           series.infected.front(), static_cast<int>(counts.size()));
  } else {
    artifact.fitted_daily_infected.assign(counts.size(), series.infected.front());
  }
  return artifact;
}

inline void write_fit_json(const std::filesystem::path& path, const FitArtifact& artifact) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write fit file: " + path.string());
  nlohmann::json body = {
      {"beta", artifact.params.beta},
      {"gamma", artifact.params.gamma},
      {"residual", artifact.params.residual},
      {"status", to_string(artifact.params.status)},
      {"population", artifact.params.population},
      {"fitted_daily_infected", artifact.fitted_daily_infected},
  };
  out << body.dump(2) << '\n';
}

// Build the configured backend. The LLM api key falls back to FPS_API_KEY.
inline std::unique_ptr<OpinionBackend> build_backend(const AppConfig& config) {
  if (config.backend == BackendKind::mock)
    return std::make_unique<MockBackend>(config.mock, config.topic);
  LlmBackendConfig llm = config.llm;
  if (llm.api_key.empty()) {
    if (const char* key = std::getenv("FPS_API_KEY")) llm.api_key = key;
  }
  return std::make_unique<LlmBackend>(llm, config.topic);
}

// Run the simulation and persist the six artifacts. Prints one S/I/R line
// per day. On failure past configuration checks, leaves a failure marker.
inline SimulationTrace run_command(const AppConfig& config, OpinionBackend& backend,
                                   std::ostream& log) {
  config.validate();
  const RunPaths paths{config.out_dir};
  std::filesystem::create_directories(paths.dir);
  std::error_code ignored;
  std::filesystem::remove(paths.failure_marker(), ignored);

  const auto started_at = detail::iso8601_utc_now();
  try {
    const SimulationTrace trace = run_simulation(config.simulation(), backend);
    for (const PopulationCounts& day : trace.counts)
      log << "day " << day.day << ": S=" << day.susceptible << " I=" << day.infected
          << " R=" << day.recovered << "\n";

    write_counts_csv(paths.counts(), trace.counts);
    write_transcript_jsonl(paths.transcript(), trace.records);
    write_metrics_csv(paths.metrics(), compute_metrics(trace));
    write_fit_json(paths.fit(), fit_counts(trace.counts));
    {
      std::ofstream echo(paths.config_echo());
      if (!echo) throw ArtifactError("cannot write config echo");
      echo << write_config(config);
    }
    {
      nlohmann::json manifest = {
          {"backend", backend.name()},
          {"model", config.backend == BackendKind::llm ? config.llm.model_name : ""},
          {"seed", config.seed},
          {"topic", config.topic},
          {"n_agents", config.n_agents},
          {"horizon_days", config.horizon_days},
          {"trait_profile", profile_name(config.profile)},
          {"intervention", format_intervention(config.intervention)},
          {"backend_calls", trace.backend_calls},
          {"backend_failures", trace.backend_failures},
          {"started_at", started_at},
          {"finished_at", detail::iso8601_utc_now()},
      };
      std::ofstream out(paths.manifest());
      if (!out) throw ArtifactError("cannot write manifest");
      out << manifest.dump(2) << '\n';
    }
    return trace;
  } catch (const std::exception& error) {
    std::ofstream marker(paths.failure_marker());
    marker << error.what() << '\n';
    throw;
  }
}

inline FitArtifact fit_command(const std::filesystem::path& counts_path,
                               const std::filesystem::path& out_path) {
  const auto counts = read_counts_csv(counts_path);
  const FitArtifact artifact = fit_counts(counts);
  write_fit_json(out_path, artifact);
  return artifact;
}

// Recompute the metrics for an existing run directory and rewrite its
// metrics file.
inline MetricsReport metrics_command(const RunPaths& paths) {
  if (!std::filesystem::exists(paths.counts()))
    throw ArtifactError("missing artifact: " + paths.counts().string());
  if (!std::filesystem::exists(paths.transcript()))
    throw ArtifactError("missing artifact: " + paths.transcript().string());
  const auto counts = read_counts_csv(paths.counts());
  const auto records = read_transcript_jsonl(paths.transcript());
  const MetricsReport report = compute_metrics(counts, records);
  write_metrics_csv(paths.metrics(), report);
  return report;
}

namespace detail {

inline std::string fixed3(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << v;
  return out.str();
}

}  // namespace detail

// Table of one metrics row per run, in the vocabulary of the metrics file.
// The single "peak rate" notion is ambiguous, so both peak columns are shown.
inline std::string render_report_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  const std::vector<std::string> headers = {
      "setting",       "belief_average", "belief_variance", "infection_rate",
      "recovery_rate", "peak_fraction",  "peak_time_norm",  "half_time_norm",
      "distinct_1",    "distinct_2"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& [name, report] : rows) {
    cells.push_back({name, detail::fixed3(report.belief_average),
                     detail::fixed3(report.belief_variance),
                     detail::fixed3(report.infection_rate),
                     detail::fixed3(report.recovery_rate),
                     detail::fixed3(report.peak_fraction),
                     detail::fixed3(report.peak_time_norm),
                     report.half_time_norm ? detail::fixed3(*report.half_time_norm)
                                           : std::string(">1"),
                     detail::fixed3(report.distinct_1), detail::fixed3(report.distinct_2)});
  }
  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& row : cells) widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream out;
  const auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "  " : "") << std::left << std::setw(static_cast<int>(widths[c])) << row[c];
    out << '\n';
  };
  emit_row(headers);
  for (const auto& row : cells) emit_row(row);
  out << "note: peak is reported as both a fraction (max infected / N) and the normalized "
         "first day of that maximum; a single combined 'peak rate' would be ambiguous.\n";
  return out.str();
}

// Metrics table for one or more run directories; also refreshes each
// directory's metrics file.
inline std::string report_command(const std::vector<std::filesystem::path>& run_dirs) {
  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (const auto& dir : run_dirs)
    rows.emplace_back(dir.filename().string(), metrics_command(RunPaths{dir}));
  return render_report_table(rows);
}

}  // namespace fps
