#pragma once

#include <cctype>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fps/population.hpp"

namespace fps {

// The per-run propagation metrics. half_time_norm is empty when the infected
// count never reaches half the population; it serializes as ">1".
struct MetricsReport {
  double belief_average = 0.0;
  double belief_variance = 0.0;
  double infection_rate = 0.0;   // persons/day
  double recovery_rate = 0.0;    // persons/day
  double peak_fraction = 0.0;
  double peak_time_norm = 0.0;
  std::optional<double> half_time_norm;
  double distinct_1 = 0.0;
  double distinct_2 = 0.0;
};

inline double belief_average(std::span<const int> beliefs) {
  if (beliefs.empty()) return 0.0;
  double sum = 0.0;
  for (const int b : beliefs) sum += b;
  return sum / static_cast<double>(beliefs.size());
}

// Population variance (the group is the whole population).
inline double belief_variance(std::span<const int> beliefs) {
  if (beliefs.empty()) return 0.0;
  const double mean = belief_average(beliefs);
  double sum = 0.0;
  for (const int b : beliefs) sum += (b - mean) * (b - mean);
  return sum / static_cast<double>(beliefs.size());
}

// Final-day infected count over the horizon in days. counts must span days
// 0..T.
inline double infection_rate(std::span<const PopulationCounts> counts) {
  const int horizon = static_cast<int>(counts.size()) - 1;
  return static_cast<double>(counts.back().infected) / horizon;
}

inline double recovery_rate(std::span<const PopulationCounts> counts) {
  const int horizon = static_cast<int>(counts.size()) - 1;
  return static_cast<double>(counts.back().recovered) / horizon;
}

// Maximum infected fraction over the simulated days 1..T, and the first day
// it is attained, normalized by T. Day 0 is the initialization snapshot and
// does not count as a simulated peak.
inline std::pair<double, double> peak_metrics(std::span<const PopulationCounts> counts) {
  const int horizon = static_cast<int>(counts.size()) - 1;
  const int population = counts.front().total();
  int peak = -1, peak_day = 1;
  for (int d = 1; d <= horizon; ++d) {
    if (counts[static_cast<std::size_t>(d)].infected > peak) {
      peak = counts[static_cast<std::size_t>(d)].infected;
      peak_day = d;
    }
  }
  return {static_cast<double>(peak) / population, static_cast<double>(peak_day) / horizon};
}

// First day (day 0 allowed) the infected count reaches half the population,
// normalized by T; empty when the threshold is never crossed.
inline std::optional<double> half_time_norm(std::span<const PopulationCounts> counts) {
  const int horizon = static_cast<int>(counts.size()) - 1;
  const int population = counts.front().total();
  for (int d = 0; d <= horizon; ++d)
    if (2 * counts[static_cast<std::size_t>(d)].infected >= population)
      return static_cast<double>(d) / horizon;
  return std::nullopt;
}

// Lowercase, strip punctuation, split on whitespace.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// Unique n-grams over total n-grams across the whole corpus; 0 for an empty
// corpus.
inline double distinct_n(std::span<const std::string> texts, int n) {
  if (n < 1) throw std::invalid_argument("distinct_n: n must be >= 1");
  std::unordered_set<std::string> unique;
  std::size_t total = 0;
  for (const std::string& text : texts) {
    const auto tokens = tokenize(text);
    if (tokens.size() < static_cast<std::size_t>(n)) continue;
    for (std::size_t k = 0; k + static_cast<std::size_t>(n) <= tokens.size(); ++k) {
      std::string gram = tokens[k];
      for (int j = 1; j < n; ++j) {
        gram += '\x1f';
        gram += tokens[k + static_cast<std::size_t>(j)];
      }
      unique.insert(std::move(gram));
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(unique.size()) / static_cast<double>(total);
}

}  // namespace fps
