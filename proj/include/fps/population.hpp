#pragma once

#include <span>
#include <stdexcept>

namespace fps {

// susceptible: never believed. infected: currently believes.
// recovered: believed before but not now; may become infected again.
enum class PopulationLabel { susceptible, infected, recovered };

inline const char* label_name(PopulationLabel label) {
  switch (label) {
    case PopulationLabel::susceptible: return "susceptible";
    case PopulationLabel::infected: return "infected";
    case PopulationLabel::recovered: return "recovered";
  }
  return "unknown";
}

// Label from the full belief history (day 0 onward, one entry per
// completed day). The history must not be empty.
inline PopulationLabel classify_state(std::span<const int> belief_history) {
  if (belief_history.empty())
    throw std::logic_error("classify_state: empty belief history");
  if (belief_history.back() == 1) return PopulationLabel::infected;
  for (const int b : belief_history)
    if (b == 1) return PopulationLabel::recovered;
  return PopulationLabel::susceptible;
}

// One day's population tally. susceptible + infected + recovered always
// equals the population size.
struct PopulationCounts {
  int day = 0;
  int susceptible = 0;
  int infected = 0;
  int recovered = 0;

  int total() const { return susceptible + infected + recovered; }

  bool operator==(const PopulationCounts&) const = default;
};

}  // namespace fps
