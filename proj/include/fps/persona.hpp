#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <string>
#include <vector>

#include "fps/errors.hpp"
#include "fps/random.hpp"

namespace fps {

enum class Polarity { low, high };

// Big Five personality dimensions, each reduced to a binary polarity.
struct TraitVector {
  Polarity openness = Polarity::low;
  Polarity conscientiousness = Polarity::low;
  Polarity extraversion = Polarity::low;
  Polarity agreeableness = Polarity::low;
  Polarity neuroticism = Polarity::low;

  bool operator==(const TraitVector&) const = default;
};

enum class TraitRule { random_5050, force_high, force_low };

// Per-dimension sampling rule for trait generation.
struct TraitProfile {
  TraitRule openness = TraitRule::random_5050;
  TraitRule conscientiousness = TraitRule::random_5050;
  TraitRule extraversion = TraitRule::random_5050;
  TraitRule agreeableness = TraitRule::random_5050;
  TraitRule neuroticism = TraitRule::random_5050;

  bool operator==(const TraitProfile&) const = default;

  static TraitProfile random() { return {}; }

  // High agreeableness and high neuroticism forced; everything else 50/50.
  static TraitProfile credulous() {
    TraitProfile p;
    p.agreeableness = TraitRule::force_high;
    p.neuroticism = TraitRule::force_high;
    return p;
  }

  // Low agreeableness and low neuroticism forced; everything else 50/50.
  static TraitProfile skeptical() {
    TraitProfile p;
    p.agreeableness = TraitRule::force_low;
    p.neuroticism = TraitRule::force_low;
    return p;
  }
};

// Named profiles exposed in configuration and on the command line.
enum class ProfileKind { random, credulous, skeptical };

inline const char* profile_name(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::random: return "random";
    case ProfileKind::credulous: return "credulous";
    case ProfileKind::skeptical: return "skeptical";
  }
  return "unknown";
}

inline TraitProfile make_profile(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::credulous: return TraitProfile::credulous();
    case ProfileKind::skeptical: return TraitProfile::skeptical();
    case ProfileKind::random: break;
  }
  return TraitProfile::random();
}

enum class Education { primary, secondary, bachelor, master, doctorate };

inline constexpr std::array<Education, 5> kEducationLevels = {
    Education::primary, Education::secondary, Education::bachelor,
    Education::master, Education::doctorate};

inline const char* education_name(Education e) {
  switch (e) {
    case Education::primary: return "primary";
    case Education::secondary: return "secondary";
    case Education::bachelor: return "bachelor";
    case Education::master: return "master";
    case Education::doctorate: return "doctorate";
  }
  return "unknown";
}

// Rank centered on bachelor: primary = -2 ... doctorate = +2.
inline int education_rank(Education e) {
  return static_cast<int>(e) - static_cast<int>(Education::bachelor);
}

inline constexpr int kMinAge = 18;
inline constexpr int kMaxAge = 64;

// Immutable agent identity.
struct Persona {
  int id = 0;
  std::string name;
  int age = kMinAge;
  Education education = Education::bachelor;
  TraitVector traits;

  bool operator==(const Persona&) const = default;
};

inline Polarity sample_polarity(Rng& rng, TraitRule rule) {
  switch (rule) {
    case TraitRule::force_high: return Polarity::high;
    case TraitRule::force_low: return Polarity::low;
    case TraitRule::random_5050: break;
  }
  return (rng() & 1u) ? Polarity::high : Polarity::low;
}

inline TraitVector sample_traits(Rng& rng, const TraitProfile& profile) {
  TraitVector t;
  t.openness = sample_polarity(rng, profile.openness);
  t.conscientiousness = sample_polarity(rng, profile.conscientiousness);
  t.extraversion = sample_polarity(rng, profile.extraversion);
  t.agreeableness = sample_polarity(rng, profile.agreeableness);
  t.neuroticism = sample_polarity(rng, profile.neuroticism);
  return t;
}

inline Persona generate_persona(Rng& rng, int id, const TraitProfile& profile,
                                const std::vector<std::string>& name_pool) {
  if (name_pool.empty()) throw ConfigError("generate_persona: empty name pool");
  Persona p;
  p.id = id;
  p.name = name_pool[uniform_below(rng, name_pool.size())];
  p.age = uniform_int(rng, kMinAge, kMaxAge);
  p.education = kEducationLevels[uniform_below(rng, kEducationLevels.size())];
  p.traits = sample_traits(rng, profile);
  return p;
}

// Weights for the mock backend's susceptibility score. Calibration knobs;
// the defaults keep the trait contribution dominant over education.
struct SusceptibilityCoeffs {
  double agreeableness_weight = 0.15;
  double neuroticism_weight = 0.15;
  double education_weight = 0.05;

  bool operator==(const SusceptibilityCoeffs&) const = default;
};

// How prone this persona is to adopting a belief it hears, in [0.05, 0.95].
// High agreeableness and high neuroticism raise it, education lowers it.
inline double susceptibility_score(const Persona& p,
                                   const SusceptibilityCoeffs& c = {}) {
  const auto sgn = [](Polarity pol) { return pol == Polarity::high ? 1.0 : -1.0; };
  const double raw = 0.5 + c.agreeableness_weight * sgn(p.traits.agreeableness) +
                     c.neuroticism_weight * sgn(p.traits.neuroticism) -
                     c.education_weight * education_rank(p.education);
  return std::clamp(raw, 0.05, 0.95);
}

// Rendered for prompts and transcripts, e.g.
// "high openness, low conscientiousness, ...".
inline std::string trait_description(const TraitVector& t) {
  const auto level = [](Polarity p) { return p == Polarity::high ? "high" : "low"; };
  std::string s;
  s += level(t.openness); s += " openness, ";
  s += level(t.conscientiousness); s += " conscientiousness, ";
  s += level(t.extraversion); s += " extraversion, ";
  s += level(t.agreeableness); s += " agreeableness, ";
  s += level(t.neuroticism); s += " neuroticism";
  return s;
}

// Bundled fallback name pool, used when no name-pool file is configured.
inline const std::vector<std::string>& default_name_pool() {
  static const std::vector<std::string> pool = {
      "Alice",  "Brian",   "Carmen", "Daniel", "Elena",  "Felix",
      "Grace",  "Hassan",  "Irene",  "Jorge",  "Kavya",  "Liam",
      "Maria",  "Noah",    "Olga",   "Pedro",  "Quinn",  "Rosa",
      "Samuel", "Tamara",  "Umar",   "Vera",   "Wei",    "Ximena",
      "Yusuf",  "Zofia",   "Andre",  "Bella",  "Cyrus",  "Dina",
      "Emil",   "Farah",   "Gustav", "Hana",   "Ivan",   "Jana",
      "Kenji",  "Lucia",   "Mateo",  "Nadia"};
  return pool;
}

// Name-pool file: UTF-8 text, one name per line, blank lines ignored.
inline std::vector<std::string> load_name_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("name pool file not readable: " + path);
  std::vector<std::string> pool;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t");
    pool.push_back(line.substr(begin, end - begin + 1));
  }
  if (pool.empty()) throw ConfigError("name pool file is empty: " + path);
  return pool;
}

}  // namespace fps
