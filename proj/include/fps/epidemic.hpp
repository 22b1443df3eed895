#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fps/population.hpp"

namespace fps {

enum class FitStatus { ok, degenerate };

inline const char* to_string(FitStatus s) {
  return s == FitStatus::ok ? "ok" : "degenerate";
}

// Transmission rate beta (per person-day) and recovery rate gamma (per day),
// plus fit diagnostics when produced by fit_sis.
struct SisParams {
  double beta = 0.0;
  double gamma = 0.0;
  double population = 0.0;
  double residual = 0.0;
  FitStatus status = FitStatus::ok;
};

struct SisTrajectory {
  double step = 0.0;
  std::vector<double> time;
  std::vector<double> susceptible;
  std::vector<double> infected;

  double population() const {
    return susceptible.empty() ? 0.0 : susceptible.front() + infected.front();
  }
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(double time, const std::string& what)
      : std::runtime_error(what + " at t=" + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// dS/dt = -beta*S*I + gamma*I, dI/dt = beta*S*I - gamma*I. The two
// components are exact negatives so the pair sums to zero even in floating
// point.
inline std::pair<double, double> sis_derivatives(double susceptible, double infected,
                                                 double beta, double gamma) {
  const double d_infected = beta * susceptible * infected - gamma * infected;
  return {-d_infected, d_infected};
}

// Classical fixed-step 4th-order Runge-Kutta integration of the SIS
// equations. The step is snapped so the grid lands exactly on the horizon.
inline SisTrajectory integrate_sis(double beta, double gamma, double s0, double i0,
                                   double horizon_days, double step = 0.05) {
  if (step <= 0.0 || step > 0.1)
    throw std::invalid_argument("integrate_sis: step must be in (0, 0.1]");
  if (horizon_days <= 0.0)
    throw std::invalid_argument("integrate_sis: horizon must be positive");

  const auto n_steps = static_cast<std::size_t>(std::llround(horizon_days / step));
  const double h = horizon_days / static_cast<double>(n_steps);

  SisTrajectory out;
  out.step = h;
  out.time.reserve(n_steps + 1);
  out.susceptible.reserve(n_steps + 1);
  out.infected.reserve(n_steps + 1);

  double s = s0, i = i0;
  out.time.push_back(0.0);
  out.susceptible.push_back(s);
  out.infected.push_back(i);

  for (std::size_t k = 0; k < n_steps; ++k) {
    const double k1 = sis_derivatives(s, i, beta, gamma).second;
    const double k2 = sis_derivatives(s - 0.5 * h * k1, i + 0.5 * h * k1, beta, gamma).second;
    const double k3 = sis_derivatives(s - 0.5 * h * k2, i + 0.5 * h * k2, beta, gamma).second;
    const double k4 = sis_derivatives(s - h * k3, i + h * k3, beta, gamma).second;
    const double delta = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    s -= delta;
    i += delta;
    const double t = static_cast<double>(k + 1) * h;
    if (!std::isfinite(s) || !std::isfinite(i))
      throw IntegrationError(t, "integrate_sis: non-finite state");
    out.time.push_back(t);
    out.susceptible.push_back(s);
    out.infected.push_back(i);
  }
  return out;
}

// Model infected count at integer days 0..days-1, starting from
// (N - i0, i0).
inline std::vector<double> sis_daily_infected(double beta, double gamma, double population,
                                              double i0, int days, double step = 0.05) {
  if (days < 1) throw std::invalid_argument("sis_daily_infected: days must be >= 1");
  std::vector<double> daily;
  daily.reserve(static_cast<std::size_t>(days));
  daily.push_back(i0);
  if (days == 1) return daily;
  const auto trajectory =
      integrate_sis(beta, gamma, population - i0, i0, static_cast<double>(days - 1), step);
  const auto per_day = static_cast<std::size_t>(std::llround(1.0 / trajectory.step));
  for (int d = 1; d < days; ++d)
    daily.push_back(trajectory.infected[static_cast<std::size_t>(d) * per_day]);
  return daily;
}

namespace detail {

inline double sis_fit_sse(double beta, double gamma, double population, double i0,
                          std::span<const double> observed) {
  const auto model =
      sis_daily_infected(beta, gamma, population, i0, static_cast<int>(observed.size()));
  double sse = 0.0;
  for (std::size_t t = 0; t < observed.size(); ++t) {
    const double r = model[t] - observed[t];
    sse += r * r;
  }
  return sse;
}

}  // namespace detail

// Least-squares fit of (beta, gamma) to observed per-day infected counts:
// a 50x50 log-spaced grid over beta in [1e-4, 1], gamma in [1e-4, 2] for
// global coverage, then coordinate descent with a shrinking multiplicative
// step. The descent runs in logistic coordinates (growth rate
// r = beta*N - gamma, depletion q = gamma/beta) when the grid optimum is a
// growing epidemic; the data pins r and q almost independently, where the
// (beta, gamma) surface is a narrow curved valley. Stops once the relative
// improvement stays below 1e-8 at the finest step, or after 200 iterations.
inline SisParams fit_sis(std::span<const double> observed, double population, double i0) {
  if (observed.size() < 3)
    throw std::invalid_argument("fit_sis: need at least 3 observation days");
  for (const double v : observed)
    if (v < 0.0 || v > population)
      throw std::invalid_argument("fit_sis: observations must lie in [0, N]");

  SisParams fit;
  fit.population = population;

  double max_observed = 0.0;
  for (const double v : observed) max_observed = std::max(max_observed, v);
  if (max_observed == 0.0 && i0 == 0.0) {
    fit.status = FitStatus::degenerate;  // beta unidentifiable on a dead trace
    return fit;
  }

  constexpr int kGrid = 50;
  constexpr double kBetaLo = 1e-4, kBetaHi = 1.0;
  constexpr double kGammaLo = 1e-4, kGammaHi = 2.0;

  double best_lb = std::log10(kBetaLo), best_lg = std::log10(kGammaLo);
  double best_sse = std::numeric_limits<double>::infinity();
  for (int a = 0; a < kGrid; ++a) {
    const double lb = std::log10(kBetaLo) +
                      (std::log10(kBetaHi) - std::log10(kBetaLo)) * a / (kGrid - 1);
    for (int b = 0; b < kGrid; ++b) {
      const double lg = std::log10(kGammaLo) +
                        (std::log10(kGammaHi) - std::log10(kGammaLo)) * b / (kGrid - 1);
      const double sse =
          detail::sis_fit_sse(std::pow(10.0, lb), std::pow(10.0, lg), population, i0, observed);
      if (sse < best_sse) {
        best_sse = sse;
        best_lb = lb;
        best_lg = lg;
      }
    }
  }

  double beta = std::pow(10.0, best_lb);
  double gamma = std::pow(10.0, best_lg);

  // Multiplicative compass descent over a 2-parameter point; shrinks the
  // step when no axis move improves, grows it again after progress.
  const auto descend = [&best_sse](double& x, double& y, auto&& sse_of) {
    double step = 0.1;  // decades
    for (int iter = 0; iter < 200 && step > 1e-9; ++iter) {
      const double factor = std::pow(10.0, step);
      double trial_x = x, trial_y = y, trial_sse = best_sse;
      for (const auto& [fx, fy] :
           {std::pair{factor, 1.0}, {1.0 / factor, 1.0}, {1.0, factor}, {1.0, 1.0 / factor}}) {
        const double sse = sse_of(x * fx, y * fy);
        if (sse < trial_sse) {
          trial_sse = sse;
          trial_x = x * fx;
          trial_y = y * fy;
        }
      }
      const double improvement = (best_sse - trial_sse) / std::max(best_sse, 1e-30);
      if (improvement < 1e-8) {
        step *= 0.5;
      } else {
        best_sse = trial_sse;
        x = trial_x;
        y = trial_y;
        step = std::min(step * 2.0, 0.2);
      }
    }
  };

  double growth = beta * population - gamma;  // logistic growth rate
  double depletion = gamma / beta;            // N minus the endemic level
  if (growth > 0.0 && depletion < population) {
    descend(growth, depletion, [&](double r, double q) {
      if (r <= 0.0 || q <= 0.0 || q >= population)
        return std::numeric_limits<double>::infinity();
      return detail::sis_fit_sse(r / (population - q), r * q / (population - q), population, i0,
                                 observed);
    });
    beta = growth / (population - depletion);
    gamma = growth * depletion / (population - depletion);
  } else {
    descend(beta, gamma, [&](double b, double g) {
      if (b <= 0.0 || g <= 0.0) return std::numeric_limits<double>::infinity();
      return detail::sis_fit_sse(b, g, population, i0, observed);
    });
  }

  fit.beta = beta;
  fit.gamma = gamma;
  fit.residual = best_sse;
  fit.status = FitStatus::ok;
  return fit;
}

inline SisParams fit_sis(std::span<const int> observed, double population, double i0) {
  std::vector<double> real(observed.begin(), observed.end());
  return fit_sis(std::span<const double>(real), population, i0);
}

// Collapse the three-label counts to the two-compartment view: recovered
// agents count as susceptible again.
struct SisSeries {
  std::vector<double> susceptible;
  std::vector<double> infected;
};

inline SisSeries relabel_for_sis(std::span<const PopulationCounts> counts) {
  SisSeries series;
  series.susceptible.reserve(counts.size());
  series.infected.reserve(counts.size());
  for (const PopulationCounts& c : counts) {
    series.susceptible.push_back(static_cast<double>(c.susceptible + c.recovered));
    series.infected.push_back(static_cast<double>(c.infected));
  }
  return series;
}

}  // namespace fps
