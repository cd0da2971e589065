// Exact variate generation and path simulation: waiting times (exponential /
// Mittag-Leffler), one-sided stable and inverse-stable subordinators,
// semi-Markov price paths under the martingale drift, and the limiting
// subordinated geometric Brownian motion payoff.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "smp/common.hpp"
#include "smp/rng.hpp"
#include "smp/specfun.hpp"

namespace smp::sampling {

// ---------------------------------------------------------------------------
// Waiting-time laws.
// ---------------------------------------------------------------------------

struct WaitingTimeLaw {
  enum class Kind { Exponential, MittagLeffler };

  Kind kind = Kind::Exponential;
  double alpha = 1.0;   // order, in (0,1) for MittagLeffler
  double lambda = 1.0;  // rate

  static WaitingTimeLaw exponential(double lambda) {
    if (!(lambda > 0.0)) throw std::domain_error("WaitingTimeLaw: lambda must be positive");
    WaitingTimeLaw law;
    law.kind = Kind::Exponential;
    law.lambda = lambda;
    return law;
  }

  static WaitingTimeLaw mittag_leffler(double alpha, double lambda) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::domain_error("WaitingTimeLaw: alpha outside (0,1)");
    if (!(lambda > 0.0)) throw std::domain_error("WaitingTimeLaw: lambda must be positive");
    WaitingTimeLaw law;
    law.kind = Kind::MittagLeffler;
    law.alpha = alpha;
    law.lambda = lambda;
    return law;
  }

  double survival(double t) const {
    if (t <= 0.0) return 1.0;
    if (kind == Kind::Exponential) return std::exp(-lambda * t);
    return specfun::ml_survival(specfun::MlParams(alpha, lambda), t);
  }

  double cdf(double t) const { return 1.0 - survival(t); }

  double density(double t) const {
    if (kind == Kind::Exponential) return lambda * std::exp(-lambda * t);
    return specfun::ml_density(specfun::MlParams(alpha, lambda), t);
  }
};

// ---------------------------------------------------------------------------
// Elementary samplers.
// ---------------------------------------------------------------------------

// One draw of the standardized one-sided alpha-stable r.v. (Laplace transform
// e^{-phi^alpha}) via the Kanter transform: exact and rejection-free.
inline double sample_standard_stable(double alpha, RngStream& rng) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("sample_standard_stable: alpha outside (0,1)");
  const double u = rng.uniform_open() * M_PI;
  const double e = rng.exponential();
  const double log_a = (alpha * std::log(std::sin(alpha * u)) +
                        (1.0 - alpha) * std::log(std::sin((1.0 - alpha) * u)) -
                        std::log(std::sin(u))) /
                       (1.0 - alpha);
  return std::exp((1.0 - alpha) / alpha * (log_a - std::log(e)));
}

// One draw of the subordinator sigma(t); self-similar, sigma(t) = t^{1/a} sigma(1).
inline double sample_stable(double alpha, double t, RngStream& rng) {
  if (!(t > 0.0)) throw std::domain_error("sample_stable: t must be positive");
  return std::pow(t, 1.0 / alpha) * sample_standard_stable(alpha, rng);
}

// One draw of the inverse subordinator L(t) via L(t) = (t / sigma(1))^alpha.
inline double sample_inverse_stable(double alpha, double t, RngStream& rng) {
  if (!(t > 0.0)) throw std::domain_error("sample_inverse_stable: t must be positive");
  return std::pow(t / sample_standard_stable(alpha, rng), alpha);
}

// One waiting time.  Mittag-Leffler draws use the subordination identity
// J = sigma(E / lambda) = (E / lambda)^{1/alpha} * S_alpha, which reproduces
// the survival E_alpha(-lambda t^alpha) exactly.
inline double sample_waiting(const WaitingTimeLaw& law, RngStream& rng) {
  if (law.kind == WaitingTimeLaw::Kind::Exponential) return rng.exponential() / law.lambda;
  const double e = rng.exponential();
  return std::pow(e / law.lambda, 1.0 / law.alpha) *
         sample_standard_stable(law.alpha, rng);
}

namespace detail {

// Inversion of the conditional residual-lifetime CDF
// F(w | s) = (F(s+w) - F(s)) / (1 - F(s)) at quantile level q, by bracketed
// bisection to 1e-10.  A warm lower bracket can be supplied when solving a
// monotone sequence of quantiles.
inline double residual_by_inversion(const WaitingTimeLaw& law, double age, double q,
                                    double warm_lo = 0.0) {
  const double s_age = law.survival(age);
  if (!(s_age > 0.0))
    throw std::domain_error("residual_by_inversion: survival underflows at this age");
  const double target = (1.0 - q) * s_age;  // solve survival(age + w) = target
  double lo = age + warm_lo;
  double hi = 2.0 * lo + std::pow(1.0 / law.lambda, 1.0 / law.alpha);
  while (law.survival(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (law.survival(mid) > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-10 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi) - age;
}

// Quantile table of the conditional law at a fixed (law, age), built once and
// cached; Monte Carlo draws then cost one uniform plus an interpolation.
struct ResidualTable {
  static constexpr std::size_t kN = 4096;
  double alpha = -1.0, lambda = -1.0, age = -1.0;
  std::vector<double> q;  // quantiles at u_i = i / kN, i = 0 .. kN-1

  void build(const WaitingTimeLaw& law, double age_in) {
    alpha = law.alpha;
    lambda = law.lambda;
    age = age_in;
    q.assign(kN, 0.0);
    for (std::size_t i = 1; i < kN; ++i)
      q[i] = residual_by_inversion(law, age_in,
                                   static_cast<double>(i) / static_cast<double>(kN),
                                   q[i - 1]);
  }
};

inline const ResidualTable& residual_table(const WaitingTimeLaw& law, double age) {
  thread_local ResidualTable tab;
  if (tab.alpha != law.alpha || tab.lambda != law.lambda || tab.age != age)
    tab.build(law, age);
  return tab;
}

}  // namespace detail

// First waiting time seen from age s: the residual-lifetime law
// F(w | s) = (F(s+w) - F(s)) / (1 - F(s)).  Exponential is memoryless; the
// Mittag-Leffler case inverts the conditional CDF numerically (bracketed
// bisection to 1e-10), accelerated by a cached quantile table with the exact
// inversion kept for the far tail.  One uniform is consumed per draw.
inline double sample_residual_waiting(const WaitingTimeLaw& law, double age,
                                      RngStream& rng) {
  if (age < 0.0) throw std::domain_error("sample_residual_waiting: negative age");
  if (age == 0.0 || law.kind == WaitingTimeLaw::Kind::Exponential)
    return sample_waiting(law, rng);
  const double u = rng.uniform();
  const auto& tab = detail::residual_table(law, age);
  const double x = u * static_cast<double>(detail::ResidualTable::kN);
  const auto i = static_cast<std::size_t>(x);
  if (i + 1 >= detail::ResidualTable::kN)
    return detail::residual_by_inversion(law, age, u, tab.q.back());
  return tab.q[i] + (x - static_cast<double>(i)) * (tab.q[i + 1] - tab.q[i]);
}

// ---------------------------------------------------------------------------
// Path simulation.
// ---------------------------------------------------------------------------

struct PathRecord {
  std::vector<double> epochs;       // trade times T_1 < T_2 < ... <= horizon
  std::vector<double> log_returns;  // one normal log-return per epoch
  double terminal_price = 0.0;

  bool operator==(const PathRecord&) const = default;
};

// Simulates the multiplicative renewal price path on [0, horizon].  With the
// martingale flag the per-jump log-returns are N(-sigma2/2, sigma2), so the
// price is a martingale; the first waiting time honours initial_age.
inline PathRecord simulate_semimarkov_path(double x0, double sigma2,
                                           const WaitingTimeLaw& law, double horizon,
                                           double initial_age, bool martingale,
                                           RngStream& rng) {
  if (!(x0 > 0.0)) throw std::domain_error("simulate_semimarkov_path: x0 must be positive");
  if (!(horizon > 0.0))
    throw std::domain_error("simulate_semimarkov_path: horizon must be positive");
  if (sigma2 < 0.0) throw std::domain_error("simulate_semimarkov_path: negative variance");
  PathRecord path;
  const double drift = martingale ? -0.5 * sigma2 : 0.0;
  const double vol = std::sqrt(sigma2);
  double t = sample_residual_waiting(law, initial_age, rng);
  double log_price = 0.0;
  while (t <= horizon) {
    const double y = drift + vol * rng.normal();
    path.epochs.push_back(t);
    path.log_returns.push_back(y);
    log_price += y;
    t += sample_waiting(law, rng);
  }
  path.terminal_price = x0 * std::exp(log_price);
  return path;
}

// One payoff draw of the limiting age-zero process: L ~ L(z), B(L) = sqrt(L) Z,
// payoff (x e^{B(L) - L/2} - K)^+.
inline double simulate_subordinated_gbm_payoff(double alpha, double x, double z, double K,
                                               RngStream& rng) {
  if (z < 0.0) throw std::domain_error("simulate_subordinated_gbm_payoff: negative time");
  if (z == 0.0) return std::max(x - K, 0.0);
  const double L = sample_inverse_stable(alpha, z, rng);
  const double b = std::sqrt(L) * rng.normal();
  return std::max(x * std::exp(b - 0.5 * L) - K, 0.0);
}

// One payoff draw of the limiting process seen at age y > 0: the first
// renewal arrives with survival (y / (y + w))^alpha (Pareto inversion); if it
// misses the horizon the payoff freezes at (x - K)^+, otherwise the process
// restarts at age zero with the remaining time.
inline double simulate_aged_limit_payoff(double alpha, double x, double y, double z,
                                         double K, RngStream& rng) {
  if (!(y > 0.0)) throw std::domain_error("simulate_aged_limit_payoff: age must be positive");
  if (z < 0.0) throw std::domain_error("simulate_aged_limit_payoff: negative time");
  if (z == 0.0) return std::max(x - K, 0.0);
  const double u = rng.uniform_open();
  const double tau = y * (std::pow(u, -1.0 / alpha) - 1.0);
  if (tau > z) return std::max(x - K, 0.0);
  return simulate_subordinated_gbm_payoff(alpha, x, z - tau, K, rng);
}

// ---------------------------------------------------------------------------
// Path dump: CSV with header `epoch,log_return` and a trailer row
// `terminal,<price>`; one file per path named path_<stream_id>.csv.
// ---------------------------------------------------------------------------

inline void write_path_csv(const PathRecord& path, std::ostream& os) {
  os << "epoch,log_return\n";
  os.precision(17);
  for (std::size_t i = 0; i < path.epochs.size(); ++i)
    os << path.epochs[i] << ',' << path.log_returns[i] << '\n';
  os << "terminal," << path.terminal_price << '\n';
}

inline std::filesystem::path write_path_csv(const PathRecord& path,
                                            const std::filesystem::path& dir,
                                            std::uint64_t stream_id) {
  const auto file = dir / ("path_" + std::to_string(stream_id) + ".csv");
  std::ofstream os(file);
  if (!os) throw std::runtime_error("write_path_csv: cannot open " + file.string());
  write_path_csv(path, os);
  return file;
}

}  // namespace smp::sampling
