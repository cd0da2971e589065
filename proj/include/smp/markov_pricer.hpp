// Closed-form pricing when inter-trade times are exponential: the
// Poisson-weighted Black-Scholes series (zero rate, pure-jump model) and its
// building blocks.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "smp/common.hpp"
#include "smp/specfun.hpp"

namespace smp::markov {

struct OptionSpec {
  double strike;            // K > 0
  double spot;              // x > 0
  double time_to_maturity;  // z = T - t >= 0
  double age = 0.0;         // elapsed time since the last trade (semi-Markov pricers)

  OptionSpec(double K, double x, double z, double y = 0.0)
      : strike(K), spot(x), time_to_maturity(z), age(y) {
    if (!(K > 0.0)) throw std::domain_error("OptionSpec: strike must be positive");
    if (!(x > 0.0)) throw std::domain_error("OptionSpec: spot must be positive");
    if (z < 0.0) throw std::domain_error("OptionSpec: negative time to maturity");
    if (y < 0.0) throw std::domain_error("OptionSpec: negative age");
  }
};

struct MarkovModel {
  double lambda;  // Poisson trade rate > 0
  double sigma2;  // per-jump log-return variance > 0

  MarkovModel(double l, double s2) : lambda(l), sigma2(s2) {
    if (!(l > 0.0)) throw std::domain_error("MarkovModel: lambda must be positive");
    if (!(s2 > 0.0)) throw std::domain_error("MarkovModel: sigma2 must be positive");
  }
};

// Black-Scholes call at zero rate and unit volatility, as a function of the
// operational time s:  x N(d1) - K N(d2), d1 = (log(x/K) + s/2)/sqrt(s).
inline double bs_call(double x, double K, double s) {
  if (!(x > 0.0)) throw std::domain_error("bs_call: spot must be positive");
  if (!(K > 0.0)) throw std::domain_error("bs_call: strike must be positive");
  if (s < 0.0) throw std::domain_error("bs_call: negative operational time");
  if (s == 0.0) return std::max(x - K, 0.0);
  const double sq = std::sqrt(s);
  const double d1 = std::log(x / K) / sq + 0.5 * sq;
  return x * specfun::normal_cdf(d1) - K * specfun::normal_cdf(d1 - sq);
}

// Price contribution of exactly n jumps:
//   n = 0: (x - K)^+
//   n >= 1: x N(d_{1,n}) - K N(d_{2,n}),  d_{1,n} = (log(x/K) + n s2/2)/(s sqrt(n));
// identically bs_call(x, K, n * sigma2).
inline double merton_term(double x, double K, double sigma2, std::size_t n) {
  if (!(x > 0.0)) throw std::domain_error("merton_term: spot must be positive");
  if (!(K > 0.0)) throw std::domain_error("merton_term: strike must be positive");
  if (sigma2 < 0.0) throw std::domain_error("merton_term: negative variance");
  if (n == 0) return std::max(x - K, 0.0);
  const double svn = std::sqrt(sigma2 * static_cast<double>(n));
  const double d1 = std::log(x / K) / svn + 0.5 * svn;
  return x * specfun::normal_cdf(d1) - K * specfun::normal_cdf(d1 - svn);
}

namespace detail {

// Smallest N > mu with Poisson tail mass P(N(mu) > N) * spot < tol, from the
// Chernoff bound  P(X >= n) <= exp(n - mu - n log(n/mu)),  n > mu.
inline std::size_t poisson_truncation_index(double mu, double spot, double tol) {
  auto log_tail = [&](double n) { return n - mu - n * std::log(n / mu); };
  const double log_target = std::log(tol / spot);
  double n = std::floor(mu) + 1.0;
  // coarse stride, then refine back; the bound is monotone beyond mu
  const double stride = std::max(1.0, std::sqrt(mu) / 4.0);
  while (log_tail(n) >= log_target) n += stride;
  while (n - stride > mu && log_tail(n - stride) < log_target) n -= stride;
  while (log_tail(n) >= log_target) n += 1.0;
  return static_cast<std::size_t>(n);
}

}  // namespace detail

// Poisson-weighted series price
//   e^{-lambda z} sum_n (lambda z)^n / n!  C_n(x, K, sigma2),
// truncated where the certified Poisson tail mass times the spot drops below
// tol (the terms satisfy C_n <= x, so the result is within tol of the full
// sum).
inline double markov_series_price(const MarkovModel& model, const OptionSpec& opt,
                                  double tol = 1e-10) {
  if (!(tol > 0.0)) throw std::domain_error("markov_series_price: tol must be positive");
  const double mu = model.lambda * opt.time_to_maturity;
  const double payoff = std::max(opt.spot - opt.strike, 0.0);
  if (mu == 0.0) return payoff;
  const std::size_t N = detail::poisson_truncation_index(mu, opt.spot, tol);
  KahanSum acc;
  const double log_mu = std::log(mu);
  double log_w = -mu;  // log Poisson weight at n = 0
  for (std::size_t n = 0; n <= N; ++n) {
    if (n > 0) log_w += log_mu - std::log(static_cast<double>(n));
    const double w = std::exp(log_w);
    if (w > 0.0) acc.add(w * merton_term(opt.spot, opt.strike, model.sigma2, n));
  }
  return acc.value();
}

}  // namespace smp::markov
