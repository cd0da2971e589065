#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "smp/markov_pricer.hpp"
#include "smp/quad.hpp"

using namespace smp;
using namespace smp::markov;

TEST_CASE("bs_call: values, degenerate time, bounds") {
  // 2 N(0.5) - 1 at x = K = 1, s = 1
  const double want = 2.0 * oracle::normal_cdf(0.5) - 1.0;
  CHECK(bs_call(1.0, 1.0, 1.0) == Catch::Approx(want).epsilon(1e-12));
  CHECK(bs_call(1.0, 1.0, 1.0) == Catch::Approx(0.3829249225480261).margin(1e-12));

  CHECK(bs_call(1.3, 0.9, 0.0) == Catch::Approx(0.4));
  CHECK(bs_call(0.7, 0.9, 0.0) == 0.0);

  // price increases to the spot as s grows, never beyond
  double prev = 0.0;
  for (double s : {0.5, 2.0, 8.0, 32.0, 128.0}) {
    const double p = bs_call(2.0, 1.0, s);
    CHECK(p >= prev);
    CHECK(p <= 2.0);
    prev = p;
  }
  CHECK(bs_call(2.0, 1.0, 1e4) == Catch::Approx(2.0).margin(1e-6));

  CHECK_THROWS_AS(bs_call(-1.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(bs_call(1.0, 0.0, 1.0), std::domain_error);
}

TEST_CASE("merton_term: base case, identity with bs_call, monotone in n") {
  CHECK(merton_term(1.2, 1.0, 0.04, 0) == Catch::Approx(0.2));
  CHECK(merton_term(1.0, 1.0, 1.0, 1) == Catch::Approx(0.3829249225480261).margin(1e-12));

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> ux(0.5, 2.0), us(0.01, 0.5);
  for (int rep = 0; rep < 50; ++rep) {
    const double x = ux(gen), K = ux(gen), s2 = us(gen);
    double prev = merton_term(x, K, s2, 0);
    for (std::size_t n : {1u, 2u, 3u, 5u, 9u}) {
      const double c = merton_term(x, K, s2, n);
      CHECK(c == Catch::Approx(bs_call(x, K, s2 * n)).epsilon(1e-13));
      CHECK(c >= prev - 1e-12);  // convex order: more jumps, higher value
      prev = c;
    }
  }
}

TEST_CASE("markov_series_price: degenerate horizon, strike-free martingale, tolerance") {
  const MarkovModel m(2.0, 0.1);
  CHECK(markov_series_price(m, OptionSpec(1.0, 1.3, 0.0)) == Catch::Approx(0.3));

  // K -> 0 limit: price tends to the spot (martingale); probe with a tiny strike
  const double p = markov_series_price(m, OptionSpec(1e-14, 1.0, 1.0));
  CHECK(p == Catch::Approx(1.0).margin(1e-10));

  // truncation honors the requested tolerance
  const MarkovModel big(400.0, 0.0025);
  const double a = markov_series_price(big, OptionSpec(1.0, 1.0, 1.0), 1e-6);
  const double b = markov_series_price(big, OptionSpec(1.0, 1.0, 1.0), 1e-12);
  CHECK(std::abs(a - b) < 1e-6);
}

TEST_CASE("markov_series_price: bounds and convexity on random grids") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ux(0.4, 2.5), uz(0.01, 1.5), ul(0.5, 30.0);
  for (int rep = 0; rep < 60; ++rep) {
    const double K = ux(gen), z = uz(gen), lam = ul(gen);
    const MarkovModel m(lam, 1.0 / lam);
    const double x0 = ux(gen);
    const double h = 0.05 * x0;
    const double pm = markov_series_price(m, OptionSpec(K, x0 - h, z));
    const double p0 = markov_series_price(m, OptionSpec(K, x0, z));
    const double pp = markov_series_price(m, OptionSpec(K, x0 + h, z));
    CHECK(p0 >= std::max(x0 - K, 0.0) - 1e-12);
    CHECK(p0 <= x0 + 1e-12);
    CHECK(pm + pp - 2.0 * p0 >= -1e-10);  // convex in spot
    // nonincreasing in strike
    const double pk = markov_series_price(m, OptionSpec(K * 1.1, x0, z));
    CHECK(pk <= p0 + 1e-12);
  }
}

TEST_CASE("Donsker limit: series price approaches Black-Scholes as rates grow") {
  const double target = bs_call(1.0, 1.0, 0.25);
  double prev_err = 1e300;
  for (int m = 1; m <= 3; ++m) {
    const double lam = std::pow(10.0, m);
    const MarkovModel model(lam, 1.0 / lam);
    const double err = std::abs(markov_series_price(model, OptionSpec(1.0, 1.0, 0.25)) - target);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err <= 1e-2);
}

TEST_CASE("Kolmogorov consistency: dC/dz equals the jump generator applied to C") {
  // d/dz C(z, x) = lambda ( E[C(z, x e^Y)] - C(z, x) ), Y ~ N(-s2/2, s2)
  const MarkovModel m(3.0, 0.09);
  const double K = 1.0;
  const double mean = -0.5 * m.sigma2;
  const double sd = std::sqrt(m.sigma2);
  std::vector<double> nodes, weights;
  quad::gauss_hermite(64, nodes, weights);
  for (double x : {0.8, 1.0, 1.25})
    for (double z : {0.3, 0.8}) {
      const double h = 1e-4;
      const double dz = (markov_series_price(m, OptionSpec(K, x, z + h)) -
                         markov_series_price(m, OptionSpec(K, x, z - h))) /
                        (2.0 * h);

      // transition average split at the payoff kink y* = log(K/x): the n = 0
      // series term keeps the kink alive, so a single quadrature rule across
      // it loses accuracy
      auto integrand = [&](double y) {
        const double phi =
            std::exp(-sqr(y - mean) / (2.0 * m.sigma2)) / (sd * std::sqrt(2.0 * M_PI));
        return phi * markov_series_price(m, OptionSpec(K, x * std::exp(y), z));
      };
      const double kink = std::log(K / x);
      const double lo = mean - 8.5 * sd, hi = mean + 8.5 * sd;
      double avg = 0.0;
      if (kink > lo && kink < hi)
        avg = quad::adaptive_simpson(integrand, lo, kink, 5e-10) +
              quad::adaptive_simpson(integrand, kink, hi, 5e-10);
      else
        avg = quad::adaptive_simpson(integrand, lo, hi, 1e-9);
      const double rhs = m.lambda * (avg - markov_series_price(m, OptionSpec(K, x, z)));
      CHECK(dz == Catch::Approx(rhs).margin(2e-6));

      // the 64-point Gauss-Hermite version of the same average sits within
      // its kink-limited discretization error
      double gh = 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double y = mean + std::sqrt(2.0) * sd * nodes[i];
        gh += weights[i] * markov_series_price(m, OptionSpec(K, x * std::exp(y), z));
      }
      gh /= std::sqrt(M_PI);
      CHECK(gh == Catch::Approx(avg).margin(2e-3));
    }
}
