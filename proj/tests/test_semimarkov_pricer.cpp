#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "smp/markov_pricer.hpp"
#include "smp/semimarkov_pricer.hpp"

using namespace smp;
using namespace smp::semimarkov;
using markov::OptionSpec;

namespace {

std::vector<double> poisson_pmf(double mu, std::size_t n_max) {
  std::vector<double> p(n_max + 1);
  double w = std::exp(-mu);
  for (std::size_t n = 0; n <= n_max; ++n) {
    p[n] = w;
    w *= mu / static_cast<double>(n + 1);
  }
  return p;
}

}  // namespace

TEST_CASE("residual_lifetime_cdf: memorylessness, anchors, Mittag-Leffler ratio") {
  const auto exp_law = WaitingTimeLaw::exponential(2.0);
  for (double s : {0.0, 0.5, 3.0}) {
    CHECK(residual_lifetime_cdf(exp_law, s, 0.0) == 0.0);
    for (double w : {0.2, 1.0})
      CHECK(residual_lifetime_cdf(exp_law, s, w) ==
            Catch::Approx(1.0 - std::exp(-2.0 * w)).epsilon(1e-12));
  }

  const auto ml = WaitingTimeLaw::mittag_leffler(0.5, 1.0);
  const double want = 1.0 - oracle::ml_half_neg(std::sqrt(2.0)) / oracle::ml_half_neg(1.0);
  CHECK(residual_lifetime_cdf(ml, 1.0, 1.0) == Catch::Approx(want).epsilon(1e-9));
  CHECK(residual_lifetime_cdf(ml, 0.5, 1e9) == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("counting_probabilities: Poisson degeneracy for the exponential law") {
  const auto law = WaitingTimeLaw::exponential(3.0);
  const double z = 1.0;
  const auto pmf = poisson_pmf(3.0, 32);
  for (double age : {0.0, 0.7}) {
    const auto dist = counting_probabilities(law, z, age, 32, Grid1D(513, z));
    double max_err = 0.0;
    for (std::size_t n = 0; n <= 32; ++n)
      max_err = std::max(max_err, std::abs(dist.probs[n] - pmf[n]));
    CHECK(max_err < 5e-4);
    CHECK(dist.tail_mass < 1e-12);
  }
  // refinement improves the worst-case error
  auto err_at = [&](std::size_t n_points) {
    const auto dist = counting_probabilities(law, z, 0.0, 32, Grid1D(n_points, z));
    double e = 0.0;
    for (std::size_t n = 0; n <= 32; ++n)
      e = std::max(e, std::abs(dist.probs[n] - pmf[n]));
    return e;
  };
  CHECK(err_at(257) / err_at(513) > 1.8);
}

TEST_CASE("counting_probabilities: degenerate horizon and normalization") {
  const auto law = WaitingTimeLaw::mittag_leffler(0.6, 2.0);
  const auto at_zero = counting_probabilities(law, 0.0, 0.3, 8, Grid1D(2, 1.0));
  CHECK(at_zero.probs[0] == 1.0);
  CHECK(at_zero.tail_mass == 0.0);

  // monotone exhaustion: cumulative mass grows toward 1 with n_max
  double prev = 0.0;
  for (std::size_t n_max : {2u, 8u, 32u}) {
    const auto dist = counting_probabilities(law, 1.0, 0.0, n_max, Grid1D(513, 1.0));
    double total = 0.0;
    for (double p : dist.probs) {
      CHECK(p >= -1e-12);
      total += p;
    }
    CHECK(total + dist.tail_mass == Catch::Approx(1.0).margin(1e-9));
    CHECK(total >= prev - 1e-12);
    prev = total;
  }
  CHECK(prev > 0.999);
}

TEST_CASE("series_price: exponential law reduces to the Markov series, age-free") {
  const auto law = WaitingTimeLaw::exponential(4.0);
  const double sigma2 = 0.05;
  const markov::MarkovModel model(4.0, sigma2);
  for (double age : {0.0, 0.5, 2.0})
    for (double x : {0.85, 1.0, 1.2}) {
      const OptionSpec opt(1.0, x, 1.0, age);
      const auto sp = series_price(law, sigma2, opt, 64, Grid1D(513, 1.0));
      const double want = markov::markov_series_price(model, opt);
      CHECK(sp.value == Catch::Approx(want).margin(5e-4 + sp.tail_mass * x));
    }
}

TEST_CASE("series_price: degenerate horizon and strike-free martingale") {
  const auto law = WaitingTimeLaw::mittag_leffler(0.7, 5.0);
  CHECK(series_price(law, 0.04, OptionSpec(1.0, 1.3, 0.0, 0.2), 64, Grid1D(2, 1.0)).value ==
        Catch::Approx(0.3));
  const auto sp = series_price(law, 0.04, OptionSpec(1e-12, 1.0, 1.0, 0.0), 64,
                               Grid1D(513, 1.0));
  CHECK(sp.value == Catch::Approx(1.0).margin(sp.tail_mass + 1e-3));
}

TEST_CASE("series_price: bounds and convexity at a positive age") {
  const auto law = WaitingTimeLaw::mittag_leffler(0.6, 3.0);
  const Grid1D grid(513, 0.8);
  for (double x : {0.7, 0.95, 1.0, 1.3}) {
    const auto sp = series_price(law, 0.08, OptionSpec(1.0, x, 0.8, 0.4), 64, grid);
    CHECK(sp.value >= std::max(x - 1.0, 0.0) - 1e-10);
    CHECK(sp.value <= x + 1e-10);
  }
  const double h = 0.05;
  const auto pm = series_price(law, 0.08, OptionSpec(1.0, 1.0 - h, 0.8, 0.4), 64, grid);
  const auto p0 = series_price(law, 0.08, OptionSpec(1.0, 1.0, 0.8, 0.4), 64, grid);
  const auto pp = series_price(law, 0.08, OptionSpec(1.0, 1.0 + h, 0.8, 0.4), 64, grid);
  CHECK(pm.value + pp.value - 2.0 * p0.value >= -1e-8);
}

TEST_CASE("SeriesPriceTable: matches the one-shot series price on and off age zero") {
  const auto law = WaitingTimeLaw::mittag_leffler(0.7, 5.0);
  const double sigma2 = 0.04;
  const Grid1D grid(513, 1.0);
  const SeriesPriceTable tab(law, sigma2, 1.0, 64, grid, 0.2);
  for (double z : {0.25, 0.5, 1.0}) {
    const Grid1D sub(257, z);
    for (double x : {0.9, 1.0, 1.15}) {
      const auto direct0 = series_price(law, sigma2, OptionSpec(1.0, x, z, 0.0), 64, sub);
      CHECK(tab.price_at(x, 0.0, z) == Catch::Approx(direct0.value).margin(2e-4));
      const auto direct = series_price(law, sigma2, OptionSpec(1.0, x, z, 0.2), 64, sub);
      CHECK(tab.price_at(x, 0.2, z) == Catch::Approx(direct.value).margin(2e-4));
    }
  }
  CHECK_THROWS_AS(tab.price_at(1.0, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("mc_price: reproducibility, degenerate volatility, agreement with the series") {
  const auto law = WaitingTimeLaw::mittag_leffler(0.7, 5.0);
  const OptionSpec opt(1.0, 1.0, 1.0, 0.2);

  const auto a = mc_price(law, 0.04, opt, 20000, RngStream(7, 100), 1);
  const auto b = mc_price(law, 0.04, opt, 20000, RngStream(7, 100), 2);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);

  {  // zero variance: payoff on every path
    const auto e = mc_price(law, 0.0, OptionSpec(1.0, 1.2, 1.0, 0.0), 1000, RngStream(1, 0));
    CHECK(e.mean == Catch::Approx(0.2));
    CHECK(e.std_error < 1e-9);  // identical payoffs up to float rounding
  }

  {  // strike-free martingale
    const auto e = mc_price(law, 0.09, OptionSpec(1e-13, 1.0, 1.0, 0.0), 100000,
                            RngStream(3, 0));
    CHECK(e.mean == Catch::Approx(1.0).margin(3.0 * e.std_error));
  }

  {  // cross-method agreement at a positive age
    const auto series = series_price(law, 0.04, opt, 64, Grid1D(513, 1.0));
    const auto mc = mc_price(law, 0.04, opt, 100000, RngStream(11, 0));
    CHECK(std::abs(series.value - mc.mean) <
          3.0 * mc.std_error + series.tail_mass + 5e-4);
  }
}
