#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "smp/quad.hpp"
#include "smp/specfun.hpp"

using namespace smp;
using namespace smp::specfun;

TEST_CASE("gamma_fn matches reference values") {
  CHECK(gamma_fn(0.5) == Catch::Approx(std::sqrt(M_PI)).epsilon(1e-13));
  CHECK(gamma_fn(1.0) == Catch::Approx(1.0).epsilon(1e-13));
  CHECK(gamma_fn(5.0) == Catch::Approx(24.0).epsilon(1e-13));
  CHECK(gamma_fn(1.5) == Catch::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-13));
  for (double z : {0.1, 0.31, 0.77, 1.23, 3.7, 11.4, 41.0, 120.3})
    CHECK(gamma_fn(z) == Catch::Approx(std::tgamma(z)).epsilon(1e-12));
  CHECK(lgamma_fn(101.0) == Catch::Approx(std::lgamma(101.0)).epsilon(1e-13));
}

TEST_CASE("normal_cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(8.0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(normal_cdf(-8.0) == Catch::Approx(0.0).margin(1e-12));
  // table value
  CHECK(normal_cdf(0.5) == Catch::Approx(0.6914624612740131).margin(1e-12));
  CHECK(normal_cdf(1.0) + normal_cdf(-1.0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("mittag_leffler: trivial and closed-form cases") {
  for (double a : {0.3, 0.5, 0.9, 1.0}) CHECK(mittag_leffler(a, 0.0) == 1.0);
  CHECK(mittag_leffler(1.0, -2.0) == Catch::Approx(std::exp(-2.0)).epsilon(1e-13));
  // E_{1/2}(-1) = e erfc(1) ~ 0.4275836
  CHECK(mittag_leffler(0.5, -1.0) == Catch::Approx(oracle::ml_half_neg(1.0)).epsilon(1e-10));
}

TEST_CASE("mittag_leffler: erfc identity across routes (alpha = 1/2)") {
  // small args go through the Taylor path, larger ones through the spectral
  // integral; the identity pins both to ~1e-10 relative
  for (double y : {0.05, 0.5, 1.0, 3.0, 4.0, 8.0, 20.0, 50.0, 1000.0}) {
    const double want = oracle::ml_half_neg(y);
    CHECK(mittag_leffler(0.5, -y) == Catch::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("mittag_leffler: domain errors") {
  CHECK_THROWS_AS(mittag_leffler(1.5, -1.0), std::domain_error);
  CHECK_THROWS_AS(mittag_leffler(0.0, -1.0), std::domain_error);
  CHECK_THROWS_AS(mittag_leffler(0.5, 0.5), std::domain_error);
}

TEST_CASE("ml_survival: values, monotonicity and complete-monotonicity spot check") {
  CHECK(ml_survival(MlParams(1.0, 2.0), 1.0) == Catch::Approx(std::exp(-2.0)).epsilon(1e-12));
  for (double a : {0.3, 0.6, 1.0}) CHECK(ml_survival(MlParams(a, 1.7), 0.0) == 1.0);
  CHECK(ml_survival(MlParams(0.5, 1.0), 1.0) ==
        Catch::Approx(oracle::ml_half_neg(1.0)).epsilon(1e-10));

  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> ua(0.15, 1.0), ul(0.2, 5.0);
  for (int rep = 0; rep < 25; ++rep) {
    const MlParams p(ua(gen), ul(gen));
    std::vector<double> ts = {0.0};
    std::uniform_real_distribution<double> ut(0.01, 1.0);
    double t = 0.0;
    for (int i = 0; i < 12; ++i) ts.push_back(t += ut(gen));
    double prev = 1.0, prev_dd = -1e300;
    bool first = true;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const double s0 = ml_survival(p, ts[i]);
      const double s1 = ml_survival(p, ts[i + 1]);
      CHECK(s0 > 0.0);
      CHECK(s0 <= 1.0);
      CHECK(s1 <= s0 + 1e-12);
      const double dd = (s1 - s0) / (ts[i + 1] - ts[i]);
      CHECK(dd <= 1e-12);  // first divided difference <= 0
      if (!first) CHECK(dd >= prev_dd - 1e-10);  // second divided difference >= 0
      first = false;
      prev_dd = dd;
      prev = s0;
    }
    (void)prev;
  }
}

TEST_CASE("ml_survival: tail asymptotics, lambda t^alpha = 1e4") {
  for (double a : {0.4, 0.6, 0.8}) {
    const double lambda = 1.3;
    const double t = std::pow(1e4 / lambda, 1.0 / a);
    const double s = ml_survival(MlParams(a, lambda), t);
    const double asym = std::pow(t, -a) / (lambda * gamma_fn(1.0 - a));
    CHECK(s / asym == Catch::Approx(1.0).margin(0.02));
  }
}

TEST_CASE("ml_density: exponential case, FTC metamorphic test, finite differences") {
  CHECK(ml_density(MlParams(1.0, 3.0), 0.5) ==
        Catch::Approx(3.0 * std::exp(-1.5)).epsilon(1e-13));
  CHECK_THROWS_AS(ml_density(MlParams(0.5, 1.0), 0.0), std::domain_error);

  // integral of the density over [eps, X] equals the survival drop
  for (double a : {0.4, 0.7}) {
    const MlParams p(a, 1.4);
    const double eps = 1e-3, X = 2.5;
    const double I = quad::adaptive_simpson([&](double u) { return ml_density(p, u); },
                                            eps, X, 1e-11);
    const double want = ml_survival(p, eps) - ml_survival(p, X);
    CHECK(I == Catch::Approx(want).epsilon(1e-7));
  }

  // central finite difference of the survival
  {
    const MlParams p(0.5, 1.0);
    const double t = 1.0, h = 1e-5;
    const double fd = -(ml_survival(p, t + h) - ml_survival(p, t - h)) / (2.0 * h);
    CHECK(ml_density(p, t) == Catch::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("stable_tail and sonine_dual_tail") {
  const StableKernel half(0.5);
  CHECK(stable_tail(half, 1.0) == Catch::Approx(1.0 / std::sqrt(M_PI)).epsilon(1e-13));
  CHECK(sonine_dual_tail(half, 1.0) == Catch::Approx(1.0 / std::sqrt(M_PI)).epsilon(1e-13));
  for (double a : {0.2, 0.5, 0.77}) {
    const StableKernel k(a);
    CHECK(stable_tail(k, 1.0) == Catch::Approx(1.0 / gamma_fn(1.0 - a)).epsilon(1e-13));
    for (double y : {0.3, 1.0, 7.0})
      CHECK(stable_tail(k, 2.0 * y) / stable_tail(k, y) ==
            Catch::Approx(std::pow(2.0, -a)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(stable_tail(half, 0.0), std::domain_error);
  CHECK_THROWS_AS(sonine_dual_tail(half, -1.0), std::domain_error);
}

namespace {

// Sonine convolution int_0^t tail(s) dual(t-s) ds computed by an oracle
// quadrature: substitutions u = v^{1/(1-a)} (left) and u = 1 - w^{1/a}
// (right) remove both endpoint singularities.
double sonine_convolution(double alpha, double t) {
  const StableKernel k(alpha);
  // u and 1-u are tracked separately so neither underflows near the endpoints
  auto f = [&](double u, double one_minus_u) {
    return t * stable_tail(k, t * u) * sonine_dual_tail(k, t * one_minus_u);
  };
  auto left = [&](double v) {
    const double u = std::pow(v, 1.0 / (1.0 - alpha));
    return f(u, 1.0 - u) * std::pow(v, alpha / (1.0 - alpha)) / (1.0 - alpha);
  };
  auto right = [&](double w) {
    const double om = std::pow(w, 1.0 / alpha);
    return f(1.0 - om, om) * std::pow(w, (1.0 - alpha) / alpha) / alpha;
  };
  // the substituted integrands have finite limits at 0; starting at eps only
  // drops O(eps) mass
  const double eps = 1e-18;
  const double vm = std::pow(0.5, 1.0 - alpha);
  const double wm = std::pow(0.5, alpha);
  return quad::adaptive_simpson(left, eps, vm, 1e-12) +
         quad::adaptive_simpson(right, eps, wm, 1e-12);
}

}  // namespace

TEST_CASE("Sonine identity: convolution of the kernel pair is 1") {
  for (double a : {0.3, 0.5, 0.9})
    for (double t : {0.1, 1.0, 10.0})
      CHECK(sonine_convolution(a, t) == Catch::Approx(1.0).margin(1e-8));
  // extra pairs from the operation examples
  CHECK(sonine_convolution(0.7, 1.0) == Catch::Approx(1.0).margin(1e-8));
  CHECK(sonine_convolution(0.3, 3.7) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("stable_density: alpha = 1/2 closed form on both routes") {
  const StableKernel k(0.5);
  auto levy = [](double x, double t) {
    return t / (2.0 * std::sqrt(M_PI)) * std::pow(x, -1.5) * std::exp(-t * t / (4.0 * x));
  };
  CHECK(stable_density(k, 1.0, 1.0) ==
        Catch::Approx(std::exp(-0.25) / (2.0 * std::sqrt(M_PI))).epsilon(1e-9));
  for (double t : {0.5, 1.0, 2.0})
    for (double x : {0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0})
      CHECK(stable_density(k, x, t) == Catch::Approx(levy(x, t)).epsilon(1e-9));
}

TEST_CASE("stable_density: self-similarity and normalization") {
  const double a = 0.7;
  const StableKernel k(a);
  for (double t : {0.5, 2.0})
    for (double x : {0.4, 1.0, 3.0}) {
      const double scale = std::pow(t, -1.0 / a);
      CHECK(stable_density(k, x, t) ==
            Catch::Approx(scale * stable_density(k, x * scale, 1.0)).epsilon(1e-9));
    }

  // normalization: numeric mass on [0, X] plus the analytic series tail
  for (double a2 : {0.4, 0.7}) {
    const StableKernel k2(a2);
    const double t = 1.0, X = 50.0;
    const double body = quad::adaptive_simpson(
        [&](double x) { return x < 1e-8 ? 0.0 : stable_density(k2, x, t); }, 0.0, X, 1e-9);
    double tail = 0.0;
    for (int j = 1; j <= 30; ++j) {
      const double term = std::exp(j * std::log(t) + lgamma_fn(1.0 + a2 * j) -
                                   lgamma_fn(j + 1.0) - a2 * j * std::log(X)) *
                          std::sin(M_PI * a2 * j) / (M_PI * a2 * j);
      tail += (j % 2 == 0) ? -term : term;
    }
    CHECK(body + tail == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("inverse_stable_density: half-Gaussian closed form, moments, tail") {
  const StableKernel k(0.5);
  auto half_gauss = [](double s, double t) {
    return std::exp(-s * s / (4.0 * t)) / std::sqrt(M_PI * t);
  };
  for (double t : {0.5, 1.0, 2.0})
    for (double s : {0.1, 0.5, 1.0, 2.0})
      CHECK(inverse_stable_density(k, s, t) == Catch::Approx(half_gauss(s, t)).margin(1e-5));

  // limit s -> 0 equals the Levy tail
  CHECK(inverse_stable_density(k, 0.0, 2.0) == Catch::Approx(stable_tail(k, 2.0)).epsilon(1e-12));

  // first moment: E L(t) = t^a / Gamma(1+a), fixed-panel Simpson over a range
  // that captures the superexponential tail
  for (double a : {0.5, 0.7}) {
    const StableKernel k2(a);
    const double t = 1.3;
    const double S = 12.0;
    const int n = 96;  // panels
    const double h = S / n;
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
      const double s0 = i * h, s1 = s0 + h, sm = s0 + 0.5 * h;
      auto g = [&](double s) {
        return s == 0.0 ? 0.0 : s * inverse_stable_density(k2, s, t);
      };
      m += h / 6.0 * (g(s0) + 4.0 * g(sm) + g(s1));
    }
    CHECK(m == Catch::Approx(std::pow(t, a) / gamma_fn(1.0 + a)).margin(1e-5));
  }

  // monotone decay in the tail
  const double l1 = inverse_stable_density(k, 4.0, 1.0);
  const double l2 = inverse_stable_density(k, 6.0, 1.0);
  CHECK(l2 < l1);
  CHECK(l2 >= 0.0);
}
