// Renewal-type integral equations: quadrature of defective first-renewal
// kernels, the one-pass solution of the limit equation at positive age, and a
// residual verifier for the pre-limit equation.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "smp/common.hpp"
#include "smp/markov_pricer.hpp"
#include "smp/quad.hpp"
#include "smp/sampling.hpp"
#include "smp/semimarkov_pricer.hpp"
#include "smp/specfun.hpp"

namespace smp::renewal {

using markov::OptionSpec;
using sampling::WaitingTimeLaw;

// First-renewal density seen from a positive age: either the conditional
// waiting-time density f(s + tau) / S(s) of a concrete law, or the remaining
// lifetime of the limit process, alpha y^alpha / (y + tau)^{alpha+1}.
struct RenewalKernel {
  enum class Kind { MLConditional, StableAged };

  Kind kind = Kind::StableAged;
  WaitingTimeLaw law = WaitingTimeLaw::exponential(1.0);  // MLConditional
  double age = 0.0;                                       // MLConditional
  double alpha = 0.5;                                     // StableAged
  double y = 1.0;                                         // StableAged

  static RenewalKernel ml_conditional(const WaitingTimeLaw& law, double age) {
    if (age < 0.0) throw std::domain_error("RenewalKernel: negative age");
    RenewalKernel k;
    k.kind = Kind::MLConditional;
    k.law = law;
    k.age = age;
    return k;
  }

  static RenewalKernel stable_aged(double alpha, double y) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::domain_error("RenewalKernel: alpha outside (0,1)");
    if (!(y > 0.0)) throw std::domain_error("RenewalKernel: age must be positive");
    RenewalKernel k;
    k.kind = Kind::StableAged;
    k.alpha = alpha;
    k.y = y;
    return k;
  }

  double density(double tau) const {
    if (!(tau > 0.0)) throw std::domain_error("RenewalKernel: tau must be positive");
    if (kind == Kind::StableAged)
      return alpha * std::pow(y, alpha) * std::pow(y + tau, -alpha - 1.0);
    return law.density(age + tau) / law.survival(age);
  }
};

// Quadrature of the kernel density over [0, z].  Smooth kernels use the
// composite trapezoid rule (second order).  The age-zero Mittag-Leffler case
// carries a tau^{alpha-1} singularity, so there the smooth factor
// density * tau^{1-alpha} is interpolated piecewise linearly against exact
// moments of the power weight (measured order min(2, 2 alpha)).
inline double kernel_mass(const RenewalKernel& kernel, double z, const Grid1D& grid) {
  if (!(z > 0.0)) throw std::domain_error("kernel_mass: z must be positive");
  if (std::abs(grid.length() - z) > 1e-9 * std::max(1.0, z))
    throw std::invalid_argument("kernel_mass: grid does not span [0, z]");
  const double h = grid.step;
  KahanSum acc;
  const bool singular = kernel.kind == RenewalKernel::Kind::MLConditional &&
                        kernel.law.kind == WaitingTimeLaw::Kind::MittagLeffler &&
                        kernel.age == 0.0;
  if (singular) {
    const double a = kernel.law.alpha;
    const double lam = kernel.law.lambda;
    std::vector<double> smooth(grid.n_points);
    smooth[0] = lam / specfun::gamma_fn(a);  // lam E_{a,a}(0)
    for (std::size_t i = 1; i < grid.n_points; ++i) {
      const double tau = grid.node(i);
      smooth[i] = kernel.density(tau) * std::pow(tau, 1.0 - a);
    }
    for (std::size_t i = 0; i + 1 < grid.n_points; ++i) {
      const double lo = grid.node(i), hi = grid.node(i + 1);
      const double m0 = (std::pow(hi, a) - std::pow(lo, a)) / a;
      const double m1 = (std::pow(hi, a + 1.0) - std::pow(lo, a + 1.0)) / (a + 1.0);
      const double slope = (smooth[i + 1] - smooth[i]) / h;
      acc.add(smooth[i] * m0 + slope * (m1 - lo * m0));
    }
    return acc.value();
  }
  for (std::size_t i = 0; i + 1 < grid.n_points; ++i) {
    const double a = i == 0 ? 1e-12 * h : grid.node(i);
    acc.add(0.5 * h * (kernel.density(a) + kernel.density(grid.node(i + 1))));
  }
  return acc.value();
}

namespace detail {

// Exact moments of the Pareto kernel a y^a (y+tau)^{-a-1} over [a, b]:
// M0 = int k, M1 = int tau k.
struct ParetoMoments {
  double m0 = 0.0;
  double m1 = 0.0;
};

inline ParetoMoments pareto_moments(double alpha, double y, double a, double b) {
  const double ua = y + a, ub = y + b;
  const double pa = std::pow(y / ua, alpha), pb = std::pow(y / ub, alpha);
  ParetoMoments mm;
  mm.m0 = pa - pb;
  const double ya = std::pow(y, alpha);
  mm.m1 = alpha * ya / (1.0 - alpha) *
              (std::pow(ub, 1.0 - alpha) - std::pow(ua, 1.0 - alpha)) -
          std::pow(y, 1.0 + alpha) * (std::pow(ua, -alpha) - std::pow(ub, -alpha));
  return mm;
}

}  // namespace detail

// Solves the limit renewal equation at age y > 0 in one quadrature pass:
//   q(x, y, z) = (x-K)^+ (y/(y+z))^a + int_0^z base(z - tau) k_y(tau) dtau,
// rewritten with the exact kernel-mass identity as
//   q = (x-K)^+ + int_0^z (base(z - tau) - (x-K)^+) k_y(tau) dtau,
// so the survival factor is handled exactly.  The integrand vanishes only
// Hoelder-fast at tau = z; that cell is refined geometrically with direct
// base-curve evaluations.
inline double solve_limit_renewal(double alpha, const OptionSpec& opt,
                                  const std::function<double(double)>& base_curve,
                                  const Grid1D& grid) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("solve_limit_renewal: alpha outside (0,1)");
  const double y = opt.age;
  if (!(y > 0.0)) throw std::domain_error("solve_limit_renewal: age must be positive");
  const double z = opt.time_to_maturity;
  const double payoff = std::max(opt.spot - opt.strike, 0.0);
  if (z == 0.0) return payoff;
  if (std::abs(grid.length() - z) > 1e-9 * std::max(1.0, z))
    throw std::invalid_argument("solve_limit_renewal: grid does not span [0, z]");

  const std::size_t m = grid.n_points - 1;
  std::vector<double> g(grid.n_points);  // base(z - node_i) - payoff
  for (std::size_t i = 0; i < grid.n_points; ++i)
    g[i] = base_curve(z - grid.node(i)) - payoff;

  KahanSum acc;
  auto add_cell = [&](double a, double b, double ga, double gb) {
    const auto mm = detail::pareto_moments(alpha, y, a, b);
    const double slope = (gb - ga) / (b - a);
    acc.add(ga * mm.m0 + slope * (mm.m1 - a * mm.m0));
  };
  for (std::size_t i = 0; i + 1 < m; ++i)
    add_cell(grid.node(i), grid.node(i + 1), g[i], g[i + 1]);

  // last cell: geometric refinement toward tau = z (a genuine price base
  // curve is only Hoelder-continuous at zero remaining time)
  double a = grid.node(m - 1);
  double ga = g[m - 1];
  const double h = grid.step;
  for (int k = 1; k <= 40 && z - a > 0.0; ++k) {
    const double b = z - h * std::pow(0.5, k);
    if (b <= a) break;
    const double gb = base_curve(z - b) - payoff;
    add_cell(a, b, ga, gb);
    a = b;
    ga = gb;
  }
  add_cell(a, z, ga, base_curve(0.0) - payoff);

  return payoff + acc.value();
}

// Sup-norm residual of a candidate price function in the pre-limit renewal
// equation over the z-grid:
//   C(x,s,z) =? (x-K)^+ S(s+z)/S(s)
//              + int_0^z E[ C(x e^Y, 0, z - tau) ] dF_residual(tau),
// with the martingale log-normal transition average done by 64-point
// Gauss-Hermite and the residual-lifetime measure integrated cell-exactly.
inline double verify_prelimit_renewal(const WaitingTimeLaw& law, double sigma2,
                                      const std::function<double(double, double, double)>& price_fn,
                                      const OptionSpec& opt, const Grid1D& grid) {
  const double x = opt.spot, K = opt.strike, s = opt.age;
  const double z_max = opt.time_to_maturity;
  if (!(z_max > 0.0))
    throw std::domain_error("verify_prelimit_renewal: needs a positive horizon");
  if (std::abs(grid.length() - z_max) > 1e-9 * std::max(1.0, z_max))
    throw std::invalid_argument("verify_prelimit_renewal: grid does not span [0, z]");
  const double payoff = std::max(x - K, 0.0);
  const double s_age = law.survival(s);

  std::vector<double> gh_x, gh_w;
  quad::gauss_hermite(64, gh_x, gh_w);
  const double mean = -0.5 * sigma2;
  const double sd = std::sqrt(sigma2);

  // transition-averaged age-zero price at every node
  std::vector<double> G(grid.n_points);
  for (std::size_t j = 0; j < grid.n_points; ++j) {
    const double zj = grid.node(j);
    double avg = 0.0;
    for (std::size_t i = 0; i < gh_x.size(); ++i) {
      const double spot = x * std::exp(mean + std::sqrt(2.0) * sd * gh_x[i]);
      avg += gh_w[i] * price_fn(spot, 0.0, zj);
    }
    G[j] = avg / std::sqrt(M_PI);
  }

  const auto cells = semimarkov::detail::measure_cells(law, s, grid);
  double sup = 0.0;
  for (std::size_t j = 1; j < grid.n_points; ++j) {
    const double zj = grid.node(j);
    KahanSum acc;
    for (std::size_t i = 0; i < j; ++i)
      acc.add(cells.mass[i] *
              semimarkov::detail::lerp_nodes(G, grid, zj - cells.barycenter[i]));
    const double rhs = payoff * law.survival(s + zj) / s_age + acc.value();
    const double lhs = price_fn(x, s, zj);
    sup = std::max(sup, std::abs(lhs - rhs));
  }
  return sup;
}

}  // namespace smp::renewal
