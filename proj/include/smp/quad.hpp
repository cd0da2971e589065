// Deterministic quadrature building blocks: adaptive Simpson, Gauss rules,
// and exact cell moments for power-law (weakly singular) kernels.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "smp/common.hpp"

namespace smp::quad {

namespace detail {

inline double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_step(F&& f, double a, double fa, double b, double fb, double m, double fm,
                     double whole, double tol, double floor_abs, int depth,
                     std::size_t& evals, std::size_t budget) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  evals += 2;
  if (evals > budget) throw budget_error("adaptive quadrature: evaluation budget exceeded");
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  // floor_abs stops the recursion once the requested tolerance falls below
  // the rounding noise of the running estimate
  if (depth <= 0 || std::abs(delta) <= 15.0 * std::max(tol, floor_abs))
    return left + right + delta / 15.0;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, floor_abs, depth - 1,
                       evals, budget) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, floor_abs, depth - 1,
                       evals, budget);
}

}  // namespace detail

// Adaptive Simpson on [a, b] with absolute tolerance `tol`.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 36,
                        std::size_t budget = 2'000'000) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  std::size_t evals = 3;
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = detail::simpson(a, fa, b, fb, fm);
  const double floor_abs = 1e-16 * std::abs(whole) + 1e-300;
  return detail::adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, floor_abs, max_depth,
                               evals, budget);
}

// Gauss–Hermite nodes/weights for the weight exp(-x^2) (physicists' convention).
// Newton iteration on the recurrence; standard construction.
inline void gauss_hermite(std::size_t n, std::vector<double>& nodes,
                          std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const std::size_t m = (n + 1) / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * nodes[1];
    else
      z = 2.0 * z - nodes[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    nodes[i] = z;
    nodes[n - 1 - i] = -z;
    weights[i] = 2.0 / (pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

// Gauss–Legendre nodes/weights on [a, b].
inline void gauss_legendre(std::size_t n, double a, double b, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const std::size_t m = (n + 1) / 2;
  const double xm = 0.5 * (b + a);
  const double xl = 0.5 * (b - a);
  for (std::size_t i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    nodes[i] = xm - xl * z;
    nodes[n - 1 - i] = xm + xl * z;
    weights[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

// Exact moments of the power kernel (t - s)^{gamma-1} over a cell [a, b] with
// 0 <= a < b <= t and gamma in (0, 1]:
//   M0 = int_a^b (t-s)^{gamma-1} ds,  M1 = int_a^b s (t-s)^{gamma-1} ds.
// Valid including the singular endpoint b == t.
struct PowerCellMoments {
  double m0 = 0.0;
  double m1 = 0.0;
};

inline PowerCellMoments power_kernel_moments(double gamma, double t, double a, double b) {
  const double ua = t - a;  // > 0
  const double ub = t - b;  // >= 0
  const double pa = std::pow(ua, gamma);
  const double pb = ub > 0.0 ? std::pow(ub, gamma) : 0.0;
  PowerCellMoments mm;
  mm.m0 = (pa - pb) / gamma;
  const double qa = pa * ua;
  const double qb = pb * ub;
  mm.m1 = t * mm.m0 - (qa - qb) / (gamma + 1.0);
  return mm;
}

// Product integration of the weakly singular convolution
//   (f * k)(t_j) = int_0^{t_j} f(s) k(t_j - s) ds,  k(w) = w^{gamma-1} / Gamma(gamma),
// with f given at uniform nodes f_i = f(i h) and interpolated piecewise linearly.
// Returns the convolution at every node (index 0 gives 0).
//
// When f itself has a power-law start, f(s) ~ f0 + c s^beta with beta in
// (0,1), linear interpolation on the first cell leaves an O(1) artifact near
// the origin; passing `first_cell_beta` switches that cell to the model
// f0 + (f1 - f0)(s/h)^beta integrated by a Beta closed form (j = 1) or a
// transformed Gauss rule (j >= 2).
inline std::vector<double> convolve_power_kernel(std::span<const double> f, double h,
                                                 double gamma, double gamma_fn_gamma,
                                                 double first_cell_beta = 1.0) {
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  const double inv_gamma = 1.0 / gamma_fn_gamma;
  const bool power_start = first_cell_beta != 1.0;
  const double beta = first_cell_beta;

  std::vector<double> gl_x, gl_w;
  if (power_start) gauss_legendre(16, 0.0, 1.0, gl_x, gl_w);

  for (std::size_t j = 1; j < n; ++j) {
    const double t = h * static_cast<double>(j);
    KahanSum acc;
    std::size_t start = 0;
    if (power_start) {
      // int_0^h (f0 + (f1-f0)(s/h)^beta) (t-s)^{gamma-1} ds
      const auto mm = power_kernel_moments(gamma, t, 0.0, h);
      double a_pow;  // int_0^h (s/h)^beta (t-s)^{gamma-1} ds
      if (j == 1) {
        a_pow = std::pow(h, gamma) *
                std::exp(std::lgamma(beta + 1.0) + std::lgamma(gamma) -
                         std::lgamma(beta + 1.0 + gamma));
      } else {
        double s_acc = 0.0;  // substitute s = h sigma^{1/(beta+1)}
        for (std::size_t g = 0; g < gl_x.size(); ++g) {
          const double s = h * std::pow(gl_x[g], 1.0 / (beta + 1.0));
          s_acc += gl_w[g] * std::pow(t - s, gamma - 1.0);
        }
        a_pow = h / (beta + 1.0) * s_acc;
      }
      acc.add(f[0] * mm.m0 + (f[1] - f[0]) * a_pow);
      start = 1;
    }
    for (std::size_t i = start; i < j; ++i) {
      const double a = h * static_cast<double>(i);
      const double b = a + h;
      const auto mm = power_kernel_moments(gamma, t, a, b);
      // f(s) = f_i + (f_{i+1}-f_i) (s-a)/h on the cell
      const double slope = (f[i + 1] - f[i]) / h;
      acc.add(f[i] * mm.m0 + slope * (mm.m1 - a * mm.m0));
    }
    out[j] = acc.value() * inv_gamma;
  }
  return out;
}

}  // namespace smp::quad
