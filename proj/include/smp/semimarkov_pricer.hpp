// Pricing under a general renewal flow of trades: residual-lifetime law,
// counting probabilities conditional on the age, the series price built on
// them, and the martingale-measure Monte Carlo price.
//
// The counting recursion works with measure cells: on a uniform grid the
// waiting-time mass of each cell is exact (survival differences) and the
// lagged counting function is read at the cell barycenter through linear
// interpolation.  This absorbs the t^{alpha-1} singularity of the
// Mittag-Leffler density without losing an order at the origin.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "smp/common.hpp"
#include "smp/markov_pricer.hpp"
#include "smp/quad.hpp"
#include "smp/rng.hpp"
#include "smp/sampling.hpp"

namespace smp::semimarkov {

using markov::OptionSpec;
using sampling::WaitingTimeLaw;

// F(w | s) = (F(s+w) - F(s)) / (1 - F(s)); age-independent for the
// exponential law.
inline double residual_lifetime_cdf(const WaitingTimeLaw& law, double s, double w) {
  if (s < 0.0) throw std::domain_error("residual_lifetime_cdf: negative age");
  if (w < 0.0) throw std::domain_error("residual_lifetime_cdf: negative horizon");
  const double ss = law.survival(s);
  if (!(ss > 0.0))
    throw std::domain_error("residual_lifetime_cdf: survival underflows at this age");
  return 1.0 - law.survival(s + w) / ss;
}

struct CountingDistribution {
  std::vector<double> probs;  // p_n = P(N(T) - N(t) = n | age), n = 0..n_max
  double tail_mass = 0.0;
};

namespace detail {

// One measure cell of a waiting-time law shifted by `age`: exact mass
// (survival difference) and exact barycenter (integration by parts, with the
// survival integral by Gauss-Legendre).
struct MeasureCells {
  std::vector<double> mass;        // dF over [node_i, node_{i+1}]
  std::vector<double> barycenter;  // conditional mean of the cell
};

inline MeasureCells measure_cells(const WaitingTimeLaw& law, double age,
                                  const Grid1D& grid) {
  const double s_age = law.survival(age);
  if (!(s_age > 0.0)) throw std::domain_error("measure_cells: survival underflows at age");
  const std::size_t m = grid.n_points - 1;
  MeasureCells cells;
  cells.mass.resize(m);
  cells.barycenter.resize(m);
  std::vector<double> gl_x, gl_w;
  std::vector<double> surv(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i)
    surv[i] = law.survival(age + grid.node(i)) / s_age;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = grid.node(i), b = grid.node(i + 1);
    const double mass = surv[i] - surv[i + 1];
    cells.mass[i] = mass;
    if (mass <= 0.0) {
      cells.barycenter[i] = 0.5 * (a + b);
      continue;
    }
    // int_a^b u dF = a S(a) - b S(b) + int_a^b S(u) du
    double int_s = 0.0;
    if (i == 0 && age == 0.0 && law.kind == WaitingTimeLaw::Kind::MittagLeffler) {
      // the survival is only Hoelder at 0; substitute u = b v^{1/alpha} so the
      // integrand is smooth in v
      quad::gauss_legendre(8, 0.0, 1.0, gl_x, gl_w);
      for (std::size_t g = 0; g < gl_x.size(); ++g) {
        const double v = gl_x[g];
        const double u = b * std::pow(v, 1.0 / law.alpha);
        int_s += gl_w[g] * law.survival(u) / s_age * u / (law.alpha * v);
      }
    } else {
      quad::gauss_legendre(8, a, b, gl_x, gl_w);
      for (std::size_t g = 0; g < gl_x.size(); ++g)
        int_s += gl_w[g] * law.survival(age + gl_x[g]) / s_age;
    }
    const double first_moment = a * surv[i] - b * surv[i + 1] + int_s;
    cells.barycenter[i] = std::min(std::max(first_moment / mass, a), b);
  }
  return cells;
}

// linear interpolation of a node-sampled function at an off-grid point
inline double lerp_nodes(const std::vector<double>& f, const Grid1D& grid, double t) {
  if (t <= 0.0) return f.front();
  const double x = t / grid.step;
  const auto i = static_cast<std::size_t>(x);
  if (i + 1 >= f.size()) return f.back();
  const double frac = x - static_cast<double>(i);
  return f[i] * (1.0 - frac) + f[i + 1] * frac;
}

}  // namespace detail

// Ordinary (age-zero) renewal counting probabilities q_n on a uniform grid:
// q_0(t) = survival(t), q_n(t) = int_0^t q_{n-1}(t - u) dF(u).
class CountingTable {
 public:
  CountingTable(const WaitingTimeLaw& law, std::size_t n_max, const Grid1D& grid)
      : grid_(grid), q_(n_max + 1, std::vector<double>(grid.n_points, 0.0)) {
    const auto cells = detail::measure_cells(law, 0.0, grid);
    for (std::size_t j = 0; j < grid.n_points; ++j) q_[0][j] = law.survival(grid.node(j));
    // interpolation weights of the barycenters between their cell's endpoints
    const std::size_t m = grid.n_points - 1;
    std::vector<double> theta(m);
    for (std::size_t i = 0; i < m; ++i)
      theta[i] = (cells.barycenter[i] - grid.node(i)) / grid.step;
    for (std::size_t n = 1; n <= n_max; ++n) {
      const auto& prev = q_[n - 1];
      auto& cur = q_[n];
      cur[0] = 0.0;
      for (std::size_t j = 1; j < grid.n_points; ++j) {
        KahanSum acc;
        for (std::size_t i = 0; i < j; ++i) {
          // lagged value at node_j - barycenter_i, between nodes j-i-1 and j-i
          const double v =
              prev[j - i] * (1.0 - theta[i]) + prev[j - i - 1] * theta[i];
          acc.add(cells.mass[i] * v);
        }
        cur[j] = acc.value();
      }
    }
  }

  const Grid1D& grid() const { return grid_; }
  std::size_t n_max() const { return q_.size() - 1; }
  double prob(std::size_t n, std::size_t node) const { return q_[n][node]; }
  const std::vector<double>& curve(std::size_t n) const { return q_[n]; }

 private:
  Grid1D grid_;
  std::vector<std::vector<double>> q_;
};

// P(N(T) - N(t) = n | age = s) for n = 0..n_max, z = T - t resolved by the
// grid.  p_0 is the exact survival ratio; for n >= 1 the residual-lifetime
// measure of the first renewal is convolved with the ordinary counting
// probabilities restarted at age zero.
inline CountingDistribution counting_probabilities(const WaitingTimeLaw& law, double z,
                                                   double s, std::size_t n_max,
                                                   const Grid1D& grid) {
  CountingDistribution dist;
  if (z == 0.0) {  // nothing can arrive on an empty horizon
    dist.probs.assign(n_max + 1, 0.0);
    dist.probs[0] = 1.0;
    return dist;
  }
  if (std::abs(grid.length() - z) > 1e-9 * std::max(1.0, z))
    throw std::invalid_argument("counting_probabilities: grid does not span [0, z]");
  dist.probs.assign(n_max + 1, 0.0);
  const std::size_t last = grid.n_points - 1;
  if (s == 0.0) {
    const CountingTable full(law, n_max, grid);
    for (std::size_t n = 0; n <= n_max; ++n) dist.probs[n] = full.prob(n, last);
  } else {
    const CountingTable table(law, n_max > 0 ? n_max - 1 : 0, grid);
    const double s_age = law.survival(s);
    if (!(s_age > 0.0))
      throw std::domain_error("counting_probabilities: survival underflows at age");
    dist.probs[0] = law.survival(s + z) / s_age;
    const auto cells = detail::measure_cells(law, s, grid);
    for (std::size_t n = 1; n <= n_max; ++n) {
      KahanSum acc;
      for (std::size_t i = 0; i < last; ++i)
        acc.add(cells.mass[i] *
                detail::lerp_nodes(table.curve(n - 1), grid, z - cells.barycenter[i]));
      dist.probs[n] = acc.value();
    }
  }
  double total = 0.0;
  for (double p : dist.probs) total += p;
  dist.tail_mass = std::max(0.0, 1.0 - total);
  return dist;
}

struct SeriesPrice {
  double value = 0.0;      // truncated series
  double tail_mass = 0.0;  // untruncated remainder mass; value error in [0, tail_mass * spot]
};

// Age-aware series price: payoff * p_0 + sum_n p_n C_n.
inline SeriesPrice series_price(const WaitingTimeLaw& law, double sigma2,
                                const OptionSpec& opt, std::size_t n_max,
                                const Grid1D& grid) {
  SeriesPrice out;
  const double payoff = std::max(opt.spot - opt.strike, 0.0);
  if (opt.time_to_maturity == 0.0) {
    out.value = payoff;
    return out;
  }
  const auto dist = counting_probabilities(law, opt.time_to_maturity, opt.age, n_max, grid);
  KahanSum acc;
  acc.add(dist.probs[0] * payoff);
  for (std::size_t n = 1; n < dist.probs.size(); ++n)
    acc.add(dist.probs[n] * markov::merton_term(opt.spot, opt.strike, sigma2, n));
  out.value = acc.value();
  out.tail_mass = dist.tail_mass;
  return out;
}

// Series prices over a whole z-grid from a single counting table: price(x, 0, z_j)
// and price(x, age, z_j) for arbitrary spots at O(n_max) per query.  Used by
// the renewal-equation verifier and the CLI, where the per-call recursion
// would be quadratically wasteful.
class SeriesPriceTable {
 public:
  SeriesPriceTable(const WaitingTimeLaw& law, double sigma2, double strike,
                   std::size_t n_max, const Grid1D& grid, double age)
      : sigma2_(sigma2), strike_(strike), age_(age), grid_(grid),
        table_(law, n_max, grid) {
    if (age > 0.0) {
      const auto cells = detail::measure_cells(law, age, grid);
      const double s_age = law.survival(age);
      aged_.assign(n_max + 1, std::vector<double>(grid.n_points, 0.0));
      for (std::size_t j = 0; j < grid.n_points; ++j)
        aged_[0][j] = law.survival(age + grid.node(j)) / s_age;
      for (std::size_t n = 1; n <= n_max; ++n)
        for (std::size_t j = 1; j < grid.n_points; ++j) {
          KahanSum acc;
          for (std::size_t i = 0; i < j; ++i)
            acc.add(cells.mass[i] * detail::lerp_nodes(table_.curve(n - 1), grid_,
                                                       grid.node(j) - cells.barycenter[i]));
          aged_[n][j] = acc.value();
        }
    }
  }

  const Grid1D& grid() const { return grid_; }

  // price at a grid horizon z (linearly interpolated between nodes) for the
  // construction age (query_age == age) or age zero
  double price_at(double spot, double query_age, double z) const {
    if (z <= 0.0) return std::max(spot - strike_, 0.0);
    const bool zero_age = query_age == 0.0;
    if (!zero_age && query_age != age_)
      throw std::invalid_argument("SeriesPriceTable: age not tabulated");
    const std::size_t n_max = table_.n_max();
    KahanSum acc;
    for (std::size_t n = 0; n <= n_max; ++n) {
      const double pn =
          zero_age ? detail::lerp_nodes(table_.curve(n), grid_, z)
                   : detail::lerp_nodes(aged_[n], grid_, z);
      if (pn != 0.0)
        acc.add(pn * markov::merton_term(spot, strike_, sigma2_, n));
    }
    return acc.value();
  }

 private:
  double sigma2_;
  double strike_;
  double age_;
  Grid1D grid_;
  CountingTable table_;
  std::vector<std::vector<double>> aged_;
};

// Monte Carlo price under the martingale drift, age-aware, parallel across
// deterministic streams.
inline McEstimate mc_price(const WaitingTimeLaw& law, double sigma2, const OptionSpec& opt,
                           std::size_t n_paths, const RngStream& rng,
                           unsigned n_threads = 0) {
  if (n_paths < 2) throw std::invalid_argument("mc_price: need at least 2 paths");
  const double payoff0 = std::max(opt.spot - opt.strike, 0.0);
  if (opt.time_to_maturity == 0.0) {
    McEstimate e;
    e.mean = payoff0;
    e.std_error = 0.0;
    e.n = n_paths;
    return e;
  }
  const double x = opt.spot, K = opt.strike, z = opt.time_to_maturity, age = opt.age;
  return parallel_mc(
      rng.seed(), rng.stream_id(), n_paths,
      [&, x, K, z, age, sigma2](RngStream& g) {
        const auto path = sampling::simulate_semimarkov_path(x, sigma2, law, z, age,
                                                             /*martingale=*/true, g);
        return std::max(path.terminal_price - K, 0.0);
      },
      n_threads);
}

}  // namespace smp::semimarkov
