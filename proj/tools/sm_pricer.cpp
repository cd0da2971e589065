// sm_pricer: command-line front end for the semi-Markov option pricing engine.
//
// Subcommands
//   price     one or more pricing methods on a single option
//   converge  scaling-stage study: pre-limit prices against the limit price
//   residual  fractional pricing-equation residuals at two refinement levels
//   sample    law sampling with KS diagnostics, histogram and path dumps
//
// Exit codes: 0 success, 2 configuration/usage error, 3 numerical budget
// exceeded.  stderr carries diagnostics only; stdout and --out files carry
// data only.  Every run is deterministic given (config, seed); Monte Carlo
// results do not depend on the worker-thread count (SM_PRICER_THREADS).

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "smp/common.hpp"
#include "smp/fractional_bs.hpp"
#include "smp/markov_pricer.hpp"
#include "smp/renewal_solver.hpp"
#include "smp/rng.hpp"
#include "smp/sampling.hpp"
#include "smp/semimarkov_pricer.hpp"
#include "smp/specfun.hpp"

using json = nlohmann::ordered_json;
using smp::Grid1D;
using smp::RngStream;
using smp::markov::OptionSpec;
using smp::sampling::WaitingTimeLaw;

namespace {

constexpr const char* kSchemaVersion = "1";

struct OutputSink {
  std::string path;  // empty: stdout

  void write(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      std::cout.flush();
      return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::invalid_argument("cannot open output file: " + path);
    os << text;
  }
};

std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// price
// ---------------------------------------------------------------------------

struct PriceArgs {
  std::vector<std::string> methods;
  double strike = 1.0, spot = 1.0, maturity = 1.0, age = 0.0;
  double lambda = 1.0, sigma2 = 0.1, alpha = 0.5;
  std::string law = "mittag-leffler";
  std::size_t n_max = 64;
  std::size_t grid_points = 513;
  std::size_t paths = 100000;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  std::string format = "json";
  OutputSink sink;
};

WaitingTimeLaw make_law(const PriceArgs& a) {
  if (a.law == "exponential") return WaitingTimeLaw::exponential(a.lambda);
  return WaitingTimeLaw::mittag_leffler(a.alpha, a.lambda);
}

json price_one(const std::string& method, const PriceArgs& a) {
  const OptionSpec opt(a.strike, a.spot, a.maturity, a.age);
  json rec;
  rec["schema_version"] = kSchemaVersion;
  rec["method"] = method;
  rec["strike"] = a.strike;
  rec["spot"] = a.spot;
  rec["maturity"] = a.maturity;
  rec["age"] = a.age;

  if (method == "markov-series") {
    rec["lambda"] = a.lambda;
    rec["sigma2"] = a.sigma2;
    const double v =
        smp::markov::markov_series_price(smp::markov::MarkovModel(a.lambda, a.sigma2), opt, a.tol);
    rec["value"] = v;
    rec["truncation_bracket"] = {v, v + a.tol};
  } else if (method == "sm-series") {
    rec["law"] = a.law;
    rec["lambda"] = a.lambda;
    if (a.law != "exponential") rec["alpha"] = a.alpha;
    rec["sigma2"] = a.sigma2;
    const auto sp = smp::semimarkov::series_price(make_law(a), a.sigma2, opt, a.n_max,
                                                  Grid1D(a.grid_points, std::max(a.maturity, 1e-12)));
    rec["value"] = sp.value;
    rec["truncation_bracket"] = {sp.value, sp.value + sp.tail_mass * a.spot};
    rec["tail_mass"] = sp.tail_mass;
  } else if (method == "sm-mc") {
    rec["law"] = a.law;
    rec["lambda"] = a.lambda;
    if (a.law != "exponential") rec["alpha"] = a.alpha;
    rec["sigma2"] = a.sigma2;
    const auto e =
        smp::semimarkov::mc_price(make_law(a), a.sigma2, opt, a.paths, RngStream(a.seed, 0));
    rec["value"] = e.mean;
    rec["std_error"] = e.std_error;
    rec["n_paths"] = e.n;
  } else if (method == "limit-subordination") {
    if (a.age != 0.0)
      throw std::invalid_argument("limit-subordination prices the age-zero limit; "
                                  "use limit-renewal for age > 0");
    rec["alpha"] = a.alpha;
    rec["value"] = smp::fracbs::subordinated_price_g0(a.alpha, a.spot, a.strike, a.maturity);
  } else if (method == "limit-renewal") {
    if (!(a.age > 0.0))
      throw std::invalid_argument("limit-renewal requires a positive age");
    rec["alpha"] = a.alpha;
    rec["value"] = smp::fracbs::aged_price_gy(a.alpha, opt, a.grid_points);
    // flag horizons shorter than the age: the limit equation is stated for
    // y < z and evaluated beyond as extrapolation
    if (a.age >= a.maturity) rec["age_beyond_horizon"] = true;
  } else if (method == "limit-mc") {
    rec["alpha"] = a.alpha;
    const auto draw = [&](RngStream& g) {
      return a.age > 0.0
                 ? smp::sampling::simulate_aged_limit_payoff(a.alpha, a.spot, a.age,
                                                             a.maturity, a.strike, g)
                 : smp::sampling::simulate_subordinated_gbm_payoff(a.alpha, a.spot,
                                                                   a.maturity, a.strike, g);
    };
    const auto e = smp::parallel_mc(a.seed, 0, a.paths, draw);
    rec["value"] = e.mean;
    rec["std_error"] = e.std_error;
    rec["n_paths"] = e.n;
  } else {
    throw std::invalid_argument("unknown method: " + method);
  }
  return rec;
}

int run_price(const PriceArgs& a) {
  std::vector<json> recs;
  recs.reserve(a.methods.size());
  for (const auto& m : a.methods) recs.push_back(price_one(m, a));
  std::ostringstream out;
  if (a.format == "json") {
    if (recs.size() == 1) {
      out << recs[0].dump(2) << '\n';
    } else {
      json arr = json::array();
      for (auto& r : recs) arr.push_back(std::move(r));
      out << arr.dump(2) << '\n';
    }
  } else {
    out << "method,value,std_error,n_paths,bracket_lo,bracket_hi\n";
    for (const auto& r : recs) {
      out << r["method"].get<std::string>() << ',' << fmt17(r["value"].get<double>()) << ',';
      if (r.contains("std_error")) out << fmt17(r["std_error"].get<double>());
      out << ',';
      if (r.contains("n_paths")) out << r["n_paths"].get<std::size_t>();
      out << ',';
      if (r.contains("truncation_bracket")) {
        out << fmt17(r["truncation_bracket"][0].get<double>()) << ','
            << fmt17(r["truncation_bracket"][1].get<double>());
      } else {
        out << ',';
      }
      out << '\n';
    }
  }
  a.sink.write(out.str());
  return 0;
}

// ---------------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------------

struct ConvergeArgs {
  std::string variant = "ml";  // "markov" or "ml"
  std::vector<double> stages;  // lambda_m values, increasing
  double strike = 1.0, spot = 1.0, maturity = 1.0, age = 0.5, alpha = 0.5;
  std::size_t paths = 200000;
  std::uint64_t seed = 1;
  std::string target_method = "limit-renewal";
  OutputSink sink;
};

int run_converge(const ConvergeArgs& a) {
  for (std::size_t i = 1; i < a.stages.size(); ++i)
    if (a.stages[i] <= a.stages[i - 1])
      throw std::invalid_argument("stages must be strictly increasing");

  const OptionSpec opt(a.strike, a.spot, a.maturity, a.age);
  double target = 0.0;
  if (a.variant == "markov") {
    target = smp::markov::bs_call(a.spot, a.strike, a.maturity);
  } else if (a.target_method == "limit-subordination" || a.age == 0.0) {
    target = smp::fracbs::subordinated_price_g0(a.alpha, a.spot, a.strike, a.maturity);
  } else {
    target = smp::fracbs::aged_price_gy(a.alpha, opt);
  }

  std::ostringstream out;
  out << "m,lambda_m,sigma2_m,C_m,q_target,abs_error,noise_tol\n";
  for (std::size_t m = 0; m < a.stages.size(); ++m) {
    const double lam = a.stages[m];
    const double sigma2 = 1.0 / lam;
    double cm = 0.0, noise = 0.0;
    if (a.variant == "markov") {
      const double tol = 1e-10;
      cm = smp::markov::markov_series_price(smp::markov::MarkovModel(lam, sigma2), opt, tol);
      noise = 2.0 * tol;
    } else {
      const auto law = WaitingTimeLaw::mittag_leffler(a.alpha, lam);
      const auto e = smp::semimarkov::mc_price(law, sigma2, opt, a.paths,
                                               RngStream(a.seed, 1000 * (m + 1)));
      cm = e.mean;
      noise = 3.0 * e.std_error;
    }
    out << m << ',' << fmt17(lam) << ',' << fmt17(sigma2) << ',' << fmt17(cm) << ','
        << fmt17(target) << ',' << fmt17(std::abs(cm - target)) << ',' << fmt17(noise)
        << '\n';
  }
  a.sink.write(out.str());
  return 0;
}

// ---------------------------------------------------------------------------
// residual
// ---------------------------------------------------------------------------

struct ResidualArgs {
  std::string which = "g0";  // "g0" or "gy"
  double alpha = 0.6, age = 1.0, strike = 1.0, maturity = 1.0;
  std::size_t nx = 33, nt = 33;
  bool parallel = false;
  OutputSink sink;
};

int run_residual(const ResidualArgs& a) {
  const unsigned threads = a.parallel ? smp::mc_worker_count() : 1;
  auto sup_at = [&](std::size_t nx, std::size_t nt) {
    const auto g0 = smp::fracbs::make_g0_field(a.alpha, a.strike, a.maturity, nx, nt, threads);
    if (a.which == "g0") return smp::fracbs::pde_residual_g0(a.alpha, g0).sup_interior;
    const auto gy =
        smp::fracbs::make_gy_field(a.alpha, a.age, a.strike, a.maturity, nx, nt, threads);
    return smp::fracbs::pde_residual_gy(a.alpha, a.age, g0, gy).sup_interior;
  };
  const double coarse = sup_at(a.nx, a.nt);
  const double fine = sup_at(2 * a.nx - 1, 2 * a.nt - 1);
  json rec;
  rec["schema_version"] = kSchemaVersion;
  rec["which"] = a.which;
  rec["alpha"] = a.alpha;
  if (a.which == "gy") rec["age"] = a.age;
  rec["sup_norm_coarse"] = coarse;
  rec["sup_norm_fine"] = fine;
  rec["measured_order"] = std::log2(coarse / fine);
  a.sink.write(rec.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string law = "mittag-leffler";  // exponential | mittag-leffler | stable | inverse-stable
  double alpha = 0.5, lambda = 1.0, t = 1.0;
  std::size_t n = 100000;
  std::uint64_t seed = 1;
  std::string hist_path;  // histogram CSV (optional)
  std::string path_dir;   // semi-Markov path dumps (optional)
  std::size_t n_paths = 0;
  double sigma2 = 0.04, horizon = 1.0;
  std::string format = "json";
  OutputSink sink;
};

int run_sample(const SampleArgs& a) {
  RngStream rng(a.seed, 0);
  std::vector<double> draws(a.n);
  std::function<double(double)> cdf;

  if (a.law == "exponential") {
    const auto law = WaitingTimeLaw::exponential(a.lambda);
    for (auto& d : draws) d = smp::sampling::sample_waiting(law, rng);
    cdf = [law](double x) { return law.cdf(x); };
  } else if (a.law == "mittag-leffler") {
    const auto law = WaitingTimeLaw::mittag_leffler(a.alpha, a.lambda);
    for (auto& d : draws) d = smp::sampling::sample_waiting(law, rng);
    cdf = [law](double x) { return law.cdf(x); };
  } else if (a.law == "stable") {
    for (auto& d : draws) d = smp::sampling::sample_stable(a.alpha, a.t, rng);
    if (a.alpha == 0.5) {
      const double t = a.t;
      cdf = [t](double x) { return x <= 0.0 ? 0.0 : std::erfc(t / (2.0 * std::sqrt(x))); };
    }
  } else if (a.law == "inverse-stable") {
    for (auto& d : draws) d = smp::sampling::sample_inverse_stable(a.alpha, a.t, rng);
    const auto& tab = smp::fracbs::detail::inverse_stable_table(a.alpha);
    const double scale = std::pow(a.t, -a.alpha);
    // CDF from the cumulated density table
    const double h = tab.step();
    std::vector<double> cum(smp::fracbs::InverseStableTable::kNodes + 1, 0.0);
    for (std::size_t i = 1; i < cum.size(); ++i)
      cum[i] = cum[i - 1] + 0.5 * h * (tab.values()[i - 1] + tab.values()[i]);
    cdf = [scale, h, cum](double x) {
      const double u = x * scale / h;
      const auto i = static_cast<std::size_t>(u);
      if (i + 1 >= cum.size()) return 1.0;
      const double f = u - static_cast<double>(i);
      return cum[i] * (1.0 - f) + cum[i + 1] * f;
    };
  } else {
    throw std::invalid_argument("unknown law: " + a.law);
  }

  json rec;
  rec["schema_version"] = kSchemaVersion;
  rec["law"] = a.law;
  rec["n"] = a.n;
  rec["seed"] = a.seed;
  if (cdf) {
    const double ks = [&] {
      auto sorted = draws;
      std::sort(sorted.begin(), sorted.end());
      double d = 0.0;
      const double n = static_cast<double>(sorted.size());
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double F = cdf(sorted[i]);
        d = std::max(d, std::abs(F - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F));
      }
      return d;
    }();
    rec["ks_distance"] = ks;
  }

  if (!a.hist_path.empty()) {
    auto sorted = draws;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    // clip the top 0.1% so heavy tails do not flatten the histogram
    const double hi = sorted[static_cast<std::size_t>(0.999 * (sorted.size() - 1))];
    const int bins = 64;
    std::vector<std::size_t> counts(bins, 0);
    for (double d : sorted) {
      if (d > hi) continue;
      const int b = std::min(bins - 1, static_cast<int>((d - lo) / (hi - lo) * bins));
      counts[std::max(0, b)] += 1;
    }
    std::ostringstream hs;
    hs << "bin_lo,bin_hi,count\n" << std::setprecision(17);
    for (int b = 0; b < bins; ++b)
      hs << lo + (hi - lo) * b / bins << ',' << lo + (hi - lo) * (b + 1) / bins << ','
         << counts[b] << '\n';
    OutputSink{a.hist_path}.write(hs.str());
    rec["histogram_file"] = a.hist_path;
  }

  if (!a.path_dir.empty() && a.n_paths > 0) {
    std::filesystem::create_directories(a.path_dir);
    const auto law = a.law == "exponential" ? WaitingTimeLaw::exponential(a.lambda)
                                            : WaitingTimeLaw::mittag_leffler(a.alpha, a.lambda);
    for (std::size_t p = 0; p < a.n_paths; ++p) {
      RngStream pg(a.seed, p);
      const auto path = smp::sampling::simulate_semimarkov_path(
          1.0, a.sigma2, law, a.horizon, 0.0, true, pg);
      smp::sampling::write_path_csv(path, a.path_dir, p);
    }
    rec["path_dir"] = a.path_dir;
    rec["n_path_files"] = a.n_paths;
  }

  std::ostringstream out;
  if (a.format == "json") {
    out << rec.dump(2) << '\n';
  } else {
    out << "law,n,ks_distance\n"
        << a.law << ',' << a.n << ','
        << (rec.contains("ks_distance") ? fmt17(rec["ks_distance"].get<double>()) : "") << '\n';
  }
  a.sink.write(out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-Markov option pricing engine"};
  app.require_subcommand(1);
  app.set_config("--config", "", "configuration file (INI; flags override)");
  app.fallthrough();  // lets --config appear after the subcommand name

  PriceArgs pa;
  auto* price = app.add_subcommand("price", "price one option with one or more methods");
  price->add_option("--method", pa.methods, "pricing method(s)")
      ->required()
      ->check(CLI::IsMember({"markov-series", "sm-series", "sm-mc", "limit-subordination",
                             "limit-renewal", "limit-mc"}));
  price->add_option("--strike", pa.strike)->check(CLI::PositiveNumber);
  price->add_option("--spot", pa.spot)->check(CLI::PositiveNumber);
  price->add_option("--maturity", pa.maturity)->check(CLI::NonNegativeNumber);
  price->add_option("--age", pa.age)->check(CLI::NonNegativeNumber);
  price->add_option("--lambda", pa.lambda)->check(CLI::PositiveNumber);
  price->add_option("--sigma2", pa.sigma2)->check(CLI::NonNegativeNumber);
  price->add_option("--alpha", pa.alpha)->check(CLI::Range(1e-6, 1.0));
  price->add_option("--law", pa.law)->check(CLI::IsMember({"exponential", "mittag-leffler"}));
  price->add_option("--n-max", pa.n_max)->check(CLI::PositiveNumber);
  price->add_option("--grid-points", pa.grid_points)->check(CLI::Range(std::size_t{9}, std::size_t{1 << 20}));
  price->add_option("--paths", pa.paths)->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
  price->add_option("--tol", pa.tol)->check(CLI::PositiveNumber);
  price->add_option("--seed", pa.seed);
  price->add_option("--out", pa.sink.path);
  price->add_option("--format", pa.format)->check(CLI::IsMember({"csv", "json"}));

  ConvergeArgs ca;
  auto* conv = app.add_subcommand("converge", "scaling-stage convergence study");
  conv->add_option("--variant", ca.variant)->check(CLI::IsMember({"markov", "ml"}));
  conv->add_option("--stages", ca.stages, "lambda_m values, increasing")->required();
  conv->add_option("--strike", ca.strike)->check(CLI::PositiveNumber);
  conv->add_option("--spot", ca.spot)->check(CLI::PositiveNumber);
  conv->add_option("--maturity", ca.maturity)->check(CLI::PositiveNumber);
  conv->add_option("--age", ca.age)->check(CLI::NonNegativeNumber);
  conv->add_option("--alpha", ca.alpha)->check(CLI::Range(1e-6, 0.999999));
  conv->add_option("--paths", ca.paths)->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
  conv->add_option("--seed", ca.seed);
  conv->add_option("--target-method", ca.target_method)
      ->check(CLI::IsMember({"limit-renewal", "limit-subordination"}));
  conv->add_option("--out", ca.sink.path);

  ResidualArgs ra;
  auto* resid = app.add_subcommand("residual", "fractional pricing-equation residuals");
  resid->add_option("--which", ra.which)->check(CLI::IsMember({"g0", "gy"}));
  resid->add_option("--alpha", ra.alpha)->check(CLI::Range(1e-6, 0.999999));
  resid->add_option("--age", ra.age)->check(CLI::PositiveNumber);
  resid->add_option("--strike", ra.strike)->check(CLI::PositiveNumber);
  resid->add_option("--maturity", ra.maturity)->check(CLI::PositiveNumber);
  resid->add_option("--nx", ra.nx)->check(CLI::Range(std::size_t{16}, std::size_t{4096}));
  resid->add_option("--nt", ra.nt)->check(CLI::Range(std::size_t{16}, std::size_t{4096}));
  resid->add_flag("--parallel", ra.parallel, "thread the field construction");
  resid->add_option("--out", ra.sink.path);

  SampleArgs sa;
  auto* samp = app.add_subcommand("sample", "draw variates, report KS and histogram");
  samp->add_option("--law", sa.law)
      ->check(CLI::IsMember({"exponential", "mittag-leffler", "stable", "inverse-stable"}));
  samp->add_option("--alpha", sa.alpha)->check(CLI::Range(1e-6, 0.999999));
  samp->add_option("--lambda", sa.lambda)->check(CLI::PositiveNumber);
  samp->add_option("--t", sa.t)->check(CLI::PositiveNumber);
  samp->add_option("--n", sa.n)->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
  samp->add_option("--seed", sa.seed);
  samp->add_option("--hist", sa.hist_path, "histogram CSV path");
  samp->add_option("--path-dir", sa.path_dir, "directory for path CSV dumps");
  samp->add_option("--n-path-files", sa.n_paths);
  samp->add_option("--sigma2", sa.sigma2)->check(CLI::NonNegativeNumber);
  samp->add_option("--horizon", sa.horizon)->check(CLI::PositiveNumber);
  samp->add_option("--out", sa.sink.path);
  samp->add_option("--format", sa.format)->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (price->parsed()) return run_price(pa);
    if (conv->parsed()) return run_converge(ca);
    if (resid->parsed()) return run_residual(ra);
    if (samp->parsed()) return run_sample(sa);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const smp::budget_error& e) {
    std::cerr << "numerical budget exceeded: " << e.what() << '\n';
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
