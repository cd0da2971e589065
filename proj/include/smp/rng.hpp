// Counter-based splittable RNG streams and a deterministic parallel Monte
// Carlo reducer.  Streams are pure functions of (seed, stream_id, counter):
// identical parameters reproduce identical variates, distinct stream ids give
// statistically independent sequences, and no state is shared between
// workers.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace smp {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : base_(detail::mix64(seed + detail::kGolden) ^
              detail::mix64(stream_id * 0xD1342543DE82EF95ull + 0x632BE59BD9B4E019ull)),
        seed_(seed),
        stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return detail::mix64(base_ + (++counter_) * detail::kGolden); }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1); safe under log()
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal (Box-Muller; two uniforms per draw, no cached state)
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // unit-rate exponential
  double exponential() { return -std::log(uniform_open()); }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

inline unsigned mc_worker_count(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SM_PRICER_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs `draw(stream)` n times, fanned out over worker threads in fixed-size
// chunks keyed by stream id.  Per-chunk accumulation is sequential and the
// cross-chunk reduction is pairwise in chunk order, so the result depends
// only on (seed, base_stream, n), never on the thread count.
template <class Draw>
McEstimate parallel_mc(std::uint64_t seed, std::uint64_t base_stream, std::size_t n,
                       Draw&& draw, unsigned n_threads = 0) {
  if (n < 2) throw std::invalid_argument("parallel_mc: need at least 2 draws");
  constexpr std::size_t kChunk = 16384;
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> sums(n_chunks, 0.0), sumsqs(n_chunks, 0.0);

  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(mc_worker_count(n_threads), n_chunks));
  auto run_chunk = [&](std::size_t c) {
    RngStream rng(seed, base_stream + c);
    const std::size_t lo = c * kChunk;
    const std::size_t hi = std::min(lo + kChunk, n);
    double s = 0.0, q = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double x = draw(rng);
      s += x;
      q += x * x;
    }
    sums[c] = s;
    sumsqs[c] = q;
  };

  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::vector<std::size_t> next(1, 0);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < n_chunks; c += workers) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }

  // pairwise reduction in fixed chunk order
  auto reduce = [](std::vector<double> xs) {
    while (xs.size() > 1) {
      std::vector<double> nx((xs.size() + 1) / 2, 0.0);
      for (std::size_t i = 0; i + 1 < xs.size(); i += 2) nx[i / 2] = xs[i] + xs[i + 1];
      if (xs.size() % 2) nx.back() = xs.back();
      xs = std::move(nx);
    }
    return xs.empty() ? 0.0 : xs[0];
  };
  const double sum = reduce(sums);
  const double sumsq = reduce(sumsqs);
  McEstimate est;
  est.n = n;
  est.mean = sum / static_cast<double>(n);
  const double var =
      std::max(0.0, (sumsq / static_cast<double>(n) - est.mean * est.mean)) *
      static_cast<double>(n) / static_cast<double>(n - 1);
  est.std_error = std::sqrt(var / static_cast<double>(n));
  return est;
}

}  // namespace smp
