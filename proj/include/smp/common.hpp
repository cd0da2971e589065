// Shared small utilities: error types, compensated summation, uniform grids.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace smp {

// Raised when an adaptive numerical routine exhausts its refinement budget
// without reaching the requested tolerance.  The CLI maps it to exit code 3.
class budget_error : public std::runtime_error {
 public:
  explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// Kahan–Neumaier compensated accumulator.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Uniform grid on [0, z]: n_points nodes, step * (n_points - 1) == z.
struct Grid1D {
  std::size_t n_points = 2;
  double step = 0.0;

  Grid1D() = default;
  Grid1D(std::size_t n, double z_end) {
    if (n < 2) throw std::domain_error("Grid1D: need at least 2 points");
    if (!(z_end > 0)) throw std::domain_error("Grid1D: horizon must be positive");
    n_points = n;
    step = z_end / static_cast<double>(n - 1);
  }
  double node(std::size_t i) const { return step * static_cast<double>(i); }
  double length() const { return step * static_cast<double>(n_points - 1); }
};

inline double sqr(double x) { return x * x; }

}  // namespace smp
