#include "ssb/grid.hpp"

#include <cmath>
#include <string>

#include "ssb/errors.hpp"

namespace ssb {

Grid::Grid(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min), x_max_(x_max), n_points_(n_points), spacing_(0.0) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max))
    throw ArgumentError("grid: require finite x_min < x_max");
  if (n_points < 8)
    throw ArgumentError("grid: n_points must be at least 8, got " + std::to_string(n_points));
  spacing_ = (x_max - x_min) / static_cast<double>(n_points - 1);
}

std::vector<double> Grid::points() const {
  std::vector<double> out(n_points_);
  for (std::size_t i = 0; i < n_points_; ++i) out[i] = x(i);
  return out;
}

bool Grid::symmetric() const noexcept {
  return std::abs(x_min_ + x_max_) <= 1e-12 * (std::abs(x_min_) + std::abs(x_max_));
}

}  // namespace ssb
