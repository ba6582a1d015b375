#pragma once

#include <cstddef>
#include <vector>

namespace ssb {

// Uniform 1D lattice with both endpoints included.
class Grid {
 public:
  Grid(double x_min, double x_max, std::size_t n_points);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_points_; }
  double spacing() const noexcept { return spacing_; }
  double x(std::size_t i) const noexcept { return x_min_ + spacing_ * static_cast<double>(i); }
  std::vector<double> points() const;

  // True when the point set is invariant under x -> -x.
  bool symmetric() const noexcept;

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.n_points_ == b.n_points_;
  }

 private:
  double x_min_;
  double x_max_;
  std::size_t n_points_;
  double spacing_;
};

}  // namespace ssb
