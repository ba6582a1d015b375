#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "ssb/grid.hpp"

namespace ssb {
class PotentialSpec;
}

namespace ssb::hilbert {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr std::size_t kDefaultGridPoints = 1024;
inline constexpr std::size_t kDefaultTruncation = 32;
inline constexpr double kDefaultLeakageTolerance = 1e-6;

// Complex amplitudes on a grid.  The continuum normalization is used:
// sum |psi_i|^2 * spacing is the total probability.
class WaveFunction {
 public:
  WaveFunction(Grid grid, Vector amplitudes);

  // Rescales to unit norm; throws ArgumentError for the zero vector.
  static WaveFunction normalized(Grid grid, Vector amplitudes);

  const Grid& grid() const noexcept { return grid_; }
  const Vector& amplitudes() const noexcept { return amps_; }
  cplx operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }

  double norm_squared() const;
  cplx inner(const WaveFunction& other) const;  // <this|other>

  // Unit l2 vector with the same direction, i.e. amplitudes * sqrt(spacing).
  Vector coefficients() const;
  static WaveFunction from_coefficients(Grid grid, const Vector& coeffs);

 private:
  Grid grid_;
  Vector amps_;
};

enum class BasisTag { grid, eigen };

class HermitianOperator {
 public:
  HermitianOperator(Matrix matrix, BasisTag basis = BasisTag::grid,
                    std::optional<Grid> grid = std::nullopt, double hbar = 1.0);

  const Matrix& matrix() const noexcept { return m_; }
  BasisTag basis() const noexcept { return basis_; }
  const std::optional<Grid>& grid() const noexcept { return grid_; }
  double hbar() const noexcept { return hbar_; }
  Eigen::Index dimension() const noexcept { return m_.rows(); }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

 private:
  Matrix m_;
  BasisTag basis_;
  std::optional<Grid> grid_;
  double hbar_;
};

// Lowest eigenpairs.  Columns of `vectors` are orthonormal in l2 of the
// operator's basis; use state(i) for a grid WaveFunction.
struct Spectrum {
  std::vector<double> energies;
  Matrix vectors;
  std::optional<Grid> grid;
  double hbar = 1.0;

  std::size_t size() const noexcept { return energies.size(); }
  WaveFunction state(std::size_t i) const;
  // Eigenbasis propagator diag(exp(-i E_n t / hbar)).
  Matrix propagator(double t) const;
};

class DensityOperator {
 public:
  explicit DensityOperator(Matrix matrix);
  static DensityOperator pure(const Vector& state);  // state is normalized first
  static DensityOperator pure(const WaveFunction& state);
  // sum_k p_k |k><k| in the current basis, weights normalized to one.
  static DensityOperator diagonal(const std::vector<double>& weights);

  const Matrix& matrix() const noexcept { return m_; }
  Eigen::Index dimension() const noexcept { return m_.rows(); }

 private:
  struct Trusted {};
  DensityOperator(Matrix matrix, Trusted) : m_(std::move(matrix)) {}
  Matrix m_;
};

class Projector {
 public:
  explicit Projector(Matrix matrix);
  static Projector onto(const Vector& state);  // rank-1, state normalized first

  const Matrix& matrix() const noexcept { return m_; }
  int rank() const noexcept { return rank_; }

 private:
  Matrix m_;
  int rank_;
};

// Half-open region [lower, upper).  Grid points with x == lower belong to
// the region, so with the default split at 0 the origin lands on the right.
struct Region {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  static Region left_of(double x) { return {-std::numeric_limits<double>::infinity(), x}; }
  static Region right_of(double x) { return {x, std::numeric_limits<double>::infinity()}; }
  static Region interval(double a, double b) { return {a, b}; }
  bool contains(double x) const noexcept { return x >= lower && x < upper; }
};

HermitianOperator build_hamiltonian(const Grid& grid, const PotentialSpec& potential,
                                    double mass, double hbar);

// Lowest k eigenpairs in ascending order.  Eigenvector phases are fixed so
// the largest-magnitude component is real and positive (rightmost wins a
// tie); numerically degenerate pairs of a reflection-symmetric operator are
// rotated into definite-parity combinations.
Spectrum eigendecompose(const HermitianOperator& h, std::size_t k);

WaveFunction evolve(const WaveFunction& state, const Spectrum& spectrum, double t,
                    double leakage_tolerance = kDefaultLeakageTolerance);

Projector position_projector(const Grid& grid, const Region& region);
HermitianOperator position_operator(const Grid& grid);

double expectation(const DensityOperator& rho, const HermitianOperator& a);
double expectation(const WaveFunction& psi, const HermitianOperator& a);
double expectation(const WaveFunction& psi, const Projector& p);

// Grid-index reflection x_i -> x_{n-1-i}.
WaveFunction reflect(const WaveFunction& psi);

}  // namespace ssb::hilbert
