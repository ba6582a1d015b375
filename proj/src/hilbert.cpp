#include "ssb/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <lapacke.h>

#include "ssb/errors.hpp"
#include "ssb/potentials.hpp"

namespace ssb::hilbert {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kIdempotentTol = 1e-8;

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_hermitian(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(max_abs(m), 1e-300);
  return max_abs(m - m.adjoint()) <= rel_tol * scale;
}

// Largest-magnitude component real positive; near-ties go to the highest index.
void fix_phase(Eigen::Ref<Vector> v) {
  Eigen::Index n = v.size();
  double best = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) best = std::max(best, std::abs(v[i]));
  if (best == 0.0) return;
  Eigen::Index pick = 0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (std::abs(v[i]) >= best * (1.0 - 1e-6)) {
      pick = i;
      break;
    }
  }
  v *= std::conj(v[pick]) / std::abs(v[pick]);
}

bool reflection_symmetric(const Matrix& m) {
  const double scale = std::max(max_abs(m), 1e-300);
  Matrix flipped = m.colwise().reverse().rowwise().reverse();
  return max_abs(m - flipped) <= 1e-12 * scale;
}

// Rotate numerically degenerate neighbours into parity eigenstates.
void separate_parity(std::vector<double>& energies, Matrix& vecs, double gap_tol) {
  const Eigen::Index k = vecs.cols();
  for (Eigen::Index a = 0; a + 1 < k; ++a) {
    if (energies[a + 1] - energies[a] > gap_tol) continue;
    const Eigen::Index b = a + 1;
    Eigen::Matrix2cd par;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        par(i, j) = vecs.col(a + i).dot(vecs.col(a + j).reverse());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(par);
    // ascending parity eigenvalues (-1, +1): the even combination goes first.
    Vector even = vecs.col(a) * es.eigenvectors()(0, 1) + vecs.col(b) * es.eigenvectors()(1, 1);
    Vector odd = vecs.col(a) * es.eigenvectors()(0, 0) + vecs.col(b) * es.eigenvectors()(1, 0);
    vecs.col(a) = even.normalized();
    vecs.col(b) = odd.normalized();
    ++a;
  }
}

// Lowest k pairs of a real symmetric tridiagonal matrix by index range.
void tridiagonal_lowest(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub, Eigen::Index k,
                        Spectrum& out) {
  const auto n = static_cast<lapack_int>(diag.size());
  Eigen::VectorXd d = diag;
  Eigen::VectorXd e(n);
  e.head(n - 1) = sub;
  e[n - 1] = 0.0;
  lapack_int found = 0;
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, k);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(k));
  const lapack_int info =
      LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, 1,
                     static_cast<lapack_int>(k), 0.0, &found, w.data(), z.data(), n,
                     support.data());
  if (info != 0 || found != k)
    throw NumericError("eigendecompose: tridiagonal solver failed (info " +
                       std::to_string(info) + ")");
  for (Eigen::Index i = 0; i < k; ++i) out.energies[static_cast<std::size_t>(i)] = w[i];
  out.vectors = z.cast<cplx>();
}

}  // namespace

// ---------------------------------------------------------------- WaveFunction

WaveFunction::WaveFunction(Grid grid, Vector amplitudes)
    : grid_(std::move(grid)), amps_(std::move(amplitudes)) {
  if (static_cast<std::size_t>(amps_.size()) != grid_.size())
    throw ArgumentError("wavefunction: amplitude count does not match grid size");
}

WaveFunction WaveFunction::normalized(Grid grid, Vector amplitudes) {
  const double n2 = amplitudes.squaredNorm() * grid.spacing();
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw ArgumentError("wavefunction: cannot normalize");
  amplitudes /= std::sqrt(n2);
  return WaveFunction(std::move(grid), std::move(amplitudes));
}

double WaveFunction::norm_squared() const { return amps_.squaredNorm() * grid_.spacing(); }

cplx WaveFunction::inner(const WaveFunction& other) const {
  if (!(grid_ == other.grid_)) throw ArgumentError("wavefunction: grids differ");
  return amps_.dot(other.amps_) * grid_.spacing();
}

Vector WaveFunction::coefficients() const { return amps_ * std::sqrt(grid_.spacing()); }

WaveFunction WaveFunction::from_coefficients(Grid grid, const Vector& coeffs) {
  const double s = 1.0 / std::sqrt(grid.spacing());
  return WaveFunction(std::move(grid), coeffs * s);
}

WaveFunction reflect(const WaveFunction& psi) {
  return WaveFunction(psi.grid(), psi.amplitudes().reverse());
}

// ----------------------------------------------------------- HermitianOperator

HermitianOperator::HermitianOperator(Matrix matrix, BasisTag basis, std::optional<Grid> grid,
                                     double hbar)
    : m_(std::move(matrix)), basis_(basis), grid_(std::move(grid)), hbar_(hbar) {
  if (m_.rows() != m_.cols()) throw ArgumentError("operator: matrix is not square");
  if (!is_hermitian(m_, kHermitianTol)) throw ArgumentError("operator: matrix is not Hermitian");
  if (grid_ && static_cast<std::size_t>(m_.rows()) != grid_->size())
    throw ArgumentError("operator: dimension does not match grid");
  if (!(hbar_ > 0.0)) throw ArgumentError("operator: hbar must be positive");
}

// ------------------------------------------------------------------- Spectrum

WaveFunction Spectrum::state(std::size_t i) const {
  if (!grid) throw ArgumentError("spectrum: no grid attached");
  if (i >= size()) throw ArgumentError("spectrum: state index out of range");
  return WaveFunction::from_coefficients(*grid, vectors.col(static_cast<Eigen::Index>(i)));
}

Matrix Spectrum::propagator(double t) const {
  Vector phases(static_cast<Eigen::Index>(size()));
  for (std::size_t n = 0; n < size(); ++n)
    phases[static_cast<Eigen::Index>(n)] = std::polar(1.0, -energies[n] * t / hbar);
  return phases.asDiagonal();
}

// ------------------------------------------------------------ DensityOperator

DensityOperator::DensityOperator(Matrix matrix) : m_(std::move(matrix)) {
  if (!is_hermitian(m_, 1e-10)) throw ArgumentError("density operator: not Hermitian");
  const double tr = m_.trace().real();
  if (std::abs(tr - 1.0) > 1e-9) throw ArgumentError("density operator: trace differs from 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw ArgumentError("density operator: negative eigenvalue");
}

DensityOperator DensityOperator::pure(const Vector& state) {
  const double n = state.norm();
  if (!(n > 0.0)) throw ArgumentError("density operator: zero state");
  Vector v = state / n;
  return DensityOperator(v * v.adjoint(), Trusted{});
}

DensityOperator DensityOperator::pure(const WaveFunction& state) {
  return pure(state.coefficients());
}

DensityOperator DensityOperator::diagonal(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ArgumentError("density operator: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw ArgumentError("density operator: weights sum to zero");
  Vector d(static_cast<Eigen::Index>(weights.size()));
  for (std::size_t i = 0; i < weights.size(); ++i)
    d[static_cast<Eigen::Index>(i)] = weights[i] / total;
  return DensityOperator(Matrix(d.asDiagonal()), Trusted{});
}

// ------------------------------------------------------------------ Projector

Projector::Projector(Matrix matrix) : m_(std::move(matrix)), rank_(0) {
  if (!is_hermitian(m_, 1e-12)) throw ArgumentError("projector: not Hermitian");
  double defect;
  if (m_.isDiagonal(0.0)) {
    Vector d = m_.diagonal();
    defect = (d.cwiseProduct(d) - d).cwiseAbs().maxCoeff();
  } else {
    defect = max_abs(m_ * m_ - m_);
  }
  if (defect > kIdempotentTol) throw ArgumentError("projector: not idempotent");
  rank_ = static_cast<int>(std::lround(m_.trace().real()));
}

Projector Projector::onto(const Vector& state) {
  const double n = state.norm();
  if (!(n > 0.0)) throw ArgumentError("projector: zero state");
  Vector v = state / n;
  return Projector(v * v.adjoint());
}

// ----------------------------------------------------------------- operations

HermitianOperator build_hamiltonian(const Grid& grid, const PotentialSpec& potential,
                                    double mass, double hbar) {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ArgumentError("hamiltonian: mass must be > 0");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ArgumentError("hamiltonian: hbar must be > 0");
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double dx = grid.spacing();
  const double t = hbar * hbar / (2.0 * mass * dx * dx);
  Matrix h = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = grid.x(static_cast<std::size_t>(i));
    const double v = evaluate(potential, x);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "hamiltonian: potential is not finite at x_" << i << " = " << x;
      throw DomainError(os.str());
    }
    h(i, i) = 2.0 * t + v;
    if (i + 1 < n) {
      h(i, i + 1) = -t;
      h(i + 1, i) = -t;
    }
  }
  return HermitianOperator(std::move(h), BasisTag::grid, grid, hbar);
}

Spectrum eigendecompose(const HermitianOperator& h, std::size_t k) {
  const Eigen::Index n = h.dimension();
  if (k == 0 || static_cast<Eigen::Index>(k) > n)
    throw ArgumentError("eigendecompose: requested " + std::to_string(k) +
                        " states from dimension " + std::to_string(n));
  const auto kk = static_cast<Eigen::Index>(k);
  const Matrix& m = h.matrix();

  Spectrum out;
  out.grid = h.grid();
  out.hbar = h.hbar();
  out.energies.resize(k);

  const bool real = m.imag().cwiseAbs().maxCoeff() == 0.0;
  if (real) {
    Eigen::MatrixXd re = m.real();
    bool tridiagonal = true;
    for (Eigen::Index j = 0; j < n && tridiagonal; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(i - j) > 1 && re(i, j) != 0.0) {
          tridiagonal = false;
          break;
        }
    if (tridiagonal && n > 1) {
      tridiagonal_lowest(re.diagonal(), re.diagonal(-1), kk, out);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(re);
      if (es.info() != Eigen::Success) throw NumericError("eigendecompose: solver failed");
      for (Eigen::Index i = 0; i < kk; ++i) out.energies[i] = es.eigenvalues()[i];
      out.vectors = es.eigenvectors().leftCols(kk).cast<cplx>();
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw NumericError("eigendecompose: solver failed");
    for (Eigen::Index i = 0; i < kk; ++i) out.energies[i] = es.eigenvalues()[i];
    out.vectors = es.eigenvectors().leftCols(kk);
  }

  if (h.basis() == BasisTag::grid && reflection_symmetric(m))
    separate_parity(out.energies, out.vectors, 1e-8 * std::max(h.max_abs(), 1e-300));
  for (Eigen::Index i = 0; i < kk; ++i) fix_phase(out.vectors.col(i));
  return out;
}

WaveFunction evolve(const WaveFunction& state, const Spectrum& spectrum, double t,
                    double leakage_tolerance) {
  if (!spectrum.grid || !(*spectrum.grid == state.grid()))
    throw ArgumentError("evolve: state grid does not match spectrum grid");
  if (t == 0.0) return state;
  const Vector psi = state.coefficients();
  const double n2 = psi.squaredNorm();
  const Vector c = spectrum.vectors.adjoint() * psi;
  const double leaked = n2 > 0.0 ? std::max(0.0, 1.0 - c.squaredNorm() / n2) : 0.0;
  if (leaked > leakage_tolerance) {
    std::ostringstream os;
    os << "evolve: state leaks " << leaked << " of its norm outside the truncated eigenbasis";
    throw TruncationError(os.str(), leaked);
  }
  Vector ct = c;
  for (Eigen::Index i = 0; i < c.size(); ++i)
    ct[i] *= std::polar(1.0, -spectrum.energies[static_cast<std::size_t>(i)] * t / spectrum.hbar);
  Vector out = spectrum.vectors * ct;
  const double on = out.squaredNorm();
  if (on > 0.0) out *= std::sqrt(n2 / on);
  return WaveFunction::from_coefficients(state.grid(), out);
}

Projector position_projector(const Grid& grid, const Region& region) {
  if (!(region.lower < region.upper)) throw ArgumentError("position projector: empty region");
  auto inside_grid = [&](double b) {
    return !std::isfinite(b) || (b >= grid.x_min() && b <= grid.x_max());
  };
  if (!inside_grid(region.lower) || !inside_grid(region.upper))
    throw ArgumentError("position projector: region boundary outside the grid");
  const auto n = static_cast<Eigen::Index>(grid.size());
  Vector d = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (region.contains(grid.x(static_cast<std::size_t>(i)))) d[i] = 1.0;
  if (d.real().sum() == 0.0) throw ArgumentError("position projector: region holds no grid point");
  return Projector(d.asDiagonal());
}

HermitianOperator position_operator(const Grid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = grid.x(static_cast<std::size_t>(i));
  return HermitianOperator(d.asDiagonal(), BasisTag::grid, grid);
}

double expectation(const DensityOperator& rho, const HermitianOperator& a) {
  if (rho.dimension() != a.dimension()) throw ArgumentError("expectation: dimension mismatch");
  const cplx tr = (rho.matrix().cwiseProduct(a.matrix().transpose())).sum();
  const double scale = std::max(1.0, a.max_abs());
  if (std::abs(tr.imag()) > 1e-9 * scale)
    throw NumericError("expectation: trace has a non-negligible imaginary part");
  return tr.real();
}

double expectation(const WaveFunction& psi, const HermitianOperator& a) {
  if (static_cast<Eigen::Index>(psi.grid().size()) != a.dimension())
    throw ArgumentError("expectation: dimension mismatch");
  const Vector c = psi.coefficients();
  return c.dot(a.matrix() * c).real();
}

double expectation(const WaveFunction& psi, const Projector& p) {
  if (static_cast<Eigen::Index>(psi.grid().size()) != p.matrix().rows())
    throw ArgumentError("expectation: dimension mismatch");
  const Vector c = psi.coefficients();
  return c.dot(p.matrix() * c).real();
}

}  // namespace ssb::hilbert
