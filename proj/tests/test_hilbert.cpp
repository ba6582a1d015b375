#include <doctest.h>

#include <cmath>
#include <random>

#include "ssb/errors.hpp"
#include "ssb/hilbert.hpp"
#include "ssb/potentials.hpp"

using namespace ssb;
using namespace ssb::hilbert;

namespace {

constexpr double kPi = 3.14159265358979323846;

Spectrum harmonic_spectrum(std::size_t n_points, std::size_t k, double half = 10.0) {
  const Grid g(-half, half, n_points);
  return eigendecompose(build_hamiltonian(g, PotentialSpec::harmonic(1.0), 1.0, 1.0), k);
}

// Quartic well with instanton action S = 4 sqrt(2) mu^3 / lambda at m = mu = 1.
PotentialSpec quartic_with_action(double S) { return PotentialSpec::quartic(4.0 * std::sqrt(2.0) / S, 1.0); }

Spectrum quartic_spectrum(double S, std::size_t k, std::size_t n_points = 1024) {
  const auto spec = quartic_with_action(S);
  const double x0 = std::get<QuarticDoubleWell>(spec.variant()).x0();
  const double half = x0 + 12.0 / std::sqrt(std::sqrt(2.0));
  return eigendecompose(build_hamiltonian(Grid(-half, half, n_points), spec, 1.0, 1.0), k);
}

Vector random_coefficients(std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Vector c(static_cast<Eigen::Index>(k));
  for (auto& z : c) z = cplx(n(rng), n(rng));
  return c.normalized();
}

WaveFunction in_span(const Spectrum& s, const Vector& c) {
  return WaveFunction::from_coefficients(*s.grid, s.vectors * c);
}

}  // namespace

TEST_SUITE("hilbert") {
  TEST_CASE("harmonic ground energy matches hbar omega / 2") {
    const auto s = harmonic_spectrum(1200, 4);
    CHECK(std::abs(s.energies[0] - 0.5) / 0.5 < 1e-4);
    for (std::size_t n = 1; n < 4; ++n)
      CHECK(std::abs((s.energies[n] - s.energies[n - 1]) - 1.0) < 1e-3);
  }

  TEST_CASE("free particle matches the discrete Dirichlet spectrum and the box bound") {
    const std::size_t n = 400;
    const Grid g(-50.0, 50.0, n);
    const auto spec = PotentialSpec::tabulated(g, std::vector<double>(n, 0.0));
    const auto s = eigendecompose(build_hamiltonian(g, spec, 1.0, 1.0), 3);
    const double h = g.spacing();
    const double box = static_cast<double>(n + 1) * h;
    for (std::size_t k = 1; k <= 3; ++k) {
      const double exact = (1.0 - std::cos(static_cast<double>(k) * kPi / static_cast<double>(n + 1))) / (h * h);
      CHECK(std::abs(s.energies[k - 1] - exact) < 1e-10 * exact);
    }
    CHECK(s.energies[0] > 0.0);
    CHECK(s.energies[0] <= kPi * kPi / (2.0 * box * box));
  }

  TEST_CASE("invalid inputs are rejected") {
    const Grid g(-5.0, 5.0, 64);
    CHECK_THROWS_AS(build_hamiltonian(g, PotentialSpec::harmonic(1.0), 0.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(Grid(0.0, 1.0, 4), ArgumentError);
    CHECK_THROWS_AS(Grid(1.0, 0.0, 64), ArgumentError);
    Matrix m = Matrix::Identity(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(HermitianOperator(m, BasisTag::eigen), ArgumentError);
    CHECK_THROWS_AS(DensityOperator(Matrix::Identity(2, 2)), ArgumentError);
    Matrix neg = Matrix::Zero(2, 2);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityOperator{neg}, ArgumentError);
    CHECK_THROWS_AS(Projector(0.5 * Matrix::Identity(2, 2)), ArgumentError);
  }

  TEST_CASE("identity operator has a degenerate orthonormal eigenbasis") {
    const auto s = eigendecompose(HermitianOperator(Matrix::Identity(5, 5), BasisTag::eigen), 3);
    for (double e : s.energies) CHECK(e == doctest::Approx(1.0).epsilon(1e-14));
    const Matrix gram = s.vectors.adjoint() * s.vectors;
    CHECK((gram - Matrix::Identity(3, 3)).norm() < 1e-12);
  }

  TEST_CASE("eigenpairs satisfy H v = E v and have a positive largest component") {
    const auto spec = quartic_with_action(10.0);
    const double half = std::get<QuarticDoubleWell>(spec.variant()).x0() + 12.0;
    const auto H = build_hamiltonian(Grid(-half, half, 512), spec, 1.0, 1.0);
    const auto s = eigendecompose(H, 6);
    for (std::size_t k = 0; k < s.size(); ++k) {
      const Vector v = s.vectors.col(static_cast<Eigen::Index>(k));
      CHECK((H.matrix() * v - s.energies[k] * v).norm() < 1e-8 * H.max_abs());
      // Mirror-image peaks of an odd state tie; the rightmost one is fixed.
      const double peak = v.cwiseAbs().maxCoeff();
      Eigen::Index imax = v.size() - 1;
      while (std::abs(v[imax]) < peak * (1.0 - 1e-6)) --imax;
      CHECK(std::abs(v[imax].imag()) < 1e-14);
      CHECK(v[imax].real() > 0.0);
    }
  }

  TEST_CASE("quartic eigenstates pair into doublets of definite parity") {
    const auto s = quartic_spectrum(10.0, 4);
    CHECK(s.energies[1] - s.energies[0] < 1e-2 * (s.energies[2] - s.energies[0]));
    for (std::size_t k = 0; k < 4; ++k) {
      const Vector v = s.state(k).amplitudes();
      const Vector r = v.reverse();
      const double sign = k % 2 == 0 ? 1.0 : -1.0;
      CHECK((v - sign * r).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  TEST_CASE("doubling the grid changes the lowest four eigenvalues by < 1e-3") {
    const auto a = harmonic_spectrum(1024, 4);
    const auto b = harmonic_spectrum(2048, 4);
    for (std::size_t k = 0; k < 4; ++k)
      CHECK(std::abs(a.energies[k] - b.energies[k]) < 1e-3 * std::abs(b.energies[k]));
  }

  TEST_CASE("evolution is unitary and composes") {
    const auto s = harmonic_spectrum(512, 32);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ut(0.0, 20.0);
    for (std::uint64_t trial = 0; trial < 8; ++trial) {
      const auto psi = in_span(s, random_coefficients(32, 100 + trial));
      const double t1 = ut(rng), t2 = ut(rng);
      const auto a = evolve(psi, s, t1);
      CHECK(std::abs(a.norm_squared() - psi.norm_squared()) < 1e-9);
      const auto two = evolve(a, s, t2);
      const auto one = evolve(psi, s, t1 + t2);
      CHECK((two.amplitudes() - one.amplitudes()).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  TEST_CASE("evolution fixed points and two-level phase flip") {
    const auto s = harmonic_spectrum(512, 8);
    const auto psi = in_span(s, random_coefficients(8, 3));
    CHECK((evolve(psi, s, 0.0).amplitudes() - psi.amplitudes()).norm() < 1e-12);
    const auto n2 = s.state(2);
    CHECK(std::abs(std::abs(n2.inner(evolve(n2, s, 3.7))) - 1.0) < 1e-9);
    Vector plus = Vector::Zero(8), minus = Vector::Zero(8);
    plus[0] = plus[1] = minus[0] = 1.0 / std::sqrt(2.0);
    minus[1] = -1.0 / std::sqrt(2.0);
    const double t = kPi / (s.energies[1] - s.energies[0]);
    const auto out = evolve(in_span(s, plus), s, t);
    CHECK(std::abs(std::abs(in_span(s, minus).inner(out)) - 1.0) < 1e-9);
  }

  TEST_CASE("evolving a state outside the truncated span raises TruncationError") {
    const auto s = harmonic_spectrum(256, 4);
    const auto far = harmonic_spectrum(256, 12).state(10);
    CHECK_THROWS_AS(evolve(far, s, 1.0), TruncationError);
  }

  TEST_CASE("position projectors are complete and x = 0 belongs to the right") {
    const Grid g(-4.0, 4.0, 9);  // unit spacing puts a point exactly on x = 0
    REQUIRE(g.x(4) == 0.0);
    const auto L = position_projector(g, Region::left_of(0.0));
    const auto R = position_projector(g, Region::right_of(0.0));
    const Matrix sum = L.matrix() + R.matrix();
    const Vector v = random_coefficients(9, 11);
    CHECK((sum * v - v).norm() < 1e-12);
    CHECK(R.matrix()(4, 4).real() == 1.0);
    CHECK(L.matrix()(4, 4).real() == 0.0);
  }

  TEST_CASE("symmetric ground state is split evenly between the halves") {
    const auto s = quartic_spectrum(8.0, 2);
    const auto psi = s.state(0);
    CHECK(std::abs(expectation(psi, position_projector(*s.grid, Region::left_of(0.0))) - 0.5) < 1e-6);
    CHECK(std::abs(expectation(psi, position_operator(*s.grid))) < 1e-6);
  }

  TEST_CASE("harmonic right-localized state") {
    const auto s = harmonic_spectrum(1200, 2);
    Vector c(2);
    c << 1.0, 1.0;
    const auto psi = in_span(s, c / std::sqrt(2.0));
    const auto right = position_projector(*s.grid, Region::right_of(0.0));
    const double p = expectation(psi, right);
    // psi_R needs psi_1 > 0 on the right; flip the combination otherwise.
    const double loc = std::max(p, 1.0 - p);
    CHECK(std::abs(loc - (0.5 + 1.0 / std::sqrt(2.0 * kPi))) < 1e-3);
  }

  TEST_CASE("expectation values of simple operators") {
    const int d = 4;
    const DensityOperator mixed(Matrix::Identity(d, d) / static_cast<double>(d));
    const HermitianOperator id(Matrix::Identity(d, d), BasisTag::eigen);
    CHECK(expectation(mixed, id) == doctest::Approx(1.0).epsilon(1e-14));
    Matrix a = Matrix::Zero(d, d);
    a.diagonal() << 1.0, 2.0, 3.0, 4.0;
    Vector e2 = Vector::Zero(d);
    e2[2] = 1.0;
    CHECK(expectation(DensityOperator::pure(e2), HermitianOperator(a, BasisTag::eigen)) ==
          doctest::Approx(3.0).epsilon(1e-14));
  }
}
