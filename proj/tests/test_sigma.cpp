#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "ssb/errors.hpp"
#include "ssb/hilbert.hpp"
#include "ssb/potentials.hpp"
#include "ssb/sigma.hpp"

using namespace ssb;
using namespace ssb::sigma;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Position-space oracle for the free square wave of width Delta:
// A = (2/Delta) int_0^Delta (Delta - u) K(u, t) du with the free kernel
// K = sqrt(m / (2 pi i hbar t)) exp(i m u^2 / (2 hbar t)).  With s = u / Delta
// and beta = m Delta^2 / (2 hbar t):  A = 2 sqrt(beta / (pi i)) int_0^1 (1 - s) e^{i beta s^2} ds.
cplx kernel_oracle(double a) {  // a = hbar t / (m Delta^2)
  const double beta = 0.5 / a;
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const std::size_t panels = std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(2.0 * beta)));
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    const double lo = static_cast<double>(k) / static_cast<double>(panels);
    const double hi = static_cast<double>(k + 1) / static_cast<double>(panels);
    re += GK::integrate([&](double s) { return (1.0 - s) * std::cos(beta * s * s); }, lo, hi, 0, 1e-15);
    im += GK::integrate([&](double s) { return (1.0 - s) * std::sin(beta * s * s); }, lo, hi, 0, 1e-15);
  }
  const cplx pref = 2.0 * std::sqrt(beta / kPi) * std::polar(1.0, -kPi / 4.0);
  return pref * cplx(re, im);
}

}  // namespace

TEST_SUITE("sigma") {
  TEST_CASE("uniform phase ground state") {
    const PhaseSystem sys{1.5, 0.8, 1.0};
    const auto psi = uniform_ground_state(sys, 64);
    CHECK(norm_squared(psi) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(mean_phase_exponential(psi)) < 1e-14);
    CHECK(std::abs(kinetic_energy(sys, psi)) < 1e-14);
  }

  TEST_CASE("circle evolution is unitary") {
    const PhaseSystem sys{1.0, 1.0, 1.0};
    const Matrix U = circle_propagator(sys, 32)(0.37);
    CHECK((U.adjoint() * U - Matrix::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-10);
    const auto fam = sector_family(4, 32);
    const Vector v = sector_state(fam, 1).coefficients();
    CHECK(std::abs((U * v).squaredNorm() - 1.0) < 1e-10);
  }

  TEST_CASE("tilted ground state width") {
    const PhaseSystem sys{2.0, 1.0, 1.0};
    const double J = 3.0;
    const auto g = tilted_ground_state(sys, J);
    // Small-angle oscillator: mass rho0^2 L^3, stiffness J rho0 L^3.
    const double m = 2.0 * 2.0, k = J * 2.0;
    CHECK(g.variance == doctest::Approx(1.0 / (2.0 * std::sqrt(m * k))).epsilon(1e-14));
    const auto h = tilted_ground_state({2.0, 2.0, 1.0}, J);
    CHECK(h.variance == doctest::Approx(g.variance / 8.0).epsilon(1e-14));
    CHECK(g.psi.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(tilted_ground_state(sys, 0.0), ValidityError);
    CHECK_THROWS_AS(tilted_ground_state(sys, 1e-4), ValidityError);
  }

  TEST_CASE("tilted Gaussian matches the cosine-trap eigensolve") {
    const PhaseSystem sys{2.0, 1.0, 1.0};
    const double sigma = kPi / 100.0;
    const double J = std::pow(1.0 / (2.0 * std::pow(2.0, 1.5) * sigma * sigma), 2);
    const auto g = tilted_ground_state(sys, J);
    CHECK(g.width == doctest::Approx(sigma).epsilon(1e-12));
    const Grid grid(-12.0 * sigma, 12.0 * sigma, 1024);
    const double depth = J * sys.rho0 * sys.L * sys.L * sys.L;
    const auto trap = PotentialSpec::tabulated(grid, [&](double th) { return -depth * std::cos(th); });
    const auto s = hilbert::eigendecompose(hilbert::build_hamiltonian(grid, trap, sys.m_eff(), sys.hbar), 1);
    hilbert::Vector a(1024);
    for (std::size_t i = 0; i < 1024; ++i) a[static_cast<Eigen::Index>(i)] = std::exp(-grid.x(i) * grid.x(i) / (4.0 * g.variance));
    const auto gauss = hilbert::WaveFunction::normalized(grid, a);
    CHECK(std::norm(gauss.inner(s.state(0))) > 0.999);
  }

  TEST_CASE("survival amplitude against the position-kernel oracle") {
    const SquareWavePacket p{1.0};
    CHECK(survival_amplitude(p, 1.0, 1.0, 0.0) == cplx(1.0, 0.0));
    // Frozen values of |A| at a = hbar t / (m Delta^2).
    const std::vector<std::pair<double, double>> frozen{
        {1e-4, 0.99437}, {1e-3, 0.98235}, {1e-2, 0.94485}, {0.1, 0.85309},
        {1.0, 0.39701},  {3.0, 0.23021},  {10.0, 0.12615}};
    for (const auto& [a, expected] : frozen) {
      const cplx oracle = kernel_oracle(a);
      const cplx got = survival_amplitude(p, 1.0, 1.0, a);
      CHECK(std::abs(got - oracle) < 2e-5);
      CHECK(std::abs(std::abs(oracle) - expected) < 1e-5);
    }
    CHECK(std::abs(survival_amplitude(p, 1.0, 1.0, 10.0)) < 0.5);
  }

  TEST_CASE("momentum quadrature and grid evolution agree on 16 pairs") {
    double worst = 0.0;
    for (double width : {0.5, 1.0, kPi / 4.0, 2.0})
      for (double a : {1e-3, 0.05, 0.5, 3.0}) {
        const SquareWavePacket p{width};
        const double t = a * width * width;  // m = hbar = 1
        worst = std::max(worst, std::abs(survival_amplitude(p, 1.0, 1.0, t) - survival_amplitude_grid(p, 1.0, 1.0, t)));
      }
    CHECK(worst < 1e-4);
  }

  TEST_CASE("survival modulus stays below one and decays after the early bump") {
    // |A| has a shallow local minimum near a = 0.075 and a maximum near 0.12.
    const SquareWavePacket p{1.0};
    double prev = 1.0;
    for (int i = 1; i <= 200; ++i) {
      const double t = 5.0 * i / 200.0;
      const double cur = std::abs(survival_amplitude(p, 1.0, 1.0, t));
      CHECK(cur <= 1.0);
      if (t >= 0.15) CHECK(cur < prev);
      prev = cur;
    }
  }

  TEST_CASE("parallel quadrature equals the serial reference") {
    const SquareWavePacket p{0.7};
    for (double t : {1e-4, 0.02, 1.5})
      CHECK(survival_amplitude(p, 1.0, 1.0, t) == reference::survival_amplitude(p, 1.0, 1.0, t));
  }

  TEST_CASE("consistency timescale scalings") {
    const PhaseSystem sys{1.3, 0.9, 1.0};
    const double t = consistency_timescale(sys, 0.2).t_CH;
    CHECK(consistency_timescale(sys, 0.4).t_CH == doctest::Approx(4.0 * t).epsilon(1e-14));
    CHECK(consistency_timescale({1.3, 1.8, 1.0}, 0.2).t_CH == doctest::Approx(8.0 * t).epsilon(1e-14));
    CHECK_FALSE(consistency_timescale(sys, 1.0).validity_warning);
    CHECK(consistency_timescale(sys, kPi / 2.0).validity_warning);
  }

  TEST_CASE("uniform state occupies every sector equally") {
    const PhaseSystem sys{1.0, 1.0, 1.0};
    for (std::size_t n : {4u, 8u, 16u}) {
      const auto fam = sector_family(n, 64);
      const auto rho = hilbert::DensityOperator::pure(uniform_ground_state(sys, 64).coefficients());
      const auto U = circle_propagator(sys, 64);
      for (std::size_t s = 0; s < n; ++s) {
        const auto h = histories::make_history({0.0}, {"S" + std::to_string(s)}, fam.projectors);
        CHECK(std::abs(histories::probability(rho, h, fam.projectors, U).raw - 1.0 / static_cast<double>(n)) < 1e-6);
      }
    }
    CHECK_THROWS_AS(sector_family(64, 16), ResolutionError);
  }

  TEST_CASE("sector histories cross over from consistent to interfering") {
    const PhaseSystem sys{1.0, 1.0, 1.0};
    const auto fam5 = sector_family(5, 64);
    const auto rho5 = hilbert::DensityOperator::pure(sector_state(fam5, 0).coefficients());
    const double t5 = consistency_timescale(sys, fam5.width).t_CH;
    const auto early = sector_histories(sys, fam5, 1e-3 * t5 / 5.0, 5, rho5, 1e-2);
    CHECK(early.classification == histories::Classification::approximately_consistent);
    const auto fam8 = sector_family(8, 64);
    const auto rho8 = hilbert::DensityOperator::pure(sector_state(fam8, 0).coefficients());
    const double t8 = consistency_timescale(sys, fam8.width).t_CH;
    const auto late = sector_histories(sys, fam8, 10.0 * t8 / 2.0, 2, rho8, 1e-2);
    CHECK(late.classification == histories::Classification::interfering);
  }
}
