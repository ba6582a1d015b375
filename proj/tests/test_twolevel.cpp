#include <doctest.h>

#include <cmath>
#include <random>

#include "ssb/errors.hpp"
#include "ssb/twolevel.hpp"

using namespace ssb;
using namespace ssb::twolevel;

namespace {

constexpr double kPi = 3.14159265358979323846;

double pw(double x, int n) { return std::pow(x, n); }

}  // namespace

TEST_SUITE("twolevel") {
  TEST_CASE("harmonic doublet gap and localization") {
    const auto m = build_doublet(PotentialSpec::harmonic(1.0), 1.0, 1.0);
    CHECK(std::abs(m.omega_gap - 1.0) < 1e-3);
    CHECK(std::abs(m.localization - (0.5 + 1.0 / std::sqrt(2.0 * kPi))) < 1e-3);
    REQUIRE(m.psi_R);
    CHECK(m.psi_L->norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("quartic doublet at S/hbar = 15 is nearly degenerate") {
    const auto spec = PotentialSpec::quartic(4.0 * std::sqrt(2.0) / 15.0, 1.0);
    const auto m = build_doublet(spec, 1.0, 1.0);
    const double omega = well_geometry(spec, 1.0).omega;
    CHECK(m.omega_gap / omega < 1e-3);
    CHECK(m.omega_gap > 0.0);
  }

  TEST_CASE("asymmetric potentials are rejected") {
    CHECK_THROWS_AS(build_doublet(PotentialSpec::tilted(PotentialSpec::quartic(1.0, 1.0), 0.1), 1.0, 1.0),
                    ShapeError);
  }

  TEST_CASE("measurement chain closed forms") {
    const auto m = DoubletModel::ideal(2.0);  // rotation rate 1
    for (double tau : {0.0, 0.2, 0.7, 1.3}) {
      const auto d3 = measurement_chain(m, tau, 3);
      const double c = std::cos(tau), s = std::sin(tau);
      CHECK(std::abs(d3.probabilities.at("LLL") - 0.5 * pw(c, 4)) < 1e-12);
      CHECK(std::abs(d3.probabilities.at("LRL") - 0.5 * pw(s, 4)) < 1e-12);
      const auto d2 = measurement_chain(m, tau, 2);
      double total = 0.0;
      for (const auto& [k, p] : d2.probabilities) total += p;
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
    const auto d0 = measurement_chain(m, 0.0, 4);
    for (const auto& [k, p] : d0.probabilities) {
      const bool constant = k == "LLLL" || k == "RRRR";
      CHECK(p == doctest::Approx(constant ? 0.5 : 0.0));
    }
    CHECK_THROWS_AS(measurement_chain(m, 1.0, 21), ArgumentError);
  }

  TEST_CASE("closed forms equal the histories engine for n <= 8 and 32 random tau") {
    const auto m = DoubletModel::ideal(1.7);
    const auto sys = two_level_system(m);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.01, 4.0);
    double worst = 0.0, worst_sym = 0.0;
    for (int trial = 0; trial < 32; ++trial) {
      const double tau = u(rng);
      for (std::size_t n = 1; n <= 8; ++n) {
        const auto chain = measurement_chain(m, tau, n);
        const auto dm = histories::exhaustive_decoherence_matrix(sys.ground, sys.family,
                                                                 histories::time_grid(tau, n - 1), sys.U);
        std::map<std::string, double> engine;
        for (std::size_t i = 0; i < dm.labels.size(); ++i)
          engine[dm.labels[i]] = dm.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
        for (const auto& [label, p] : chain.probabilities) {
          const auto it = engine.find(label);
          worst = std::max(worst, std::abs(p - (it == engine.end() ? 0.0 : it->second)));
          std::string mirrored = label;
          for (auto& ch : mirrored) ch = ch == 'L' ? 'R' : 'L';
          worst_sym = std::max(worst_sym, std::abs(p - chain.probabilities.at(mirrored)));
        }
      }
    }
    CHECK(worst < 1e-10);
    CHECK(worst_sym < 1e-14);
  }

  TEST_CASE("protocol comparison") {
    const auto m = DoubletModel::ideal(2.0);
    const auto q = protocol_compare(m, kPi / 4);
    CHECK(std::abs(q.pr_skip) < 1e-15);
    CHECK(std::abs(q.pr_sum - 0.25) < 1e-15);
    CHECK(std::abs(q.violation + 0.25) < 1e-15);
    const auto h = protocol_compare(m, kPi / 2);
    CHECK(std::abs(h.pr_skip - 0.5) < 1e-15);
    CHECK(std::abs(h.violation) < 1e-15);
    const auto z = protocol_compare(m, 1e-9);
    CHECK(std::abs(z.pr_skip - 0.5) < 1e-12);
    CHECK(std::abs(z.pr_sum - 0.5) < 1e-12);
    const double omega_I = 4.3e-6;
    const auto d = protocol_compare(DoubletModel::ideal(omega_I), 1e-4 / omega_I);
    CHECK(std::abs(d.violation) < 1e-7);
  }

  TEST_CASE("tunnelling rate separates from the well frequency as mu grows") {
    double prev = 1.0;
    for (double mu : {1.2, 1.4, 1.6, 1.8}) {
      const auto spec = PotentialSpec::quartic(2.0, mu * mu);
      const double ratio = build_doublet(spec, 1.0, 1.0).omega_gap / well_geometry(spec, 1.0).omega;
      CHECK(ratio < prev);
      prev = ratio;
    }
  }

  TEST_CASE("outcome distribution record") {
    const auto j = to_json(measurement_chain(DoubletModel::ideal(1.0), 0.4, 2));
    CHECK(j.contains("probabilities"));
    CHECK(j.at("probabilities").size() == 4);
  }
}
