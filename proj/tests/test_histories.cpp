#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "ssb/errors.hpp"
#include "ssb/histories.hpp"
#include "ssb/twolevel.hpp"

using namespace ssb;
using namespace ssb::histories;

namespace {

constexpr double kPi = 3.14159265358979323846;

Matrix random_matrix(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

Matrix random_unitary(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, rng));
  return qr.householderQ() * Matrix::Identity(n, n);
}

Matrix random_hamiltonian(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix a = random_matrix(n, rng);
  return 0.5 * (a + a.adjoint());
}

DensityOperator random_density(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix a = random_matrix(n, rng);
  Matrix r = a * a.adjoint();
  r /= r.trace().real();
  return DensityOperator(0.5 * (r + r.adjoint()));
}

// Projectors onto consecutive column blocks of an orthonormal basis.
ProjectorFamily block_family(const Matrix& basis, const std::vector<int>& sizes) {
  std::vector<Projector> members;
  std::vector<std::string> labels;
  Eigen::Index start = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    const Matrix cols = basis.middleCols(start, sizes[b]);
    members.emplace_back(cols * cols.adjoint());
    labels.push_back("P" + std::to_string(b));
    start += sizes[b];
  }
  return ProjectorFamily(std::move(members), std::move(labels));
}

Propagator exp_propagator(const Matrix& H) {
  return [H](double dt) { return Matrix((cplx(0.0, -dt) * H).exp()); };
}

// Oracle: Heisenberg-picture chain product with reference time t_0 and
// D(h, h') = tr(rho H(h)^dagger H(h')), matrix exponentials throughout.
Matrix heisenberg_operator(const History& h, const ProjectorFamily& f, const Matrix& H) {
  const Eigen::Index n = f.dimension();
  Matrix out = Matrix::Identity(n, n);
  for (std::size_t k = 0; k < h.length(); ++k) {
    Matrix p = Matrix::Zero(n, n);
    for (auto j : h.assignments[k]) p += f[j].matrix();
    const Matrix u = (cplx(0.0, -(h.times[k] - h.times[0])) * H).exp();
    out = u.adjoint() * p * u * out;
  }
  return out;
}

cplx oracle_D(const DensityOperator& rho, const History& a, const History& b,
              const ProjectorFamily& f, const Matrix& H) {
  return (rho.matrix() * heisenberg_operator(a, f, H).adjoint() * heisenberg_operator(b, f, H)).trace();
}

struct RandomSetup {
  Matrix H;
  ProjectorFamily family;
  DensityOperator rho;
  Propagator U;
};

RandomSetup random_setup(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix H = random_hamiltonian(5, rng);
  auto family = block_family(random_unitary(5, rng), {2, 1, 2});
  auto rho = random_density(5, rng);
  return {H, std::move(family), std::move(rho), exp_propagator(H)};
}

}  // namespace

TEST_SUITE("histories") {
  TEST_CASE("history operators of trivial histories") {
    std::mt19937_64 rng(1);
    const auto f = block_family(random_unitary(4, rng), {2, 2});
    const Propagator id = [](double) { return Matrix(Matrix::Identity(4, 4)); };
    CHECK((history_operator(make_history({0.0}, {"?"}, f), f, id) - Matrix::Identity(4, 4)).norm() < 1e-14);
    CHECK((history_operator(make_history({0.0}, {"P1"}, f), f, id) - f[1].matrix()).norm() < 1e-14);
    CHECK(history_operator(make_history({0.0, 1.0}, {"P0", "P1"}, f), f, id).norm() < 1e-14);
  }

  TEST_CASE("unit history has weight one") {
    const auto s = random_setup(2);
    const auto all = make_history({0.0, 0.4, 0.9}, {"?", "?", "?"}, s.family);
    CHECK(std::abs(decoherence_functional(s.rho, all, all, s.family, s.U) - 1.0) < 1e-12);
  }

  TEST_CASE("decoherence matrix matches the Heisenberg-picture oracle") {
    const auto s = random_setup(3);
    const std::vector<double> times{0.0, 0.35, 1.1};
    const auto hs = enumerate_histories(s.family, times);
    REQUIRE(hs.size() == 27);
    const auto dm = decoherence_matrix(s.rho, hs, s.family, s.U);
    double worst = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i)
      for (std::size_t j = 0; j < hs.size(); ++j)
        worst = std::max(worst, std::abs(dm.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                         oracle_D(s.rho, hs[i], hs[j], s.family, s.H)));
    CHECK(worst < 1e-12);
    CHECK((dm.D - dm.D.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(dm.D.diagonal().real().minCoeff() > -1e-12);
    CHECK(std::abs(dm.diagonal_sum - 1.0) < 1e-8);
    const Matrix ref = reference::decoherence_matrix(s.rho, hs, s.family, s.U);
    CHECK((ref - dm.D).cwiseAbs().maxCoeff() < 1e-13);
  }

  TEST_CASE("exhaustive matrix agrees with the enumerated one") {
    const auto s = random_setup(4);
    const std::vector<double> times{0.0, 0.5, 0.8, 1.6};
    const auto full = decoherence_matrix(s.rho, enumerate_histories(s.family, times), s.family, s.U);
    const auto ex = exhaustive_decoherence_matrix(s.rho, s.family, times, s.U);
    std::map<std::string, Eigen::Index> pos;
    for (std::size_t i = 0; i < full.labels.size(); ++i) pos[full.labels[i]] = static_cast<Eigen::Index>(i);
    for (std::size_t i = 0; i < ex.labels.size(); ++i)
      for (std::size_t j = 0; j < ex.labels.size(); ++j)
        CHECK(std::abs(ex.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                       full.D(pos.at(ex.labels[i]), pos.at(ex.labels[j]))) < 1e-13);
    CHECK(ex.classification == full.classification);
    CHECK(std::abs(ex.diagonal_sum - 1.0) < 1e-8);
  }

  TEST_CASE("coarse-graining is additive in each argument") {
    const auto s = random_setup(5);
    const std::vector<double> t{0.0, 0.7, 1.3};
    const auto h1 = make_history(t, {"P0", "P2", "P1"}, s.family);
    const auto h2 = make_history(t, {"P0", "P1", "P1"}, s.family);
    const auto h3 = make_history(t, {"P2", "P0", "P1"}, s.family);
    History sum = h1;
    sum.assignments[1] = {2, 1};
    const cplx lhs = decoherence_functional(s.rho, sum, h3, s.family, s.U);
    const cplx rhs = decoherence_functional(s.rho, h1, h3, s.family, s.U) +
                     decoherence_functional(s.rho, h2, h3, s.family, s.U);
    CHECK(std::abs(lhs - rhs) < 1e-10);
    const double v = additivity_violation(s.rho, h1, h2, s.family, s.U);
    const double oracle = probability(s.rho, sum, s.family, s.U).raw - probability(s.rho, h1, s.family, s.U).raw -
                          probability(s.rho, h2, s.family, s.U).raw;
    CHECK(std::abs(v - oracle) < 1e-10);
    CHECK(std::abs(v - 2.0 * oracle_D(s.rho, h1, h2, s.family, s.H).real()) < 1e-10);
  }

  TEST_CASE("probabilities of single-time and orthogonal histories") {
    std::mt19937_64 rng(6);
    const Matrix W = random_unitary(4, rng);
    const auto f = block_family(W, {1, 1, 2});
    const auto U = exp_propagator(random_hamiltonian(4, rng));
    const auto rho = random_density(4, rng);
    double total = 0.0;
    for (const auto& l : f.labels()) total += probability(rho, make_history({0.0}, {l}, f), f, U).raw;
    CHECK(std::abs(total - 1.0) < 1e-8);
    const auto in_p0 = DensityOperator::pure(Vector(W.col(0)));
    CHECK(std::abs(probability(in_p0, make_history({0.0, 1.0}, {"P1", "P2"}, f), f, U).raw) < 1e-10);
  }

  TEST_CASE("exactly conserved family decoheres completely") {
    std::mt19937_64 rng(7);
    const Matrix H = random_hamiltonian(5, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    const auto f = block_family(es.eigenvectors(), {2, 1, 2});
    const auto U = exp_propagator(H);
    const auto rho = random_density(5, rng);
    CHECK(conservation_check(U(0.8), f) < 1e-12);
    const auto hs = enumerate_histories(f, {0.0, 0.4, 1.0, 1.7});
    for (double eps : {1e-6, 1e-3}) {
      const auto dm = decoherence_matrix(rho, hs, f, U, eps);
      CHECK(dm.classification == Classification::medium_decoherent);
    }
    const auto dm = decoherence_matrix(rho, hs, f, U);
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const auto& a = hs[i].assignments;
      const bool constant = std::all_of(a.begin(), a.end(), [&](auto& s) { return s == a[0]; });
      for (std::size_t j = 0; j < hs.size(); ++j) {
        const cplx d = dm.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (i == j && constant)
          CHECK(std::abs(d - (rho.matrix() * f[a[0][0]].matrix()).trace()) < 1e-10);
        else
          CHECK(std::abs(d) < 1e-12);
      }
    }
  }

  TEST_CASE("two-level left state reproduces cos^2 and sin^2 weights") {
    const auto model = twolevel::DoubletModel::ideal(0.8);
    const auto sys = twolevel::two_level_system(model);
    for (double tau : {0.3, 1.1, 2.9}) {
      const double a = model.rotation_rate() * tau;
      const auto LL = make_history({0.0, tau}, {"L", "L"}, sys.family);
      const auto LR = make_history({0.0, tau}, {"L", "R"}, sys.family);
      CHECK(std::abs(probability(sys.left, LL, sys.family, sys.U).raw - std::cos(a) * std::cos(a)) < 1e-12);
      CHECK(std::abs(probability(sys.left, LR, sys.family, sys.U).raw - std::sin(a) * std::sin(a)) < 1e-12);
    }
  }

  TEST_CASE("classification of single-well and double-well sets") {
    const auto single = twolevel::DoubletModel::ideal(2.0);  // rotation rate 1
    const auto s1 = twolevel::two_level_system(single);
    const auto dm1 = exhaustive_decoherence_matrix(s1.ground, s1.family, time_grid(kPi / 4, 2), s1.U, 1e-3);
    CHECK(dm1.classification == Classification::interfering);

    const double omega_I = 4.3e-6;
    const auto dbl = twolevel::DoubletModel::ideal(omega_I);
    const auto s2 = twolevel::two_level_system(dbl);
    const auto dm2 = exhaustive_decoherence_matrix(s2.ground, s2.family, time_grid(1e-3 / omega_I, 2), s2.U, 1e-3);
    CHECK(dm2.classification == Classification::approximately_consistent);
  }

  TEST_CASE("conservation measure of left/right projectors") {
    const double omega = 1e-3;
    const auto sys = twolevel::two_level_system(twolevel::DoubletModel::ideal(omega));
    const double small = conservation_check(sys.U(1.0), sys.family);
    CHECK(small > 0.0);
    CHECK(small < 10.0 * omega);
    CHECK(conservation_check(sys.U(kPi / omega), sys.family) > 0.5);
  }

  TEST_CASE("enumeration bound") {
    std::mt19937_64 rng(8);
    const auto f2 = block_family(random_unitary(2, rng), {1, 1});
    CHECK(enumerate_histories(f2, time_grid(1.0, 11)).size() == 4096);
    CHECK_THROWS_AS(enumerate_histories(f2, time_grid(1.0, 12)), ArgumentError);
    const auto f5 = block_family(random_unitary(5, rng), {1, 1, 1, 1, 1});
    CHECK_THROWS_AS(enumerate_histories(f5, {0.0}), ArgumentError);
  }

  TEST_CASE("json record stores complex entries as pairs") {
    const auto sys = twolevel::two_level_system(twolevel::DoubletModel::ideal(1.0));
    const auto dm = exhaustive_decoherence_matrix(sys.ground, sys.family, time_grid(0.5, 1), sys.U);
    const auto j = to_json(dm);
    CHECK(j.at("D").size() == dm.labels.size());
    CHECK(j.at("D")[0][1].size() == 2);
    CHECK(j.at("classification").get<std::string>() == to_string(dm.classification));
  }
}
