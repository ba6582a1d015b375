#include "ssb/twolevel.hpp"

#include <cmath>

#include "ssb/errors.hpp"

namespace ssb::twolevel {

namespace {

constexpr double kParityTol = 1e-6;
constexpr std::size_t kMaxChain = 20;

double parity_defect(const hilbert::WaveFunction& psi, double sign) {
  const auto& a = psi.amplitudes();
  const double scale = a.cwiseAbs().maxCoeff();
  return (a - sign * a.reverse()).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

DoubletModel DoubletModel::ideal(double omega_gap, double hbar) {
  if (!(omega_gap >= 0.0) || !std::isfinite(omega_gap))
    throw ArgumentError("doublet: omega_gap must be >= 0");
  if (!(hbar > 0.0)) throw ArgumentError("doublet: hbar must be > 0");
  DoubletModel m;
  m.omega_gap = omega_gap;
  m.hbar = hbar;
  m.E1 = hbar * omega_gap;
  return m;
}

DoubletModel build_doublet(const PotentialSpec& spec, double mass, double hbar,
                           const DoubletOptions& options) {
  if (!spec.is_symmetric()) throw ShapeError("doublet: potential is not reflection symmetric");
  const WellGeometry geom = well_geometry(spec, mass);
  double half = options.half_width;
  if (half <= 0.0) half = std::abs(geom.x0) + 12.0 * std::sqrt(hbar / (mass * geom.omega));
  half = std::min(half, std::min(-spec.domain_min(), spec.domain_max()));
  const Grid grid(-half, half, options.n_points);
  const auto H = hilbert::build_hamiltonian(grid, spec, mass, hbar);
  const auto sp = hilbert::eigendecompose(H, 2);

  auto psi0 = sp.state(0);
  auto psi1 = sp.state(1);
  if (parity_defect(psi0, 1.0) > kParityTol || parity_defect(psi1, -1.0) > kParityTol)
    throw ShapeError("doublet: lowest states lack definite opposite parity");
  // psi1 positive on the right so that psi0 + psi1 sits on the right.
  const auto& a1 = psi1.amplitudes();
  if (a1.tail(a1.size() / 2).real().sum() < 0.0)
    psi1 = hilbert::WaveFunction(grid, -psi1.amplitudes());

  const double r = 1.0 / std::sqrt(2.0);
  DoubletModel m;
  m.hbar = hbar;
  m.E0 = sp.energies[0];
  m.E1 = sp.energies[1];
  m.omega_gap = (m.E1 - m.E0) / hbar;
  m.psi_L = hilbert::WaveFunction(grid, r * (psi0.amplitudes() - psi1.amplitudes()));
  m.psi_R = hilbert::WaveFunction(grid, r * (psi0.amplitudes() + psi1.amplitudes()));
  m.psi0 = std::move(psi0);
  m.psi1 = std::move(psi1);
  m.localization =
      hilbert::expectation(*m.psi_R, hilbert::position_projector(grid, hilbert::Region::right_of(0.0)));
  return m;
}

OutcomeDistribution measurement_chain(const DoubletModel& model, double tau, std::size_t n) {
  if (n == 0) throw ArgumentError("measurement chain: n must be >= 1");
  if (n > kMaxChain) throw ArgumentError("measurement chain: n exceeds 20");
  if (!(tau >= 0.0)) throw ArgumentError("measurement chain: tau must be >= 0");
  OutcomeDistribution d;
  d.n_measurements = n;
  d.tau = tau;
  d.angle = model.rotation_rate() * tau;
  const double c2 = std::pow(std::cos(d.angle), 2);
  const double s2 = std::pow(std::sin(d.angle), 2);
  for (std::size_t code = 0; code < (std::size_t{1} << n); ++code) {
    std::string s(n, 'L');
    for (std::size_t i = 0; i < n; ++i)
      if (code >> (n - 1 - i) & 1U) s[i] = 'R';
    double p = 0.5;
    for (std::size_t i = 1; i < n; ++i) p *= s[i] == s[i - 1] ? c2 : s2;
    d.probabilities[s] = p;
  }
  return d;
}

ProtocolComparison protocol_compare(const DoubletModel& model, double tau) {
  if (!(tau >= 0.0)) throw ArgumentError("protocol compare: tau must be >= 0");
  const double a = model.rotation_rate() * tau;
  const double c = std::cos(a), s = std::sin(a);
  const double c2a = std::cos(2.0 * a);
  ProtocolComparison out;
  out.pr_skip = 0.5 * c2a * c2a;
  out.pr_sum = 0.5 * std::pow(c, 4) + 0.5 * std::pow(s, 4);
  out.violation = out.pr_skip - out.pr_sum;
  return out;
}

TwoLevelSystem two_level_system(const DoubletModel& model) {
  using hilbert::Matrix;
  Matrix pl = Matrix::Zero(2, 2), pr = Matrix::Zero(2, 2);
  pl(0, 0) = 1.0;
  pr(1, 1) = 1.0;
  histories::ProjectorFamily family({hilbert::Projector(pl), hilbert::Projector(pr)}, {"L", "R"});
  // Columns: psi0 = (L + R)/sqrt2, psi1 = (R - L)/sqrt2.
  const double r = 1.0 / std::sqrt(2.0);
  Matrix basis(2, 2);
  basis << r, -r, r, r;
  auto U = histories::spectral_propagator({model.E0, model.E1}, basis, model.hbar);
  auto ground = hilbert::DensityOperator::pure(hilbert::Vector(basis.col(0)));
  auto left = hilbert::DensityOperator::diagonal({1.0, 0.0});
  return {std::move(family), std::move(U), std::move(ground), std::move(left)};
}

nlohmann::json to_json(const OutcomeDistribution& d) {
  nlohmann::json j;
  j["n_measurements"] = d.n_measurements;
  j["tau"] = d.tau;
  j["angle"] = d.angle;
  j["probabilities"] = d.probabilities;
  return j;
}

}  // namespace ssb::twolevel
