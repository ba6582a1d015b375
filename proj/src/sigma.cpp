#include "ssb/sigma.hpp"

#include <fftw3.h>

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "ssb/errors.hpp"

namespace ssb::sigma {

namespace {

constexpr double kPi = 3.141592653589793;
constexpr std::size_t kMaxPanels = 20'000'000;
const cplx kI{0.0, 1.0};

// Unitary DFT matrix, rows n = -N .. N-1, columns theta_j.
Matrix fourier_matrix(std::size_t n_modes) {
  const auto M = static_cast<Eigen::Index>(2 * n_modes);
  const auto N = static_cast<Eigen::Index>(n_modes);
  Matrix F(M, M);
  const double norm = 1.0 / std::sqrt(static_cast<double>(M));
  for (Eigen::Index r = 0; r < M; ++r)
    for (Eigen::Index j = 0; j < M; ++j) {
      const double phase = -2.0 * kPi * static_cast<double>((r - N) * j) / static_cast<double>(M);
      F(r, j) = std::polar(norm, phase);
    }
  return F;
}

void check_packet(const SquareWavePacket& packet, double mass, double hbar, double t) {
  if (!(packet.width > 0.0) || !std::isfinite(packet.width))
    throw ArgumentError("survival amplitude: width must be > 0");
  if (!(mass > 0.0)) throw ArgumentError("survival amplitude: mass must be > 0");
  if (!(hbar > 0.0)) throw ArgumentError("survival amplitude: hbar must be > 0");
  if (!(t >= 0.0) || !std::isfinite(t)) throw ArgumentError("survival amplitude: t must be >= 0");
}

double sinc2(double z) {
  const double s = std::sin(z) / z;
  return s * s;
}

// Panel edges covering [0, Z]; across each panel both sin^2 z and the
// chirp alpha z^2 advance by at most pi / 2.
std::vector<double> panel_edges(double alpha, double Z) {
  std::vector<double> edges{0.0};
  double z = 0.0;
  while (z < Z) {
    const double chirp = std::sqrt(z * z + kPi / (2.0 * alpha)) - z;
    z = std::min(Z, z + std::min(0.5 * kPi, chirp));
    edges.push_back(z);
    if (edges.size() > kMaxPanels)
      throw NumericError("survival amplitude: quadrature needs more than 2e7 panels");
  }
  return edges;
}

cplx panel(double a, double b, double alpha) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int sgn : {-1, 1}) {
      if (x[i] == 0.0 && sgn < 0) continue;
      const double z = c + sgn * h * x[i];
      sum += w[i] * sinc2(z) * std::polar(1.0, -alpha * z * z);
    }
  }
  return sum * h;
}

// int_Z^inf c z^-2 e^{i (b z - alpha z^2)} dz by two integrations by parts.
cplx oscillatory_tail(double c, double b, double alpha, double Z) {
  const double g = c / (Z * Z), gp = -2.0 * c / (Z * Z * Z);
  const double phip = b - 2.0 * alpha * Z, phipp = -2.0 * alpha;
  const cplx u = g / (kI * phip);
  const cplx up = (gp * phip - g * phipp) / (kI * phip * phip);
  return std::exp(kI * (b * Z - alpha * Z * Z)) * (-u + up / (kI * phip));
}

// (2/pi) int_Z^inf sin^2 z / z^2 e^{-i alpha z^2} dz.
cplx tail(double alpha, double Z) {
  const cplx t = oscillatory_tail(0.5, 0.0, alpha, Z) - oscillatory_tail(0.25, 2.0, alpha, Z) -
                 oscillatory_tail(0.25, -2.0, alpha, Z);
  return 2.0 / kPi * t;
}

cplx momentum_integral(double alpha, bool parallel) {
  const double Z = std::max(200.0, 3.0 / alpha);
  const auto edges = panel_edges(alpha, Z);
  const auto np = static_cast<long>(edges.size() - 1);
  std::vector<cplx> parts(edges.size() - 1);
#pragma omp parallel for schedule(static) if (parallel)
  for (long k = 0; k < np; ++k)
    parts[static_cast<std::size_t>(k)] =
        panel(edges[static_cast<std::size_t>(k)], edges[static_cast<std::size_t>(k) + 1], alpha);
  cplx sum = 0.0;
  for (const auto& p : parts) sum += p;
  return 2.0 / kPi * sum + tail(alpha, Z);
}

}  // namespace

void validate(const PhaseSystem& sys) {
  if (!(sys.rho0 > 0.0) || !std::isfinite(sys.rho0)) throw ArgumentError("rho0: must be > 0");
  if (!(sys.L > 0.0) || !std::isfinite(sys.L)) throw ArgumentError("L: must be > 0");
  if (!(sys.hbar > 0.0) || !std::isfinite(sys.hbar)) throw ArgumentError("hbar: must be > 0");
}

double CircleState::spacing() const noexcept { return 2.0 * kPi / static_cast<double>(size()); }

double CircleState::theta(std::size_t j) const noexcept {
  return spacing() * static_cast<double>(j);
}

Vector CircleState::coefficients() const { return values * std::sqrt(spacing()); }

CircleState uniform_ground_state(const PhaseSystem& sys, std::size_t n_modes) {
  validate(sys);
  if (n_modes < 4) throw ArgumentError("circle: n_modes must be >= 4");
  CircleState s;
  s.n_modes = n_modes;
  s.values = Vector::Constant(static_cast<Eigen::Index>(2 * n_modes), 1.0 / std::sqrt(2.0 * kPi));
  return s;
}

double norm_squared(const CircleState& psi) { return psi.values.squaredNorm() * psi.spacing(); }

cplx mean_phase_exponential(const CircleState& psi) {
  cplx sum = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j)
    sum += std::norm(psi.values[static_cast<Eigen::Index>(j)]) * std::polar(1.0, psi.theta(j));
  return sum * psi.spacing();
}

double kinetic_energy(const PhaseSystem& sys, const CircleState& psi) {
  validate(sys);
  const Vector d = fourier_matrix(psi.n_modes) * psi.coefficients();
  const auto N = static_cast<double>(psi.n_modes);
  double e = 0.0;
  for (Eigen::Index r = 0; r < d.size(); ++r) {
    const double n = static_cast<double>(r) - N;
    e += std::norm(d[r]) * sys.hbar * sys.hbar * n * n / (2.0 * sys.m_eff());
  }
  return e;
}

TiltedGroundState tilted_ground_state(const PhaseSystem& sys, double J, std::size_t n_points) {
  validate(sys);
  if (!(J >= 0.0) || !std::isfinite(J)) throw ArgumentError("J: must be >= 0");
  const double L3 = sys.L * sys.L * sys.L;
  const double variance =
      J == 0.0 ? std::numeric_limits<double>::infinity()
               : sys.hbar / (2.0 * std::pow(sys.rho0, 1.5) * std::sqrt(J) * L3);
  const double width = std::sqrt(variance);
  if (!(width < kPi / 4.0)) {
    std::ostringstream os;
    os << "tilted ground state: width " << width << " is not below pi/4";
    throw ValidityError(os.str());
  }
  const Grid grid(-kPi, kPi, n_points);
  Vector a(static_cast<Eigen::Index>(n_points));
  for (std::size_t i = 0; i < n_points; ++i) {
    const double th = grid.x(i);
    a[static_cast<Eigen::Index>(i)] = std::exp(-th * th / (4.0 * variance));
  }
  return {variance, width, hilbert::WaveFunction::normalized(grid, a)};
}

cplx survival_amplitude(const SquareWavePacket& packet, double mass, double hbar, double t) {
  check_packet(packet, mass, hbar, t);
  if (t == 0.0) return 1.0;
  const double alpha = 2.0 * hbar * t / (mass * packet.width * packet.width);
  return momentum_integral(alpha, true);
}

cplx survival_amplitude_grid(const SquareWavePacket& packet, double mass, double hbar, double t,
                             const GridSurvivalOptions& o) {
  check_packet(packet, mass, hbar, t);
  if (o.points_per_width < 8 || o.box_widths < 4)
    throw ArgumentError("survival amplitude grid: resolution too coarse");
  const std::size_t N = o.points_per_width * o.box_widths;
  const double dx = packet.width / static_cast<double>(o.points_per_width);
  const std::size_t first = N / 2 - o.points_per_width / 2;
  const double amp = 1.0 / std::sqrt(packet.width);

  auto* buf = reinterpret_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * N));
  if (!buf) throw NumericError("survival amplitude grid: allocation failed");
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> guard(buf, &fftw_free);
  fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(N), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft_1d(static_cast<int>(N), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  for (std::size_t j = 0; j < N; ++j) {
    const bool inside = j >= first && j < first + o.points_per_width;
    buf[j][0] = inside ? amp : 0.0;
    buf[j][1] = 0.0;
  }
  fftw_execute(fwd);
  const double dk = 2.0 * kPi / (static_cast<double>(N) * dx);
  for (std::size_t n = 0; n < N; ++n) {
    const double m = n < N / 2 ? static_cast<double>(n) : static_cast<double>(n) - static_cast<double>(N);
    const double k = m * dk;
    const cplx ph = std::polar(1.0 / static_cast<double>(N), -hbar * k * k * t / (2.0 * mass));
    const cplx v = cplx(buf[n][0], buf[n][1]) * ph;
    buf[n][0] = v.real();
    buf[n][1] = v.imag();
  }
  fftw_execute(bwd);
  cplx overlap = 0.0;
  for (std::size_t j = first; j < first + o.points_per_width; ++j)
    overlap += amp * cplx(buf[j][0], buf[j][1]);
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  return overlap * dx;
}

Timescale consistency_timescale(const PhaseSystem& sys, double width) {
  validate(sys);
  if (!(width > 0.0) || !std::isfinite(width)) throw ArgumentError("width: must be > 0");
  return {width * width * sys.m_eff() / sys.hbar, width >= kPi / 2.0};
}

SectorFamily sector_family(std::size_t n_sectors, std::size_t n_modes) {
  if (n_sectors < 2) throw ArgumentError("sectors: need at least two");
  const double width = 2.0 * kPi / static_cast<double>(n_sectors);
  if (static_cast<double>(n_modes) < 8.0 / width) {
    std::ostringstream os;
    os << "sectors: " << n_modes << " modes do not resolve width " << width << " (need "
       << std::ceil(8.0 / width) << ")";
    throw ResolutionError(os.str());
  }
  const std::size_t M = 2 * n_modes;
  if (n_sectors > M) throw ResolutionError("sectors: more sectors than grid points");
  std::vector<hilbert::Projector> members;
  std::vector<std::string> labels;
  for (std::size_t s = 0; s < n_sectors; ++s) {
    Vector d = Vector::Zero(static_cast<Eigen::Index>(M));
    for (std::size_t j = 0; j < M; ++j)
      if (j * n_sectors / M == s) d[static_cast<Eigen::Index>(j)] = 1.0;
    members.emplace_back(Matrix(d.asDiagonal()));
    labels.push_back("S" + std::to_string(s));
  }
  return {n_sectors, width, n_modes,
          histories::ProjectorFamily(std::move(members), std::move(labels))};
}

histories::Propagator circle_propagator(const PhaseSystem& sys, std::size_t n_modes) {
  validate(sys);
  auto F = std::make_shared<const Matrix>(fourier_matrix(n_modes));
  const double m = sys.m_eff(), hbar = sys.hbar;
  const auto N = static_cast<double>(n_modes);
  return [F, m, hbar, N](double dt) {
    Vector phase(F->rows());
    for (Eigen::Index r = 0; r < F->rows(); ++r) {
      const double n = static_cast<double>(r) - N;
      phase[r] = std::polar(1.0, -hbar * n * n * dt / (2.0 * m));
    }
    return Matrix(F->adjoint() * phase.asDiagonal() * (*F));
  };
}

CircleState sector_state(const SectorFamily& family, std::size_t sector) {
  if (sector >= family.n_sectors) throw ArgumentError("sector index out of range");
  CircleState s;
  s.n_modes = family.n_modes;
  s.values = family.projectors[sector].matrix().diagonal();
  s.values /= std::sqrt(norm_squared(s));
  return s;
}

histories::DecoherenceMatrix sector_histories(const PhaseSystem& sys, const SectorFamily& family,
                                              double tau, std::size_t n_steps,
                                              const hilbert::DensityOperator& rho,
                                              double epsilon) {
  validate(sys);
  if (n_steps == 0) throw ArgumentError("sector histories: need at least one step");
  if (!(tau > 0.0)) throw ArgumentError("sector histories: tau must be > 0");
  if (rho.dimension() != static_cast<Eigen::Index>(2 * family.n_modes))
    throw ArgumentError("sector histories: density operator does not live on the circle grid");
  return histories::exhaustive_decoherence_matrix(rho, family.projectors,
                                                  histories::time_grid(tau, n_steps),
                                                  circle_propagator(sys, family.n_modes), epsilon);
}

namespace reference {

cplx survival_amplitude(const SquareWavePacket& packet, double mass, double hbar, double t) {
  check_packet(packet, mass, hbar, t);
  if (t == 0.0) return 1.0;
  const double alpha = 2.0 * hbar * t / (mass * packet.width * packet.width);
  return momentum_integral(alpha, false);
}

}  // namespace reference

}  // namespace ssb::sigma
