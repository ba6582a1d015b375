#pragma once

#include <complex>
#include <cstddef>

#include "ssb/histories.hpp"
#include "ssb/hilbert.hpp"

namespace ssb::sigma {

using hilbert::cplx;
using hilbert::Matrix;
using hilbert::Vector;

inline constexpr std::size_t kDefaultModes = 256;  // N; the circle grid has 2N points

// Average-phase degree of freedom: a free particle on the circle with
// moment of inertia m_eff = rho0^2 L^3.
struct PhaseSystem {
  double rho0 = 1.0;
  double L = 1.0;
  double hbar = 1.0;

  double m_eff() const noexcept { return rho0 * rho0 * L * L * L; }
};

void validate(const PhaseSystem& sys);

// Values on theta_j = 2 pi j / (2N), j = 0 .. 2N - 1, with
// sum |psi_j|^2 * spacing = 1.
struct CircleState {
  std::size_t n_modes = kDefaultModes;
  Vector values;

  std::size_t size() const noexcept { return 2 * n_modes; }
  double spacing() const noexcept;
  double theta(std::size_t j) const noexcept;
  Vector coefficients() const;  // unit l2 vector
};

CircleState uniform_ground_state(const PhaseSystem& sys, std::size_t n_modes = kDefaultModes);
double norm_squared(const CircleState& psi);
cplx mean_phase_exponential(const CircleState& psi);  // <e^{i theta}>
// <P^2 / 2 m_eff> from the Fourier coefficients, P = -i hbar d/dtheta.
double kinetic_energy(const PhaseSystem& sys, const CircleState& psi);

struct TiltedGroundState {
  double variance;  // hbar / (2 rho0^{3/2} J^{1/2} L^3)
  double width;     // sqrt(variance)
  hilbert::WaveFunction psi;  // Gaussian sampled on [-pi, pi]
};

// Harmonic approximation to the ground state of
// P^2 / 2 m_eff - J rho0 L^3 cos(theta).  Throws ValidityError when the
// width reaches pi / 4.
TiltedGroundState tilted_ground_state(const PhaseSystem& sys, double J,
                                      std::size_t n_points = hilbert::kDefaultGridPoints);

struct SquareWavePacket {
  double width;  // Delta
  double center = 0.0;
};

// <psi| exp(-i t H / hbar) |psi> for the free particle, from the momentum
// integral (2/pi) int_0^inf sin^2 z / z^2 exp(-i alpha z^2) dz with
// alpha = 2 hbar t / (m Delta^2).
cplx survival_amplitude(const SquareWavePacket& packet, double mass, double hbar, double t);

struct GridSurvivalOptions {
  std::size_t points_per_width = 1024;
  std::size_t box_widths = 4096;
};

// Same amplitude from spectral evolution of the sampled packet on a
// periodic box followed by a position-space overlap.
cplx survival_amplitude_grid(const SquareWavePacket& packet, double mass, double hbar, double t,
                             const GridSurvivalOptions& options = {});

struct Timescale {
  double t_CH;           // Delta^2 m_eff / hbar
  bool validity_warning; // Delta >= pi / 2
};

Timescale consistency_timescale(const PhaseSystem& sys, double width);

struct SectorFamily {
  std::size_t n_sectors;
  double width;  // 2 pi / n_sectors
  std::size_t n_modes;
  histories::ProjectorFamily projectors;
};

// Sectors [2 pi s / n, 2 pi (s + 1) / n) on the circle grid.  Throws
// ResolutionError when n_modes < 8 / width.
SectorFamily sector_family(std::size_t n_sectors, std::size_t n_modes = kDefaultModes);

// Exact free evolution on the circle grid: F^dagger diag(exp(-i hbar n^2 t / 2 m_eff)) F.
histories::Propagator circle_propagator(const PhaseSystem& sys, std::size_t n_modes);

// Normalized indicator of one sector.
CircleState sector_state(const SectorFamily& family, std::size_t sector);

histories::DecoherenceMatrix sector_histories(const PhaseSystem& sys, const SectorFamily& family,
                                              double tau, std::size_t n_steps,
                                              const hilbert::DensityOperator& rho,
                                              double epsilon = histories::kDefaultEpsilon);

namespace reference {
// Panel-by-panel serial quadrature of the momentum integral.
cplx survival_amplitude(const SquareWavePacket& packet, double mass, double hbar, double t);
}  // namespace reference

}  // namespace ssb::sigma
