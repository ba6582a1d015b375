#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ssb/potentials.hpp"

namespace ssb::classical {

// One independent generator per (seed, stream) pair.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

struct CanonicalSpec {
  PotentialSpec potential;
  double mass = 1.0;
  double temperature = 1.0;  // k_B T
  std::uint64_t seed = 0;
};

void validate(const CanonicalSpec& spec);

struct PhasePoint {
  double q;
  double p;
};

struct SamplerOptions {
  std::size_t burn_in = 5000;
  std::size_t stride = 20;
  double step = 0.0;             // 0 picks 2 sqrt(k_B T / V''(x0))
  double reflection_rate = 0.2;  // share of proposals that map q -> -q
};

struct CanonicalSample {
  std::vector<PhasePoint> points;
  double acceptance_rate = 0.0;
  bool mixing_warning = false;  // acceptance below 1%
};

// p exactly Gaussian; q by Metropolis mixing random-walk and reflection moves.
CanonicalSample sample_canonical(const CanonicalSpec& spec, std::size_t n,
                                 const SamplerOptions& options = {});

enum class Dynamics { hamiltonian, langevin };

struct DynamicsOptions {
  Dynamics kind = Dynamics::hamiltonian;
  double friction = 0.0;        // gamma, Langevin only
  double dt = 0.0;              // 0 picks period / 800
  double drift_bound = 1e-4;    // Hamiltonian energy drift limit
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> q;
  std::vector<double> p;
  double energy_drift = 0.0;  // max |E(t) - E(0)| / max(|E(0)|, k_B T); 0 for Langevin
};

// Velocity Verlet (Hamiltonian) or BAOAB (Langevin) from `start`.
Trajectory integrate(const CanonicalSpec& spec, PhasePoint start, double horizon,
                     const DynamicsOptions& options, std::mt19937_64& rng);

// Small-oscillation period 2 pi / omega of the deepest well.
double well_period(const CanonicalSpec& spec);

struct CorrelationSeries {
  std::vector<double> lags;
  std::vector<double> values;
  std::vector<double> standard_errors;
  std::size_t n_samples = 0;
  double mean_x = 0.0;
  double mean_x_stderr = 0.0;
  double max_energy_drift = 0.0;
};

// <X(s) X(s + lag)> with X = sign(q), averaged over time origins s within
// [0, horizon - lag] and over trajectories from canonical initial data.
// Standard errors come from the spread of per-trajectory estimates.
CorrelationSeries side_correlation(const CanonicalSpec& spec, double horizon,
                                   const std::vector<double>& lags, std::size_t n_traj,
                                   const DynamicsOptions& dynamics = {},
                                   const SamplerOptions& sampler = {});

struct MixtureDecomposition {
  double w_L;
  double w_R;
  double w_stderr;
  double overlap_defect;  // canonical mass in |q| < x0 / 10, by quadrature
};

MixtureDecomposition mixture_decomposition(const CanonicalSpec& spec, std::size_t n_samples = 20000);

// Boltzmann weight of |q| < cut relative to the whole line, by quadrature.
double boltzmann_mass_within(const CanonicalSpec& spec, double cut);

// ------------------------------------------------------------------ lattice

enum class Start { random, ordered };

// 2D periodic square lattice with energy -coupling * sum_<ij> s_i s_j.
class IsingLattice {
 public:
  IsingLattice(std::size_t side, double coupling, double temperature, std::uint64_t seed,
               std::uint64_t stream = 0, Start start = Start::random);

  std::size_t side() const noexcept { return side_; }
  int spin(std::size_t i, std::size_t j) const { return spins_[i * side_ + j]; }
  const std::vector<std::int8_t>& spins() const noexcept { return spins_; }
  double energy() const;
  double magnetization() const;  // per site
  // N random single-site Metropolis updates with min(1, exp(-dE / k_B T)).
  void sweep();
  // Mean of s(i,j) s(i+r,j) and s(i,j) s(i,j+r) over the lattice.
  double correlation(std::size_t r) const;

 private:
  std::size_t side_;
  double coupling_;
  double temperature_;
  std::mt19937_64 rng_;
  std::vector<std::int8_t> spins_;
  std::vector<std::uint32_t> neighbours_;
  double accept_[9];
};

struct SpinLattice {
  std::size_t side = 32;
  double coupling = 1.0;
  double temperature = 2.0;
  std::uint64_t seed = 0;
};

struct LatticeOptions {
  std::size_t n_chains = 32;
  std::size_t measure_every = 10;
  double burn_in_fraction = 0.2;
  std::size_t histogram_bins = 41;
  Start start = Start::random;
};

struct LatticeSignatures {
  std::vector<double> spin_corr;  // index r = 0 .. side / 2
  std::vector<double> spin_corr_stderr;
  double mean_abs_magnetization = 0.0;
  double mean_magnetization = 0.0;
  double mean_magnetization_stderr = 0.0;
  std::vector<double> bin_centers;
  std::vector<double> histogram;  // normalized to unit sum
  double mode_low = 0.0;          // histogram peak on m < 0
  double mode_high = 0.0;         // histogram peak on m > 0
  bool bimodal = false;           // dip between the two peaks below half the smaller one
};

LatticeSignatures lattice_signatures(const SpinLattice& lat, std::size_t sweeps,
                                     const LatticeOptions& options = {});

namespace reference {
CorrelationSeries side_correlation(const CanonicalSpec& spec, double horizon,
                                   const std::vector<double>& lags, std::size_t n_traj,
                                   const DynamicsOptions& dynamics = {},
                                   const SamplerOptions& sampler = {});
LatticeSignatures lattice_signatures(const SpinLattice& lat, std::size_t sweeps,
                                     const LatticeOptions& options = {});
}  // namespace reference

}  // namespace ssb::classical
