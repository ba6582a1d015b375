#include "ssb/classical.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ssb/errors.hpp"

namespace ssb::classical {

namespace {

constexpr double kTwoPi = 6.283185307179586;

struct MeanError {
  double mean;
  double stderr_mean;
};

MeanError mean_and_error(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

double force(const CanonicalSpec& spec, double q) { return -derivative(spec.potential, q, 1); }

double hamiltonian(const CanonicalSpec& spec, double q, double p) {
  return 0.5 * p * p / spec.mass + evaluate(spec.potential, q);
}

std::size_t resolve_steps(double horizon, double dt) {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

double resolve_dt(const CanonicalSpec& spec, const DynamicsOptions& o) {
  return o.dt > 0.0 ? o.dt : well_period(spec) / 800.0;
}

// Sign series X_k = sign(q_k) at every integrator step, with drift checks.
std::vector<std::int8_t> sign_series(const CanonicalSpec& spec, PhasePoint start,
                                     std::size_t steps, double dt, const DynamicsOptions& o,
                                     std::mt19937_64& rng, double& drift) {
  std::vector<std::int8_t> x(steps + 1);
  double q = start.q, p = start.p;
  const double m = spec.mass, kT = spec.temperature;
  const double e0 = hamiltonian(spec, q, p);
  const double escale = std::max(std::abs(e0), kT);
  drift = 0.0;
  x[0] = q >= 0.0 ? 1 : -1;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double decay = std::exp(-o.friction * dt);
  const double kick = std::sqrt(m * kT * (1.0 - decay * decay));
  double f = force(spec, q);
  for (std::size_t k = 1; k <= steps; ++k) {
    if (o.kind == Dynamics::hamiltonian) {
      p += 0.5 * dt * f;
      q += dt * p / m;
      f = force(spec, q);
      p += 0.5 * dt * f;
      drift = std::max(drift, std::abs(hamiltonian(spec, q, p) - e0) / escale);
    } else {
      p += 0.5 * dt * f;
      q += 0.5 * dt * p / m;
      p = decay * p + kick * gauss(rng);
      q += 0.5 * dt * p / m;
      f = force(spec, q);
      p += 0.5 * dt * f;
    }
    x[k] = q >= 0.0 ? 1 : -1;
  }
  if (o.kind == Dynamics::hamiltonian && drift > o.drift_bound) {
    std::ostringstream os;
    os << "integrate: relative energy drift " << drift << " exceeds " << o.drift_bound;
    throw IntegrationError(os.str());
  }
  return x;
}

struct TrajectoryEstimate {
  std::vector<double> corr;
  double mean_x;
  double drift;
};

TrajectoryEstimate estimate_one(const CanonicalSpec& spec, PhasePoint start, std::size_t steps,
                                double dt, const std::vector<std::size_t>& lag_steps,
                                const DynamicsOptions& o, std::uint64_t stream) {
  auto rng = make_rng(spec.seed, stream);
  TrajectoryEstimate est;
  const auto x = sign_series(spec, start, steps, dt, o, rng, est.drift);
  est.mean_x = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const std::size_t origin_stride = std::max<std::size_t>(1, steps / 400);
  est.corr.resize(lag_steps.size());
  for (std::size_t l = 0; l < lag_steps.size(); ++l) {
    const std::size_t lag = lag_steps[l];
    if (lag == 0) {
      est.corr[l] = 1.0;
      continue;
    }
    long sum = 0;
    std::size_t count = 0;
    for (std::size_t s = 0; s + lag <= steps; s += origin_stride, ++count) sum += x[s] * x[s + lag];
    est.corr[l] = static_cast<double>(sum) / static_cast<double>(count);
  }
  return est;
}

CorrelationSeries correlate(const CanonicalSpec& spec, double horizon,
                            const std::vector<double>& lags, std::size_t n_traj,
                            const DynamicsOptions& dynamics, const SamplerOptions& sampler,
                            bool parallel) {
  validate(spec);
  if (n_traj < 100) throw ArgumentError("side_correlation: n_traj must be >= 100");
  if (lags.empty()) throw ArgumentError("side_correlation: no lags");
  if (!(horizon > 0.0)) throw ArgumentError("side_correlation: horizon must be > 0");
  if (dynamics.kind == Dynamics::langevin && !(dynamics.friction > 0.0))
    throw ArgumentError("side_correlation: Langevin dynamics needs friction > 0");
  const double dt = resolve_dt(spec, dynamics);
  const std::size_t steps = resolve_steps(horizon, dt);
  std::vector<std::size_t> lag_steps;
  for (double lag : lags) {
    if (!(lag >= 0.0) || lag > horizon * (1.0 + 1e-12))
      throw ArgumentError("side_correlation: horizon must cover every lag");
    lag_steps.push_back(std::min(steps, resolve_steps(lag, dt)));
  }
  const auto init = sample_canonical(spec, n_traj, sampler);
  std::vector<TrajectoryEstimate> est(n_traj);
  const auto n = static_cast<long>(n_traj);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < n; ++i)
    est[static_cast<std::size_t>(i)] =
        estimate_one(spec, init.points[static_cast<std::size_t>(i)], steps, dt, lag_steps,
                     dynamics, static_cast<std::uint64_t>(i) + 1);

  CorrelationSeries out;
  out.n_samples = n_traj;
  for (std::size_t l = 0; l < lags.size(); ++l) {
    out.lags.push_back(static_cast<double>(lag_steps[l]) * dt);
    std::vector<double> v(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) v[i] = est[i].corr[l];
    const auto me = mean_and_error(v);
    out.values.push_back(lag_steps[l] == 0 ? 1.0 : me.mean);
    out.standard_errors.push_back(lag_steps[l] == 0 ? 0.0 : me.stderr_mean);
  }
  std::vector<double> mx(n_traj);
  for (std::size_t i = 0; i < n_traj; ++i) {
    mx[i] = est[i].mean_x;
    out.max_energy_drift = std::max(out.max_energy_drift, est[i].drift);
  }
  const auto me = mean_and_error(mx);
  out.mean_x = me.mean;
  out.mean_x_stderr = me.stderr_mean;
  return out;
}

// ---------------------------------------------------------------- lattice core

struct ChainResult {
  std::vector<double> corr;
  double mean_m;
  double mean_abs_m;
  std::vector<double> counts;
};

ChainResult run_chain(const SpinLattice& lat, std::size_t sweeps, const LatticeOptions& o,
                      std::uint64_t stream) {
  IsingLattice chain(lat.side, lat.coupling, lat.temperature, lat.seed, stream, o.start);
  const auto burn = static_cast<std::size_t>(o.burn_in_fraction * static_cast<double>(sweeps));
  const std::size_t rmax = lat.side / 2;
  ChainResult res{std::vector<double>(rmax + 1, 0.0), 0.0, 0.0,
                  std::vector<double>(o.histogram_bins, 0.0)};
  std::size_t samples = 0;
  for (std::size_t s = 0; s < sweeps; ++s) {
    chain.sweep();
    if (s < burn || (s - burn) % o.measure_every != 0) continue;
    const double m = chain.magnetization();
    res.mean_m += m;
    res.mean_abs_m += std::abs(m);
    for (std::size_t r = 0; r <= rmax; ++r) res.corr[r] += chain.correlation(r);
    auto bin = static_cast<std::size_t>((m + 1.0) / 2.0 * static_cast<double>(o.histogram_bins));
    res.counts[std::min(bin, o.histogram_bins - 1)] += 1.0;
    ++samples;
  }
  const double inv = 1.0 / static_cast<double>(samples);
  res.mean_m *= inv;
  res.mean_abs_m *= inv;
  for (auto& c : res.corr) c *= inv;
  return res;
}

LatticeSignatures signatures(const SpinLattice& lat, std::size_t sweeps, const LatticeOptions& o,
                             bool parallel) {
  if (lat.side < 16) throw ArgumentError("lattice_signatures: side must be >= 16");
  if (sweeps < 10000) throw ArgumentError("lattice_signatures: sweeps must be >= 10^4");
  if (o.n_chains < 2) throw ArgumentError("lattice_signatures: need at least two chains");
  if (o.measure_every == 0 || o.histogram_bins < 3)
    throw ArgumentError("lattice_signatures: invalid measurement options");
  if (!(o.burn_in_fraction >= 0.0 && o.burn_in_fraction < 1.0))
    throw ArgumentError("lattice_signatures: burn_in_fraction must lie in [0, 1)");
  std::vector<ChainResult> chains(o.n_chains);
  const auto n = static_cast<long>(o.n_chains);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long c = 0; c < n; ++c)
    chains[static_cast<std::size_t>(c)] = run_chain(lat, sweeps, o, static_cast<std::uint64_t>(c));

  LatticeSignatures out;
  const std::size_t rmax = lat.side / 2;
  for (std::size_t r = 0; r <= rmax; ++r) {
    std::vector<double> v;
    for (const auto& c : chains) v.push_back(c.corr[r]);
    const auto me = mean_and_error(v);
    out.spin_corr.push_back(me.mean);
    out.spin_corr_stderr.push_back(me.stderr_mean);
  }
  std::vector<double> m, am;
  for (const auto& c : chains) {
    m.push_back(c.mean_m);
    am.push_back(c.mean_abs_m);
  }
  const auto mm = mean_and_error(m);
  out.mean_magnetization = mm.mean;
  out.mean_magnetization_stderr = mm.stderr_mean;
  out.mean_abs_magnetization = mean_and_error(am).mean;

  const std::size_t nb = o.histogram_bins;
  out.histogram.assign(nb, 0.0);
  for (const auto& c : chains)
    for (std::size_t b = 0; b < nb; ++b) out.histogram[b] += c.counts[b];
  const double total = std::accumulate(out.histogram.begin(), out.histogram.end(), 0.0);
  for (auto& h : out.histogram) h /= total;
  for (std::size_t b = 0; b < nb; ++b)
    out.bin_centers.push_back(-1.0 + (2.0 * static_cast<double>(b) + 1.0) / static_cast<double>(nb));

  std::size_t lo = nb, hi = nb;
  for (std::size_t b = 0; b < nb; ++b) {
    if (out.bin_centers[b] < -1e-12 && (lo == nb || out.histogram[b] > out.histogram[lo])) lo = b;
    if (out.bin_centers[b] > 1e-12 && (hi == nb || out.histogram[b] >= out.histogram[hi])) hi = b;
  }
  if (lo < nb && hi < nb) {
    out.mode_low = out.bin_centers[lo];
    out.mode_high = out.bin_centers[hi];
    const double dip = *std::min_element(out.histogram.begin() + static_cast<long>(lo),
                                         out.histogram.begin() + static_cast<long>(hi) + 1);
    const double smaller = std::min(out.histogram[lo], out.histogram[hi]);
    out.bimodal = smaller > 0.0 && dip < 0.5 * smaller;
  }
  return out;
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

void validate(const CanonicalSpec& spec) {
  if (!(spec.temperature > 0.0) || !std::isfinite(spec.temperature))
    throw ArgumentError("temperature: must be > 0");
  if (!(spec.mass > 0.0) || !std::isfinite(spec.mass)) throw ArgumentError("mass: must be > 0");
}

double well_period(const CanonicalSpec& spec) {
  return kTwoPi / well_geometry(spec.potential, spec.mass).omega;
}

CanonicalSample sample_canonical(const CanonicalSpec& spec, std::size_t n,
                                 const SamplerOptions& o) {
  validate(spec);
  if (n == 0) throw ArgumentError("sample_canonical: n must be >= 1");
  if (o.stride == 0) throw ArgumentError("sample_canonical: stride must be >= 1");
  const auto geom = well_geometry(spec.potential, spec.mass);
  const double kT = spec.temperature;
  double step = o.step;
  if (step <= 0.0) {
    const double curv = derivative(spec.potential, geom.x0, 2);
    step = 2.0 * std::sqrt(kT / (curv > 0.0 ? curv : 1.0));
  }
  auto rng = make_rng(spec.seed, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double lo = spec.potential.domain_min(), hi = spec.potential.domain_max();
  double q = geom.x0;
  double vq = evaluate(spec.potential, q);
  std::size_t accepted = 0, proposed = 0;
  CanonicalSample out;
  out.points.reserve(n);
  const double p_sd = std::sqrt(spec.mass * kT);
  const std::size_t total = o.burn_in + n * o.stride;
  for (std::size_t k = 1; k <= total; ++k) {
    const double qn = unif(rng) < o.reflection_rate ? -q : q + step * gauss(rng);
    ++proposed;
    if (qn >= lo && qn <= hi) {
      const double vn = evaluate(spec.potential, qn);
      if (vn <= vq || unif(rng) < std::exp(-(vn - vq) / kT)) {
        q = qn;
        vq = vn;
        ++accepted;
      }
    }
    if (k > o.burn_in && (k - o.burn_in) % o.stride == 0)
      out.points.push_back({q, p_sd * gauss(rng)});
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  out.mixing_warning = out.acceptance_rate < 0.01;
  return out;
}

Trajectory integrate(const CanonicalSpec& spec, PhasePoint start, double horizon,
                     const DynamicsOptions& o, std::mt19937_64& rng) {
  validate(spec);
  if (!(horizon > 0.0)) throw ArgumentError("integrate: horizon must be > 0");
  const double dt = resolve_dt(spec, o);
  const std::size_t steps = resolve_steps(horizon, dt);
  Trajectory t;
  t.times.reserve(steps + 1);
  t.q.reserve(steps + 1);
  t.p.reserve(steps + 1);
  double q = start.q, p = start.p;
  const double m = spec.mass, kT = spec.temperature;
  const double e0 = hamiltonian(spec, q, p);
  const double escale = std::max(std::abs(e0), kT);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double decay = std::exp(-o.friction * dt);
  const double kick = std::sqrt(m * kT * (1.0 - decay * decay));
  double f = force(spec, q);
  t.times.push_back(0.0);
  t.q.push_back(q);
  t.p.push_back(p);
  for (std::size_t k = 1; k <= steps; ++k) {
    p += 0.5 * dt * f;
    if (o.kind == Dynamics::hamiltonian) {
      q += dt * p / m;
    } else {
      q += 0.5 * dt * p / m;
      p = decay * p + kick * gauss(rng);
      q += 0.5 * dt * p / m;
    }
    f = force(spec, q);
    p += 0.5 * dt * f;
    if (o.kind == Dynamics::hamiltonian)
      t.energy_drift = std::max(t.energy_drift, std::abs(hamiltonian(spec, q, p) - e0) / escale);
    t.times.push_back(static_cast<double>(k) * dt);
    t.q.push_back(q);
    t.p.push_back(p);
  }
  if (o.kind == Dynamics::hamiltonian && t.energy_drift > o.drift_bound) {
    std::ostringstream os;
    os << "integrate: relative energy drift " << t.energy_drift << " exceeds " << o.drift_bound;
    throw IntegrationError(os.str());
  }
  return t;
}

CorrelationSeries side_correlation(const CanonicalSpec& spec, double horizon,
                                   const std::vector<double>& lags, std::size_t n_traj,
                                   const DynamicsOptions& dynamics, const SamplerOptions& sampler) {
  return correlate(spec, horizon, lags, n_traj, dynamics, sampler, true);
}

double boltzmann_mass_within(const CanonicalSpec& spec, double cut) {
  validate(spec);
  if (!(cut >= 0.0)) throw ArgumentError("boltzmann_mass_within: cut must be >= 0");
  const auto geom = well_geometry(spec.potential, spec.mass);
  const double vmin = evaluate(spec.potential, geom.x0);
  const double kT = spec.temperature;
  auto w = [&](double x) { return std::exp(-(evaluate(spec.potential, x) - vmin) / kT); };
  double X = std::abs(geom.x0) + 1.0;
  for (int i = 0; i < 60 && (w(X) > 1e-26 || w(-X) > 1e-26); ++i) X *= 2.0;
  X = std::min({X, -spec.potential.domain_min(), spec.potential.domain_max()});
  cut = std::min(cut, X);
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  std::vector<double> knots{-X, -cut, cut, X};
  const double a = std::abs(geom.x0);
  if (a > cut && a < X) knots.insert(knots.begin() + 1, -a), knots.insert(knots.end() - 1, a);
  std::sort(knots.begin(), knots.end());
  double inside = 0.0, total = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    if (knots[k + 1] <= knots[k]) continue;
    const double part = GK::integrate(w, knots[k], knots[k + 1], 20, 1e-12);
    total += part;
    if (knots[k] >= -cut && knots[k + 1] <= cut) inside += part;
  }
  return inside / total;
}

MixtureDecomposition mixture_decomposition(const CanonicalSpec& spec, std::size_t n_samples) {
  validate(spec);
  if (!spec.potential.is_symmetric())
    throw ShapeError("mixture_decomposition: potential is not reflection symmetric");
  const auto geom = well_geometry(spec.potential, spec.mass);
  if (!(geom.barrier_height > 0.0))
    throw ShapeError("mixture_decomposition: potential is not a double well");
  const auto s = sample_canonical(spec, n_samples);
  double left = 0.0;
  for (const auto& pt : s.points) left += pt.q < 0.0 ? 1.0 : 0.0;
  const double n = static_cast<double>(s.points.size());
  const double wl = left / n;
  MixtureDecomposition out;
  out.w_L = wl;
  out.w_R = 1.0 - wl;
  out.w_stderr = std::sqrt(std::max(wl * (1.0 - wl), 1.0 / n) / n);
  out.overlap_defect = boltzmann_mass_within(spec, std::abs(geom.x0) / 10.0);
  return out;
}

// ---------------------------------------------------------------- IsingLattice

IsingLattice::IsingLattice(std::size_t side, double coupling, double temperature,
                           std::uint64_t seed, std::uint64_t stream, Start start)
    : side_(side), coupling_(coupling), temperature_(temperature), rng_(make_rng(seed, stream)) {
  if (side < 2) throw ArgumentError("lattice: side must be >= 2");
  if (!std::isfinite(coupling)) throw ArgumentError("coupling: must be finite");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw ArgumentError("temperature: must be > 0");
  spins_.resize(side * side);
  if (start == Start::ordered) {
    const std::int8_t s = (rng_() & 1U) ? 1 : -1;
    std::fill(spins_.begin(), spins_.end(), s);
  } else {
    for (auto& s : spins_) s = (rng_() & 1U) ? 1 : -1;
  }
  neighbours_.resize(4 * side * side);
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j) {
      auto* nn = &neighbours_[4 * (i * side + j)];
      nn[0] = ((i + 1) % side) * side + j;
      nn[1] = ((i + side - 1) % side) * side + j;
      nn[2] = i * side + (j + 1) % side;
      nn[3] = i * side + (j + side - 1) % side;
    }
  // dE = 2 J s (sum of neighbours); index s * sum + 4.
  for (int k = 0; k < 9; ++k) accept_[k] = std::min(1.0, std::exp(-2.0 * coupling * (k - 4) / temperature));
}

double IsingLattice::energy() const {
  double e = 0.0;
  for (std::size_t i = 0; i < side_; ++i)
    for (std::size_t j = 0; j < side_; ++j) {
      const int s = spin(i, j);
      e -= coupling_ * s * (spin((i + 1) % side_, j) + spin(i, (j + 1) % side_));
    }
  return e;
}

double IsingLattice::magnetization() const {
  long sum = 0;
  for (auto s : spins_) sum += s;
  return static_cast<double>(sum) / static_cast<double>(spins_.size());
}

void IsingLattice::sweep() {
  const std::size_t n = spins_.size();
  std::uniform_int_distribution<std::size_t> site(0, n - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t idx = site(rng_);
    const auto* nn = &neighbours_[4 * idx];
    const int nb = spins_[nn[0]] + spins_[nn[1]] + spins_[nn[2]] + spins_[nn[3]];
    const double a = accept_[spins_[idx] * nb + 4];
    if (a >= 1.0 || unif(rng_) < a) spins_[idx] = static_cast<std::int8_t>(-spins_[idx]);
  }
}

double IsingLattice::correlation(std::size_t r) const {
  long sum = 0;
  for (std::size_t i = 0; i < side_; ++i)
    for (std::size_t j = 0; j < side_; ++j) {
      const int s = spin(i, j);
      sum += s * (spin((i + r) % side_, j) + spin(i, (j + r) % side_));
    }
  return static_cast<double>(sum) / (2.0 * static_cast<double>(spins_.size()));
}

LatticeSignatures lattice_signatures(const SpinLattice& lat, std::size_t sweeps,
                                     const LatticeOptions& options) {
  return signatures(lat, sweeps, options, true);
}

namespace reference {

CorrelationSeries side_correlation(const CanonicalSpec& spec, double horizon,
                                   const std::vector<double>& lags, std::size_t n_traj,
                                   const DynamicsOptions& dynamics, const SamplerOptions& sampler) {
  return correlate(spec, horizon, lags, n_traj, dynamics, sampler, false);
}

LatticeSignatures lattice_signatures(const SpinLattice& lat, std::size_t sweeps,
                                     const LatticeOptions& options) {
  return signatures(lat, sweeps, options, false);
}

}  // namespace reference

}  // namespace ssb::classical
