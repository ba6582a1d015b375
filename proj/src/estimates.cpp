#include "ssb/estimates.hpp"

#include <cmath>
#include <cstdio>

#include "ssb/errors.hpp"

namespace ssb::estimates {

namespace {
constexpr double kTwoPi = 6.283185307179586;

void positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(name) + ": must be > 0");
}
}  // namespace

void validate(const SolidStateInputs& inp) {
  positive(inp.m, "m");
  positive(inp.E, "E");
  positive(inp.l, "l");
  positive(inp.alpha, "alpha");
  positive(inp.L, "L");
  positive(inp.c_sound, "c_sound");
}

std::string LogEnergy::render() const {
  char buf[96];
  if (std::isinf(ln_value) && ln_value < 0)
    std::snprintf(buf, sizeof buf, "0 x %.3g J", reference);
  else
    std::snprintf(buf, sizeof buf, "e^(%.4g) x %.3g J", ln_value, reference);
  return buf;
}

double action_density(const SolidStateInputs& inp) {
  validate(inp);
  return inp.alpha * std::sqrt(inp.m * inp.E) / (inp.l * inp.l);
}

GapExponent discrete_gap_exponent(const SolidStateInputs& inp) {
  const double n = action_density(inp) * inp.L * inp.L * inp.L / kHbar;
  return {n, LogEnergy{-n, inp.E}, n + std::log(kHbar / inp.E)};
}

ContinuousConditions continuous_conditions(const SolidStateInputs& inp, double Delta,
                                           double margin) {
  validate(inp);
  if (!(Delta > 0.0) || !(Delta < kTwoPi)) throw ArgumentError("Delta: must lie in (0, 2 pi)");
  positive(margin, "margin");
  ContinuousConditions c;
  // rho0^2 = hbar sqrt(m / E) / l^2 so that m_eff = rho0^2 L^3 is a moment of inertia.
  c.coefficient = std::sqrt(inp.m / inp.E) / (inp.l * inp.l);
  const double L3 = inp.L * inp.L * inp.L;
  c.t_CH = c.coefficient * L3 * Delta * Delta;
  c.t_mu = inp.L / inp.c_sound;
  c.condition_ok = c.t_mu / c.t_CH < margin;
  c.delta_sq_threshold = c.t_mu / (margin * c.coefficient * L3);
  return c;
}

std::vector<std::pair<double, double>> alpha_sweep(const SolidStateInputs& inp, std::size_t n) {
  if (n < 2) throw ArgumentError("alpha sweep: need at least two points");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < n; ++i) {
    SolidStateInputs x = inp;
    x.alpha = std::pow(10.0, -3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(n - 1));
    out.emplace_back(x.alpha, action_density(x));
  }
  return out;
}

}  // namespace ssb::estimates
