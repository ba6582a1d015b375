#pragma once

#include <limits>
#include <string>
#include <vector>

namespace ssb::estimates {

// SI constants.
inline constexpr double kHbar = 1.054571817e-34;       // J s
inline constexpr double kElectronVolt = 1.602176634e-19;  // J
inline constexpr double kProtonMass = 1.67262192369e-27;  // kg

struct SolidStateInputs {
  double m = kProtonMass;      // kg
  double E = kElectronVolt;    // J
  double l = 1e-10;            // m
  double alpha = 1.0;
  double L = 1e-3;             // m
  double c_sound = 1e3;        // m/s
};

void validate(const SolidStateInputs& inp);

// ln of an energy ratio, kept in log form so that e^{-1e22} survives.
struct LogEnergy {
  double ln_value = -std::numeric_limits<double>::infinity();
  double reference = 1.0;  // J

  std::string render() const;  // e.g. "e^(-1.55e+22) x 1.6e-19 J"
};

// alpha sqrt(m E) / l^2, in J s / m^3.
double action_density(const SolidStateInputs& inp);

struct GapExponent {
  double exponent;        // S L^3 / (hbar V) = action_density * L^3 / hbar
  LogEnergy gap;          // Delta E = E e^{-exponent}
  double ln_decoherence_time;  // ln(hbar / Delta E) in ln seconds
};

GapExponent discrete_gap_exponent(const SolidStateInputs& inp);

struct ContinuousConditions {
  double t_CH;                // Delta^2 L^3 sqrt(m / E) / l^2
  double t_mu;                // L / c_sound
  bool condition_ok;          // t_mu / t_CH < margin
  double coefficient;         // t_CH / (L^3 Delta^2), SI
  double delta_sq_threshold;  // smallest Delta^2 satisfying the condition
};

inline constexpr double kDefaultMargin = 1e-2;

ContinuousConditions continuous_conditions(const SolidStateInputs& inp, double Delta,
                                           double margin = kDefaultMargin);

// action_density at alpha values log-spaced over [1e-3, 1e3].
std::vector<std::pair<double, double>> alpha_sweep(const SolidStateInputs& inp, std::size_t n);

}  // namespace ssb::estimates
