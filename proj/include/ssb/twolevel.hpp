#pragma once

#include <map>
#include <optional>
#include <string>

#include "ssb/histories.hpp"
#include "ssb/hilbert.hpp"
#include "ssb/potentials.hpp"

namespace ssb::twolevel {

struct DoubletOptions {
  std::size_t n_points = hilbert::kDefaultGridPoints;
  double half_width = 0.0;  // 0 picks x0 + 12 oscillator lengths
};

// Lowest doublet.  Probabilities depend on the rotation angle
// rotation_rate * tau with rotation_rate = omega_gap / 2, since a state
// starting in psi_L flips with amplitude i sin((E1 - E0) tau / 2 hbar).
struct DoubletModel {
  double omega_gap = 0.0;  // (E1 - E0) / hbar
  double hbar = 1.0;
  double E0 = 0.0;
  double E1 = 0.0;
  std::optional<hilbert::WaveFunction> psi0, psi1, psi_L, psi_R;
  double localization = 0.0;  // <Pi_{x>=0}> on psi_R; 0 when no wave functions

  double rotation_rate() const noexcept { return 0.5 * omega_gap; }
  // Model with the given gap and no spatial wave functions.
  static DoubletModel ideal(double omega_gap, double hbar = 1.0);
};

DoubletModel build_doublet(const PotentialSpec& spec, double mass, double hbar,
                           const DoubletOptions& options = {});

struct OutcomeDistribution {
  std::size_t n_measurements = 0;
  double tau = 0.0;
  double angle = 0.0;  // rotation_rate * tau
  std::map<std::string, double> probabilities;
};

// Pr(string) = 1/2 cos^{2a}(angle) sin^{2b}(angle), a repeats and b flips
// between adjacent outcomes, starting from the ground state.
OutcomeDistribution measurement_chain(const DoubletModel& model, double tau, std::size_t n);

struct ProtocolComparison {
  double pr_skip;    // Pr(L?L) = 1/2 cos^2(2 angle)
  double pr_sum;     // Pr(LLL) + Pr(LRL) = 1/4 (1 + cos^2(2 angle))
  double violation;  // pr_skip - pr_sum
};

ProtocolComparison protocol_compare(const DoubletModel& model, double tau);

// The doublet as a two-dimensional system in the {psi_L, psi_R} basis.
struct TwoLevelSystem {
  histories::ProjectorFamily family;  // labels "L", "R"
  histories::Propagator U;
  hilbert::DensityOperator ground;
  hilbert::DensityOperator left;
};

TwoLevelSystem two_level_system(const DoubletModel& model);

nlohmann::json to_json(const OutcomeDistribution& d);

}  // namespace ssb::twolevel
