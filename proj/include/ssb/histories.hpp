#pragma once

#include <cstddef>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "ssb/hilbert.hpp"

namespace ssb::histories {

using hilbert::cplx;
using hilbert::DensityOperator;
using hilbert::Matrix;
using hilbert::Projector;
using hilbert::Vector;

inline constexpr double kDefaultEpsilon = 1e-3;
inline constexpr std::size_t kMaxTimes = 12;
inline constexpr std::size_t kMaxFamily = 4;

// Exhaustive set of mutually orthogonal projectors.
class ProjectorFamily {
 public:
  ProjectorFamily(std::vector<Projector> members, std::vector<std::string> labels);

  std::size_t size() const noexcept { return members_.size(); }
  Eigen::Index dimension() const noexcept { return members_.front().matrix().rows(); }
  const Projector& operator[](std::size_t i) const { return members_.at(i); }
  const std::vector<Projector>& members() const noexcept { return members_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t index_of(const std::string& label) const;

  // Sum of the members named by `subset`.
  Matrix coarse(const std::vector<std::size_t>& subset) const;

 private:
  std::vector<Projector> members_;
  std::vector<std::string> labels_;
};

// Times t_0 < ... < t_n with a non-empty subset of family members at each.
struct History {
  std::vector<double> times;
  std::vector<std::vector<std::size_t>> assignments;

  std::size_t length() const noexcept { return times.size(); }
  bool fine_grained() const;
};

// Checks ascending times, non-empty subsets and indices below family_size.
void validate(const History& h, std::size_t family_size);

// History assigning a single member at each time, by label.
History make_history(const std::vector<double>& times, const std::vector<std::string>& labels,
                     const ProjectorFamily& family);

// Compact label: concatenated member labels, "?" for the full family,
// "{a,b}" for other coarse subsets.
std::string label_of(const History& h, const ProjectorFamily& family);

// U(dt) in the same basis as the family.
using Propagator = std::function<Matrix(double dt)>;

// Propagator diag(exp(-i E dt / hbar)) followed by a change of basis.
Propagator spectral_propagator(std::vector<double> energies, Matrix basis, double hbar = 1.0);

// h(t_n) U(t_n - t_{n-1}) ... h(t_1) U(t_1 - t_0) h(t_0).
Matrix history_operator(const History& h, const ProjectorFamily& family, const Propagator& U);

// tr(rho H(h)^dagger H(h2)).
cplx decoherence_functional(const DensityOperator& rho, const History& h, const History& h2,
                            const ProjectorFamily& family, const Propagator& U);

struct Probability {
  double value;  // clamped to [0, 1]
  double raw;
};

Probability probability(const DensityOperator& rho, const History& h,
                        const ProjectorFamily& family, const Propagator& U);

// Pr(h1 + h2) - Pr(h1) - Pr(h2), checked against 2 Re D(h1, h2).
double additivity_violation(const DensityOperator& rho, const History& h1, const History& h2,
                            const ProjectorFamily& family, const Propagator& U);

enum class Classification { consistent, approximately_consistent, medium_decoherent, interfering };

std::string to_string(Classification c);

struct ConsistencyMeasures {
  double max_abs_re = 0.0;         // max |Re D(h,h')| over h != h'
  double max_normalized_re = 0.0;  // max |Re D| / sqrt(D(h,h) D(h',h'))
  double max_normalized_abs = 0.0; // max |D| / sqrt(D(h,h) D(h',h'))
  std::size_t skipped_pairs = 0;   // pairs with a diagonal below 1e-14
};

struct DecoherenceMatrix {
  std::vector<History> histories;
  std::vector<std::string> labels;
  Matrix D;
  Classification classification = Classification::interfering;
  double epsilon = kDefaultEpsilon;
  ConsistencyMeasures measures;
  double diagonal_sum = 0.0;
  std::size_t pruned = 0;  // fine-grained histories dropped for carrying no weight
};

ConsistencyMeasures consistency_measures(const Matrix& D);

// Sets and returns the classification:
//   medium_decoherent  normalized |D| < eps on every resolvable pair;
//   consistent         max |Re D| <= 1e-12;
//   approximately_consistent  max |Re D| < eps;
//   interfering        otherwise.
Classification classify_consistency(DecoherenceMatrix& dm, double epsilon = kDefaultEpsilon);

// max_J ||U Pi_J U^dagger - Pi_J||_max.
double conservation_check(const Matrix& U, const ProjectorFamily& family);

// Every fine-grained label sequence over `times`, lexicographic in member index.
std::vector<History> enumerate_histories(const ProjectorFamily& family,
                                         const std::vector<double>& times);

// Evenly spaced 0, tau, ..., n tau.
std::vector<double> time_grid(double tau, std::size_t n_steps);

// Decoherence matrix of an arbitrary history list.  Branch vectors are
// built in parallel and D is their Gram matrix.
DecoherenceMatrix decoherence_matrix(const DensityOperator& rho, std::vector<History> histories,
                                     const ProjectorFamily& family, const Propagator& U,
                                     double epsilon = kDefaultEpsilon);

// Fine-grained histories over `times` whose branch carries weight, found on
// a branching tree that shares prefixes.  Histories with a vanishing branch
// are dropped; their rows of D would be zero.  At most 4096 may survive.
DecoherenceMatrix exhaustive_decoherence_matrix(const DensityOperator& rho,
                                                const ProjectorFamily& family,
                                                const std::vector<double>& times,
                                                const Propagator& U,
                                                double epsilon = kDefaultEpsilon);

nlohmann::json to_json(const DecoherenceMatrix& dm);

namespace reference {
// Entry-by-entry trace formula, serial.
Matrix decoherence_matrix(const DensityOperator& rho, const std::vector<History>& histories,
                          const ProjectorFamily& family, const Propagator& U);
}  // namespace reference

}  // namespace ssb::histories
