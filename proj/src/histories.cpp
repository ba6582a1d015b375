#include "ssb/histories.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ssb/errors.hpp"

namespace ssb::histories {

namespace {

constexpr double kFamilyTol = 1e-8;
constexpr double kZeroBranch = 1e-30;
constexpr double kResolvableDiagonal = 1e-14;
constexpr std::size_t kMaxBranches = 4096;

bool is_diagonal(const Matrix& m) { return m.isDiagonal(0.0); }

// Applies coarse projectors, using row scaling when every member is diagonal.
class FamilyOps {
 public:
  explicit FamilyOps(const ProjectorFamily& family) : family_(family) {
    diagonal_ = std::all_of(family.members().begin(), family.members().end(),
                            [](const Projector& p) { return is_diagonal(p.matrix()); });
    if (diagonal_)
      for (const auto& p : family.members()) diag_.push_back(p.matrix().diagonal().real());
  }

  Matrix apply(const std::vector<std::size_t>& subset, const Matrix& m) const {
    if (diagonal_) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(m.rows());
      for (auto j : subset) d += diag_[j];
      return d.asDiagonal() * m;
    }
    return family_.coarse(subset) * m;
  }

 private:
  const ProjectorFamily& family_;
  bool diagonal_ = false;
  std::vector<Eigen::VectorXd> diag_;
};

// Columns sqrt(p_k) |k> spanning the support of rho.
Matrix weighted_support(const DensityOperator& rho) {
  const Matrix& m = rho.matrix();
  if (is_diagonal(m)) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (m(i, i).real() > 0.0) keep.push_back(i);
    Matrix out = Matrix::Zero(m.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
      out(keep[c], static_cast<Eigen::Index>(c)) = std::sqrt(m(keep[c], keep[c]).real());
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const auto& w = es.eigenvalues();
  const double cut = 1e-14 * w.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] > cut) keep.push_back(i);
  Matrix out(m.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    out.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(w[keep[c]]);
  return out;
}

void check_dimensions(const DensityOperator& rho, const ProjectorFamily& family) {
  if (rho.dimension() != family.dimension())
    throw ArgumentError("histories: density operator and family dimensions differ");
}

// Evaluates U once per distinct time step.
class PropagatorCache {
 public:
  PropagatorCache(const Propagator& U, Eigen::Index dim) : U_(U), dim_(dim) {}

  const Matrix& at(double dt) {
    auto it = cache_.find(dt);
    if (it != cache_.end()) return it->second;
    Matrix u = U_(dt);
    if (u.rows() != dim_ || u.cols() != dim_)
      throw ArgumentError("histories: propagator dimension does not match the family");
    return cache_.emplace(dt, std::move(u)).first->second;
  }

  void prime(const History& h) {
    for (std::size_t i = 1; i < h.length(); ++i) at(h.times[i] - h.times[i - 1]);
  }

 private:
  const Propagator& U_;
  Eigen::Index dim_;
  std::map<double, Matrix> cache_;
};

Matrix chain(const History& h, const FamilyOps& ops, PropagatorCache& cache, Matrix m) {
  m = ops.apply(h.assignments[0], m);
  for (std::size_t i = 1; i < h.length(); ++i)
    m = ops.apply(h.assignments[i], cache.at(h.times[i] - h.times[i - 1]) * m);
  return m;
}

bool same_times(const History& a, const History& b) { return a.times == b.times; }

void finish(DecoherenceMatrix& dm, double epsilon) {
  dm.labels.clear();
  dm.diagonal_sum = dm.D.diagonal().real().sum();
  classify_consistency(dm, epsilon);
}

}  // namespace

// ----------------------------------------------------------- ProjectorFamily

ProjectorFamily::ProjectorFamily(std::vector<Projector> members, std::vector<std::string> labels)
    : members_(std::move(members)), labels_(std::move(labels)) {
  if (members_.empty()) throw ArgumentError("projector family: no members");
  if (labels_.size() != members_.size())
    throw ArgumentError("projector family: label count does not match member count");
  const Eigen::Index n = members_.front().matrix().rows();
  Matrix sum = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < members_.size(); ++i) {
    const Matrix& pi = members_[i].matrix();
    if (pi.rows() != n) throw ArgumentError("projector family: members differ in dimension");
    sum += pi;
    for (std::size_t j = i + 1; j < members_.size(); ++j) {
      const Matrix& pj = members_[j].matrix();
      double overlap;
      if (is_diagonal(pi) && is_diagonal(pj))
        overlap = pi.diagonal().cwiseProduct(pj.diagonal()).cwiseAbs().maxCoeff();
      else
        overlap = (pi * pj).cwiseAbs().maxCoeff();
      if (overlap >= kFamilyTol)
        throw ArgumentError("projector family: members " + labels_[i] + " and " + labels_[j] +
                            " are not orthogonal");
    }
  }
  if ((sum - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() >= kFamilyTol)
    throw ArgumentError("projector family: members do not sum to the identity");
  for (std::size_t i = 0; i < labels_.size(); ++i)
    for (std::size_t j = i + 1; j < labels_.size(); ++j)
      if (labels_[i] == labels_[j]) throw ArgumentError("projector family: duplicate label");
}

std::size_t ProjectorFamily::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ArgumentError("projector family: unknown label " + label);
  return static_cast<std::size_t>(it - labels_.begin());
}

Matrix ProjectorFamily::coarse(const std::vector<std::size_t>& subset) const {
  const Eigen::Index n = dimension();
  Matrix out = Matrix::Zero(n, n);
  for (auto j : subset) out += members_.at(j).matrix();
  return out;
}

// -------------------------------------------------------------------- History

bool History::fine_grained() const {
  return std::all_of(assignments.begin(), assignments.end(),
                     [](const auto& s) { return s.size() == 1; });
}

void validate(const History& h, std::size_t family_size) {
  if (h.times.empty()) throw ArgumentError("history: no times");
  if (h.assignments.size() != h.times.size())
    throw ArgumentError("history: one assignment per time is required");
  for (std::size_t i = 1; i < h.times.size(); ++i)
    if (!(h.times[i] > h.times[i - 1])) throw ArgumentError("history: times must increase");
  for (const auto& s : h.assignments) {
    if (s.empty()) throw ArgumentError("history: empty assignment");
    for (auto j : s)
      if (j >= family_size) throw ArgumentError("history: member index out of range");
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = a + 1; b < s.size(); ++b)
        if (s[a] == s[b]) throw ArgumentError("history: repeated member in an assignment");
  }
}

History make_history(const std::vector<double>& times, const std::vector<std::string>& labels,
                     const ProjectorFamily& family) {
  if (times.size() != labels.size())
    throw ArgumentError("history: label count does not match time count");
  History h{times, {}};
  for (const auto& l : labels) {
    if (l == "?") {
      std::vector<std::size_t> all(family.size());
      for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
      h.assignments.push_back(all);
    } else {
      h.assignments.push_back({family.index_of(l)});
    }
  }
  validate(h, family.size());
  return h;
}

std::string label_of(const History& h, const ProjectorFamily& family) {
  std::string out;
  for (const auto& s : h.assignments) {
    if (s.size() == family.size()) {
      out += "?";
    } else if (s.size() == 1) {
      out += family.labels()[s[0]];
    } else {
      out += "{";
      for (std::size_t a = 0; a < s.size(); ++a) {
        if (a) out += ",";
        out += family.labels()[s[a]];
      }
      out += "}";
    }
  }
  return out;
}

Propagator spectral_propagator(std::vector<double> energies, Matrix basis, double hbar) {
  if (static_cast<Eigen::Index>(energies.size()) != basis.cols())
    throw ArgumentError("spectral propagator: energy count does not match basis");
  return [energies = std::move(energies), basis = std::move(basis), hbar](double dt) {
    Vector phase(static_cast<Eigen::Index>(energies.size()));
    for (std::size_t n = 0; n < energies.size(); ++n)
      phase[static_cast<Eigen::Index>(n)] = std::polar(1.0, -energies[n] * dt / hbar);
    return Matrix(basis * phase.asDiagonal() * basis.adjoint());
  };
}

// ---------------------------------------------------------------- functionals

Matrix history_operator(const History& h, const ProjectorFamily& family, const Propagator& U) {
  validate(h, family.size());
  FamilyOps ops(family);
  PropagatorCache cache(U, family.dimension());
  const Eigen::Index n = family.dimension();
  return chain(h, ops, cache, Matrix::Identity(n, n));
}

cplx decoherence_functional(const DensityOperator& rho, const History& h, const History& h2,
                            const ProjectorFamily& family, const Propagator& U) {
  check_dimensions(rho, family);
  validate(h, family.size());
  validate(h2, family.size());
  FamilyOps ops(family);
  PropagatorCache cache(U, family.dimension());
  const Matrix R = weighted_support(rho);
  const Matrix a = chain(h, ops, cache, R);
  const Matrix b = chain(h2, ops, cache, R);
  return (a.adjoint() * b).trace();
}

Probability probability(const DensityOperator& rho, const History& h,
                        const ProjectorFamily& family, const Propagator& U) {
  const double raw = decoherence_functional(rho, h, h, family, U).real();
  return {std::clamp(raw, 0.0, 1.0), raw};
}

double additivity_violation(const DensityOperator& rho, const History& h1, const History& h2,
                            const ProjectorFamily& family, const Propagator& U) {
  validate(h1, family.size());
  validate(h2, family.size());
  if (!same_times(h1, h2)) throw ArgumentError("additivity: histories use different times");
  std::size_t where = h1.length();
  for (std::size_t i = 0; i < h1.length(); ++i) {
    auto a = h1.assignments[i], b = h2.assignments[i];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a == b) continue;
    if (where != h1.length())
      throw ArgumentError("additivity: histories differ at more than one time");
    where = i;
  }
  if (where == h1.length()) throw ArgumentError("additivity: histories are identical");
  History sum = h1;
  for (auto j : h2.assignments[where]) {
    auto& s = sum.assignments[where];
    if (std::find(s.begin(), s.end(), j) != s.end())
      throw ArgumentError("additivity: assignments overlap at the differing time");
    s.push_back(j);
  }
  const double lhs = probability(rho, sum, family, U).raw - probability(rho, h1, family, U).raw -
                     probability(rho, h2, family, U).raw;
  const double rhs = 2.0 * decoherence_functional(rho, h1, h2, family, U).real();
  if (std::abs(lhs - rhs) > 1e-10) {
    std::ostringstream os;
    os << "additivity: Pr(h1+h2) - Pr(h1) - Pr(h2) = " << lhs << " but 2 Re D = " << rhs;
    throw NumericError(os.str());
  }
  return rhs;
}

// -------------------------------------------------------------- classification

std::string to_string(Classification c) {
  switch (c) {
    case Classification::consistent: return "consistent";
    case Classification::approximately_consistent: return "approximately_consistent";
    case Classification::medium_decoherent: return "medium_decoherent";
    case Classification::interfering: return "interfering";
  }
  return "interfering";
}

ConsistencyMeasures consistency_measures(const Matrix& D) {
  ConsistencyMeasures m;
  const Eigen::Index n = D.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double di = D(i, i).real();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const cplx d = D(i, j);
      m.max_abs_re = std::max(m.max_abs_re, std::abs(d.real()));
      const double dj = D(j, j).real();
      if (di < kResolvableDiagonal || dj < kResolvableDiagonal) {
        ++m.skipped_pairs;
        continue;
      }
      const double s = std::sqrt(di * dj);
      m.max_normalized_re = std::max(m.max_normalized_re, std::abs(d.real()) / s);
      m.max_normalized_abs = std::max(m.max_normalized_abs, std::abs(d) / s);
    }
  }
  return m;
}

Classification classify_consistency(DecoherenceMatrix& dm, double epsilon) {
  if (dm.D.rows() == 0) throw ArgumentError("classify: empty history set");
  if (!(epsilon > 0.0)) throw ArgumentError("classify: epsilon must be > 0");
  dm.epsilon = epsilon;
  dm.measures = consistency_measures(dm.D);
  const auto& m = dm.measures;
  if (m.max_normalized_abs < epsilon)
    dm.classification = Classification::medium_decoherent;
  else if (m.max_abs_re <= 1e-12)
    dm.classification = Classification::consistent;
  else if (m.max_abs_re < epsilon)
    dm.classification = Classification::approximately_consistent;
  else
    dm.classification = Classification::interfering;
  return dm.classification;
}

double conservation_check(const Matrix& U, const ProjectorFamily& family) {
  if (U.rows() != family.dimension() || U.cols() != family.dimension())
    throw ArgumentError("conservation check: dimension mismatch");
  double worst = 0.0;
  for (const auto& p : family.members())
    worst = std::max(worst, (U * p.matrix() * U.adjoint() - p.matrix()).cwiseAbs().maxCoeff());
  return worst;
}

// ---------------------------------------------------------------- enumeration

std::vector<double> time_grid(double tau, std::size_t n_steps) {
  if (!(tau > 0.0) && n_steps > 0) throw ArgumentError("time grid: tau must be > 0");
  std::vector<double> t(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) t[i] = tau * static_cast<double>(i);
  return t;
}

std::vector<History> enumerate_histories(const ProjectorFamily& family,
                                         const std::vector<double>& times) {
  if (times.empty()) throw ArgumentError("enumerate: no times");
  if (times.size() > kMaxTimes || family.size() > kMaxFamily) {
    std::ostringstream os;
    os << "enumerate: " << family.size() << "^" << times.size()
       << " histories exceed the bound (at most " << kMaxFamily << " members and " << kMaxTimes
       << " times)";
    throw ArgumentError(os.str());
  }
  const std::size_t f = family.size(), n = times.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= f;
  std::vector<History> out;
  out.reserve(total);
  for (std::size_t code = 0; code < total; ++code) {
    History h{times, std::vector<std::vector<std::size_t>>(n)};
    std::size_t c = code;
    for (std::size_t i = n; i-- > 0;) {
      h.assignments[i] = {c % f};
      c /= f;
    }
    out.push_back(std::move(h));
  }
  validate(out.front(), f);
  return out;
}

// ------------------------------------------------------------------- matrices

DecoherenceMatrix decoherence_matrix(const DensityOperator& rho, std::vector<History> histories,
                                     const ProjectorFamily& family, const Propagator& U,
                                     double epsilon) {
  check_dimensions(rho, family);
  if (histories.empty()) throw ArgumentError("decoherence matrix: no histories");
  for (const auto& h : histories) validate(h, family.size());
  FamilyOps ops(family);
  PropagatorCache cache(U, family.dimension());
  for (const auto& h : histories) cache.prime(h);
  const Matrix R = weighted_support(rho);
  const Eigen::Index len = R.size();
  const auto nh = static_cast<Eigen::Index>(histories.size());
  Matrix B(len, nh);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index k = 0; k < nh; ++k) {
    Matrix branch = chain(histories[static_cast<std::size_t>(k)], ops, cache, R);
    B.col(k) = Eigen::Map<const Vector>(branch.data(), len);
  }
  DecoherenceMatrix dm;
  dm.D = B.adjoint() * B;
  dm.histories = std::move(histories);
  finish(dm, epsilon);
  for (const auto& h : dm.histories) dm.labels.push_back(label_of(h, family));
  return dm;
}

DecoherenceMatrix exhaustive_decoherence_matrix(const DensityOperator& rho,
                                                const ProjectorFamily& family,
                                                const std::vector<double>& times,
                                                const Propagator& U, double epsilon) {
  check_dimensions(rho, family);
  if (times.empty()) throw ArgumentError("exhaustive: no times");
  History probe{times, std::vector<std::vector<std::size_t>>(times.size(), {0})};
  validate(probe, family.size());
  FamilyOps ops(family);
  PropagatorCache cache(U, family.dimension());
  cache.prime(probe);
  std::vector<const Matrix*> steps(times.size(), nullptr);
  for (std::size_t i = 1; i < times.size(); ++i) steps[i] = &cache.at(times[i] - times[i - 1]);

  const Matrix R = weighted_support(rho);
  const Eigen::Index len = R.size();
  const std::size_t f = family.size(), n = times.size();
  std::vector<std::pair<std::vector<std::size_t>, Vector>> leaves;
  bool overflow = false;

  // Depth-first over the branching tree; children near the root run as tasks.
  std::function<void(std::size_t, const std::vector<std::size_t>&, const Matrix&)> grow =
      [&](std::size_t level, const std::vector<std::size_t>& path, const Matrix& parent) {
        for (std::size_t j = 0; j < f; ++j) {
          Matrix child =
              level == 0 ? ops.apply({j}, parent) : ops.apply({j}, *steps[level] * parent);
          if (child.squaredNorm() <= kZeroBranch) continue;
          std::vector<std::size_t> p = path;
          p.push_back(j);
          if (level + 1 == n) {
#pragma omp critical(ssb_histories_leaves)
            {
              if (leaves.size() >= kMaxBranches)
                overflow = true;
              else
                leaves.emplace_back(std::move(p), Eigen::Map<const Vector>(child.data(), len));
            }
          } else {
#pragma omp task firstprivate(p, level, child) shared(grow) if (level < 2)
            grow(level + 1, p, child);
          }
        }
#pragma omp taskwait
      };
#pragma omp parallel
#pragma omp single
  grow(0, {}, R);
  if (overflow) {
    std::ostringstream os;
    os << "exhaustive: more than " << kMaxBranches << " histories carry weight";
    throw ArgumentError(os.str());
  }

  std::sort(leaves.begin(), leaves.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Matrix B(len, static_cast<Eigen::Index>(leaves.size()));
  DecoherenceMatrix dm;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    B.col(static_cast<Eigen::Index>(k)) = leaves[k].second;
    History h{times, {}};
    for (auto j : leaves[k].first) h.assignments.push_back({j});
    dm.histories.push_back(std::move(h));
  }
  double total = 1.0;
  for (std::size_t i = 0; i < n; ++i) total *= static_cast<double>(f);
  dm.pruned = static_cast<std::size_t>(total) - leaves.size();
  dm.D = B.adjoint() * B;
  finish(dm, epsilon);
  for (const auto& h : dm.histories) dm.labels.push_back(label_of(h, family));
  return dm;
}

nlohmann::json to_json(const DecoherenceMatrix& dm) {
  nlohmann::json j;
  j["classification"] = to_string(dm.classification);
  j["epsilon"] = dm.epsilon;
  j["times"] = dm.histories.empty() ? std::vector<double>{} : dm.histories.front().times;
  j["labels"] = dm.labels;
  j["diagonal_sum"] = dm.diagonal_sum;
  j["pruned"] = dm.pruned;
  j["measures"] = {{"max_abs_re", dm.measures.max_abs_re},
                   {"max_normalized_re", dm.measures.max_normalized_re},
                   {"max_normalized_abs", dm.measures.max_normalized_abs},
                   {"skipped_pairs", dm.measures.skipped_pairs}};
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < dm.D.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < dm.D.cols(); ++k)
      row.push_back({dm.D(i, k).real(), dm.D(i, k).imag()});
    rows.push_back(std::move(row));
  }
  j["D"] = std::move(rows);
  return j;
}

namespace reference {

Matrix decoherence_matrix(const DensityOperator& rho, const std::vector<History>& histories,
                          const ProjectorFamily& family, const Propagator& U) {
  check_dimensions(rho, family);
  std::vector<Matrix> ops;
  ops.reserve(histories.size());
  for (const auto& h : histories) {
    validate(h, family.size());
    Matrix m = family.coarse(h.assignments[0]);
    for (std::size_t i = 1; i < h.length(); ++i)
      m = family.coarse(h.assignments[i]) * U(h.times[i] - h.times[i - 1]) * m;
    ops.push_back(std::move(m));
  }
  const auto n = static_cast<Eigen::Index>(histories.size());
  Matrix D(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      D(a, b) = (rho.matrix() * ops[static_cast<std::size_t>(a)].adjoint() *
                 ops[static_cast<std::size_t>(b)])
                    .trace();
  return D;
}

}  // namespace reference

}  // namespace ssb::histories
