#include "ssb/potentials.hpp"

#include <algorithm>
#include <Eigen/Dense>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "ssb/errors.hpp"

namespace ssb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  double err = 0.0;
  const double val =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12, &err);
  const double scale = std::max(std::abs(val), std::numeric_limits<double>::min());
  if (!std::isfinite(val) || err > 1e-8 * scale)
    throw IntegrationError("quadrature did not reach relative error 1e-8");
  return val;
}

// Interval that contains every local minimum of interest.
std::pair<double, double> scan_range(const PotentialSpec& spec) {
  return std::visit(
      overloaded{
          [](const QuarticDoubleWell& q) -> std::pair<double, double> {
            return {-3.0 * q.x0(), 3.0 * q.x0()};
          },
          [](const Harmonic& h) -> std::pair<double, double> {
            const double w = 10.0 / std::sqrt(h.mass * h.omega);
            return {h.center - w, h.center + w};
          },
          [](const Tilted& t) -> std::pair<double, double> {
            auto [lo, hi] = scan_range(*t.base);
            const double width = hi - lo;
            double curv = std::abs(derivative(*t.base, 0.5 * (lo + hi) + width / 3.0, 2));
            curv = std::max(curv, 1e-300);
            const double shift = std::min(2.0 * std::abs(t.J) / curv, 10.0 * width);
            return {lo - shift, hi + shift};
          },
          [](const Tabulated& t) -> std::pair<double, double> {
            return {t.grid.x_min(), t.grid.x_max()};
          },
      },
      spec.variant());
}

struct Minimum {
  double x;
  double v;
};

std::vector<Minimum> local_minima(const PotentialSpec& spec) {
  auto [lo, hi] = scan_range(spec);
  constexpr int n = 4001;
  const double h = (hi - lo) / (n - 1);
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = evaluate(spec, lo + h * i);
  std::vector<Minimum> out;
  for (int i = 1; i + 1 < n; ++i) {
    if (v[i] < v[i - 1] && v[i] <= v[i + 1]) {
      auto f = [&](double x) { return evaluate(spec, x); };
      auto r = boost::math::tools::brent_find_minima(f, lo + h * (i - 1), lo + h * (i + 1), 52);
      out.push_back({r.first, r.second});
    }
  }
  return out;
}

double tabulated_eval(const PotentialSpec& spec, const Tabulated& t, double x, int order,
                      const std::function<double(double, int)>& spline) {
  (void)spec;
  if (x < t.grid.x_min() || x > t.grid.x_max()) {
    std::ostringstream os;
    os << "tabulated potential: x = " << x << " outside [" << t.grid.x_min() << ", "
       << t.grid.x_max() << "]";
    throw DomainError(os.str());
  }
  return spline(x, order);
}

}  // namespace

double QuarticDoubleWell::x0() const { return std::sqrt(6.0 * mu_sq / lambda); }
double QuarticDoubleWell::barrier() const { return 1.5 * mu_sq * mu_sq / lambda; }

PotentialSpec::PotentialSpec(Variant v) : v_(std::move(v)) {}

PotentialSpec PotentialSpec::quartic(double lambda, double mu_sq) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ArgumentError("quartic: lambda must be > 0");
  if (!(mu_sq > 0.0) || !std::isfinite(mu_sq)) throw ArgumentError("quartic: mu^2 must be > 0");
  return PotentialSpec(QuarticDoubleWell{lambda, mu_sq});
}

PotentialSpec PotentialSpec::harmonic(double omega, double mass, double center) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ArgumentError("harmonic: omega must be > 0");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ArgumentError("harmonic: mass must be > 0");
  if (!std::isfinite(center)) throw ArgumentError("harmonic: center must be finite");
  return PotentialSpec(Harmonic{omega, mass, center});
}

PotentialSpec PotentialSpec::tilted(PotentialSpec base, double J) {
  if (!std::isfinite(J)) throw ArgumentError("tilted: J must be finite");
  return PotentialSpec(Tilted{std::make_shared<const PotentialSpec>(std::move(base)), J});
}

PotentialSpec PotentialSpec::tabulated(Grid grid, std::vector<double> values) {
  if (values.size() != grid.size())
    throw ArgumentError("tabulated: value count does not match grid size");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << "tabulated: value at x_" << i << " = " << grid.x(i) << " is not finite";
      throw DomainError(os.str());
    }
  auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
      values.begin(), values.end(), grid.x_min(), grid.spacing());
  PotentialSpec out(Tabulated{grid, std::move(values)});
  out.spline_ = std::make_shared<const std::function<double(double, int)>>(
      [spline](double x, int order) -> double {
        if (order == 0) return (*spline)(x);
        if (order == 1) return spline->prime(x);
        return spline->double_prime(x);
      });
  return out;
}

PotentialSpec PotentialSpec::tabulated(Grid grid, const std::function<double(double)>& f) {
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = f(grid.x(i));
  return tabulated(std::move(grid), std::move(values));
}

double PotentialSpec::domain_min() const {
  if (auto t = std::get_if<Tabulated>(&v_)) return t->grid.x_min();
  if (auto t = std::get_if<Tilted>(&v_)) return t->base->domain_min();
  return -kInf;
}

double PotentialSpec::domain_max() const {
  if (auto t = std::get_if<Tabulated>(&v_)) return t->grid.x_max();
  if (auto t = std::get_if<Tilted>(&v_)) return t->base->domain_max();
  return kInf;
}

bool PotentialSpec::is_symmetric() const {
  return std::visit(overloaded{
                        [](const QuarticDoubleWell&) { return true; },
                        [](const Harmonic& h) { return h.center == 0.0; },
                        [](const Tilted& t) { return t.J == 0.0 && t.base->is_symmetric(); },
                        [](const Tabulated& t) {
                          if (!t.grid.symmetric()) return false;
                          return std::equal(t.values.begin(), t.values.end(), t.values.rbegin());
                        },
                    },
                    v_);
}

double evaluate(const PotentialSpec& spec, double x) {
  return std::visit(overloaded{
                        [&](const QuarticDoubleWell& q) {
                          const double d = x * x - 6.0 * q.mu_sq / q.lambda;
                          return q.lambda / 24.0 * d * d;
                        },
                        [&](const Harmonic& h) {
                          const double d = x - h.center;
                          return 0.5 * h.mass * h.omega * h.omega * d * d;
                        },
                        [&](const Tilted& t) { return evaluate(*t.base, x) - t.J * x; },
                        [&](const Tabulated& t) {
                          return tabulated_eval(spec, t, x, 0, *spec.spline_);
                        },
                    },
                    spec.variant());
}

double derivative(const PotentialSpec& spec, double x, int order) {
  if (order != 1 && order != 2) throw ArgumentError("derivative: order must be 1 or 2");
  return std::visit(overloaded{
                        [&](const QuarticDoubleWell& q) {
                          const double x0sq = 6.0 * q.mu_sq / q.lambda;
                          return order == 1 ? q.lambda / 6.0 * x * (x * x - x0sq)
                                            : q.lambda / 6.0 * (3.0 * x * x - x0sq);
                        },
                        [&](const Harmonic& h) {
                          const double k = h.mass * h.omega * h.omega;
                          return order == 1 ? k * (x - h.center) : k;
                        },
                        [&](const Tilted& t) {
                          return derivative(*t.base, x, order) - (order == 1 ? t.J : 0.0);
                        },
                        [&](const Tabulated& t) {
                          return tabulated_eval(spec, t, x, order, *spec.spline_);
                        },
                    },
                    spec.variant());
}

WellGeometry well_geometry(const PotentialSpec& spec, double mass) {
  if (!(mass > 0.0)) throw ArgumentError("well_geometry: mass must be > 0");
  if (auto q = std::get_if<QuarticDoubleWell>(&spec.variant())) {
    const double x0 = q->x0();
    return {x0, q->barrier(), std::sqrt(derivative(spec, x0, 2) / mass)};
  }
  if (auto h = std::get_if<Harmonic>(&spec.variant())) {
    return {h->center, 0.0, std::sqrt(h->mass * h->omega * h->omega / mass)};
  }
  const auto minima = local_minima(spec);
  if (minima.empty()) throw ShapeError("well_geometry: no local minimum found");
  // Lowest minimum; the rightmost wins a tie.
  std::size_t best = 0;
  for (std::size_t i = 1; i < minima.size(); ++i)
    if (minima[i].v <= minima[best].v + 1e-12 * std::max(1.0, std::abs(minima[best].v)))
      best = i;
  const Minimum m = minima[best];
  double barrier = 0.0;
  if (minima.size() > 1) {
    const Minimum other = best > 0 ? minima[best - 1] : minima[best + 1];
    auto neg = [&](double x) { return -evaluate(spec, x); };
    const double a = std::min(m.x, other.x), b = std::max(m.x, other.x);
    auto r = boost::math::tools::brent_find_minima(neg, a, b, 52);
    barrier = -r.second - m.v;
  }
  const double curv = derivative(spec, m.x, 2);
  if (!(curv > 0.0)) throw ShapeError("well_geometry: minimum has non-positive curvature");
  return {m.x, barrier, std::sqrt(curv / mass)};
}

double quartic_instanton_action(const QuarticDoubleWell& q, double mass) {
  const double x0 = q.x0();
  return 4.0 / 3.0 * std::sqrt(mass * q.lambda / 12.0) * x0 * x0 * x0;
}

double instanton_action(const PotentialSpec& spec, double mass) {
  if (!(mass > 0.0)) throw ArgumentError("instanton_action: mass must be > 0");
  double a, b;
  if (auto q = std::get_if<QuarticDoubleWell>(&spec.variant())) {
    b = q->x0();
    a = -b;
  } else {
    const auto minima = local_minima(spec);
    if (minima.size() < 2) throw ShapeError("instanton_action: need two minima");
    std::vector<Minimum> sorted = minima;
    std::sort(sorted.begin(), sorted.end(), [](auto& l, auto& r) { return l.v < r.v; });
    a = std::min(sorted[0].x, sorted[1].x);
    b = std::max(sorted[0].x, sorted[1].x);
  }
  const double scale = std::max({std::abs(evaluate(spec, 0.5 * (a + b))), 1e-300});
  auto f = [&](double x) {
    // Interpolated samples may undershoot zero slightly near the minima.
    const double v = evaluate(spec, x);
    if (v < -1e-6 * scale) {
      std::ostringstream os;
      os << "instanton_action: V < 0 at x = " << x;
      throw DomainError(os.str());
    }
    return std::sqrt(2.0 * mass * std::max(v, 0.0));
  };
  return integrate(f, a, b);
}

InstantonResult particle_splitting(const WellGeometry& geom, double S, double kappa,
                                   double hbar) {
  if (!(S > 0.0)) throw ArgumentError("particle_splitting: S must be > 0");
  if (!(kappa > 0.0)) throw ArgumentError("particle_splitting: kappa must be > 0");
  if (!(hbar > 0.0)) throw ArgumentError("particle_splitting: hbar must be > 0");
  const double s = S / hbar;
  const double ln_dE = std::log(kappa * hbar * geom.omega) + 0.5 * std::log(s) - s;
  const double dE = std::exp(ln_dE);
  return {S, kappa, dE, dE / hbar, ln_dE};
}

InstantonResult field_gap(const FieldWellSpec& fw, double kappa, double hbar) {
  if (!(fw.L > 0.0)) throw ArgumentError("field_gap: L must be > 0");
  if (!(fw.phi0 >= 0.0)) throw ArgumentError("field_gap: phi0 must be >= 0");
  if (!(hbar > 0.0)) throw ArgumentError("field_gap: hbar must be > 0");
  auto f = [&](double phi) {
    const double v = fw.V(phi);
    if (v < 0.0) {
      std::ostringstream os;
      os << "field_gap: V < 0 at phi = " << phi;
      throw DomainError(os.str());
    }
    return std::sqrt(2.0 * v);
  };
  const double S = fw.L * fw.L * fw.L * integrate(f, -fw.phi0, fw.phi0);
  if (S == 0.0) return {0.0, kappa, 0.0, 0.0, -kInf};
  const double s = S / hbar;
  const double ln_dE = std::log(0.5 * kappa * fw.mass_param) + 0.5 * std::log(s) - s;
  const double dE = std::exp(ln_dE);
  return {S, kappa, dE, dE / hbar, ln_dE};
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("fit_line: need matching x, y");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = x[static_cast<std::size_t>(i)];
    A(i, 1) = 1.0;
    b[i] = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
  const double rms = std::sqrt((A * c - b).squaredNorm() / static_cast<double>(n));
  return {c[0], c[1], rms};
}

}  // namespace ssb
