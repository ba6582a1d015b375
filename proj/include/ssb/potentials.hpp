#pragma once

#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "ssb/grid.hpp"

namespace ssb {

// V(x) = (lambda/24) x^4 - (mu^2/2) x^2 + 3 mu^4 / (2 lambda)
//      = (lambda/24) (x^2 - x0^2)^2,  x0^2 = 6 mu^2 / lambda.
struct QuarticDoubleWell {
  double lambda;
  double mu_sq;

  double x0() const;
  double barrier() const;  // V(0) = 3 mu^4 / (2 lambda)
};

// V(x) = m omega^2 (x - center)^2 / 2.
struct Harmonic {
  double omega;
  double mass = 1.0;
  double center = 0.0;
};

class PotentialSpec;

// V_J(x) = V(x) - J x.
struct Tilted {
  std::shared_ptr<const PotentialSpec> base;
  double J;
};

// Samples on a uniform grid, interpolated by a cubic B-spline.
struct Tabulated {
  Grid grid;
  std::vector<double> values;
};

class PotentialSpec {
 public:
  using Variant = std::variant<QuarticDoubleWell, Harmonic, Tilted, Tabulated>;

  static PotentialSpec quartic(double lambda, double mu_sq);
  static PotentialSpec harmonic(double omega, double mass = 1.0, double center = 0.0);
  static PotentialSpec tilted(PotentialSpec base, double J);
  static PotentialSpec tabulated(Grid grid, std::vector<double> values);
  static PotentialSpec tabulated(Grid grid, const std::function<double(double)>& f);

  const Variant& variant() const noexcept { return v_; }

  // Declared domain: the sample range for tabulated specs, the real line otherwise.
  double domain_min() const;
  double domain_max() const;
  bool is_symmetric() const;  // V(x) == V(-x) by construction

 private:
  explicit PotentialSpec(Variant v);
  Variant v_;
  std::shared_ptr<const std::function<double(double, int)>> spline_;  // tabulated only
  friend double evaluate(const PotentialSpec&, double);
  friend double derivative(const PotentialSpec&, double, int);
};

struct WellGeometry {
  double x0;
  double barrier_height;
  double omega;
};

struct InstantonResult {
  double S;
  double kappa;
  double delta_E;
  double omega_I;
  double ln_delta_E;  // -inf when delta_E is exactly zero
};

// Field-theory double well: S = L^3 * integral sqrt(2 V(phi)) dphi over
// (-phi0, phi0); delta_E = (kappa m / 2) sqrt(S/hbar) exp(-S/hbar).
struct FieldWellSpec {
  std::function<double(double)> V;
  double phi0;
  double L;
  double mass_param;
};

double evaluate(const PotentialSpec& spec, double x);
// order 1 or 2; exact where the variant allows it.
double derivative(const PotentialSpec& spec, double x, int order);

WellGeometry well_geometry(const PotentialSpec& spec, double mass);

double instanton_action(const PotentialSpec& spec, double mass);
// Closed form (4/3) sqrt(m lambda / 12) x0^3 for the quartic well.
double quartic_instanton_action(const QuarticDoubleWell& q, double mass);

InstantonResult particle_splitting(const WellGeometry& geom, double S, double kappa = 1.0,
                                   double hbar = 1.0);
InstantonResult field_gap(const FieldWellSpec& fw, double kappa = 1.0, double hbar = 1.0);

// Least-squares line y = slope x + intercept with the RMS residual.
struct LineFit {
  double slope;
  double intercept;
  double rms_residual;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ssb
