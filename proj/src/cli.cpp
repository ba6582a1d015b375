#include "ssb/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "ssb/classical.hpp"
#include "ssb/errors.hpp"
#include "ssb/estimates.hpp"
#include "ssb/histories.hpp"
#include "ssb/hilbert.hpp"
#include "ssb/potentials.hpp"
#include "ssb/sigma.hpp"
#include "ssb/twolevel.hpp"

namespace ssb::cli {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kMaxHistories = 4096;

// ---------------------------------------------------------------- units

struct Unit {
  Dimension dim;
  double factor;
};

const std::map<std::string, Unit>& unit_table() {
  static const std::map<std::string, Unit> table = {
      {"m", {Dimension::length, 1.0}},
      {"cm", {Dimension::length, 1e-2}},
      {"mm", {Dimension::length, 1e-3}},
      {"um", {Dimension::length, 1e-6}},
      {"nm", {Dimension::length, 1e-9}},
      {"angstrom", {Dimension::length, 1e-10}},
      {"km", {Dimension::length, 1e3}},
      {"J", {Dimension::energy, 1.0}},
      {"eV", {Dimension::energy, estimates::kElectronVolt}},
      {"meV", {Dimension::energy, 1e-3 * estimates::kElectronVolt}},
      {"keV", {Dimension::energy, 1e3 * estimates::kElectronVolt}},
      {"MeV", {Dimension::energy, 1e6 * estimates::kElectronVolt}},
      {"kg", {Dimension::mass, 1.0}},
      {"g", {Dimension::mass, 1e-3}},
      {"u", {Dimension::mass, 1.66053906660e-27}},
      {"m_p", {Dimension::mass, estimates::kProtonMass}},
      {"m_e", {Dimension::mass, 9.1093837015e-31}},
      {"s", {Dimension::time, 1.0}},
      {"ms", {Dimension::time, 1e-3}},
      {"us", {Dimension::time, 1e-6}},
      {"ns", {Dimension::time, 1e-9}},
      {"ps", {Dimension::time, 1e-12}},
      {"fs", {Dimension::time, 1e-15}},
      {"m/s", {Dimension::speed, 1.0}},
      {"cm/s", {Dimension::speed, 1e-2}},
      {"km/s", {Dimension::speed, 1e3}},
  };
  return table;
}

const char* dimension_name(Dimension d) {
  switch (d) {
    case Dimension::none: return "dimensionless";
    case Dimension::length: return "length";
    case Dimension::energy: return "energy";
    case Dimension::mass: return "mass";
    case Dimension::time: return "time";
    case Dimension::speed: return "speed";
  }
  return "?";
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// ---------------------------------------------------------------- schema

enum class Kind { number, integer, text, numbers, flag };

struct Param {
  std::string key;
  Kind kind;
  json fallback;  // null marks an optional value
  Dimension dim = Dimension::none;
  std::vector<std::string> choices = {};
};

std::string path_of(const std::string& key) { return "parameters." + key; }

std::vector<Param> well_params() {
  return {
      {"potential", Kind::text, "quartic", Dimension::none, {"quartic", "harmonic"}},
      {"action", Kind::number, 15.0},  // S / hbar of the quartic well
      {"mu_sq", Kind::number, 1.0},
      {"omega", Kind::number, 1.0},  // harmonic well
      {"mass", Kind::number, 1.0},
      {"hbar", Kind::number, 1.0},
      {"grid_points", Kind::integer, 1024},
  };
}

std::vector<Param> schema(Experiment e) {
  std::vector<Param> s;
  auto append = [&](std::vector<Param> more) {
    for (auto& p : more) s.push_back(std::move(p));
  };
  switch (e) {
    case Experiment::spectrum:
      append({{"mu_sq", Kind::number, 1.0},
              {"action_min", Kind::number, 5.0},
              {"action_max", Kind::number, 25.0},
              {"n_actions", Kind::integer, 9},
              {"mass", Kind::number, 1.0},
              {"hbar", Kind::number, 1.0},
              {"kappa", Kind::number, 1.0},
              {"grid_points", Kind::integer, 1024}});
      break;
    case Experiment::doublet:
      append(well_params());
      append({{"angle_max", Kind::number, kPi / 2},
              {"n_angles", Kind::integer, 17},
              {"chain_angle", Kind::number, kPi / 8},
              {"n_measurements", Kind::integer, 3}});
      break;
    case Experiment::histories:
      append(well_params());
      append({{"family", Kind::text, "left_right", Dimension::none, {"left_right", "spectral"}},
              {"members", Kind::integer, 2},
              {"n_times", Kind::integer, 3},
              {"angle", Kind::number, 0.1},  // rotation angle per step
              {"initial", Kind::text, "ground", Dimension::none, {"ground", "left"}},
              {"epsilon", Kind::number, histories::kDefaultEpsilon},
              {"truncation", Kind::integer, 16}});
      break;
    case Experiment::classical:
      append(well_params());
      append({{"temperature", Kind::number, nullptr},
              {"barrier_ratio", Kind::number, 20.0},  // barrier / k_B T when no temperature
              {"dynamics", Kind::text, "hamiltonian", Dimension::none, {"hamiltonian", "langevin"}},
              {"friction", Kind::number, 0.3},  // in units of omega
              {"n_traj", Kind::integer, 200},
              {"max_lag_periods", Kind::number, 100.0},
              {"n_lags", Kind::integer, 21},
              {"horizon_periods", Kind::number, nullptr},
              {"n_mixture", Kind::integer, 20000}});
      break;
    case Experiment::lattice:
      append({{"side", Kind::integer, 32},
              {"coupling", Kind::number, 1.0},
              {"temperature", Kind::number, 2.0},
              {"sweeps", Kind::integer, 10000},
              {"n_chains", Kind::integer, 32},
              {"measure_every", Kind::integer, 10},
              {"bins", Kind::integer, 41},
              {"start", Kind::text, "random", Dimension::none, {"random", "ordered"}}});
      break;
    case Experiment::sigma:
      append({{"rho0", Kind::number, 1.0},
              {"L", Kind::number, 1.0},
              {"hbar", Kind::number, 1.0},
              {"mass", Kind::number, 1.0},
              {"width", Kind::number, kPi / 4},
              {"survival_times", Kind::numbers, json::array({1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0})},
              {"grid_check", Kind::flag, false},
              {"n_sectors", Kind::integer, 8},
              {"n_steps", Kind::integer, 2},
              {"tch_fractions", Kind::numbers, json::array({1e-3, 10.0})},
              {"epsilon", Kind::number, 1e-2},
              {"n_modes", Kind::integer, static_cast<std::int64_t>(sigma::kDefaultModes)},
              {"tilt_J", Kind::number, nullptr}});
      break;
    case Experiment::estimates:
      append({{"m", Kind::number, estimates::kProtonMass, Dimension::mass},
              {"E", Kind::number, estimates::kElectronVolt, Dimension::energy},
              {"l", Kind::number, 1e-10, Dimension::length},
              {"alpha", Kind::number, 1.0},
              {"L", Kind::number, 1e-3, Dimension::length},
              {"c_sound", Kind::number, 1e3, Dimension::speed},
              {"Delta", Kind::number, 0.1},
              {"margin", Kind::number, estimates::kDefaultMargin},
              {"sweep_points", Kind::integer, 7}});
      break;
  }
  return s;
}

json resolve_value(const Param& p, const json& v) {
  const std::string key = path_of(p.key);
  switch (p.kind) {
    case Kind::number:
      return parse_quantity(v, p.dim, key);
    case Kind::integer:
      if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))
        return v.get<std::int64_t>();
      throw ConfigError(key, "expected a non-negative integer");
    case Kind::text: {
      if (!v.is_string()) throw ConfigError(key, "expected a string");
      const auto s = v.get<std::string>();
      if (!p.choices.empty() &&
          std::find(p.choices.begin(), p.choices.end(), s) == p.choices.end()) {
        std::string all;
        for (const auto& c : p.choices) all += (all.empty() ? "" : ", ") + c;
        throw ConfigError(key, "'" + s + "' is not one of {" + all + "}");
      }
      return s;
    }
    case Kind::numbers: {
      if (!v.is_array() || v.empty()) throw ConfigError(key, "expected a non-empty list of numbers");
      json out = json::array();
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(parse_quantity(v[i], p.dim, key + "[" + std::to_string(i) + "]"));
      return out;
    }
    case Kind::flag:
      if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
      return v;
  }
  return v;
}

json resolve_parameters(Experiment e, const json& given) {
  if (!given.is_null() && !given.is_object())
    throw ConfigError("parameters", "expected an object");
  const auto params = schema(e);
  if (given.is_object()) {
    for (const auto& [k, v] : given.items()) {
      const bool known = std::any_of(params.begin(), params.end(),
                                     [&](const Param& p) { return p.key == k; });
      if (!known) throw ConfigError(path_of(k), "unknown key for experiment " + to_string(e));
    }
  }
  json out = json::object();
  for (const auto& p : params) {
    if (given.is_object() && given.contains(p.key) && !given.at(p.key).is_null())
      out[p.key] = resolve_value(p, given.at(p.key));
    else
      out[p.key] = p.fallback;
  }
  return out;
}

Experiment experiment_from(const json& v) {
  if (!v.is_string()) throw ConfigError("experiment", "expected a string");
  const auto s = v.get<std::string>();
  for (auto e : {Experiment::spectrum, Experiment::doublet, Experiment::histories,
                 Experiment::classical, Experiment::lattice, Experiment::sigma,
                 Experiment::estimates})
    if (to_string(e) == s) return e;
  throw ConfigError("experiment", "unknown experiment '" + s + "'");
}

// ---------------------------------------------------------------- typed access

double num(const json& p, const char* k) { return p.at(k).get<double>(); }
std::size_t count(const json& p, const char* k) { return p.at(k).get<std::size_t>(); }
std::string text(const json& p, const char* k) { return p.at(k).get<std::string>(); }
std::vector<double> numbers(const json& p, const char* k) {
  return p.at(k).get<std::vector<double>>();
}

void positive(const json& p, const char* k) {
  const double v = num(p, k);
  if (!(v > 0.0)) throw ConfigError(path_of(k), "must be > 0");
}

void at_least(const json& p, const char* k, std::size_t lo) {
  if (count(p, k) < lo) throw ConfigError(path_of(k), "must be >= " + std::to_string(lo));
}

// Module preconditions report "key: message"; map them onto the config path.
template <class F>
auto module_checked(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(": ");
    if (colon != std::string::npos && msg.find(' ') > colon)
      throw ConfigError(path_of(msg.substr(0, colon)), msg.substr(colon + 2));
    throw ConfigError("parameters", msg);
  }
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

// ---------------------------------------------------------------- plans

struct WellPlan {
  PotentialSpec spec;
  std::string kind;
  double mass;
  double hbar;
  std::size_t grid_points;
};

// Quartic well whose instanton action equals `action` hbar; S scales as 1 / lambda.
PotentialSpec quartic_for_action(double action, double mu_sq, double mass, double hbar) {
  const double s1 = quartic_instanton_action(QuarticDoubleWell{1.0, mu_sq}, mass);
  return PotentialSpec::quartic(s1 / (action * hbar), mu_sq);
}

WellPlan plan_well(const json& p) {
  for (const char* k : {"action", "mu_sq", "omega", "mass", "hbar"}) positive(p, k);
  at_least(p, "grid_points", 64);
  const auto kind = text(p, "potential");
  const double mass = num(p, "mass");
  const double hbar = num(p, "hbar");
  auto spec = kind == "quartic"
                  ? quartic_for_action(num(p, "action"), num(p, "mu_sq"), mass, hbar)
                  : PotentialSpec::harmonic(num(p, "omega"), mass);
  return {std::move(spec), kind, mass, hbar, count(p, "grid_points")};
}

double history_count(std::size_t members, std::size_t n_times) {
  return std::pow(static_cast<double>(members), static_cast<double>(n_times));
}

std::string pow_text(std::size_t base, std::size_t exp, double value) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu^%zu = %.4g", base, exp, value);
  return buf;
}

void check_history_bound(std::size_t members, std::size_t n_times) {
  const double n = history_count(members, n_times);
  if (n_times > histories::kMaxTimes || members > histories::kMaxFamily || n > kMaxHistories) {
    std::ostringstream os;
    os << pow_text(members, n_times, n) << " histories exceeds the enumeration bound (n_times <= "
       << histories::kMaxTimes << ", |family| <= " << histories::kMaxFamily << ", at most "
       << kMaxHistories << " histories)";
    throw ConfigError(path_of("n_times"), os.str());
  }
}

// Validates every parameter and returns the cost estimate.
json plan(const ExperimentConfig& c) {
  const json& p = c.parameters;
  json cost = json::object();
  switch (c.experiment) {
    case Experiment::spectrum: {
      for (const char* k : {"mu_sq", "action_min", "action_max", "mass", "hbar", "kappa"})
        positive(p, k);
      if (!(num(p, "action_max") >= num(p, "action_min")))
        throw ConfigError(path_of("action_max"), "must be >= action_min");
      at_least(p, "n_actions", 2);
      at_least(p, "grid_points", 64);
      cost["matrix_dimension"] = count(p, "grid_points");
      cost["eigenpairs_per_point"] = 2;
      cost["eigensolves"] = count(p, "n_actions");
      break;
    }
    case Experiment::doublet: {
      plan_well(p);
      positive(p, "angle_max");
      at_least(p, "n_angles", 2);
      const auto n = count(p, "n_measurements");
      if (n < 1 || n > 20) throw ConfigError(path_of("n_measurements"), "must lie in [1, 20]");
      if (!(num(p, "chain_angle") >= 0.0)) throw ConfigError(path_of("chain_angle"), "must be >= 0");
      cost["matrix_dimension"] = count(p, "grid_points");
      cost["eigenpairs"] = 2;
      cost["chain_outcomes"] = 1ull << n;
      break;
    }
    case Experiment::histories: {
      plan_well(p);
      positive(p, "angle");
      positive(p, "epsilon");
      at_least(p, "n_times", 1);
      const bool spectral = text(p, "family") == "spectral";
      const auto members = count(p, "members");
      if (!spectral && members != 2)
        throw ConfigError(path_of("members"), "the left_right family has exactly 2 members");
      if (members < 2) throw ConfigError(path_of("members"), "must be >= 2");
      if (spectral && count(p, "truncation") < members)
        throw ConfigError(path_of("truncation"), "must be >= members");
      check_history_bound(members, count(p, "n_times"));
      cost["matrix_dimension"] = count(p, "grid_points");
      cost["history_space_dimension"] = spectral ? count(p, "truncation") : 2;
      cost["histories"] = history_count(members, count(p, "n_times"));
      break;
    }
    case Experiment::classical: {
      auto w = plan_well(p);
      if (!p.at("temperature").is_null()) positive(p, "temperature");
      positive(p, "barrier_ratio");
      positive(p, "max_lag_periods");
      at_least(p, "n_traj", 100);
      at_least(p, "n_lags", 2);
      at_least(p, "n_mixture", 100);
      if (text(p, "dynamics") == "langevin") positive(p, "friction");
      if (!p.at("horizon_periods").is_null() &&
          !(num(p, "horizon_periods") >= num(p, "max_lag_periods")))
        throw ConfigError(path_of("horizon_periods"), "must be >= max_lag_periods");
      const double temperature = p.at("temperature").is_null()
                                     ? 0.0
                                     : num(p, "temperature");
      if (temperature > 0.0)
        module_checked([&] {
          classical::validate({w.spec, w.mass, temperature, c.seed});
          return 0;
        });
      const double horizon = p.at("horizon_periods").is_null() ? 2.0 * num(p, "max_lag_periods")
                                                               : num(p, "horizon_periods");
      cost["trajectories"] = count(p, "n_traj");
      cost["steps_per_trajectory"] = horizon * 800.0;
      cost["chain_length"] = count(p, "n_mixture");
      break;
    }
    case Experiment::lattice: {
      at_least(p, "side", 16);
      at_least(p, "sweeps", 10000);
      at_least(p, "n_chains", 2);
      at_least(p, "measure_every", 1);
      at_least(p, "bins", 3);
      positive(p, "temperature");
      const double sites = std::pow(static_cast<double>(count(p, "side")), 2);
      cost["chains"] = count(p, "n_chains");
      cost["chain_length_sweeps"] = count(p, "sweeps");
      cost["spin_flips"] = sites * static_cast<double>(count(p, "sweeps") * count(p, "n_chains"));
      break;
    }
    case Experiment::sigma: {
      for (const char* k : {"rho0", "L", "hbar", "mass", "width", "epsilon"}) positive(p, k);
      for (double t : numbers(p, "survival_times"))
        if (!(t >= 0.0)) throw ConfigError(path_of("survival_times"), "times must be >= 0");
      for (double f : numbers(p, "tch_fractions"))
        if (!(f > 0.0)) throw ConfigError(path_of("tch_fractions"), "fractions must be > 0");
      if (!p.at("tilt_J").is_null()) positive(p, "tilt_J");
      at_least(p, "n_sectors", 2);
      at_least(p, "n_steps", 1);
      at_least(p, "n_modes", 8);
      const auto sectors = count(p, "n_sectors");
      const auto steps = count(p, "n_steps");
      if (steps + 1 > histories::kMaxTimes)
        throw ConfigError(path_of("n_steps"), "at most " +
                                                  std::to_string(histories::kMaxTimes - 1) +
                                                  " steps");
      if (history_count(sectors, steps) > kMaxHistories)
        throw ConfigError(path_of("n_steps"),
                          pow_text(sectors, steps, history_count(sectors, steps)) +
                              " weighted histories exceeds the bound of " +
                              std::to_string(kMaxHistories));
      const double width = 2.0 * kPi / static_cast<double>(sectors);
      if (static_cast<double>(count(p, "n_modes")) < 8.0 / width)
        throw ConfigError(path_of("n_modes"), "too few modes to resolve the sectors");
      cost["circle_grid_points"] = 2 * count(p, "n_modes");
      cost["weighted_histories"] = history_count(sectors, steps);
      cost["survival_points"] = numbers(p, "survival_times").size();
      if (p.at("grid_check").get<bool>()) {
        cost["fft_size"] = static_cast<double>(sigma::GridSurvivalOptions{}.points_per_width) *
                           static_cast<double>(sigma::GridSurvivalOptions{}.box_widths);
      }
      break;
    }
    case Experiment::estimates: {
      estimates::SolidStateInputs in{num(p, "m"), num(p, "E"), num(p, "l"),
                                     num(p, "alpha"), num(p, "L"), num(p, "c_sound")};
      module_checked([&] {
        estimates::validate(in);
        return 0;
      });
      const double d = num(p, "Delta");
      if (!(d > 0.0 && d < 2.0 * kPi)) throw ConfigError(path_of("Delta"), "must lie in (0, 2 pi)");
      positive(p, "margin");
      at_least(p, "sweep_points", 2);
      cost["evaluations"] = count(p, "sweep_points") + 3;
      break;
    }
  }
  return cost;
}

// ---------------------------------------------------------------- runners

Column col(std::string name, std::vector<double> v) { return {std::move(name), std::move(v)}; }
Column col(std::string name, std::vector<std::string> v) { return {std::move(name), std::move(v)}; }
Column col(std::string name, std::vector<std::int64_t> v) { return {std::move(name), std::move(v)}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

twolevel::DoubletModel doublet_of(const WellPlan& w) {
  twolevel::DoubletOptions o;
  o.n_points = w.grid_points;
  return twolevel::build_doublet(w.spec, w.mass, w.hbar, o);
}

RunResult run_spectrum(const json& p) {
  const double mu_sq = num(p, "mu_sq"), mass = num(p, "mass"), hbar = num(p, "hbar");
  const auto actions = linspace(num(p, "action_min"), num(p, "action_max"), count(p, "n_actions"));
  std::vector<double> mu, lambda, s_col, gap, inst, ratio;
  for (double s : actions) {
    const auto spec = quartic_for_action(s, mu_sq, mass, hbar);
    const auto& q = std::get<QuarticDoubleWell>(spec.variant());
    const auto geom = well_geometry(spec, mass);
    const auto res = particle_splitting(geom, instanton_action(spec, mass), num(p, "kappa"), hbar);
    const auto model = doublet_of({spec, "quartic", mass, hbar, count(p, "grid_points")});
    mu.push_back(std::sqrt(mu_sq));
    lambda.push_back(q.lambda);
    s_col.push_back(res.S / hbar);
    gap.push_back(hbar * model.omega_gap);
    inst.push_back(res.delta_E);
    ratio.push_back(hbar * model.omega_gap / res.delta_E);
  }
  std::vector<double> ln_gap, ln_gap_pref;
  for (std::size_t i = 0; i < gap.size(); ++i) {
    ln_gap.push_back(std::log(gap[i]));
    ln_gap_pref.push_back(std::log(gap[i]) - 0.5 * std::log(s_col[i]));
  }
  const auto plain = fit_line(s_col, ln_gap);
  const auto pref = fit_line(s_col, ln_gap_pref);
  RunResult r;
  r.tables.push_back({"spectrum",
                      {col("mu", mu), col("lambda", lambda), col("S_over_hbar", s_col),
                       col("gap", gap), col("instanton_gap", inst), col("ratio", ratio)}});
  r.records.push_back({"spectrum_fit",
                       {{"ln_gap_vs_S", {{"slope", plain.slope},
                                         {"intercept", plain.intercept},
                                         {"rms_residual", plain.rms_residual}}},
                        {"ln_gap_minus_half_ln_S_vs_S", {{"slope", pref.slope},
                                                         {"intercept", pref.intercept},
                                                         {"rms_residual", pref.rms_residual}}}}});
  r.summary.push_back("spectrum: " + std::to_string(gap.size()) + " points, slope of ln gap vs S/hbar " +
                      fmt("%.4f", plain.slope) + " (prefactor-corrected " +
                      fmt("%.4f", pref.slope) + ")");
  return r;
}

RunResult run_doublet(const json& p) {
  const auto w = plan_well(p);
  const auto model = doublet_of(w);
  std::vector<double> angle, tau, skip, sum, viol;
  for (double a : linspace(0.0, num(p, "angle_max"), count(p, "n_angles"))) {
    const double t = a / model.rotation_rate();
    const auto cmp = twolevel::protocol_compare(model, t);
    angle.push_back(a);
    tau.push_back(t);
    skip.push_back(cmp.pr_skip);
    sum.push_back(cmp.pr_sum);
    viol.push_back(cmp.violation);
  }
  const auto chain = twolevel::measurement_chain(
      model, num(p, "chain_angle") / model.rotation_rate(), count(p, "n_measurements"));
  json rec = {{"omega_gap", model.omega_gap},
              {"rotation_rate", model.rotation_rate()},
              {"E0", model.E0},
              {"E1", model.E1},
              {"localization", model.localization},
              {"chain", twolevel::to_json(chain)}};
  if (w.kind == "quartic") {
    const auto geom = well_geometry(w.spec, w.mass);
    const auto inst = particle_splitting(geom, instanton_action(w.spec, w.mass), 1.0, w.hbar);
    rec["instanton_omega"] = inst.omega_I;
    rec["well_omega"] = geom.omega;
  }
  RunResult r;
  r.tables.push_back({"doublet_protocol",
                      {col("angle", angle), col("tau", tau), col("pr_skip", skip),
                       col("pr_sum", sum), col("violation", viol)}});
  r.records.push_back({"doublet", rec});
  r.summary.push_back("doublet: omega_gap " + fmt("%.6e", model.omega_gap) + ", localization " +
                      fmt("%.6f", model.localization));
  return r;
}

RunResult run_histories(const json& p) {
  using namespace histories;
  const auto w = plan_well(p);
  const auto model = doublet_of(w);
  const double tau = num(p, "angle") / model.rotation_rate();
  const auto times = time_grid(tau, count(p, "n_times") - 1);
  const bool left = text(p, "initial") == "left";
  const double eps = num(p, "epsilon");
  DecoherenceMatrix dm;
  if (text(p, "family") == "left_right") {
    const auto sys = twolevel::two_level_system(model);
    dm = exhaustive_decoherence_matrix(left ? sys.left : sys.ground, sys.family, times, sys.U, eps);
  } else {
    const auto k = count(p, "truncation");
    const auto members = count(p, "members");
    const auto geom = well_geometry(w.spec, w.mass);
    const double half = std::abs(geom.x0) + 12.0 * std::sqrt(w.hbar / (w.mass * geom.omega));
    const Grid grid(-half, half, w.grid_points);
    const auto spectrum =
        hilbert::eigendecompose(hilbert::build_hamiltonian(grid, w.spec, w.mass, w.hbar), k);
    const auto n = static_cast<Eigen::Index>(k);
    std::vector<Projector> proj;
    std::vector<std::string> labels;
    Matrix rest = Matrix::Identity(n, n);
    for (std::size_t i = 0; i + 1 < members; ++i) {
      Matrix m = Matrix::Zero(n, n);
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
      rest -= m;
      proj.emplace_back(m);
      labels.push_back("E" + std::to_string(i));
    }
    proj.emplace_back(rest);
    labels.push_back("rest");
    const ProjectorFamily family(std::move(proj), std::move(labels));
    Vector c = Vector::Zero(n);
    if (left) {
      for (Eigen::Index i = 0; i < n; ++i)
        c[i] = spectrum.state(static_cast<std::size_t>(i)).inner(*model.psi_L);
    } else {
      c[0] = 1.0;
    }
    const auto U = spectral_propagator(spectrum.energies, Matrix::Identity(n, n), w.hbar);
    dm = exhaustive_decoherence_matrix(hilbert::DensityOperator::pure(c), family, times, U, eps);
  }
  std::vector<std::string> labels = dm.labels;
  std::vector<double> prob;
  for (Eigen::Index i = 0; i < dm.D.rows(); ++i) prob.push_back(dm.D(i, i).real());
  RunResult r;
  r.tables.push_back({"histories_probabilities", {col("history", labels), col("probability", prob)}});
  json rec = to_json(dm);
  rec["tau"] = tau;
  rec["omega_gap"] = model.omega_gap;
  r.records.push_back({"histories", rec});
  r.summary.push_back("histories: " + std::to_string(dm.labels.size()) + " histories, " +
                      to_string(dm.classification) + ", max |Re D| " +
                      fmt("%.3e", dm.measures.max_abs_re));
  return r;
}

RunResult run_classical(const json& p, std::uint64_t seed) {
  using namespace classical;
  const auto w = plan_well(p);
  const auto geom = well_geometry(w.spec, w.mass);
  const double temperature = p.at("temperature").is_null()
                                 ? geom.barrier_height / num(p, "barrier_ratio")
                                 : num(p, "temperature");
  const CanonicalSpec spec{w.spec, w.mass, temperature, seed};
  module_checked([&] {
    validate(spec);
    return 0;
  });
  const double period = well_period(spec);
  const double max_lag = num(p, "max_lag_periods");
  const double horizon =
      (p.at("horizon_periods").is_null() ? 2.0 * max_lag : num(p, "horizon_periods")) * period;
  const auto lag_periods = linspace(0.0, max_lag, count(p, "n_lags"));
  std::vector<double> lags;
  for (double l : lag_periods) lags.push_back(l * period);
  DynamicsOptions dyn;
  if (text(p, "dynamics") == "langevin") {
    dyn.kind = Dynamics::langevin;
    dyn.friction = num(p, "friction") * geom.omega;
  }
  const auto series = side_correlation(spec, horizon, lags, count(p, "n_traj"), dyn);
  json rec = {{"temperature", temperature},
              {"barrier_height", geom.barrier_height},
              {"period", period},
              {"n_samples", series.n_samples},
              {"mean_x", series.mean_x},
              {"mean_x_stderr", series.mean_x_stderr},
              {"max_energy_drift", series.max_energy_drift}};
  if (geom.barrier_height > 0.0 && w.spec.is_symmetric()) {
    const auto mix = mixture_decomposition(spec, count(p, "n_mixture"));
    rec["mixture"] = {{"w_L", mix.w_L},
                      {"w_R", mix.w_R},
                      {"w_stderr", mix.w_stderr},
                      {"overlap_defect", mix.overlap_defect}};
  }
  RunResult r;
  r.tables.push_back({"classical_correlation",
                      {col("lag_periods", lag_periods), col("lag", series.lags),
                       col("value", series.values), col("stderr", series.standard_errors)}});
  r.records.push_back({"classical", rec});
  r.summary.push_back("classical: C(max lag) = " + fmt("%.4f", series.values.back()) +
                      ", <X> = " + fmt("%.4f", series.mean_x) + " +- " +
                      fmt("%.4f", series.mean_x_stderr));
  return r;
}

RunResult run_lattice(const json& p, std::uint64_t seed) {
  using namespace classical;
  const SpinLattice lat{count(p, "side"), num(p, "coupling"), num(p, "temperature"), seed};
  LatticeOptions o;
  o.n_chains = count(p, "n_chains");
  o.measure_every = count(p, "measure_every");
  o.histogram_bins = count(p, "bins");
  o.start = text(p, "start") == "ordered" ? Start::ordered : Start::random;
  const auto sig = lattice_signatures(lat, count(p, "sweeps"), o);
  std::vector<std::int64_t> rr;
  for (std::size_t i = 0; i < sig.spin_corr.size(); ++i) rr.push_back(static_cast<std::int64_t>(i));
  RunResult r;
  r.tables.push_back({"lattice_correlation",
                      {col("r", rr), col("value", sig.spin_corr),
                       col("stderr", sig.spin_corr_stderr)}});
  r.tables.push_back({"lattice_histogram",
                      {col("magnetization", sig.bin_centers), col("weight", sig.histogram)}});
  r.records.push_back({"lattice",
                       {{"mean_abs_magnetization", sig.mean_abs_magnetization},
                        {"mean_magnetization", sig.mean_magnetization},
                        {"mean_magnetization_stderr", sig.mean_magnetization_stderr},
                        {"mode_low", sig.mode_low},
                        {"mode_high", sig.mode_high},
                        {"bimodal", sig.bimodal}}});
  r.summary.push_back(std::string("lattice: ") + (sig.bimodal ? "bimodal" : "unimodal") +
                      ", <|m|> = " + fmt("%.4f", sig.mean_abs_magnetization) + ", <m> = " +
                      fmt("%.4f", sig.mean_magnetization));
  return r;
}

RunResult run_sigma(const json& p) {
  using namespace sigma;
  const PhaseSystem sys{num(p, "rho0"), num(p, "L"), num(p, "hbar")};
  const double mass = num(p, "mass"), width = num(p, "width");
  const double scale = mass * width * width / sys.hbar;
  const SquareWavePacket packet{width};
  const bool grid_check = p.at("grid_check").get<bool>();
  std::vector<double> ts, tt, re, im, ab, grid_ab;
  for (double t : numbers(p, "survival_times")) {
    const auto a = survival_amplitude(packet, mass, sys.hbar, t * scale);
    ts.push_back(t);
    tt.push_back(t * scale);
    re.push_back(a.real());
    im.push_back(a.imag());
    ab.push_back(std::abs(a));
    if (grid_check) grid_ab.push_back(std::abs(survival_amplitude_grid(packet, mass, sys.hbar, t * scale)));
  }
  RunResult r;
  ResultTable surv{"sigma_survival",
                   {col("t_scaled", ts), col("t", tt), col("re", re), col("im", im),
                    col("abs", ab)}};
  if (grid_check) surv.columns.push_back(col("grid_abs", grid_ab));
  r.tables.push_back(std::move(surv));

  const auto family = sector_family(count(p, "n_sectors"), count(p, "n_modes"));
  const auto ts_sec = consistency_timescale(sys, family.width);
  const auto rho = hilbert::DensityOperator::pure(sector_state(family, 0).coefficients());
  const auto steps = count(p, "n_steps");
  std::vector<double> frac, tau_col, max_re, max_norm;
  std::vector<std::string> cls;
  for (double f : numbers(p, "tch_fractions")) {
    const double tau = f * ts_sec.t_CH / static_cast<double>(steps);
    const auto dm = sector_histories(sys, family, tau, steps, rho, num(p, "epsilon"));
    frac.push_back(f);
    tau_col.push_back(tau);
    max_re.push_back(dm.measures.max_abs_re);
    max_norm.push_back(dm.measures.max_normalized_abs);
    cls.push_back(histories::to_string(dm.classification));
    r.summary.push_back("sigma: n tau = " + fmt("%g", f) + " t_CH -> " + cls.back() +
                        " (max |Re D| " + fmt("%.3e", max_re.back()) + ")");
  }
  r.tables.push_back({"sigma_sectors",
                      {col("tch_fraction", frac), col("tau", tau_col), col("max_abs_re", max_re),
                       col("max_normalized_abs", max_norm), col("classification", cls)}});
  const auto packet_ts = consistency_timescale(sys, width);
  json rec = {{"m_eff", sys.m_eff()},
              {"packet_t_CH", packet_ts.t_CH},
              {"packet_validity_warning", packet_ts.validity_warning},
              {"sector_width", family.width},
              {"sector_t_CH", ts_sec.t_CH}};
  if (!p.at("tilt_J").is_null()) {
    const auto g = tilted_ground_state(sys, num(p, "tilt_J"));
    rec["tilted"] = {{"J", num(p, "tilt_J")}, {"variance", g.variance}, {"width", g.width}};
  }
  r.records.push_back({"sigma", rec});
  return r;
}

RunResult run_estimates(const json& p) {
  using namespace estimates;
  const SolidStateInputs in{num(p, "m"), num(p, "E"), num(p, "l"),
                            num(p, "alpha"), num(p, "L"), num(p, "c_sound")};
  const double density = action_density(in);
  const auto gap = discrete_gap_exponent(in);
  const auto cc = continuous_conditions(in, num(p, "Delta"), num(p, "margin"));
  std::vector<double> alpha, dens;
  for (const auto& [a, d] : alpha_sweep(in, count(p, "sweep_points"))) {
    alpha.push_back(a);
    dens.push_back(d);
  }
  RunResult r;
  r.tables.push_back({"estimates_alpha", {col("alpha", alpha), col("action_density", dens)}});
  r.records.push_back({"estimates",
                       {{"action_density", density},
                        {"exponent", gap.exponent},
                        {"gap_ln", gap.gap.ln_value},
                        {"gap_reference", gap.gap.reference},
                        {"gap", gap.gap.render()},
                        {"ln_decoherence_time", gap.ln_decoherence_time},
                        {"t_CH", cc.t_CH},
                        {"t_mu", cc.t_mu},
                        {"condition_ok", cc.condition_ok},
                        {"coefficient", cc.coefficient},
                        {"delta_sq_threshold", cc.delta_sq_threshold}}});
  r.summary.push_back("estimates: action density S/V = " + fmt("%.4e", density) + " J s / m^3");
  r.summary.push_back("estimates: gap exponent N = " + fmt("%.4e", gap.exponent) +
                      ", Delta E = " + gap.gap.render());
  r.summary.push_back("estimates: ln t_decoherence = " + fmt("%.4e", gap.ln_decoherence_time) +
                      " (ln s)");
  r.summary.push_back("estimates: t_CH = " + fmt("%.4e", cc.t_CH) + " s, t_mu = " +
                      fmt("%.4e", cc.t_mu) + " s, condition " +
                      (cc.condition_ok ? "holds" : "fails") + ", Delta^2 threshold " +
                      fmt("%.3e", cc.delta_sq_threshold));
  return r;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ArgumentError("cannot write " + path.string());
  f << content;
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::spectrum: return "spectrum";
    case Experiment::doublet: return "doublet";
    case Experiment::histories: return "histories";
    case Experiment::classical: return "classical";
    case Experiment::lattice: return "lattice";
    case Experiment::sigma: return "sigma";
    case Experiment::estimates: return "estimates";
  }
  return "?";
}

double parse_quantity(const json& value, Dimension dim, const std::string& key_path) {
  double x = 0.0;
  if (value.is_number()) {
    x = value.get<double>();
  } else if (value.is_string()) {
    const auto s = value.get<std::string>();
    char* end = nullptr;
    x = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw ConfigError(key_path, "'" + s + "' does not start with a number");
    const auto unit = trim(std::string(end));
    if (!unit.empty()) {
      const auto it = unit_table().find(unit);
      if (it == unit_table().end()) throw ConfigError(key_path, "unknown unit '" + unit + "'");
      if (it->second.dim != dim)
        throw ConfigError(key_path, "unit '" + unit + "' is a " + dimension_name(it->second.dim) +
                                        ", expected " + dimension_name(dim));
      x *= it->second.factor;
    }
  } else {
    throw ConfigError(key_path, "expected a number or a quantity string");
  }
  if (!std::isfinite(x)) throw ConfigError(key_path, "must be finite");
  return x;
}

ExperimentConfig load_config(const json& tree_in) {
  const json& tree = tree_in.is_object() && tree_in.contains("config") ? tree_in.at("config") : tree_in;
  if (!tree.is_object() || tree.empty())
    throw ConfigError("experiment", "missing: the config is empty");
  for (const auto& [k, v] : tree.items())
    if (k != "experiment" && k != "parameters" && k != "seed" && k != "output_dir")
      throw ConfigError(k, "unknown key");
  if (!tree.contains("experiment")) throw ConfigError("experiment", "missing");
  ExperimentConfig c;
  c.experiment = experiment_from(tree.at("experiment"));
  if (tree.contains("seed")) {
    const auto& s = tree.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ConfigError("seed", "expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (tree.contains("output_dir")) {
    if (!tree.at("output_dir").is_string()) throw ConfigError("output_dir", "expected a path");
    c.output_dir = tree.at("output_dir").get<std::string>();
  }
  c.parameters = resolve_parameters(c.experiment, tree.value("parameters", json()));
  return c;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  const auto content = ss.str();
  if (trim(content).find_first_not_of("\r\n") == std::string::npos)
    throw ConfigError("experiment", "missing: the config is empty");
  json tree;
  try {
    tree = json::parse(content);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", e.what());
  }
  return load_config(tree);
}

json echo(const ExperimentConfig& c) {
  return {{"experiment", to_string(c.experiment)},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"parameters", c.parameters}};
}

std::string config_hash(const ExperimentConfig& c) {
  json e = echo(c);
  e.erase("output_dir");
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : e.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json validate(const ExperimentConfig& c) {
  const auto cost = plan(c);
  return {{"experiment", to_string(c.experiment)},
          {"seed", c.seed},
          {"config_hash", config_hash(c)},
          {"parameters", c.parameters},
          {"cost", cost}};
}

std::size_t Column::size() const {
  return std::visit([](const auto& v) { return v.size(); }, data);
}

std::string Column::type() const {
  switch (data.index()) {
    case 0: return "float64";
    case 1: return "int64";
    default: return "string";
  }
}

std::size_t ResultTable::rows() const {
  if (columns.empty()) return 0;
  const auto n = columns.front().size();
  for (const auto& c : columns)
    if (c.size() != n) throw ShapeError("table " + name + ": column " + c.name + " has unequal length");
  return n;
}

RunResult run(const ExperimentConfig& c) {
  plan(c);
  const json& p = c.parameters;
  switch (c.experiment) {
    case Experiment::spectrum: return run_spectrum(p);
    case Experiment::doublet: return run_doublet(p);
    case Experiment::histories: return run_histories(p);
    case Experiment::classical: return run_classical(p, c.seed);
    case Experiment::lattice: return run_lattice(p, c.seed);
    case Experiment::sigma: return run_sigma(p);
    case Experiment::estimates: return run_estimates(p);
  }
  return {};
}

std::string render_csv(const ResultTable& t, const std::string& hash) {
  const auto n = t.rows();
  std::string out = "# config_hash: " + hash + "\n# table: " + t.name + "\n";
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    out += (j ? "," : "") + csv_escape(t.columns[j].name);
  out += "\n";
  char buf[40];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      if (j) out += ",";
      const auto& d = t.columns[j].data;
      if (const auto* v = std::get_if<std::vector<double>>(&d)) {
        std::snprintf(buf, sizeof buf, "%.17g", (*v)[i]);
        out += buf;
      } else if (const auto* v = std::get_if<std::vector<std::int64_t>>(&d)) {
        out += std::to_string((*v)[i]);
      } else {
        out += csv_escape(std::get<std::vector<std::string>>(d)[i]);
      }
    }
    out += "\n";
  }
  return out;
}

std::vector<std::filesystem::path> write_outputs(const ExperimentConfig& c, const RunResult& r) {
  namespace fs = std::filesystem;
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  const auto hash = config_hash(c);
  const auto stamp = timestamp();
  std::vector<fs::path> written;
  auto meta = [&](const std::string& name, const std::string& file, json extra) {
    json m = {{"config", echo(c)},
              {"config_hash", hash},
              {"version", kVersion},
              {"timestamp", stamp},
              {"file", file}};
    for (auto& [k, v] : extra.items()) m[k] = v;
    const auto path = dir / (name + ".meta.json");
    write_file(path, m.dump(2) + "\n");
    written.push_back(path);
  };
  for (const auto& t : r.tables) {
    const auto path = dir / (t.name + ".csv");
    write_file(path, render_csv(t, hash));
    written.push_back(path);
    json cols = json::array();
    for (const auto& col : t.columns) cols.push_back({{"name", col.name}, {"type", col.type()}});
    meta(t.name, path.filename().string(), {{"columns", cols}, {"rows", t.rows()}});
  }
  for (const auto& rec : r.records) {
    const auto path = dir / (rec.name + ".json");
    const json body = {{"config_hash", hash}, {"experiment", to_string(c.experiment)}, {"data", rec.data}};
    write_file(path, body.dump(2) + "\n");
    written.push_back(path);
    meta(rec.name, path.filename().string(), json::object());
  }
  return written;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Symmetry-breaking experiment runner"};
  app.require_subcommand(1);
  std::string config_path, output_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "JSON experiment config")->required();
    sub->add_option("--output-dir", output_dir, "Directory for tables and records");
    sub->add_option("--seed", seed, "Seed (overrides the config)");
    sub->add_flag("--quiet", quiet, "Suppress the summary");
  };
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its outputs");
  auto* validate_cmd = app.add_subcommand("validate", "Resolve and check a config without running it");
  add_common(run_cmd);
  add_common(validate_cmd);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    auto config = load_config_file(config_path);
    if (seed) config.seed = *seed;
    if (!output_dir.empty()) config.output_dir = output_dir;
    if (validate_cmd->parsed()) {
      std::cout << validate(config).dump(2) << "\n";
      return 0;
    }
    const auto result = run(config);
    const auto files = write_outputs(config, result);
    if (!quiet) {
      for (const auto& line : result.summary) std::cout << line << "\n";
      for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ssb::cli
