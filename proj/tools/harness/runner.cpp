#include "harness/runner.hpp"

#include "torsionlab/errors.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/shapeflow.hpp"
#include "torsionlab/solver.hpp"
#include "torsionlab/stability.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <thread>

namespace torsionlab::harness {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

// JSON cannot hold inf/nan; they are written as strings so that every numeric
// field in the report is finite.
json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json vec(const Vec2& v) { return json::array({num(v.x()), num(v.y())}); }

// ---------------------------------------------------------------- table layouts

const std::string kUnitLength = "length (domain units)";
const std::string kUnitNone = "dimensionless";

Column col(std::string name, std::string unit, std::string description) {
  return Column{std::move(name), std::move(unit), std::move(description)};
}

std::vector<Column> instance_columns(const ScenarioConfig& cfg) {
  return {col("instance", "index", "instance index in sweep order (0 for run)"),
          col("sweep_value", cfg.sweep ? "see sweep axis" : kUnitNone,
              cfg.sweep ? "value of sweep axis '" + to_string(cfg.sweep->axis) + "'" : "0 when no sweep")};
}

Table identities_table(const ScenarioConfig& cfg) {
  Table t{"identities", instance_columns(cfg), {}};
  for (auto c : {col("identity", "label", "pohozaev | fundamental | overdetermined | value_c | divergence_x"),
                 col("lhs", "identity-dependent", "area-integral side"),
                 col("rhs", "identity-dependent", "boundary-integral side (sum of the breakdown terms)"),
                 col("abs_residual", "identity-dependent", "|lhs - rhs|"),
                 col("rel_residual", kUnitNone, "|lhs - rhs| / (|lhs| + |rhs| + 1)")})
    t.columns.push_back(c);
  return t;
}

Table identity_terms_table(const ScenarioConfig& cfg) {
  Table t{"identity_terms", instance_columns(cfg), {}};
  for (auto c : {col("identity", "label", "identity the term belongs to"),
                 col("term", "label", "boundary component or term group"),
                 col("value", "identity-dependent", "contribution to the boundary side")})
    t.columns.push_back(c);
  return t;
}

Table c_table(const ScenarioConfig& cfg) {
  Table t{"c_values", instance_columns(cfg), {}};
  for (auto c : {col("c_balance", kUnitLength, "area-balance estimate of the mean of u_nu over Gamma"),
                 col("c_direct", kUnitLength, "mean of u_nu over Gamma"),
                 col("mismatch", kUnitLength, "|c_balance - c_direct|"),
                 col("inconsistent", "flag", "mismatch > 1e-5")})
    t.columns.push_back(c);
  return t;
}

Table stability_table(const ScenarioConfig& cfg) {
  Table t{"stability", instance_columns(cfg), {}};
  for (auto c : {
           col("valid", "flag", "all hypotheses held (row enters the fitted constants)"),
           col("eta", kUnitLength, "smallness parameter (hole perimeter)"),
           col("hole_perimeter", kUnitLength, "|d omega|"),
           col("pseudo_distance", "length^3", "D^2 = int_Gamma (|x - z|/N - c)^2 dS"),
           col("asymmetry", kUnitNone, "|Omega sym-diff B_{Nc}(z)| / |B_{Nc}|"),
           col("rho_gap", kUnitLength, "rho_e - rho_i about z"),
           col("psi", kUnitLength, "max{K, K^3} eta"),
           col("driver_pseudo", kUnitLength, "|d omega|"),
           col("driver_asymmetry", "length^(1/2)", "|d omega|^(1/2)"),
           col("driver_rho", "length^(tau/2)", "|d omega|^(tau/2)"),
           col("chat_pseudo", "ratio", "pseudo_distance / driver_pseudo"),
           col("chat_asymmetry", "ratio", "asymmetry / driver_asymmetry"),
           col("chat_rho", "ratio", "rho_gap / driver_rho"),
           col("c", kUnitLength, "overdetermined constant (given or estimated)"),
           col("z_x", kUnitLength, "centre z, x component"),
           col("z_y", kUnitLength, "centre z, y component"),
           col("r_i", kUnitLength, "uniform interior sphere radius (certified lower bound)"),
           col("d_omega", kUnitLength, "diameter of Omega"),
           col("K", kUnitNone, "C^2 norm of u on the holes"),
           col("M", kUnitNone, "max |grad u| on the parallel set of width r_i"),
           col("c_lower", kUnitLength, "r_i / N"),
           col("c_upper", kUnitLength, "d/(2N) + K/(N |B_1| r_i^{N-1})"),
           col("c_upper_applicable", "flag", "|d omega| < 1"),
           col("growth_violations", "count", "samples violating the growth bounds"),
           col("hopf_violations", "count", "Gamma nodes with u_nu < r_i/N"),
           col("max_deviation", kUnitLength, "max_Gamma |u_nu - c|"),
           col("max_hole_u", kUnitLength, "max of u over the holes"),
           col("failures", "text", "violated hypotheses, ';'-separated")})
    t.columns.push_back(c);
  return t;
}

Table fitted_table() {
  return Table{"fitted",
               {col("inequality", "label", "pseudo: D^2 <= C|d omega|; asymmetry: A <= C|d omega|^(1/2); rho: rho_e - rho_i <= C|d omega|^(tau/2)"),
                col("abscissa", "label", "x of the log-log fit: eta, or sweep_value"),
                col("c_hat", "ratio", "max over valid rows of lhs / driver"),
                col("finite", "flag", "false when some valid row has lhs > 0 and driver = 0"),
                col("n_used", "count", "valid rows"),
                col("n_excluded", "count", "rows excluded by hypothesis failures"),
                col("slope", kUnitNone, "least-squares slope of log lhs against log abscissa (nan when undefined)"),
                col("intercept", kUnitNone, "intercept of that fit"),
                col("r2", kUnitNone, "coefficient of determination of that fit"),
                col("n_fit", "count", "rows with lhs > 0 and abscissa > 0 in the fit")},
               {}};
}

Table trajectory_table(const ScenarioConfig& cfg) {
  Table t{"trajectory", instance_columns(cfg), {}};
  for (auto c : {col("iter", "count", "iteration (0 = initial shape)"),
                 col("energy", "length^4", "I = (1/2) int |grad u|^2"),
                 col("std_u_nu", kUnitLength, "arc-length weighted standard deviation of u_nu on Gamma"),
                 col("std_ratio", kUnitNone, "std_u_nu / mean u_nu"),
                 col("rho_gap", kUnitLength, "max r - min r about the origin"),
                 col("area_drift", kUnitNone, "(|Omega| - |Omega_0|) / |Omega_0|"),
                 col("step", "length^-1", "accepted step size"),
                 col("halvings", "count", "step halvings before acceptance")})
    t.columns.push_back(c);
  return t;
}

Table poincare_table(const ScenarioConfig& cfg) {
  Table t{"poincare", instance_columns(cfg), {}};
  for (auto c : {col("r", kUnitNone, "integrability exponent of v - v_D"),
                 col("p", kUnitNone, "integrability exponent of the weighted gradient"),
                 col("alpha", kUnitNone, "distance weight exponent"),
                 col("condition", "label", "sobolev-range | equal-exponents"),
                 col("n_fields", "count", "random harmonic fields tested"),
                 col("max_ratio", "length^(varies)", "max ||v - v_D||_r / ||delta^alpha grad v||_p"),
                 col("normalized_bound", "length^(varies)", "bound with the unspecified constant set to 1")})
    t.columns.push_back(c);
  return t;
}

// ---------------------------------------------------------------- instances

struct InstanceResult {
  json detail = json::object();
  std::map<std::string, std::vector<std::vector<Cell>>> rows;
  std::vector<std::string> failures;
  std::optional<stability::StabilityReport> stability;
  bool flagged = false;
};

std::string tag(int index) { return "instance " + std::to_string(index) + ": "; }

solver::DirichletOptions dirichlet_options(const ScenarioConfig& cfg) {
  solver::DirichletOptions o;
  o.n_src_per_ring = cfg.n_src;
  o.offset_ratio = cfg.offset_ratio;
  return o;
}

solver::FieldModel torsion_field(const ScenarioConfig& cfg, json& detail) {
  if (cfg.field == FieldSource::kRadial) {
    detail["field"] = "radial";
    return solver::radial_reference(cfg.domain.outer_radius, kDim).model();
  }
  const solver::Solution s = solver::solve_dirichlet(cfg.domain, dirichlet_options(cfg));
  detail["field"] = "dirichlet";
  detail["solver"] = {{"max_residual", num(s.diagnostics.max_residual)},
                      {"condition", num(s.diagnostics.condition)},
                      {"n_sources", s.diagnostics.n_sources}};
  return s.model;
}

json identity_json(const identities::IdentityReport& r) {
  json terms = json::array();
  for (const auto& t : r.breakdown) terms.push_back({{"name", t.name}, {"value", num(t.value)}});
  return {{"id", r.id}, {"lhs", num(r.lhs)}, {"rhs", num(r.rhs)}, {"abs_residual", num(r.abs_residual)},
          {"rel_residual", num(r.rel_residual)}, {"breakdown", terms}};
}

void identities_instance(const ScenarioConfig& cfg, int index, double value, InstanceResult& out) {
  const geometry::Domain domain(cfg.domain);
  const solver::FieldModel model = torsion_field(cfg, out.detail);
  const identities::Quadratures q = identities::make_quadratures(domain, cfg.n_theta, cfg.n_r);
  std::vector<identities::IdentityReport> reports = {identities::check_divergence_x(domain, q),
                                                     identities::check_pohozaev(model, domain, q),
                                                     identities::check_fundamental(model, domain, q)};
  if (cfg.field == FieldSource::kRadial) {
    const double c = cfg.domain.outer_radius / kDim;
    const auto o = identities::check_overdetermined(model, domain, c, q, cfg.tolerances.overdetermination);
    reports.push_back(o.identity);
    reports.push_back(o.value_c);
    out.detail["overdetermined_max_deviation"] = num(o.max_deviation);
  }
  out.detail["identities"] = json::array();
  for (const auto& r : reports) {
    out.detail["identities"].push_back(identity_json(r));
    out.rows["identities"].push_back({static_cast<long long>(index), value, r.id, r.lhs, r.rhs, r.abs_residual,
                                      r.rel_residual});
    for (const auto& t : r.breakdown)
      out.rows["identity_terms"].push_back({static_cast<long long>(index), value, r.id, t.name, t.value});
    if (!(r.rel_residual <= cfg.tolerances.identity_rel_residual))
      out.failures.push_back(tag(index) + r.id + " rel_residual " + format_double(r.rel_residual) + " > " +
                             format_double(cfg.tolerances.identity_rel_residual));
  }
  const identities::CValue c = identities::compute_c(domain, model, q);
  out.detail["c"] = {{"balance", num(c.balance)}, {"direct", num(c.direct)}, {"mismatch", num(c.mismatch)},
                     {"inconsistent", c.inconsistent}};
  out.rows["c_values"].push_back({static_cast<long long>(index), value, c.balance, c.direct, c.mismatch, c.inconsistent});
  if (c.inconsistent)
    out.failures.push_back(tag(index) + "c estimates disagree (mismatch " + format_double(c.mismatch) + ")");
}

double ratio(double lhs, double driver) {
  if (lhs == 0.0) return 0.0;
  if (driver == 0.0) return std::numeric_limits<double>::infinity();
  return lhs / driver;
}

json stability_json(const stability::StabilityReport& r) {
  json growth = {{"n_samples", r.growth.n_samples}, {"violations", r.growth.violations},
                 {"min_slack_quadratic", num(r.growth.min_slack_quadratic)},
                 {"min_slack_linear", num(r.growth.min_slack_linear)}};
  json hopf = {{"min_normal_derivative", num(r.hopf.min_normal_derivative)},
               {"threshold", num(r.hopf.threshold)}, {"violations", r.hopf.violations}};
  json bounds = {{"a_Np", num(r.bounds.a_Np)}, {"alpha_Np", num(r.bounds.alpha_Np)},
                 {"c_lower", num(r.bounds.c_lower)}, {"c_upper", num(r.bounds.c_upper)},
                 {"c_upper_applicable", r.bounds.c_upper_applicable},
                 {"c_upper_small_eta", num(r.bounds.c_upper_small_eta)}, {"john_b0", num(r.bounds.john_b0)},
                 {"poincare_normalized", r.bounds.poincare_normalized}, {"violations", r.bounds.violations}};
  return {{"z", vec(r.z)}, {"z_in_region", r.z_in_region}, {"c", num(r.c)}, {"c_estimated", r.c_estimated},
          {"rho_e", num(r.rho_e)}, {"rho_i", num(r.rho_i)}, {"pseudo_distance", num(r.pseudo_distance)},
          {"asymmetry", num(r.asymmetry)}, {"r_i", num(r.r_i)}, {"d_omega", num(r.d_omega)}, {"M", num(r.M)},
          {"K", num(r.K)}, {"hole_perimeter", num(r.hole_perimeter)}, {"eta", num(r.eta)}, {"psi", num(r.psi)},
          {"psi_integrals", num(r.psi_integrals)}, {"tau", num(r.tau)},
          {"asymmetry_lemma", {{"applicable", r.asymmetry_lemma_applicable},
                               {"constant", num(r.asymmetry_lemma_constant)},
                               {"holds", r.asymmetry_lemma_holds}}},
          {"max_deviation", num(r.max_deviation)}, {"max_hole_u", num(r.max_hole_u)}, {"growth", growth},
          {"hopf", hopf}, {"bounds", bounds}, {"hypothesis_failures", r.hypothesis_failures},
          {"valid", r.valid()}};
}

void stability_row(const stability::StabilityReport& r, int index, double value, InstanceResult& out) {
  std::string failures;
  for (const auto& f : r.hypothesis_failures) failures += (failures.empty() ? "" : ";") + f;
  out.rows["stability"].push_back(
      {static_cast<long long>(index), value, r.valid(), r.eta, r.hole_perimeter, r.pseudo_distance, r.asymmetry,
       r.rho_e - r.rho_i, r.psi, r.driver_pseudo, r.driver_asymmetry, r.driver_rho,
       ratio(r.pseudo_distance, r.driver_pseudo), ratio(r.asymmetry, r.driver_asymmetry),
       ratio(r.rho_e - r.rho_i, r.driver_rho), r.c, r.z.x(), r.z.y(), r.r_i, r.d_omega, r.K, r.M,
       r.bounds.c_lower, r.bounds.c_upper, r.bounds.c_upper_applicable,
       static_cast<long long>(r.growth.violations), static_cast<long long>(r.hopf.violations), r.max_deviation,
       r.max_hole_u, failures});
}

void stability_instance(const ScenarioConfig& cfg, int index, double value, InstanceResult& out) {
  stability::StabilityInstance inst;
  std::vector<std::string> extra;
  if (cfg.experiment == Experiment::kCauchyStability) {
    geometry::DomainSpec outer = cfg.domain;
    outer.holes.clear();
    std::vector<solver::SourceDisk> disks;
    for (const auto& h : cfg.domain.holes) disks.push_back(solver::SourceDisk{h.center, h.radius});
    solver::CauchyOptions o;
    o.n_src_per_ring = cfg.n_src;
    o.offset_ratio = cfg.offset_ratio;
    o.tikhonov = cfg.tikhonov;
    o.source_disks = disks;
    o.residual_tolerance = cfg.tolerances.overdetermination;
    // The unchecked fit is used so that a failed continuation still reports
    // which hypotheses it breaks; the failure itself is flagged.
    const solver::Solution s = solver::fit_cauchy(outer, cfg.cauchy_c, o);
    out.detail["field"] = "cauchy";
    out.detail["continuation_residual"] = num(s.diagnostics.max_residual);
    if (!(s.diagnostics.max_residual <= cfg.tolerances.overdetermination))
      extra.push_back("continuation residual " + format_double(s.diagnostics.max_residual) + " > " +
                      format_double(cfg.tolerances.overdetermination));
    inst.spec = solver::carve(outer, disks);
    inst.model = s.model;
    inst.c = cfg.cauchy_c;
  } else {
    inst.spec = cfg.domain;
    inst.model = torsion_field(cfg, out.detail);
    if (cfg.field == FieldSource::kRadial) inst.c = cfg.domain.outer_radius / kDim;
  }
  inst.n_theta = cfg.n_theta;
  inst.n_r = cfg.n_r;
  inst.tol_overdet = cfg.tolerances.overdetermination;

  stability::SuiteOptions so;
  so.regime = cfg.regime == "john" ? stability::Regime::kJohnRelaxed : stability::Regime::kSphereCondition;
  so.theta = cfg.theta;
  so.n_samples = cfg.n_samples;
  so.seed = cfg.seed + static_cast<std::uint64_t>(index);
  stability::StabilityReport r = stability::theorem_suite(inst, so);
  for (auto& e : extra) r.hypothesis_failures.insert(r.hypothesis_failures.begin(), e);
  out.detail["stability"] = stability_json(r);
  stability_row(r, index, value, out);
  if (!r.valid()) {
    out.flagged = true;
  } else {
    if (!r.growth.passed())
      out.failures.push_back(tag(index) + "growth bound violated at " + std::to_string(r.growth.violations) +
                             " samples");
    if (!r.hopf.passed())
      out.failures.push_back(tag(index) + "Hopf bound violated at " + std::to_string(r.hopf.violations) + " nodes");
    for (const auto& v : r.bounds.violations) out.failures.push_back(tag(index) + v);
  }
  out.stability = std::move(r);
}

void shapeflow_instance(const ScenarioConfig& cfg, int index, double value, InstanceResult& out) {
  shapeflow::DescentOptions o;
  o.max_iters = cfg.max_iters;
  o.n_modes = cfg.n_modes;
  o.tol_std = cfg.tolerances.shape_std_ratio;
  o.energy_tolerance = cfg.tolerances.energy_monotonicity;
  o.disc.solver = dirichlet_options(cfg);
  o.disc.n_theta = cfg.n_theta;
  o.disc.n_r = cfg.n_r;
  const shapeflow::Trajectory t = shapeflow::descend(cfg.domain, o);
  double max_drift = 0.0;
  bool monotone = true;
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    const auto& s = t.states[i];
    out.rows["trajectory"].push_back({static_cast<long long>(index), value, static_cast<long long>(s.iteration),
                                      s.energy, s.std_u_nu, s.std_ratio(), s.rho_gap, s.area_drift, s.step,
                                      static_cast<long long>(s.halvings)});
    max_drift = std::max(max_drift, std::abs(s.area_drift));
    if (i > 0 && s.energy < t.states[i - 1].energy - o.energy_tolerance * std::abs(t.states[i - 1].energy))
      monotone = false;
  }
  const auto& last = t.states.empty() ? shapeflow::ShapeState{} : t.states.back();
  out.detail["shapeflow"] = {{"converged", t.converged}, {"stalled", t.stalled},
                             {"solver_failed", t.solver_failed}, {"message", t.message},
                             {"iterations", last.iteration}, {"final_energy", num(last.energy)},
                             {"final_std_ratio", num(last.std_ratio())}, {"final_rho_gap", num(last.rho_gap)},
                             {"max_area_drift", num(max_drift)}, {"energy_monotone", monotone}};
  if (!t.converged) out.failures.push_back(tag(index) + "shape flow did not converge: " + t.message);
  if (!monotone) out.failures.push_back(tag(index) + "energy decreased on an accepted step");
  if (!(max_drift <= cfg.tolerances.volume_drift))
    out.failures.push_back(tag(index) + "area drift " + format_double(max_drift));
}

void poincare_instance(const ScenarioConfig& cfg, int index, double value, InstanceResult& out) {
  const geometry::Domain domain(cfg.domain);
  const identities::Quadratures q = identities::make_quadratures(domain, cfg.n_theta, cfg.n_r);
  const stability::PoincareReport r =
      stability::poincare_empirical(domain, q, cfg.poincare_r, cfg.poincare_p, cfg.poincare_alpha,
                                    cfg.poincare_fields, cfg.seed + static_cast<std::uint64_t>(index));
  const std::string cond =
      r.condition == stability::PoincareCondition::kSobolevRange ? "sobolev-range" : "equal-exponents";
  out.detail["poincare"] = {{"r", num(r.r)}, {"p", num(r.p)}, {"alpha", num(r.alpha)}, {"condition", cond},
                            {"n_fields", r.n_fields}, {"max_ratio", num(r.max_ratio)},
                            {"normalized_bound", num(r.normalized_bound)}, {"normalized", r.normalized}};
  out.rows["poincare"].push_back({static_cast<long long>(index), value, r.r, r.p, r.alpha, cond,
                                  static_cast<long long>(r.n_fields), r.max_ratio, r.normalized_bound});
  if (!std::isfinite(r.max_ratio)) out.failures.push_back(tag(index) + "non-finite Poincare ratio");
}

InstanceResult run_instance(const ScenarioConfig& base, int index, double value) {
  InstanceResult out;
  const ScenarioConfig cfg = instance_config(base, value);
  out.detail["instance"] = index;
  out.detail["sweep_value"] = num(value);
  try {
    switch (cfg.experiment) {
      case Experiment::kIdentities: identities_instance(cfg, index, value, out); break;
      case Experiment::kStability:
      case Experiment::kCauchyStability: stability_instance(cfg, index, value, out); break;
      case Experiment::kShapeflow: shapeflow_instance(cfg, index, value, out); break;
      case Experiment::kPoincare: poincare_instance(cfg, index, value, out); break;
    }
  } catch (const Error& e) {
    // Numerical or hypothesis failures of the library are instance results,
    // not crashes; the instance is marked failed with the message as witness.
    out.detail["error"] = e.what();
    if (cfg.experiment == Experiment::kStability || cfg.experiment == Experiment::kCauchyStability) {
      out.flagged = true;
    } else {
      out.failures.push_back(tag(index) + e.what());
    }
  }
  return out;
}

std::vector<Table> tables_for(const ScenarioConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::kIdentities: return {identities_table(cfg), identity_terms_table(cfg), c_table(cfg)};
    case Experiment::kStability:
    case Experiment::kCauchyStability: return {stability_table(cfg), fitted_table()};
    case Experiment::kShapeflow: return {trajectory_table(cfg)};
    case Experiment::kPoincare: return {poincare_table(cfg)};
  }
  return {};
}

void add_fits(const std::vector<InstanceResult>& results, const std::vector<double>& values, Table& fitted,
              json& summary) {
  std::vector<stability::StabilityReport> reports;
  std::vector<double> eta, sweep, pseudo, asym, rho;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.stability) continue;
    reports.push_back(*r.stability);
    if (!r.stability->valid()) continue;
    eta.push_back(r.stability->eta);
    sweep.push_back(values[i]);
    pseudo.push_back(r.stability->pseudo_distance);
    asym.push_back(r.stability->asymmetry);
    rho.push_back(r.stability->rho_e - r.stability->rho_i);
  }
  const stability::FittedConstants fc = stability::fit_constants(reports);
  const int n_excluded = static_cast<int>(results.size()) - fc.pseudo.n_used;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  summary["fitted"] = json::object();
  auto add = [&](const std::string& name, const stability::FittedConstant& c, const std::vector<double>& y) {
    json fits = json::object();
    for (const auto& [label, x] : {std::pair{std::string("eta"), &eta}, std::pair{std::string("sweep_value"), &sweep}}) {
      const stability::LogLogFit f = stability::loglog_fit(*x, y);
      fitted.add({name, label, c.value, c.finite, static_cast<long long>(c.n_used),
                  static_cast<long long>(n_excluded), f.defined ? f.slope : nan, f.defined ? f.intercept : nan,
                  f.defined ? f.r2 : nan, static_cast<long long>(f.n)});
      fits[label] = {{"defined", f.defined}, {"slope", num(f.defined ? f.slope : nan)},
                     {"intercept", num(f.defined ? f.intercept : nan)}, {"r2", num(f.defined ? f.r2 : nan)},
                     {"n", f.n}};
    }
    summary["fitted"][name] = {{"c_hat", num(c.value)}, {"finite", c.finite}, {"n_used", c.n_used},
                               {"loglog", fits}};
  };
  add("pseudo", fc.pseudo, pseudo);
  add("asymmetry", fc.asymmetry, asym);
  add("rho", fc.rho, rho);
  summary["n_excluded"] = n_excluded;
}

json environment_stamp(int threads) {
  return {{"compiler", __VERSION__},
          {"cxx_standard", static_cast<long long>(__cplusplus)},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"threads", threads}};
}

}  // namespace

RunOutcome execute(const ScenarioConfig& cfg, Mode mode, const RunOptions& options) {
  if (mode == Mode::kSweep && !cfg.sweep) throw ConfigError("sweep", "required by the sweep command");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<double> values = {0.0};
  ScenarioConfig base = cfg;
  if (mode == Mode::kSweep) {
    values = cfg.sweep->values;
  } else {
    base.sweep.reset();
  }

  std::vector<InstanceResult> results(values.size());
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(values.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++)
      results[i] = run_instance(base, static_cast<int>(i), values[i]);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  RunOutcome out;
  out.tables = tables_for(cfg);
  json instances = json::array();
  int flagged = 0;
  for (const auto& r : results) {
    for (auto& table : out.tables) {
      auto it = r.rows.find(table.name);
      if (it == r.rows.end()) continue;
      for (const auto& row : it->second) table.add(row);
    }
    for (const auto& f : r.failures) out.failures.push_back(f);
    flagged += r.flagged ? 1 : 0;
    instances.push_back(r.detail);
  }
  json summary = {{"n_instances", results.size()}, {"n_flagged", flagged}};
  const bool stability_kind =
      cfg.experiment == Experiment::kStability || cfg.experiment == Experiment::kCauchyStability;
  if (stability_kind) {
    add_fits(results, values, out.tables[1], summary);
    if (flagged == static_cast<int>(results.size())) {
      std::string witness = "every instance failed its hypotheses";
      const json& d = results.front().detail;
      if (d.contains("error")) {
        witness += " (instance 0: " + d["error"].get<std::string>() + ")";
      } else if (d.contains("stability") && !d["stability"]["hypothesis_failures"].empty()) {
        witness += " (instance 0: " + d["stability"]["hypothesis_failures"][0].get<std::string>() + ")";
      }
      out.failures.insert(out.failures.begin(), witness);
    }
  }
  summary["passed"] = out.failures.empty();

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.report = {{"schema_version", kSchemaVersion},
                {"tool", "torsionlab"},
                {"mode", mode == Mode::kRun ? "run" : "sweep"},
                {"experiment", to_string(cfg.experiment)},
                {"config", json::parse(cfg.canonical.empty() ? "{}" : cfg.canonical)},
                {"seed", cfg.seed},
                {"instances", instances},
                {"summary", summary},
                {"failures", out.failures},
                {"environment", environment_stamp(threads)},
                {"wall_time_s", wall}};
  return out;
}

void write_outputs(const RunOutcome& outcome, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "tables");
  write_text(dir / "report.json", outcome.report.dump(2) + "\n");
  json schema = {{"schema_version", kSchemaVersion}, {"tables", json::object()}};
  for (const auto& t : outcome.tables) {
    write_text(dir / "tables" / (t.name + ".csv"), t.csv());
    json cols = json::array();
    for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"unit", c.unit}, {"description", c.description}});
    schema["tables"][t.name] = {{"file", "tables/" + t.name + ".csv"}, {"columns", cols}};
  }
  write_text(dir / "schema.json", schema.dump(2) + "\n");
}

}  // namespace torsionlab::harness
