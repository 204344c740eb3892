#pragma once

// Stability functionals of an instance (Omega \ closure(omega), u): the centre z,
// the pseudo-distance D^2 = int_Gamma (|x - z|/N - c)^2 dS, the asymmetry
// A = |Omega sym-diff B_{Nc}(z)| / |B_{Nc}(z)|, rho_e - rho_i; the pointwise
// growth and Hopf lemmas; the explicit constants of the oscillation lemma; and
// theorem-level reports whose unknown universal constants are fitted per sweep.

#include "torsionlab/geometry.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/solver.hpp"
#include "torsionlab/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace torsionlab::stability {

// ---------------------------------------------------------------- constants

/// |B_1| in R^N.
double unit_ball_volume(int N);
/// a_{N,p} = 2 (N+p) / (N^{N/(N+p)} p^{p/(N+p)} |B_1|^{1/(N+p)}).
double a_constant(int N, double p);
/// alpha_{N,p} = (p/N) |B_1|^{1/p}.
double alpha_constant(int N, double p);

enum class Regime {
  /// Uniform interior sphere condition: tau_2 = 1, tau_3 = 1 - theta, tau_N = 2/(N-1).
  kSphereCondition,
  /// John-domain relaxation: tau_2 = 1 - theta, tau_N = 2/N for N >= 3.
  kJohnRelaxed,
};

/// Exponent tau_N. theta in (0, 1) is required exactly when the regime needs it.
double exponents_tau(int N, Regime regime, std::optional<double> theta = std::nullopt);

// ---------------------------------------------------------------- functionals

/// z = (int x dx - N int_{d omega} u nu dS) / |Omega \ closure(omega)|.
Vec2 compute_z(const geometry::Domain& domain, const solver::FieldModel& model,
               const identities::Quadratures& q);

/// z over the parallel set: (int_{Omega^c_r} x dx - N int_{Gamma_r} u nu dS) / |Omega^c_r|.
Vec2 compute_z_tubular(const geometry::Domain& domain, const solver::FieldModel& model, double r_i,
                       int n_theta = 256, int n_normal = 24);

/// int_Gamma (|x - z|/N - c)^2 dS on the given outer rule.
double pseudo_distance(const geometry::BoundaryQuadrature& gamma, const Vec2& z, double c);

/// |Omega sym-diff B_{Nc}(z)| / |B_{Nc}(z)|.
double asymmetry(const geometry::Domain& domain, const Vec2& z, double c);

/// True when every ray from z meets Gamma exactly once (checked on the samples
/// of the outer rule: the polar angle about z increases strictly).
bool star_shaped_about(const geometry::BoundaryQuadrature& gamma, const Vec2& z);

/// Explicit constant of the asymmetry/pseudo-distance comparison for Gamma
/// star-shaped about z: A <= C D with
///   C = N sqrt(2 pi) (rho_e + Nc) / (2 sqrt(rho_i) pi (Nc)^2)   (N = 2).
double asymmetry_lemma_constant(double rho_e, double rho_i, double c);

/// max |grad f| over the closed parallel set of width r_i (tube nodes, Gamma
/// nodes and inner-curve nodes).
double max_gradient_on_tube(const geometry::Domain& domain, const solver::FieldModel& model,
                            double r_i, int n_theta = 256, int n_normal = 24);

/// ||u||_{C^2(d omega)} as max over hole nodes of |u| + |grad u| + |Hess u|_F.
double c2_norm_on_holes(const solver::FieldModel& model, const geometry::BoundarySet& boundary);

// ---------------------------------------------------------------- pointwise lemmas

/// Uniform random points of Omega \ closure(omega) (rejection sampling, fixed seed).
std::vector<Vec2> sample_region(const geometry::Domain& domain, int n, std::uint64_t seed);

struct GrowthReport {
  int n_samples = 0;
  int violations = 0;
  /// min over samples of -u - delta^2/(2N).
  double min_slack_quadratic = 0.0;
  /// min over samples of -u - r_i delta/(2N).
  double min_slack_linear = 0.0;
  std::optional<Vec2> witness;
  bool passed() const { return violations == 0; }
};

/// -u >= delta^2/(2N) and -u >= (r_i/(2N)) delta, each with tolerance 1e-9.
GrowthReport growth_checks(const solver::FieldModel& model, const geometry::Domain& domain,
                           const std::vector<Vec2>& samples, double r_i);

struct HopfReport {
  double min_normal_derivative = 0.0;
  double threshold = 0.0;
  double slack = 0.0;
  int violations = 0;
  std::optional<Vec2> witness;
  bool passed() const { return violations == 0; }
};

/// u_nu >= r_i / N on every Gamma node, tolerance 1e-9.
HopfReport hopf_check(const solver::FieldModel& model, const geometry::BoundaryQuadrature& gamma,
                      double r_i);

// ---------------------------------------------------------------- oscillation lemma

struct OscillationForm {
  /// ||v - lambda||_p over the form's set.
  double norm = 0.0;
  /// alpha_{N,p} r_i^{(N+p)/p} G.
  double threshold = 0.0;
  bool applicable = false;
  /// a_{N,p} G^{N/(N+p)} norm^{p/(N+p)}.
  double rhs = 0.0;
  /// rhs - oscillation (meaningful when applicable).
  double slack = 0.0;
  bool holds = true;
};

struct OscillationReport {
  double p = 2.0;
  double G = 0.0;
  double r_i = 0.0;
  /// max_Gamma v - min_Gamma v.
  double oscillation = 0.0;
  /// lambda = mean of v over Omega \ closure(omega); norm over the whole region.
  OscillationForm mean_form;
  /// Same lambda; norm over B_{r_i}(x0), x0 = x_bar - r_i nu(x_bar).
  OscillationForm ball_form;
  Vec2 x0 = Vec2::Zero();
  /// True unless an applicable form is violated.
  bool passed() const { return mean_form.holds && ball_form.holds; }
};

/// v must be harmonic in the region (Laplacian checked at the area nodes).
/// G must bound |grad v| on the closed parallel set of width r_i.
OscillationReport oscillation_bound_check(const solver::FieldModel& v, const geometry::Domain& domain,
                                          const identities::Quadratures& q, double r_i, double p,
                                          double G);

/// Random harmonic field: logarithmic sources outside Gamma and inside holes,
/// plus a harmonic polynomial of degree <= 3; deterministic in the seed.
solver::FieldModel random_harmonic_field(const geometry::Domain& domain, std::uint64_t seed);

// ---------------------------------------------------------------- Poincare

enum class PoincareCondition {
  /// 1 <= p <= r <= Np/(N - p(1 - alpha)), p(1 - alpha) < N, 0 <= alpha <= 1.
  kSobolevRange,
  /// r = p >= 1, alpha = 0.
  kEqualExponents,
};

/// Classifies (r, p, alpha); throws InvalidInput naming the violated condition.
PoincareCondition validate_exponents(int N, double r, double p, double alpha);

struct PoincareReport {
  double r = 2.0;
  double p = 2.0;
  double alpha = 0.5;
  PoincareCondition condition = PoincareCondition::kSobolevRange;
  int n_fields = 0;
  /// max over fields of ||v - v_D||_r / ||delta^alpha grad v||_p (0/0 := 0).
  double max_ratio = 0.0;
  /// The bound on 1/mu-bar with the unknown constant k set to 1.
  double normalized_bound = 0.0;
  bool normalized = true;
};

PoincareReport poincare_empirical(const geometry::Domain& domain, const identities::Quadratures& q,
                                  double r, double p, double alpha, int n_fields,
                                  std::uint64_t seed);

/// ||v - v_D||_r / ||delta^alpha grad v||_p for one field, with delta precomputed
/// at the area nodes.
double poincare_ratio(const solver::FieldModel& v, const geometry::AreaQuadrature& area,
                      const std::vector<double>& delta, double r, double p, double alpha);

// ---------------------------------------------------------------- bound table

struct BoundInputs {
  double c = 0.0;
  double r_i = 0.0;
  double d_omega = 0.0;
  double K = 0.0;
  double hole_perimeter = 0.0;
  double region_area = 0.0;
  /// min(r_i, delta(x0)) for the pointwise Poincare bounds.
  double x0_radius = 0.0;
  double p = 2.0;
};

struct BoundTable {
  double a_Np = 0.0;
  double alpha_Np = 0.0;
  /// Poincare bounds with k := 1 ("normalized"): mean and x0 forms for
  /// (r, p, alpha) = (2, 2, 1/2) and for r = p = 2, alpha = 0.
  double poincare_mean_sobolev = 0.0;
  double poincare_x0_sobolev = 0.0;
  double poincare_mean_equal = 0.0;
  double poincare_x0_equal = 0.0;
  bool poincare_normalized = true;
  /// c >= r_i / N.
  double c_lower = 0.0;
  /// c <= d/(2N) + K/(N |B_1| r_i^{N-1}) when |d omega| < 1.
  double c_upper = 0.0;
  bool c_upper_applicable = false;
  /// c <= d/(4N) for small eta (reported, not asserted).
  double c_upper_small_eta = 0.0;
  /// John parameter bound b_0 <= d / r_i.
  double john_b0 = 0.0;
  /// Hopf threshold r_i / N.
  double hopf_threshold = 0.0;
  /// Violations of the certified c bracket.
  std::vector<std::string> violations;
};

BoundTable bound_table(const BoundInputs& in);

// ---------------------------------------------------------------- theorem suite

struct StabilityInstance {
  geometry::DomainSpec spec;
  solver::FieldModel model;
  /// Overdetermined constant; when empty it is estimated by compute_c.
  std::optional<double> c;
  int n_theta = 256;
  int n_r = 64;
  /// Skip the u_nu = c hypothesis (diagnostic runs on non-overdetermined fields).
  bool waive_overdetermination = false;
  double tol_overdet = 1e-6;
};

enum class EtaChoice { kHolePerimeter, kHoleDiameter };

struct SuiteOptions {
  Regime regime = Regime::kSphereCondition;
  std::optional<double> theta;
  EtaChoice eta = EtaChoice::kHolePerimeter;
  int n_samples = 10000;
  std::uint64_t seed = 1;
};

struct StabilityReport {
  Vec2 z = Vec2::Zero();
  /// Which formula produced z: "barycentric".
  std::string z_formula = "barycentric";
  bool z_in_region = false;
  double c = 0.0;
  bool c_estimated = false;
  double rho_e = 0.0;
  double rho_i = 0.0;
  double pseudo_distance = 0.0;
  double asymmetry = 0.0;
  double r_i = 0.0;
  double d_omega = 0.0;
  /// max |grad u| on the parallel set of width r_i, and its sampling resolution.
  double M = 0.0;
  int M_nodes = 0;
  double K = 0.0;
  double hole_perimeter = 0.0;
  double max_hole_diameter = 0.0;
  double eta = 0.0;
  /// max{K, K^3} eta.
  double psi = 0.0;
  /// Largest of the boundary integrals that psi(eta) must dominate.
  double psi_integrals = 0.0;
  double tau = 1.0;
  /// Right-hand-side drivers: |d omega|, |d omega|^{1/2}, |d omega|^{tau/2}, psi^{tau/2}.
  double driver_pseudo = 0.0;
  double driver_asymmetry = 0.0;
  double driver_rho = 0.0;
  double driver_rho_general = 0.0;
  /// Explicit asymmetry lemma constant and whether A <= C D held.
  bool asymmetry_lemma_applicable = false;
  double asymmetry_lemma_constant = 0.0;
  bool asymmetry_lemma_holds = true;
  double max_deviation = 0.0;
  double max_hole_u = 0.0;
  GrowthReport growth;
  HopfReport hopf;
  BoundTable bounds;
  /// Violated hypotheses (overdetermination, u <= 0 on holes, z in Omega, ...).
  std::vector<std::string> hypothesis_failures;
  bool valid() const { return hypothesis_failures.empty(); }
};

StabilityReport theorem_suite(const StabilityInstance& instance, const SuiteOptions& options = {});

struct FittedConstant {
  /// max over valid instances of lhs / driver (0 when lhs == 0 everywhere).
  double value = 0.0;
  /// Instances with lhs > 0 and driver == 0 make the constant infinite.
  bool finite = true;
  int n_used = 0;
};

struct FittedConstants {
  FittedConstant pseudo;
  FittedConstant asymmetry;
  FittedConstant rho;
  int n_excluded = 0;
};

FittedConstants fit_constants(const std::vector<StabilityReport>& reports);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n = 0;
  /// False with fewer than two usable pairs or a constant abscissa.
  bool defined = false;
};

/// Least-squares fit of log y against log x over pairs with x, y > 0.
LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace torsionlab::stability
