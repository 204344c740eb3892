#include "torsionlab/stability.hpp"

#include "torsionlab/errors.hpp"
#include "torsionlab/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace torsionlab::stability {
namespace {

constexpr int kN = kDim;
constexpr double kNd = static_cast<double>(kDim);
constexpr double kLemmaTolerance = 1e-9;

using solver::FieldModel;
using solver::FieldValue;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double weighted_sum(const std::vector<double>& weights, const std::vector<double>& values) {
  std::vector<double> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) terms[i] = weights[i] * values[i];
  return pairwise_sum(terms);
}

/// Polar Gauss x trapezoid rule on the disk B_radius(center).
geometry::AreaQuadrature disk_rule(const Vec2& center, double radius, int n_r = 24,
                                   int n_phi = 64) {
  geometry::AreaQuadrature out;
  const GaussRule g = gauss_legendre(n_r, 0.0, radius);
  const double dphi = kTwoPi / n_phi;
  for (int i = 0; i < n_r; ++i) {
    for (int j = 0; j < n_phi; ++j) {
      const double phi = dphi * j;
      out.nodes.push_back(center + g.nodes[i] * Vec2(std::cos(phi), std::sin(phi)));
      out.weights.push_back(g.weights[i] * g.nodes[i] * dphi);
    }
  }
  return out;
}

double lp_norm(const FieldModel& v, const geometry::AreaQuadrature& rule, double lambda, double p) {
  std::vector<double> vals(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    vals[i] = std::pow(std::abs(v.value(rule.nodes[i]) - lambda), p);
  }
  return std::pow(std::max(0.0, weighted_sum(rule.weights, vals)), 1.0 / p);
}

OscillationForm evaluate_form(double norm, double oscillation, double r_i, double p, double G) {
  OscillationForm f;
  f.norm = norm;
  f.threshold = alpha_constant(kN, p) * std::pow(r_i, (kNd + p) / p) * G;
  f.applicable = norm <= f.threshold;
  f.rhs = a_constant(kN, p) * std::pow(G, kNd / (kNd + p)) * std::pow(norm, p / (kNd + p));
  f.slack = f.rhs - oscillation;
  f.holds = !f.applicable || oscillation <= f.rhs + kLemmaTolerance * std::max(1.0, f.rhs);
  return f;
}

}  // namespace

// ---------------------------------------------------------------- constants

double unit_ball_volume(int N) {
  if (N < 1) throw InvalidInput("unit_ball_volume: N must be >= 1");
  return std::pow(kPi, N / 2.0) / std::tgamma(N / 2.0 + 1.0);
}

double a_constant(int N, double p) {
  if (N < 1 || !(p >= 1.0)) throw InvalidInput("a_constant: need N >= 1 and p >= 1");
  const double n = N;
  return 2.0 * (n + p) /
         (std::pow(n, n / (n + p)) * std::pow(p, p / (n + p)) *
          std::pow(unit_ball_volume(N), 1.0 / (n + p)));
}

double alpha_constant(int N, double p) {
  if (N < 1 || !(p >= 1.0)) throw InvalidInput("alpha_constant: need N >= 1 and p >= 1");
  return p / N * std::pow(unit_ball_volume(N), 1.0 / p);
}

double exponents_tau(int N, Regime regime, std::optional<double> theta) {
  if (N < 2) throw InvalidInput("exponents_tau: N must be >= 2");
  auto need_theta = [&]() {
    if (!theta || !(*theta > 0.0 && *theta < 1.0)) {
      throw InvalidInput("exponents_tau: theta in (0, 1) is required for N = " + std::to_string(N));
    }
    return 1.0 - *theta;
  };
  if (regime == Regime::kSphereCondition) {
    if (N == 2) return 1.0;
    if (N == 3) return need_theta();
    return 2.0 / (N - 1.0);
  }
  if (N == 2) return need_theta();
  return 2.0 / N;
}

// ---------------------------------------------------------------- functionals

Vec2 compute_z(const geometry::Domain& domain, const FieldModel& model,
               const identities::Quadratures& q) {
  Vec2 moment = Vec2::Zero();
  for (int k = 0; k < kN; ++k) {
    std::vector<double> xs(q.area.size());
    for (std::size_t i = 0; i < q.area.size(); ++i) xs[i] = q.area.nodes[i](k);
    moment(k) = weighted_sum(q.area.weights, xs);
  }
  Vec2 hole_term = Vec2::Zero();
  for (const auto& rule : q.boundary.holes) {
    for (int k = 0; k < kN; ++k) {
      std::vector<double> vals(rule.size());
      for (std::size_t i = 0; i < rule.size(); ++i) {
        vals[i] = model.value(rule.nodes[i]) * rule.normals[i](k);
      }
      hole_term(k) += weighted_sum(rule.weights, vals);
    }
  }
  (void)domain;
  return (moment - kNd * hole_term) / q.area.area();
}

Vec2 compute_z_tubular(const geometry::Domain& domain, const FieldModel& model, double r_i,
                       int n_theta, int n_normal) {
  const geometry::TubularSets ts = geometry::tubular_sets(domain, r_i, r_i, n_theta, n_normal);
  Vec2 moment = Vec2::Zero();
  Vec2 curve_term = Vec2::Zero();
  for (int k = 0; k < kN; ++k) {
    std::vector<double> xs(ts.tube.size());
    for (std::size_t i = 0; i < ts.tube.size(); ++i) xs[i] = ts.tube.nodes[i](k);
    moment(k) = weighted_sum(ts.tube.weights, xs);
    std::vector<double> vals(ts.inner_curve.size());
    for (std::size_t i = 0; i < ts.inner_curve.size(); ++i) {
      vals[i] = model.value(ts.inner_curve.nodes[i]) * ts.inner_curve.normals[i](k);
    }
    curve_term(k) = weighted_sum(ts.inner_curve.weights, vals);
  }
  return (moment - kNd * curve_term) / ts.tube.area();
}

double pseudo_distance(const geometry::BoundaryQuadrature& gamma, const Vec2& z, double c) {
  std::vector<double> vals(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const double d = (gamma.nodes[i] - z).norm() / kNd - c;
    vals[i] = d * d;
  }
  return weighted_sum(gamma.weights, vals);
}

double asymmetry(const geometry::Domain& domain, const Vec2& z, double c) {
  if (!(c > 0.0)) throw InvalidInput("asymmetry: c must be positive");
  return geometry::symmetric_difference_ratio(domain, z, kNd * c);
}

bool star_shaped_about(const geometry::BoundaryQuadrature& gamma, const Vec2& z) {
  const std::size_t n = gamma.size();
  if (n < 3) return false;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = gamma.nodes[i] - z;
    const Vec2 b = gamma.nodes[(i + 1) % n] - z;
    const double cross = a(0) * b(1) - a(1) * b(0);
    if (!(cross > 0.0)) return false;
    total += std::atan2(cross, a.dot(b));
  }
  return std::abs(total - kTwoPi) < 1e-6;
}

double asymmetry_lemma_constant(double rho_e, double rho_i, double c) {
  if (!(rho_i > 0.0) || !(c > 0.0) || rho_e < rho_i) {
    throw InvalidInput("asymmetry_lemma_constant: need rho_e >= rho_i > 0 and c > 0");
  }
  const double R = kNd * c;
  return kNd * std::sqrt(kTwoPi) * (rho_e + R) / (2.0 * std::sqrt(rho_i) * kPi * R * R);
}

double max_gradient_on_tube(const geometry::Domain& domain, const FieldModel& model, double r_i,
                            int n_theta, int n_normal) {
  const geometry::TubularSets ts = geometry::tubular_sets(domain, r_i, r_i, n_theta, n_normal);
  double m = 0.0;
  for (const Vec2& x : ts.tube.nodes) m = std::max(m, model.evaluate(x).grad.norm());
  for (const Vec2& x : ts.inner_curve.nodes) m = std::max(m, model.evaluate(x).grad.norm());
  for (int j = 0; j < n_theta; ++j) {
    m = std::max(m, model.evaluate(domain.point(kTwoPi * j / n_theta)).grad.norm());
  }
  return m;
}

double c2_norm_on_holes(const FieldModel& model, const geometry::BoundarySet& boundary) {
  double k = 0.0;
  for (const auto& rule : boundary.holes) {
    for (const Vec2& x : rule.nodes) {
      const FieldValue v = model.evaluate(x);
      k = std::max(k, std::abs(v.u) + v.grad.norm() + v.hess.norm());
    }
  }
  return k;
}

// ---------------------------------------------------------------- pointwise lemmas

std::vector<Vec2> sample_region(const geometry::Domain& domain, int n, std::uint64_t seed) {
  if (n < 0) throw InvalidInput("sample_region: n must be >= 0");
  double reach = 0.0;
  for (int j = 0; j < 720; ++j) reach = std::max(reach, domain.radius(kTwoPi * j / 720));
  reach *= 1.01;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-reach, reach);
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    const Vec2 x(U(rng), U(rng));
    if (domain.in_region(x)) out.push_back(x);
  }
  return out;
}

GrowthReport growth_checks(const FieldModel& model, const geometry::Domain& domain,
                           const std::vector<Vec2>& samples, double r_i) {
  GrowthReport r;
  r.n_samples = static_cast<int>(samples.size());
  r.min_slack_quadratic = std::numeric_limits<double>::infinity();
  r.min_slack_linear = std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for (const Vec2& x : samples) {
    const double d = geometry::delta(domain, x);
    const double minus_u = -model.value(x);
    const double s1 = minus_u - d * d / (2.0 * kNd);
    const double s2 = minus_u - r_i * d / (2.0 * kNd);
    r.min_slack_quadratic = std::min(r.min_slack_quadratic, s1);
    r.min_slack_linear = std::min(r.min_slack_linear, s2);
    if (s1 < -kLemmaTolerance || s2 < -kLemmaTolerance) {
      ++r.violations;
      if (std::min(s1, s2) < worst) {
        worst = std::min(s1, s2);
        r.witness = x;
      }
    }
  }
  if (samples.empty()) r.min_slack_quadratic = r.min_slack_linear = 0.0;
  return r;
}

HopfReport hopf_check(const FieldModel& model, const geometry::BoundaryQuadrature& gamma, double r_i) {
  HopfReport r;
  r.threshold = r_i / kNd;
  r.min_normal_derivative = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const double un = model.evaluate(gamma.nodes[i]).grad.dot(gamma.normals[i]);
    if (un < r.min_normal_derivative) {
      r.min_normal_derivative = un;
      if (un - r.threshold < -kLemmaTolerance) r.witness = gamma.nodes[i];
    }
    if (un - r.threshold < -kLemmaTolerance) ++r.violations;
  }
  r.slack = r.min_normal_derivative - r.threshold;
  return r;
}

// ---------------------------------------------------------------- oscillation lemma

OscillationReport oscillation_bound_check(const FieldModel& v, const geometry::Domain& domain,
                                          const identities::Quadratures& q, double r_i, double p,
                                          double G) {
  if (!(p >= 1.0)) throw InvalidInput("oscillation_bound_check: p must be >= 1");
  if (!(r_i > 0.0)) throw InvalidInput("oscillation_bound_check: r_i must be positive");
  if (!(G >= 0.0)) throw InvalidInput("oscillation_bound_check: G must be >= 0");
  double lap = 0.0, scale = 1.0;
  for (const Vec2& x : q.area.nodes) {
    const FieldValue f = v.evaluate(x);
    lap = std::max(lap, std::abs(f.hess.trace()));
    scale = std::max(scale, f.hess.norm());
  }
  if (lap > 1e-8 * scale) {
    throw InvalidInput("oscillation_bound_check: field is not harmonic (|Laplacian| = " + fmt(lap) + ")");
  }
  (void)domain;

  OscillationReport r;
  r.p = p;
  r.G = G;
  r.r_i = r_i;
  const auto& gamma = q.boundary.gamma;
  double vmax = -std::numeric_limits<double>::infinity();
  double vmin = std::numeric_limits<double>::infinity();
  std::vector<double> gv(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    gv[i] = v.value(gamma.nodes[i]);
    vmax = std::max(vmax, gv[i]);
    vmin = std::min(vmin, gv[i]);
  }
  r.oscillation = vmax - vmin;

  std::vector<double> av(q.area.size());
  for (std::size_t i = 0; i < q.area.size(); ++i) av[i] = v.value(q.area.nodes[i]);
  const double lambda = weighted_sum(q.area.weights, av) / q.area.area();
  r.mean_form = evaluate_form(lp_norm(v, q.area, lambda, p), r.oscillation, r_i, p, G);

  std::size_t arg = 0;
  for (std::size_t i = 1; i < gamma.size(); ++i) {
    if (std::abs(gv[i] - lambda) > std::abs(gv[arg] - lambda)) arg = i;
  }
  r.x0 = gamma.nodes[arg] - r_i * gamma.normals[arg];
  r.ball_form = evaluate_form(lp_norm(v, disk_rule(r.x0, r_i), lambda, p), r.oscillation, r_i, p, G);
  return r;
}

FieldModel random_harmonic_field(const geometry::Domain& domain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> Z(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  FieldModel m;
  m.quadratic_weight = 0.0;
  m.constant = Z(rng);
  for (int s = 0; s < 3; ++s) {
    const double th = kTwoPi * U(rng);
    const double scale = 1.2 + 0.8 * U(rng);
    m.sources.push_back(domain.radius(th) * scale * Vec2(std::cos(th), std::sin(th)));
    m.coefficients.push_back(Z(rng));
  }
  for (const auto& h : domain.holes()) {
    const double th = kTwoPi * U(rng);
    const double rad = 0.5 * h.radius * U(rng);
    m.sources.push_back(h.center + rad * Vec2(std::cos(th), std::sin(th)));
    m.coefficients.push_back(Z(rng));
  }
  for (int k = 0; k < 3; ++k) m.polynomial.emplace_back(0.5 * Z(rng), 0.5 * Z(rng));
  return m;
}

// ---------------------------------------------------------------- Poincare

PoincareCondition validate_exponents(int N, double r, double p, double alpha) {
  if (N < 2) throw InvalidInput("validate_exponents: N must be >= 2");
  if (!std::isfinite(r) || !std::isfinite(p) || !std::isfinite(alpha)) {
    throw InvalidInput("validate_exponents: exponents must be finite");
  }
  std::string why;
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    why = "0 <= alpha <= 1";
  } else if (!(p >= 1.0)) {
    why = "1 <= p";
  } else if (!(p <= r)) {
    why = "p <= r";
  } else if (!(p * (1.0 - alpha) < N)) {
    why = "p(1 - alpha) < N";
  } else if (!(r <= N * p / (N - p * (1.0 - alpha)))) {
    why = "r <= Np/(N - p(1 - alpha))";
  } else {
    return PoincareCondition::kSobolevRange;
  }
  if (r == p && p >= 1.0 && alpha == 0.0) return PoincareCondition::kEqualExponents;
  throw InvalidInput("invalid exponent triple (r, p, alpha) = (" + fmt(r) + ", " + fmt(p) + ", " +
                     fmt(alpha) + "): violates " + why + " and is not of the form r = p, alpha = 0");
}

double poincare_ratio(const FieldModel& v, const geometry::AreaQuadrature& area,
                      const std::vector<double>& delta, double r, double p, double alpha) {
  std::vector<double> vals(area.size());
  for (std::size_t i = 0; i < area.size(); ++i) vals[i] = v.value(area.nodes[i]);
  const double mean = weighted_sum(area.weights, vals) / area.area();
  std::vector<double> num(area.size()), den(area.size());
  for (std::size_t i = 0; i < area.size(); ++i) {
    const Vec2 g = v.evaluate(area.nodes[i]).grad;
    num[i] = std::pow(std::abs(vals[i] - mean), r);
    den[i] = std::pow(delta[i], alpha * p) * (std::pow(std::abs(g(0)), p) + std::pow(std::abs(g(1)), p));
  }
  const double a = std::pow(std::max(0.0, weighted_sum(area.weights, num)), 1.0 / r);
  const double b = std::pow(std::max(0.0, weighted_sum(area.weights, den)), 1.0 / p);
  // Constant fields: both norms vanish up to rounding; 0/0 is reported as 0.
  if (b <= 1e-300 || a <= 1e-13 * std::max(1.0, std::abs(mean))) {
    return b <= 1e-300 && a > 1e-13 * std::max(1.0, std::abs(mean))
               ? std::numeric_limits<double>::infinity()
               : 0.0;
  }
  return a / b;
}

PoincareReport poincare_empirical(const geometry::Domain& domain, const identities::Quadratures& q,
                                  double r, double p, double alpha, int n_fields,
                                  std::uint64_t seed) {
  PoincareReport rep;
  rep.r = r;
  rep.p = p;
  rep.alpha = alpha;
  rep.condition = validate_exponents(kN, r, p, alpha);
  if (n_fields < 1) throw InvalidInput("poincare_empirical: n_fields must be >= 1");
  rep.n_fields = n_fields;

  std::vector<double> delta(q.area.size());
  for (std::size_t i = 0; i < q.area.size(); ++i) {
    delta[i] = domain.distance_to_boundary(q.area.nodes[i]);
  }
  std::mt19937_64 seeds(seed);
  for (int f = 0; f < n_fields; ++f) {
    const FieldModel v = random_harmonic_field(domain, seeds());
    rep.max_ratio = std::max(rep.max_ratio, poincare_ratio(v, q.area, delta, r, p, alpha));
  }

  const double d = geometry::diameter(domain);
  const double r_i = geometry::interior_sphere_radius(domain);
  const double area = domain.region_area();
  if (rep.condition == PoincareCondition::kSobolevRange) {
    // Exponent of |D| as printed: (1 - alpha)/N + 1/r + 1/p.
    rep.normalized_bound =
        std::pow(d / r_i, kNd) * std::pow(area, (1.0 - alpha) / kNd + 1.0 / r + 1.0 / p);
  } else {
    const double e = 3.0 * kNd * (1.0 + kNd / p);
    rep.normalized_bound = std::pow(d, e + 1.0) / std::pow(r_i, e);
  }
  return rep;
}

// ---------------------------------------------------------------- bound table

BoundTable bound_table(const BoundInputs& in) {
  if (!(in.r_i > 0.0) || !(in.d_omega > 0.0) || !(in.region_area > 0.0) || !(in.K >= 0.0) ||
      !(in.x0_radius > 0.0) || !(in.p >= 1.0)) {
    throw InvalidInput("bound_table: need r_i, d, |D|, x0 radius > 0, K >= 0, p >= 1");
  }
  BoundTable t;
  t.a_Np = a_constant(kN, in.p);
  t.alpha_Np = alpha_constant(kN, in.p);

  const double alpha = 0.5, r = 2.0, p = 2.0;
  const double area_exp = (1.0 - alpha) / kNd + 1.0 / r + 1.0 / p;
  t.poincare_mean_sobolev = std::pow(in.d_omega / in.r_i, kNd) * std::pow(in.region_area, area_exp);
  t.poincare_x0_sobolev = std::pow(in.d_omega / std::min(in.r_i, in.x0_radius), kNd) *
                          std::pow(in.region_area, area_exp);
  const double e = 3.0 * kNd * (1.0 + kNd / p);
  t.poincare_mean_equal = std::pow(in.d_omega, e + 1.0) / std::pow(in.r_i, e);
  t.poincare_x0_equal = std::pow(in.d_omega, e + 1.0) / std::pow(std::min(in.r_i, in.x0_radius), e);

  t.c_lower = in.r_i / kNd;
  t.c_upper = in.d_omega / (2.0 * kNd) +
              in.K / (kNd * unit_ball_volume(kN) * std::pow(in.r_i, kNd - 1.0));
  t.c_upper_applicable = in.hole_perimeter < 1.0;
  t.c_upper_small_eta = in.d_omega / (4.0 * kNd);
  t.john_b0 = in.d_omega / in.r_i;
  t.hopf_threshold = in.r_i / kNd;

  if (in.c < t.c_lower - kLemmaTolerance) {
    t.violations.push_back("c = " + fmt(in.c) + " below r_i/N = " + fmt(t.c_lower));
  }
  if (t.c_upper_applicable && in.c > t.c_upper + kLemmaTolerance) {
    t.violations.push_back("c = " + fmt(in.c) + " above d/(2N) + K/(N|B_1|r_i^(N-1)) = " +
                           fmt(t.c_upper));
  }
  return t;
}

// ---------------------------------------------------------------- theorem suite

StabilityReport theorem_suite(const StabilityInstance& instance, const SuiteOptions& options) {
  const geometry::Domain domain(instance.spec);
  const identities::Quadratures q =
      identities::make_quadratures(domain, instance.n_theta, instance.n_r);
  const FieldModel& model = instance.model;
  StabilityReport rep;

  if (instance.c) {
    rep.c = *instance.c;
  } else {
    rep.c = identities::compute_c(domain, model, q).direct;
    rep.c_estimated = true;
  }
  if (!(rep.c > 0.0)) throw InvalidInput("theorem_suite: c must be positive");

  for (std::size_t i = 0; i < q.boundary.gamma.size(); ++i) {
    const double un = model.evaluate(q.boundary.gamma.nodes[i]).grad.dot(q.boundary.gamma.normals[i]);
    rep.max_deviation = std::max(rep.max_deviation, std::abs(un - rep.c));
  }
  if (!instance.waive_overdetermination && rep.max_deviation > instance.tol_overdet) {
    rep.hypothesis_failures.push_back("overdetermination: max |u_nu - c| = " + fmt(rep.max_deviation));
  }
  rep.max_hole_u = -std::numeric_limits<double>::infinity();
  for (const auto& rule : q.boundary.holes) {
    for (const Vec2& x : rule.nodes) rep.max_hole_u = std::max(rep.max_hole_u, model.value(x));
  }
  if (q.boundary.holes.empty()) rep.max_hole_u = 0.0;
  if (rep.max_hole_u > 1e-12) {
    rep.hypothesis_failures.push_back("u <= 0 on holes: max u = " + fmt(rep.max_hole_u));
  }

  rep.z = compute_z(domain, model, q);
  rep.z_in_region = domain.inside_outer(rep.z);
  if (rep.z_in_region) {
    const auto rr = geometry::rho_e_rho_i(domain, rep.z);
    rep.rho_e = rr.rho_e;
    rep.rho_i = rr.rho_i;
  } else {
    rep.hypothesis_failures.push_back("z in Omega: z = (" + fmt(rep.z(0)) + ", " + fmt(rep.z(1)) + ")");
    rep.rho_e = 0.0;
    rep.rho_i = std::numeric_limits<double>::infinity();
    for (const Vec2& x : q.boundary.gamma.nodes) {
      rep.rho_e = std::max(rep.rho_e, (x - rep.z).norm());
      rep.rho_i = std::min(rep.rho_i, (x - rep.z).norm());
    }
  }

  rep.r_i = geometry::interior_sphere_radius(domain);
  rep.d_omega = geometry::diameter(domain);
  rep.pseudo_distance = pseudo_distance(q.boundary.gamma, rep.z, rep.c);
  rep.asymmetry = asymmetry(domain, rep.z, rep.c);

  const int n_theta_tube = 256, n_normal_tube = 24;
  rep.M = max_gradient_on_tube(domain, model, rep.r_i, n_theta_tube, n_normal_tube);
  rep.M_nodes = n_theta_tube * (n_normal_tube + 2);
  rep.K = c2_norm_on_holes(model, q.boundary);
  rep.hole_perimeter = domain.holes_perimeter();
  rep.max_hole_diameter = geometry::max_hole_diameter(domain);
  rep.eta = options.eta == EtaChoice::kHolePerimeter ? rep.hole_perimeter : rep.max_hole_diameter;
  rep.psi = std::max(rep.K, rep.K * rep.K * rep.K) * rep.eta;

  // The boundary integrals that psi(eta) must dominate.
  for (const auto& rule : q.boundary.holes) {
    std::vector<double> i1, i2, i3, i4, i5, i6;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const FieldValue v = model.evaluate(rule.nodes[i]);
      const Vec2& nu = rule.normals[i];
      const double un = v.grad.dot(nu);
      i1.push_back(std::abs(v.u));
      i2.push_back(v.u * un);
      i3.push_back(v.grad.squaredNorm() * un);
      i4.push_back(v.grad.squaredNorm());
      i5.push_back((v.hess * v.grad).dot(nu) * v.u);
      i6.push_back(v.u * (v.hess * (rule.nodes[i] - rep.z)).dot(nu));
    }
    for (const auto* vals : {&i1, &i2, &i3, &i4, &i5, &i6}) {
      rep.psi_integrals = std::max(rep.psi_integrals, std::abs(weighted_sum(rule.weights, *vals)));
    }
  }
  if (rep.psi_integrals > rep.psi * (1.0 + 1e-12) + 1e-15) {
    rep.hypothesis_failures.push_back("boundary integrals " + fmt(rep.psi_integrals) +
                                      " exceed psi(eta) = " + fmt(rep.psi));
  }

  rep.tau = exponents_tau(kN, options.regime, options.theta);
  rep.driver_pseudo = rep.hole_perimeter;
  rep.driver_asymmetry = std::sqrt(rep.hole_perimeter);
  rep.driver_rho = std::pow(rep.hole_perimeter, rep.tau / 2.0);
  rep.driver_rho_general = std::pow(rep.psi, rep.tau / 2.0);

  if (rep.z_in_region && star_shaped_about(q.boundary.gamma, rep.z) && rep.rho_i > 0.0) {
    rep.asymmetry_lemma_applicable = true;
    rep.asymmetry_lemma_constant = asymmetry_lemma_constant(rep.rho_e, rep.rho_i, rep.c);
    rep.asymmetry_lemma_holds =
        rep.asymmetry <= rep.asymmetry_lemma_constant * std::sqrt(rep.pseudo_distance) + 1e-8;
  }

  const std::vector<Vec2> samples = sample_region(domain, options.n_samples, options.seed);
  rep.growth = growth_checks(model, domain, samples, rep.r_i);
  rep.hopf = hopf_check(model, q.boundary.gamma, rep.r_i);

  BoundInputs in;
  in.c = rep.c;
  in.r_i = rep.r_i;
  in.d_omega = rep.d_omega;
  in.K = rep.K;
  in.hole_perimeter = rep.hole_perimeter;
  in.region_area = domain.region_area();
  in.x0_radius = domain.in_region(rep.z) ? std::min(rep.r_i, geometry::delta(domain, rep.z)) : rep.r_i;
  rep.bounds = bound_table(in);
  return rep;
}

FittedConstants fit_constants(const std::vector<StabilityReport>& reports) {
  FittedConstants out;
  auto update = [](FittedConstant& f, double lhs, double driver) {
    ++f.n_used;
    if (lhs <= 0.0) return;
    if (driver <= 0.0) {
      f.finite = false;
      return;
    }
    f.value = std::max(f.value, lhs / driver);
  };
  for (const StabilityReport& r : reports) {
    if (!r.valid()) {
      ++out.n_excluded;
      continue;
    }
    update(out.pseudo, r.pseudo_distance, r.driver_pseudo);
    update(out.asymmetry, r.asymmetry, r.driver_asymmetry);
    update(out.rho, r.rho_e - r.rho_i, r.driver_rho);
  }
  return out;
}

LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidInput("loglog_fit: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  LogLogFit f;
  f.n = static_cast<int>(lx.size());
  if (f.n < 2) return f;
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < f.n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= f.n;
  my /= f.n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < f.n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.defined = true;
  return f;
}

}  // namespace torsionlab::stability
