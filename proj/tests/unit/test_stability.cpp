#include <doctest.h>

#include "torsionlab/errors.hpp"
#include "torsionlab/geometry.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/rules.hpp"
#include "torsionlab/solver.hpp"
#include "torsionlab/stability.hpp"

#include <cmath>
#include <random>

using namespace torsionlab;
using namespace torsionlab::geometry;
using namespace torsionlab::identities;
using namespace torsionlab::solver;
using namespace torsionlab::stability;

namespace {

DomainSpec disk() { return DomainSpec{1.0, {}, {}}; }

DomainSpec radial_annulus(double rho) {
  DomainSpec s = disk();
  s.holes.push_back(Hole{Vec2::Zero(), rho, (rho * rho - 1.0) / 4.0});
  return s;
}

DomainSpec generic() {
  return DomainSpec{1.0, {FourierMode{3, 0.1, 0.0}}, {Hole{Vec2(0.4, 0.1), 0.15, -0.05}}};
}

DomainSpec offcentre_ball() { return DomainSpec{1.0, {}, {Hole{Vec2(0.4, 0.0), 0.1, -0.1}}}; }

}  // namespace

TEST_SUITE("stability.constants") {
  TEST_CASE("oscillation lemma constants at N = p = 2") {
    // Oracle: hand evaluation 2*4 / (2^(1/2) 2^(1/2) pi^(1/4)) = 4 / pi^(1/4).
    CHECK(a_constant(2, 2.0) == doctest::Approx(4.0 / std::pow(kPi, 0.25)).epsilon(1e-14));
    CHECK(a_constant(2, 2.0) == doctest::Approx(3.0045).epsilon(1e-4));
    CHECK(alpha_constant(2, 2.0) == doctest::Approx(std::sqrt(kPi)).epsilon(1e-14));
    CHECK(unit_ball_volume(2) == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(a_constant(2, 0.5), InvalidInput);
  }
  TEST_CASE("tau exponents") {
    CHECK(exponents_tau(2, Regime::kSphereCondition) == 1.0);
    CHECK(exponents_tau(5, Regime::kSphereCondition) == doctest::Approx(0.5));
    CHECK(exponents_tau(3, Regime::kJohnRelaxed) == doctest::Approx(2.0 / 3.0));
    CHECK(exponents_tau(3, Regime::kSphereCondition, 0.1) == doctest::Approx(0.9));
    CHECK(exponents_tau(2, Regime::kJohnRelaxed, 0.25) == doctest::Approx(0.75));
    CHECK_THROWS_AS(exponents_tau(3, Regime::kSphereCondition), InvalidInput);
    CHECK_THROWS_AS(exponents_tau(2, Regime::kJohnRelaxed), InvalidInput);
    CHECK_THROWS_AS(exponents_tau(1, Regime::kSphereCondition), InvalidInput);
    for (int N = 4; N < 12; ++N) {
      CHECK(exponents_tau(N + 1, Regime::kSphereCondition) <= exponents_tau(N, Regime::kSphereCondition));
    }
    for (int N = 3; N < 12; ++N) {
      CHECK(exponents_tau(N + 1, Regime::kJohnRelaxed) <= exponents_tau(N, Regime::kJohnRelaxed));
    }
  }
  TEST_CASE("bound table arithmetic and bracket") {
    BoundInputs in;
    in.c = 0.5;
    in.r_i = 0.4;
    in.d_omega = 2.0;
    in.K = 0.25;
    in.hole_perimeter = 0.5;
    in.region_area = kPi;
    in.x0_radius = 0.4;
    const BoundTable t = bound_table(in);
    // Oracle: 2/4 + 0.25/(2 pi 0.4).
    CHECK(t.c_upper == doctest::Approx(0.5 + 0.25 / (2.0 * kPi * 0.4)).epsilon(1e-14));
    CHECK(t.c_upper == doctest::Approx(0.5995).epsilon(1e-4));
    CHECK(t.c_lower == doctest::Approx(0.2));
    CHECK(t.c_upper_applicable);
    CHECK(t.violations.empty());
    CHECK(t.john_b0 == doctest::Approx(5.0));
    CHECK(t.hopf_threshold == doctest::Approx(0.2));
    CHECK(t.c_upper_small_eta == doctest::Approx(0.25));
    CHECK(t.poincare_normalized);
    for (double v : {t.a_Np, t.alpha_Np, t.poincare_mean_sobolev, t.poincare_x0_sobolev,
                     t.poincare_mean_equal, t.poincare_x0_equal}) {
      CHECK(std::isfinite(v));
      CHECK(v > 0.0);
    }
    // Ball saturation: r_i = 1, lower bound r_i/N = c.
    in.r_i = 1.0;
    in.x0_radius = 1.0;
    CHECK(bound_table(in).c_lower == doctest::Approx(0.5));
    CHECK(bound_table(in).violations.empty());
    in.c = 0.3;
    CHECK(bound_table(in).violations.size() == 1);
    in.c = 0.5;
    in.r_i = 0.0;
    CHECK_THROWS_AS(bound_table(in), InvalidInput);
  }
}

TEST_SUITE("stability.functionals") {
  TEST_CASE("z vanishes by symmetry on radial instances and the disk") {
    const FieldModel m = radial_reference(1.0, 2).model();
    for (const DomainSpec& s : {disk(), radial_annulus(0.3)}) {
      const Domain d(s);
      const Vec2 z = compute_z(d, m, make_quadratures(d, 128, 48));
      CHECK(z.norm() <= 1e-9);
      CHECK(compute_z_tubular(d, m, interior_sphere_radius(d)).norm() <= 1e-9);
    }
  }
  TEST_CASE("z self-converges on an off-centre hole") {
    const Domain d(offcentre_ball());
    const Solution s = solve_dirichlet(offcentre_ball());
    const Vec2 z = compute_z(d, s.model, make_quadratures(d, 128, 32));
    const Vec2 z8 = compute_z(d, s.model, make_quadratures(d, 1024, 256));
    CHECK((z - z8).norm() <= 1e-6);
    CHECK(std::abs(z8(1)) <= 1e-12);
  }
  TEST_CASE("tubular z equals the Green form over the tube") {
    // Oracle: int_{Gamma_r} u nu dS = int_{tube} grad u dx (u = 0 on Gamma), so
    // z = int_tube (x - N grad u) / |tube|, computed from the tube rule alone.
    const Domain d(offcentre_ball());
    const Solution s = solve_dirichlet(offcentre_ball());
    const double r_i = interior_sphere_radius(d);
    const TubularSets ts = tubular_sets(d, r_i, r_i, 256, 24);
    Vec2 acc = Vec2::Zero();
    for (std::size_t i = 0; i < ts.tube.size(); ++i) {
      acc += ts.tube.weights[i] * (ts.tube.nodes[i] - 2.0 * s.model.evaluate(ts.tube.nodes[i]).grad);
    }
    const Vec2 oracle = acc / ts.tube.area();
    const Vec2 zt = compute_z_tubular(d, s.model, r_i);
    CHECK((zt - oracle).norm() <= 1e-8);
    CHECK(std::abs(zt(1)) <= 1e-12);
    // The off-centre hole pulls the tubular z towards it.
    CHECK(zt(0) > 0.01);
  }
  TEST_CASE("tubular z self-converges on a perturbed domain") {
    const DomainSpec spec = generic();
    const Domain d(spec);
    const Solution s = solve_dirichlet(spec);
    const double r_i = interior_sphere_radius(d);
    const Vec2 a = compute_z_tubular(d, s.model, r_i, 128, 12);
    const Vec2 b = compute_z_tubular(d, s.model, r_i, 1024, 48);
    CHECK((a - b).norm() <= 1e-5);
  }
  TEST_CASE("pseudo-distance: ball, shifted centre, and a Monte Carlo line integral") {
    const Domain ball(disk());
    const auto gamma = build_boundary_quadrature(ball, 256).gamma;
    CHECK(pseudo_distance(gamma, Vec2::Zero(), 0.5) <= 1e-12);
    const double shifted = pseudo_distance(gamma, Vec2(0.1, 0.0), 0.5);
    CHECK(std::abs(shifted - kPi * 0.01 / 4.0) <= 2e-4);
    // Oracle: adaptive-free Gauss-Legendre in theta on 64 panels.
    double gl = 0.0;
    for (int panel = 0; panel < 64; ++panel) {
      const GaussRule g = gauss_legendre(16, kTwoPi * panel / 64, kTwoPi * (panel + 1) / 64);
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const Vec2 x(std::cos(g.nodes[i]), std::sin(g.nodes[i]));
        const double v = (x - Vec2(0.1, 0.0)).norm() / 2.0 - 0.5;
        gl += g.weights[i] * v * v;
      }
    }
    CHECK(shifted == doctest::Approx(gl).epsilon(1e-12));

    // Oracle: 10^6 jittered (stratified) Monte Carlo samples of theta.
    const DomainSpec spec{1.0, {FourierMode{3, 0.05, 0.0}}, {}};
    const Domain d(spec);
    const double D2 = pseudo_distance(build_boundary_quadrature(d, 256).gamma, Vec2::Zero(), 0.5);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int n = 1000000;
    double mc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double th = kTwoPi * (i + U(rng)) / n;
      const double v = d.point(th).norm() / 2.0 - 0.5;
      mc += v * v * d.tangent(th).norm();
    }
    mc *= kTwoPi / n;
    CHECK(std::abs(D2 - mc) <= 1e-3 * mc);
  }
  TEST_CASE("pseudo-distance is invariant under rotation of the instance") {
    const double phi = 0.37;
    const DomainSpec a{1.0, {FourierMode{3, 0.05, 0.0}}, {}};
    const DomainSpec b{1.0, {FourierMode{3, 0.05 * std::cos(3 * phi), 0.05 * std::sin(3 * phi)}}, {}};
    const Vec2 z(0.05, 0.02);
    const Vec2 zr(std::cos(phi) * z(0) - std::sin(phi) * z(1), std::sin(phi) * z(0) + std::cos(phi) * z(1));
    const double da = pseudo_distance(build_boundary_quadrature(Domain(a), 256).gamma, z, 0.5);
    const double db = pseudo_distance(build_boundary_quadrature(Domain(b), 256).gamma, zr, 0.5);
    CHECK(std::abs(da - db) <= 1e-10);
  }
  TEST_CASE("asymmetry and its explicit lemma constant") {
    const Domain ball(disk());
    CHECK(asymmetry(ball, Vec2::Zero(), 0.5) <= 1e-12);
    const DomainSpec spec{1.0, {FourierMode{3, 0.05, 0.0}}, {}};
    const Domain d(spec);
    const auto gamma = build_boundary_quadrature(d, 256).gamma;
    for (const Vec2& z : {Vec2(0.0, 0.0), Vec2(0.05, -0.03)}) {
      for (double c : {0.45, 0.5, 0.55}) {
        CHECK(star_shaped_about(gamma, z));
        const auto rr = rho_e_rho_i(d, z);
        const double C = asymmetry_lemma_constant(rr.rho_e, rr.rho_i, c);
        CHECK(asymmetry(d, z, c) <= C * std::sqrt(pseudo_distance(gamma, z, c)));
      }
    }
    CHECK_FALSE(star_shaped_about(gamma, Vec2(2.0, 0.0)));
    CHECK_THROWS_AS(asymmetry(d, Vec2::Zero(), 0.0), InvalidInput);
  }
  TEST_CASE("C2 norm on holes and tube gradient bound on the radial field") {
    const Domain d(radial_annulus(0.2));
    const FieldModel m = radial_reference(1.0, 2).model();
    const auto q = make_quadratures(d, 128, 48);
    // Oracle: |u| + |grad u| + |Hess u|_F = 0.24 + 0.1 + 1/sqrt(2) at radius 0.2.
    CHECK(c2_norm_on_holes(m, q.boundary) == doctest::Approx(0.24 + 0.1 + std::sqrt(0.5)).epsilon(1e-12));
    // |grad u| = |x|/2 is largest on Gamma.
    CHECK(max_gradient_on_tube(d, m, 0.4) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_SUITE("stability.pointwise") {
  TEST_CASE("growth lemma at a hand-checked point and near the boundary") {
    const Domain d(radial_annulus(0.2));
    const FieldModel m = radial_reference(1.0, 2).model();
    // -u(0.6, 0) = 0.16, delta = 0.4, delta^2/4 = 0.04, r_i delta/4 = 0.04.
    const GrowthReport r = growth_checks(m, d, {Vec2(0.6, 0.0)}, 0.4);
    CHECK(r.passed());
    CHECK(r.min_slack_quadratic == doctest::Approx(0.12).epsilon(1e-12));
    CHECK(r.min_slack_linear == doctest::Approx(0.12).epsilon(1e-12));
    const GrowthReport near = growth_checks(m, d, {Vec2(1.0 - 1e-4, 0.0)}, 0.4);
    CHECK(near.passed());
    CHECK(near.min_slack_linear >= 0.0);
    CHECK(near.min_slack_linear <= 1e-4);
  }
  TEST_CASE("growth lemma holds on 10^4 samples of the generic instance") {
    const Domain d(generic());
    const Solution s = solve_dirichlet(generic());
    const auto samples = sample_region(d, 10000, 3);
    REQUIRE(samples.size() == 10000);
    const GrowthReport r = growth_checks(s.model, d, samples, interior_sphere_radius(d));
    CHECK(r.violations == 0);
    CHECK_FALSE(r.witness.has_value());
  }
  TEST_CASE("growth lemma reports a witness for a field positive inside") {
    const Domain d(disk());
    FieldModel m = radial_reference(1.0, 2).model();
    m.constant += 0.3;
    const GrowthReport r = growth_checks(m, d, sample_region(d, 200, 1), 1.0);
    CHECK(r.violations > 0);
    REQUIRE(r.witness.has_value());
    CHECK(d.in_region(*r.witness));
  }
  TEST_CASE("Hopf lower bound: saturation on the ball, slack on the annulus") {
    const FieldModel m = radial_reference(1.0, 2).model();
    const auto ball = build_boundary_quadrature(Domain(disk()), 128).gamma;
    const HopfReport b = hopf_check(m, ball, 1.0);
    CHECK(b.passed());
    CHECK(std::abs(b.slack) <= 1e-14);
    const HopfReport a = hopf_check(m, ball, 0.4);
    CHECK(a.threshold == doctest::Approx(0.2));
    CHECK(a.slack == doctest::Approx(0.3));
    const Domain g(generic());
    const Solution s = solve_dirichlet(generic());
    CHECK(hopf_check(s.model, build_boundary_quadrature(g, 512).gamma, interior_sphere_radius(g)).passed());
    const HopfReport bad = hopf_check(quadratic_field(Vec2(0.5, 0.0), -0.25), ball, 1.0);
    CHECK(bad.violations > 0);
    CHECK(bad.witness.has_value());
  }
}

TEST_SUITE("stability.oscillation") {
  TEST_CASE("constant field: zero oscillation, zero right-hand side") {
    const Domain d(radial_annulus(0.2));
    const auto q = make_quadratures(d, 128, 48);
    FieldModel v;
    v.quadratic_weight = 0.0;
    v.constant = 2.5;
    const OscillationReport r = oscillation_bound_check(v, d, q, 0.4, 2.0, 0.0);
    CHECK(r.oscillation <= 1e-15);
    CHECK(r.mean_form.applicable);
    CHECK(r.mean_form.rhs <= 1e-12);
    CHECK(r.passed());
  }
  TEST_CASE("Re z^2 on the annulus with measured G") {
    const Domain d(radial_annulus(0.2));
    const auto q = make_quadratures(d, 256, 64);
    FieldModel v;
    v.quadratic_weight = 0.0;
    v.polynomial = {{0.0, 0.0}, {1.0, 0.0}};
    const double G = max_gradient_on_tube(d, v, 0.4);
    CHECK(G == doctest::Approx(2.0).epsilon(1e-12));
    const OscillationReport r = oscillation_bound_check(v, d, q, 0.4, 2.0, G);
    // Oracle: max - min of cos 2 theta on the unit circle.
    CHECK(r.oscillation == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.passed());
    if (r.mean_form.applicable) CHECK(r.mean_form.slack > 0.0);
    if (r.ball_form.applicable) CHECK(r.ball_form.slack > 0.0);
  }
  TEST_CASE("random harmonic fields never violate the lemma") {
    int applicable = 0;
    for (const DomainSpec& s : {radial_annulus(0.2), generic(), offcentre_ball()}) {
      const Domain d(s);
      const auto q = make_quadratures(d, 256, 64);
      const double r_i = interior_sphere_radius(d);
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const FieldModel v = random_harmonic_field(d, seed);
        const double G = max_gradient_on_tube(d, v, r_i);
        const OscillationReport r = oscillation_bound_check(v, d, q, r_i, 2.0, G);
        CHECK(r.passed());
        applicable += r.mean_form.applicable + r.ball_form.applicable;
      }
    }
    MESSAGE("applicable forms: " << applicable);
  }
  TEST_CASE("non-harmonic field is rejected") {
    const Domain d(disk());
    const auto q = make_quadratures(d, 128, 16);
    CHECK_THROWS_AS(oscillation_bound_check(radial_reference(1.0, 2).model(), d, q, 1.0, 2.0, 1.0),
                    InvalidInput);
  }
}

TEST_SUITE("stability.poincare") {
  TEST_CASE("exponent triples") {
    CHECK(validate_exponents(2, 2.0, 2.0, 0.5) == PoincareCondition::kSobolevRange);
    CHECK(validate_exponents(2, 4.0, 2.0, 0.5) == PoincareCondition::kSobolevRange);
    CHECK(validate_exponents(2, 3.0, 3.0, 0.0) == PoincareCondition::kEqualExponents);
    try {
      validate_exponents(2, 4.0, 2.0, 0.0);
      FAIL("expected InvalidInput");
    } catch (const InvalidInput& e) {
      CHECK(std::string(e.what()).find("p(1 - alpha) < N") != std::string::npos);
    }
    CHECK_THROWS_AS(validate_exponents(2, 1.0, 2.0, 0.5), InvalidInput);
    CHECK_THROWS_AS(validate_exponents(2, 2.0, 2.0, 1.5), InvalidInput);
  }
  TEST_CASE("constant field ratio is 0") {
    const Domain d(disk());
    const auto q = make_quadratures(d, 128, 16);
    std::vector<double> delta(q.area.size());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = d.distance_to_boundary(q.area.nodes[i]);
    FieldModel v;
    v.quadratic_weight = 0.0;
    v.constant = 1.0;
    CHECK(poincare_ratio(v, q.area, delta, 2.0, 2.0, 0.5) == 0.0);
  }
  TEST_CASE("empirical ratio over 50 fields and the normalized bound") {
    const Domain d(generic());
    const auto q = make_quadratures(d, 128, 32);
    const PoincareReport r = poincare_empirical(d, q, 2.0, 2.0, 0.5, 50, 11);
    CHECK(r.n_fields == 50);
    CHECK(r.normalized);
    CHECK(std::isfinite(r.max_ratio));
    CHECK(r.max_ratio > 0.0);
    CHECK(r.normalized_bound > 0.0);
    // Deterministic in the seed.
    CHECK(poincare_empirical(d, q, 2.0, 2.0, 0.5, 50, 11).max_ratio == r.max_ratio);
    CHECK_THROWS_AS(poincare_empirical(d, q, 4.0, 2.0, 0.0, 5, 1), InvalidInput);
  }
}

TEST_SUITE("stability.suite") {
  TEST_CASE("radial family: every left-hand side vanishes") {
    std::vector<StabilityReport> reports;
    for (double eps : {0.05, 0.1, 0.2}) {
      StabilityInstance in;
      in.spec = radial_annulus(eps);
      in.model = radial_reference(1.0, 2).model();
      in.c = 0.5;
      SuiteOptions o;
      o.n_samples = 2000;
      const StabilityReport r = theorem_suite(in, o);
      CHECK(r.valid());
      CHECK(r.pseudo_distance <= 1e-10);
      CHECK(r.asymmetry <= 1e-6);
      CHECK(r.rho_e - r.rho_i <= 1e-8);
      CHECK(r.rho_e >= r.rho_i);
      CHECK(r.growth.passed());
      CHECK(r.hopf.passed());
      CHECK(r.bounds.violations.empty());
      CHECK(r.K >= -r.max_hole_u);
      reports.push_back(r);
    }
    const FittedConstants f = fit_constants(reports);
    // Zero up to rounding of the left-hand sides.
    CHECK(f.pseudo.value <= 1e-12);
    CHECK(f.asymmetry.value <= 1e-12);
    CHECK(f.rho.value <= 1e-12);
    CHECK(f.n_excluded == 0);
  }
  TEST_CASE("Cauchy instances with a centred hole: single finite constants") {
    std::vector<StabilityReport> reports;
    for (double eps : {0.005, 0.01, 0.02}) {
      const DomainSpec outer{1.0, {FourierMode{3, eps, 0.0}}, {}};
      StabilityInstance in;
      in.model = solve_cauchy(outer, 0.5).model;
      in.spec = carve(outer, {SourceDisk{Vec2::Zero(), 0.5}});
      in.c = 0.5;
      SuiteOptions o;
      o.n_samples = 2000;
      const StabilityReport r = theorem_suite(in, o);
      CHECK(r.valid());
      CHECK(r.asymmetry_lemma_applicable);
      CHECK(r.asymmetry_lemma_holds);
      CHECK(r.rho_e - r.rho_i <= r.d_omega);
      reports.push_back(r);
    }
    const FittedConstants f = fit_constants(reports);
    CHECK(f.pseudo.finite);
    CHECK(f.pseudo.value > 0.0);
    CHECK(f.rho.n_used == 3);
    for (const auto& r : reports) {
      CHECK(r.pseudo_distance <= f.pseudo.value * r.driver_pseudo * (1 + 1e-12));
      CHECK(r.asymmetry <= f.asymmetry.value * r.driver_asymmetry * (1 + 1e-12));
    }
  }
  TEST_CASE("non-overdetermined instance is flagged unless waived") {
    StabilityInstance in;
    in.spec = generic();
    in.model = solve_dirichlet(generic()).model;
    SuiteOptions o;
    o.n_samples = 1000;
    const StabilityReport r = theorem_suite(in, o);
    CHECK(r.c_estimated);
    CHECK_FALSE(r.valid());
    in.waive_overdetermination = true;
    const StabilityReport w = theorem_suite(in, o);
    CHECK(w.valid());
    CHECK(w.asymmetry_lemma_holds);
    CHECK(w.bounds.violations.empty());
    CHECK(fit_constants({r}).n_excluded == 1);
  }
  TEST_CASE("z outside Omega takes the hypothesis-failure path") {
    StabilityInstance in;
    in.spec = offcentre_ball();
    in.model = radial_reference(1.0, 2).model();
    in.model.polynomial = {{100.0, 0.0}};
    in.c = 0.5;
    in.waive_overdetermination = true;
    SuiteOptions o;
    o.n_samples = 100;
    const StabilityReport r = theorem_suite(in, o);
    CHECK_FALSE(r.z_in_region);
    CHECK_FALSE(r.valid());
    CHECK(r.rho_e >= r.rho_i);
  }
  TEST_CASE("log-log fit") {
    const LogLogFit f = loglog_fit({0.1, 0.2, 0.4, 0.0}, {0.03, 0.12, 0.48, 1.0});
    CHECK(f.n == 3);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
  }
}
