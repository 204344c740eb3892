#include <doctest.h>

#include "torsionlab/errors.hpp"
#include "torsionlab/geometry.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/solver.hpp"

#include <cmath>

using namespace torsionlab;
using namespace torsionlab::geometry;
using namespace torsionlab::identities;
using namespace torsionlab::solver;

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

double breakdown_sum(const IdentityReport& r) {
  double s = 0.0;
  for (const Term& t : r.breakdown) s += t.value;
  return s;
}

}  // namespace

TEST_SUITE("identities.pointwise") {
  TEST_CASE("P function and deficit of the radial field") {
    const FieldModel m = radial_reference(1.0, 2).model();
    // Oracle: |x/2|^2 - (|x|^2 - 1)/4 = 1/4 everywhere.
    CHECK(p_function(m, Vec2(0.3, -0.4)) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(std::abs(cs_deficit(m, Vec2(0.3, -0.4))) <= 1e-15);
  }
  TEST_CASE("deficit equals the harmonic Hessian norm and Delta P = 2 deficit") {
    const Solution s = solve_dirichlet(generic());
    const double h = 1e-4;
    for (const Vec2& x : {Vec2(0.1, 0.2), Vec2(-0.5, 0.3), Vec2(0.2, -0.6)}) {
      const double d = cs_deficit(s.model, x);
      CHECK(d >= 0.0);
      CHECK(d == doctest::Approx(harmonic_hessian_norm2(s.model, x)).epsilon(1e-10));
      // Oracle: five-point Laplacian of P.
      double lap = -4.0 * p_function(s.model, x);
      for (int i = 0; i < 2; ++i) {
        lap += p_function(s.model, x + h * Vec2::Unit(i)) + p_function(s.model, x - h * Vec2::Unit(i));
      }
      lap /= h * h;
      CHECK(std::abs(lap - 2.0 * d) <= 1e-5 * std::max(1.0, d));
    }
  }
  TEST_CASE("deficit of a harmonic field is the squared Hessian norm") {
    FieldModel m;
    m.quadratic_weight = 0.0;
    m.polynomial = {{0.0, 0.0}, {1.0, 0.5}};
    // Oracle: Hess Re((1 + 0.5i) z^2) = 2 [[1, -0.5], [-0.5, -1]], norm^2 = 4 * 2.5.
    CHECK(cs_deficit(m, Vec2(0.2, 0.1)) == doctest::Approx(10.0).epsilon(1e-14));
  }
}

TEST_SUITE("identities.integral") {
  TEST_CASE("divergence of x per component matches closed-form areas") {
    const Domain d(generic());
    const Quadratures q = make_quadratures(d, 256, 64);
    const IdentityReport r = check_divergence_x(d, q);
    REQUIRE(r.breakdown.size() == 2);
    CHECK(r.breakdown[0].name == "gamma");
    CHECK(r.breakdown[0].value == doctest::Approx(d.outer_area()).epsilon(1e-12));
    // Hole normals point into the hole, so the hole contributes -|hole|.
    CHECK(r.breakdown[1].value == doctest::Approx(-kPi * 0.15 * 0.15).epsilon(1e-12));
    CHECK(r.rel_residual <= 1e-8);
  }
  TEST_CASE("Pohozaev on the unit disk: both sides are pi/2") {
    const Domain d(disk());
    const Quadratures q = make_quadratures(d, 128, 16);
    const IdentityReport r = check_pohozaev(radial_reference(1.0, 2).model(), d, q);
    CHECK(r.lhs == doctest::Approx(kPi / 2.0).epsilon(1e-10));
    CHECK(r.rhs == doctest::Approx(kPi / 2.0).epsilon(1e-12));
  }
  TEST_CASE("radial annuli: closed-form sides and vanishing groups") {
    const FieldModel m = radial_reference(1.0, 2).model();
    for (double rho : {0.1, 0.2, 0.4}) {
      CAPTURE(rho);
      const Domain d(radial_annulus(rho));
      const Quadratures q = make_quadratures(d, 128, 64);
      const IdentityReport p = check_pohozaev(m, d, q);
      // Oracle: 4 int |x|^2/4 over the annulus = (pi/2)(1 - rho^4).
      CHECK(p.lhs == doctest::Approx(kPi / 2.0 * (1.0 - std::pow(rho, 4))).epsilon(1e-9));
      CHECK(p.rel_residual <= 1e-8);
      CHECK(breakdown_sum(p) == doctest::Approx(p.rhs).epsilon(1e-12));

      const IdentityReport f = check_fundamental(m, d, q);
      CHECK(f.rel_residual <= 1e-8);
      CHECK(std::abs(f.lhs) <= 1e-12);

      const OverdeterminedReport o = check_overdetermined(m, d, 0.5, q);
      CHECK(o.max_deviation <= 1e-14);
      CHECK(o.identity.rel_residual <= 1e-8);
      for (const Term& t : o.identity.breakdown) CHECK(std::abs(t.value) <= 1e-9);
      CHECK(o.value_c.rel_residual <= 1e-12);

      const CValue c = compute_c(d, m, q);
      CHECK(c.balance == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(c.direct == doctest::Approx(0.5).epsilon(1e-12));
      CHECK_FALSE(c.inconsistent);
    }
  }
  TEST_CASE("generic Dirichlet instance: identities hold and converge under refinement") {
    const Domain d(generic());
    const Solution s = solve_dirichlet(generic());
    const Quadratures coarse = make_quadratures(d, 128, 32);
    const Quadratures fine = make_quadratures(d, 256, 128);
    for (auto check : {&check_pohozaev, &check_fundamental}) {
      const IdentityReport a = check(s.model, d, coarse);
      const IdentityReport b = check(s.model, d, fine);
      CAPTURE(a.id);
      CHECK(a.rel_residual <= 1e-4);
      CHECK(b.rel_residual <= 1e-8);
      CHECK(breakdown_sum(b) == doctest::Approx(b.rhs).epsilon(1e-12));
    }
    const CValue c = compute_c(d, s.model, fine);
    CHECK(c.mismatch <= 1e-8);
    CHECK_FALSE(c.inconsistent);
  }
  TEST_CASE("overdetermined hypothesis is rejected on a perturbed Dirichlet instance") {
    const Domain d(generic());
    const Solution s = solve_dirichlet(generic());
    const Quadratures q = make_quadratures(d, 128, 32);
    const CValue c = compute_c(d, s.model, q);
    try {
      check_overdetermined(s.model, d, c.direct, q);
      FAIL("expected HypothesisFailure");
    } catch (const HypothesisFailure& e) {
      CHECK(e.measured() > 1e-3);
    }
  }
  TEST_CASE("continued Cauchy field with a centred hole satisfies the overdetermined identity") {
    const DomainSpec outer{1.0, {FourierMode{3, 0.02, 0.0}}, {}};
    const Solution s = solve_cauchy(outer, 0.5);
    const Domain d(carve(outer, {SourceDisk{Vec2::Zero(), 0.5}}));
    const Quadratures q = make_quadratures(d, 256, 64);
    const OverdeterminedReport o = check_overdetermined(s.model, d, 0.5, q);
    CHECK(o.max_deviation <= 1e-6);
    CHECK(o.identity.rel_residual <= 1e-6);
    CHECK(o.value_c.rel_residual <= 1e-6);
    const CValue c = compute_c(d, s.model, q);
    CHECK(c.direct == doctest::Approx(0.5).epsilon(1e-6));
  }
  TEST_CASE("thinned outer quadrature makes the c estimates disagree") {
    const Domain d(generic());
    const Solution s = solve_dirichlet(generic());
    Quadratures q = make_quadratures(d, 256, 64);
    // Keep every 32nd outer node with 32x the weight: 8 nodes cannot resolve Gamma.
    BoundaryQuadrature thin;
    thin.component = kOuter;
    for (std::size_t i = 0; i < q.boundary.gamma.size(); i += 32) {
      thin.nodes.push_back(q.boundary.gamma.nodes[i]);
      thin.normals.push_back(q.boundary.gamma.normals[i]);
      thin.weights.push_back(32.0 * q.boundary.gamma.weights[i]);
      thin.params.push_back(q.boundary.gamma.params[i]);
    }
    q.boundary.gamma = thin;
    const CValue c = compute_c(d, s.model, q);
    CHECK(c.inconsistent);
    CHECK(c.mismatch > 1e-5);
  }
  TEST_CASE("mismatched quadrature is rejected") {
    const Domain d(generic());
    const Quadratures q = make_quadratures(Domain(disk()), 128, 16);
    CHECK_THROWS_AS(check_pohozaev(radial_reference(1.0, 2).model(), d, q), InvalidInput);
  }
}
