#include <doctest.h>

#include "torsionlab/errors.hpp"
#include "torsionlab/geometry.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/shapeflow.hpp"
#include "torsionlab/solver.hpp"
#include "torsionlab/stability.hpp"

#include <cmath>
#include <random>

using namespace torsionlab;
using namespace torsionlab::geometry;
using namespace torsionlab::shapeflow;

namespace {

DomainSpec disk(double R = 1.0) { return DomainSpec{R, {}, {}}; }

DomainSpec ellipse_like() { return DomainSpec{1.0, {FourierMode{2, 0.05, 0.0}}, {}}; }

DomainSpec three_lobe() { return DomainSpec{1.0, {FourierMode{3, 0.05, 0.0}, FourierMode{1, 0.0, 0.02}}, {}}; }

RadialField random_field(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RadialField f;
  f.dilation = u(rng);
  for (int k = 1; k <= 5; ++k) f.modes.push_back(FourierMode{k, u(rng) / k, u(rng) / k});
  return f;
}

double central_difference(const DomainSpec& s, const RadialField& v, double t) {
  return (energy(displace(s, v, t)) - energy(displace(s, v, -t))) / (2.0 * t);
}

}  // namespace

TEST_SUITE("shapeflow.energy") {
  TEST_CASE("disk energies follow pi R^4 / 16") {
    // Oracle: (1/2) int_{B_R} |x/2|^2 = pi R^4 / 16.
    CHECK(energy(disk(1.0)) == doctest::Approx(kPi / 16.0).epsilon(1e-10));
    CHECK(energy(disk(2.0)) == doctest::Approx(kPi).epsilon(1e-10));
  }
  TEST_CASE("area-normalized two-lobe energy is self-convergent") {
    DomainSpec s = ellipse_like();
    s.outer_radius *= std::sqrt(kPi / Domain(s).outer_area());
    Discretization coarse;
    coarse.n_theta = 128;
    coarse.n_r = 32;
    Discretization fine;
    fine.n_theta = 1024;
    fine.n_r = 256;
    CHECK(std::abs(energy(s, coarse) - energy(s, fine)) <= 1e-5);
  }
  TEST_CASE("holes with nonzero data are rejected") {
    DomainSpec s = disk();
    s.holes.push_back(Hole{Vec2(0.3, 0.0), 0.1, -0.1});
    CHECK_THROWS_AS(energy(s), InvalidInput);
  }
}

TEST_SUITE("shapeflow.fields") {
  TEST_CASE("displacement recombines with the Fourier form") {
    const DomainSpec s = ellipse_like();
    RadialField v;
    v.dilation = 0.2;
    v.modes = {FourierMode{2, 0.5, 0.0}, FourierMode{4, 0.0, 0.3}};
    const Domain a(s);
    const Domain b(displace(s, v, 0.1));
    for (double th : {0.0, 0.7, 2.1, 4.0}) {
      const double w = 0.2 + 0.5 * std::cos(2 * th) + 0.3 * std::sin(4 * th);
      CHECK(b.radius(th) == doctest::Approx(a.radius(th) + 0.1 * w).epsilon(1e-14));
    }
  }
  TEST_CASE("projection removes the first-order area change") {
    std::mt19937_64 rng(7);
    const DomainSpec s = three_lobe();
    for (int i = 0; i < 3; ++i) {
      const RadialField v = random_field(rng);
      double mu = 0.0;
      const RadialField p = project_volume(s, v, &mu);
      CHECK(std::abs(volume_flux(s, p)) <= 1e-13);
      // Oracle: the flux of r is int r^2 dtheta, so mu = flux / int r^2.
      const double a = Domain(s).outer_area();
      CHECK(mu == doctest::Approx(volume_flux(s, v) / (2.0 * a)).epsilon(1e-12));
      // Oracle: |{r + t w}| = |{r}| + t int r w + (t^2/2) int w^2, and the middle term vanishes.
      const double t = 1e-2;
      double w2 = 0.0;
      const int n = 4096;
      for (int j = 0; j < n; ++j) {
        const double th = kTwoPi * j / n;
        double w = p.dilation;
        for (const auto& m : p.modes) w += m.cos_amp * std::cos(m.k * th) + m.sin_amp * std::sin(m.k * th);
        w2 += w * w * kTwoPi / n;
      }
      CHECK(Domain(displace(s, p, t)).outer_area() == doctest::Approx(a + 0.5 * t * t * w2).epsilon(1e-13));
    }
  }
}

TEST_SUITE("shapeflow.gradient") {
  TEST_CASE("shape gradient matches central differences on random fields") {
    std::mt19937_64 rng(2024);
    for (const DomainSpec& s : {ellipse_like(), three_lobe()}) {
      for (int i = 0; i < 5; ++i) {
        const RadialField v = project_volume(s, random_field(rng));
        const double g = shape_gradient(s, v).value;
        const double fd = central_difference(s, v, 1e-4);
        CAPTURE(i);
        CHECK(std::abs(g - fd) / (std::abs(fd) + 1e-12) <= 1e-3);
      }
    }
  }
  TEST_CASE("cos 2 theta on the two-lobe domain matches to 1e-4") {
    const DomainSpec s = ellipse_like();
    RadialField v;
    v.modes = {FourierMode{2, 1.0, 0.0}};
    const ShapeGradient g = shape_gradient(s, v);
    const double fd = central_difference(s, project_volume(s, v), 1e-4);
    CHECK(std::abs(g.value - fd) / std::abs(fd) <= 1e-4);
    // cos 2 theta carries flux against r = 1 + 0.05 cos 2 theta.
    CHECK(g.removed != 0.0);
  }
  TEST_CASE("hole with zero data: Hadamard formula still matches differences") {
    DomainSpec s = ellipse_like();
    s.holes.push_back(Hole{Vec2(0.3, 0.1), 0.15, 0.0});
    std::mt19937_64 rng(5);
    const RadialField v = project_volume(s, random_field(rng));
    const double fd = central_difference(s, v, 1e-4);
    CHECK(std::abs(shape_gradient(s, v).value - fd) / std::abs(fd) <= 1e-3);
  }
  TEST_CASE("disk is stationary for every volume-preserving field") {
    for (double R : {1.0, 2.0}) {
      const ShapeGradient g = shape_gradient(disk(R), RadialField{0.3, {FourierMode{1, 1.0, -0.5}}}, {}, 8);
      CHECK(std::abs(g.value) <= 1e-9);
      CHECK(g.removed == doctest::Approx(0.3).epsilon(1e-12));
      for (double b : g.basis) CHECK(std::abs(b) <= 1e-9);
    }
  }
  TEST_CASE("odd field on an x-symmetric domain has zero gradient") {
    const DomainSpec s{1.0, {FourierMode{2, 0.04, 0.0}, FourierMode{4, -0.01, 0.0}}, {}};
    RadialField v;
    v.modes = {FourierMode{3, 0.0, 1.0}};
    const ShapeGradient g = shape_gradient(s, v);
    CHECK(std::abs(g.value) <= 1e-8);
    CHECK(std::abs(g.removed) <= 1e-14);
  }
}

TEST_SUITE("shapeflow.descent") {
  TEST_CASE("three-lobe start converges to the disk") {
    const DomainSpec start{1.0, {FourierMode{3, 0.05, 0.0}}, {}};
    const Trajectory t = descend(start);
    REQUIRE(t.converged);
    CHECK_FALSE(t.stalled);
    CHECK(t.states.size() <= 201);
    const ShapeState& last = t.states.back();
    CHECK(last.std_ratio() <= 1e-3);
    CHECK(last.rho_gap <= 5e-3);
    for (std::size_t i = 1; i < t.states.size(); ++i) {
      CHECK(t.states[i].energy >= t.states[i - 1].energy - 1e-9 * t.states[i - 1].energy);
      CHECK(std::abs(t.states[i].area_drift) <= 1e-5);
    }
    // The terminal shape is numerically overdetermined: u_nu ~ c and Gamma ~ a circle about z.
    const Domain d(last.spec);
    const solver::Solution s = solver::solve_dirichlet(last.spec);
    const identities::Quadratures q = identities::make_quadratures(d, 256, 64);
    const double c = identities::compute_c(d, s.model, q).direct;
    double dev = 0.0;
    for (double un : last.u_nu) dev = std::max(dev, std::abs(un - c));
    CHECK(dev <= 2e-3 * c);
    const Vec2 z = stability::compute_z(d, s.model, q);
    CHECK(stability::pseudo_distance(q.boundary.gamma, z, c) <= 1e-4);
  }
  TEST_CASE("disk start stops at iteration 0") {
    const Trajectory t = descend(disk());
    CHECK(t.converged);
    CHECK(t.states.size() == 1);
  }
  TEST_CASE("two-mode start: spread of u_nu never increases") {
    const DomainSpec start{1.0, {FourierMode{2, 0.03, 0.0}, FourierMode{3, 0.03, 0.0}}, {}};
    const Trajectory t = descend(start);
    CHECK(t.converged);
    for (std::size_t i = 1; i < t.states.size(); ++i)
      CHECK(t.states[i].std_ratio() <= t.states[i - 1].std_ratio());
  }
  TEST_CASE("large initial perturbations are rejected") {
    CHECK_THROWS_AS(descend(DomainSpec{1.0, {FourierMode{2, 0.08, 0.05}}, {}}), InvalidInput);
  }
}
