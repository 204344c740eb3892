#include "torsionlab/geometry.hpp"

#include "torsionlab/errors.hpp"
#include "torsionlab/rules.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace torsionlab::geometry {

namespace {

constexpr int kProjectionSamples = 720;
constexpr int kPositivityGrid = 4096;

struct RadialSeries {
  double R;
  const std::vector<FourierMode>* modes;

  // order 0, 1, 2 derivative of r(theta)
  double eval(double theta, int order) const {
    double s = order == 0 ? 1.0 : 0.0;
    for (const auto& m : *modes) {
      const double c = std::cos(m.k * theta);
      const double sn = std::sin(m.k * theta);
      const double k = m.k;
      switch (order) {
        case 0: s += m.cos_amp * c + m.sin_amp * sn; break;
        case 1: s += k * (-m.cos_amp * sn + m.sin_amp * c); break;
        default: s += -k * k * (m.cos_amp * c + m.sin_amp * sn); break;
      }
    }
    return R * s;
  }
};

Vec2 polar(double r, double theta) { return {r * std::cos(theta), r * std::sin(theta)}; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

double BoundaryQuadrature::length() const { return pairwise_sum(weights); }

double AreaQuadrature::area() const { return pairwise_sum(weights); }

namespace {

void validate_outer(const DomainSpec& spec) {
  if (!(spec.outer_radius > 0.0) || !std::isfinite(spec.outer_radius))
    throw InvalidInput("domain.outer_radius must be positive and finite");
  double c2 = 0.0;
  std::set<int> seen;
  for (const auto& m : spec.modes) {
    if (m.k < 1) throw InvalidInput("domain.fourier_modes: wavenumber k must be >= 1");
    if (!seen.insert(m.k).second)
      throw InvalidInput("domain.fourier_modes: wavenumber " + std::to_string(m.k) + " repeated");
    if (!std::isfinite(m.cos_amp) || !std::isfinite(m.sin_amp))
      throw InvalidInput("domain.fourier_modes: amplitudes must be finite");
    c2 += static_cast<double>(m.k) * m.k * std::hypot(m.cos_amp, m.sin_amp);
  }
  if (c2 >= 1.0)
    throw InvalidInput("domain.fourier_modes: sum k^2 |eps_k| = " + fmt(c2) +
                       " must be < 1 (Gamma must stay a C^2 graph over the circle)");
  const RadialSeries r{spec.outer_radius, &spec.modes};
  for (int j = 0; j < kPositivityGrid; ++j) {
    if (!(r.eval(kTwoPi * j / kPositivityGrid, 0) > 0.0))
      throw InvalidInput("domain: r(theta) must be positive");
  }
}

}  // namespace

void validate(const DomainSpec& spec) {
  validate_outer(spec);

  // Hole checks need projections onto Gamma; build a hole-free domain for that.
  DomainSpec outer_only = spec;
  outer_only.holes.clear();
  const Domain outer(outer_only);
  const double tol = 1e-9 * spec.outer_radius;
  for (std::size_t i = 0; i < spec.holes.size(); ++i) {
    const auto& h = spec.holes[i];
    const std::string tag = "holes[" + std::to_string(i) + "]";
    if (!(h.radius > 0.0) || !std::isfinite(h.radius))
      throw InvalidInput(tag + ".radius must be positive");
    if (!h.center.allFinite()) throw InvalidInput(tag + ".center must be finite");
    if (h.g && !(*h.g <= 0.0))
      throw InvalidInput(tag + ".g = " + fmt(*h.g) + " violates the hypothesis u <= 0 on d omega");
    if (!outer.inside_outer(h.center))
      throw InvalidInput(tag + " center lies outside Gamma");
    const double clearance = outer.distance_to_outer(h.center) - h.radius;
    if (!(clearance > tol))
      throw InvalidInput(tag + " must lie strictly inside Gamma with positive clearance (clearance " +
                         fmt(clearance) + ")");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = spec.holes[j];
      const double gap = (h.center - o.center).norm() - h.radius - o.radius;
      if (!(gap > tol))
        throw InvalidInput(tag + " and holes[" + std::to_string(j) +
                           "] must be disjoint with positive clearance (gap " + fmt(gap) + ")");
    }
  }
}

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(DomainSpec spec) : spec_(std::move(spec)) {
  // Hole checks construct a hole-free Domain, so only recurse when needed.
  if (spec_.holes.empty()) {
    validate_outer(spec_);
  } else {
    validate(spec_);
  }
  sample_theta_.resize(kProjectionSamples);
  samples_.resize(kProjectionSamples);
  for (int j = 0; j < kProjectionSamples; ++j) {
    sample_theta_[j] = kTwoPi * j / kProjectionSamples;
    samples_[j] = point(sample_theta_[j]);
  }
  max_curvature_ = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < kPositivityGrid; ++j) {
    const double th = kTwoPi * j / kPositivityGrid;
    max_curvature_ = std::max(max_curvature_, curvature(th));
  }
}

double Domain::radius(double theta) const {
  return RadialSeries{spec_.outer_radius, &spec_.modes}.eval(theta, 0);
}
double Domain::radius_d1(double theta) const {
  return RadialSeries{spec_.outer_radius, &spec_.modes}.eval(theta, 1);
}
double Domain::radius_d2(double theta) const {
  return RadialSeries{spec_.outer_radius, &spec_.modes}.eval(theta, 2);
}

Vec2 Domain::point(double theta) const { return polar(radius(theta), theta); }

Vec2 Domain::tangent(double theta) const {
  const Vec2 er(std::cos(theta), std::sin(theta));
  const Vec2 et(-std::sin(theta), std::cos(theta));
  return radius_d1(theta) * er + radius(theta) * et;
}

Vec2 Domain::tangent_d1(double theta) const {
  const Vec2 er(std::cos(theta), std::sin(theta));
  const Vec2 et(-std::sin(theta), std::cos(theta));
  return (radius_d2(theta) - radius(theta)) * er + 2.0 * radius_d1(theta) * et;
}

Vec2 Domain::normal(double theta) const {
  const Vec2 t = tangent(theta);
  return Vec2(t.y(), -t.x()) / t.norm();
}

double Domain::curvature(double theta) const {
  const Vec2 t = tangent(theta);
  const Vec2 a = tangent_d1(theta);
  return (t.x() * a.y() - t.y() * a.x()) / std::pow(t.norm(), 3);
}

bool Domain::inside_outer(const Vec2& x) const {
  const double rho = x.norm();
  if (rho == 0.0) return true;
  return rho < radius(std::atan2(x.y(), x.x()));
}

bool Domain::in_region(const Vec2& x) const {
  if (!inside_outer(x)) return false;
  for (const auto& h : spec_.holes) {
    if ((x - h.center).norm() <= h.radius) return false;
  }
  return true;
}

std::pair<double, double> Domain::project_to_outer(const Vec2& x) const {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < samples_.size(); ++j) {
    const double d2 = (samples_[j] - x).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  // Damped Newton on f(theta) = |p(theta) - x|^2 / 2.
  const double max_step = kTwoPi / kProjectionSamples;
  double th = sample_theta_[best];
  double f = 0.5 * best_d2;
  for (int it = 0; it < 60; ++it) {
    const Vec2 d = point(th) - x;
    const Vec2 t = tangent(th);
    const double g = d.dot(t);
    const double h = t.squaredNorm() + d.dot(tangent_d1(th));
    double step = h > 0.0 ? -g / h : (g > 0.0 ? -max_step : max_step);
    step = std::clamp(step, -max_step, max_step);
    double trial_f = 0.0;
    int halvings = 0;
    for (; halvings < 40; ++halvings) {
      trial_f = 0.5 * (point(th + step) - x).squaredNorm();
      if (trial_f <= f) break;
      step *= 0.5;
    }
    if (halvings == 40) break;
    th += step;
    f = trial_f;
    if (std::abs(step) < 1e-15) break;
  }
  th = std::remainder(th, kTwoPi);
  if (th < 0.0) th += kTwoPi;
  return {std::sqrt(2.0 * f), th};
}

double Domain::distance_to_boundary(const Vec2& x) const {
  double d = distance_to_outer(x);
  for (const auto& h : spec_.holes) d = std::min(d, std::abs((x - h.center).norm() - h.radius));
  return d;
}

double Domain::outer_area() const {
  double s = 0.0;
  for (const auto& m : spec_.modes) s += m.cos_amp * m.cos_amp + m.sin_amp * m.sin_amp;
  return kPi * spec_.outer_radius * spec_.outer_radius * (1.0 + 0.5 * s);
}

double Domain::holes_area() const {
  double s = 0.0;
  for (const auto& h : spec_.holes) s += kPi * h.radius * h.radius;
  return s;
}

double Domain::holes_perimeter() const {
  double s = 0.0;
  for (const auto& h : spec_.holes) s += kTwoPi * h.radius;
  return s;
}

// ---------------------------------------------------------------------------
// Quadratures

BoundarySet build_boundary_quadrature(const Domain& domain, int n_theta) {
  if (n_theta < 64 || n_theta % 2 != 0)
    throw InvalidInput("build_boundary_quadrature: n_theta must be even and >= 64");
  BoundarySet set;
  auto& g = set.gamma;
  g.component = kOuter;
  const double dth = kTwoPi / n_theta;
  for (int j = 0; j < n_theta; ++j) {
    const double th = dth * j;
    g.nodes.push_back(domain.point(th));
    g.normals.push_back(domain.normal(th));
    g.weights.push_back(dth * domain.tangent(th).norm());
    g.params.push_back(th);
  }
  for (std::size_t i = 0; i < domain.holes().size(); ++i) {
    const auto& h = domain.holes()[i];
    BoundaryQuadrature q;
    q.component = static_cast<int>(i);
    for (int j = 0; j < n_theta; ++j) {
      const double ph = dth * j;
      const Vec2 e(std::cos(ph), std::sin(ph));
      q.nodes.push_back(h.center + h.radius * e);
      q.normals.push_back(-e);
      q.weights.push_back(dth * h.radius);
      q.params.push_back(ph);
    }
    set.holes.push_back(std::move(q));
  }
  return set;
}

namespace {

// Width of the smooth transition band around each hole.
std::vector<double> bump_widths(const Domain& domain) {
  const auto& holes = domain.holes();
  std::vector<double> widths(holes.size());
  for (std::size_t i = 0; i < holes.size(); ++i) {
    double w = domain.distance_to_outer(holes[i].center) - holes[i].radius;
    for (std::size_t j = 0; j < holes.size(); ++j) {
      if (j == i) continue;
      const double gap =
          (holes[i].center - holes[j].center).norm() - holes[i].radius - holes[j].radius;
      w = std::min(w, 0.5 * gap);
    }
    widths[i] = 0.9 * w;
  }
  return widths;
}

}  // namespace

AreaQuadrature build_area_quadrature(const Domain& domain, int n_r, int n_theta) {
  if (n_r < 4) throw InvalidInput("build_area_quadrature: n_r must be >= 4");
  if (n_theta < 16) throw InvalidInput("build_area_quadrature: n_theta must be >= 16");
  const auto& holes = domain.holes();
  const std::vector<double> widths = bump_widths(domain);
  auto hole_bump = [&](std::size_t i, const Vec2& x) {
    const double t = (x - holes[i].center).norm() - holes[i].radius;
    return smooth_step(t / widths[i]);
  };

  AreaQuadrature q;
  const GaussRule rs = gauss_legendre(n_r, 0.0, 1.0);
  const double dth = kTwoPi / n_theta;
  for (int j = 0; j < n_theta; ++j) {
    const double th = dth * j;
    const double r = domain.radius(th);
    const Vec2 e(std::cos(th), std::sin(th));
    for (int m = 0; m < n_r; ++m) {
      const double s = rs.nodes[m];
      const Vec2 x = s * r * e;
      double factor = 1.0;
      for (std::size_t i = 0; i < holes.size(); ++i) factor -= hole_bump(i, x);
      if (factor <= 0.0) continue;
      q.nodes.push_back(x);
      q.weights.push_back(dth * rs.weights[m] * s * r * r * factor);
    }
  }

  const int n_t = std::max(16, n_r / 2);
  const int n_phi = std::max(64, n_theta / 2);
  const double dph = kTwoPi / n_phi;
  for (std::size_t i = 0; i < holes.size(); ++i) {
    const GaussRule ts = gauss_legendre(n_t, holes[i].radius, holes[i].radius + widths[i]);
    for (int j = 0; j < n_phi; ++j) {
      const double ph = dph * j;
      const Vec2 e(std::cos(ph), std::sin(ph));
      for (int m = 0; m < n_t; ++m) {
        const double t = ts.nodes[m];
        const Vec2 x = holes[i].center + t * e;
        const double bump = hole_bump(i, x);
        if (bump <= 0.0) continue;
        q.nodes.push_back(x);
        q.weights.push_back(dph * ts.weights[m] * t * bump);
      }
    }
  }

  const double exact = domain.region_area();
  const double rel = std::abs(q.area() - exact) / exact;
  if (rel > 1e-6)
    throw NumericalFailure("build_area_quadrature: area residual " + fmt(rel) +
                               " exceeds 1e-6; increase n_r / n_theta",
                           rel);
  return q;
}

// ---------------------------------------------------------------------------
// Pointwise geometry

double delta(const Domain& domain, const Vec2& x) {
  if (!domain.in_region(x)) throw ExteriorPoint("delta: exterior point");
  return domain.distance_to_boundary(x);
}

double interior_sphere_radius(const Domain& domain, int n_theta) {
  const BoundarySet bq = build_boundary_quadrature(domain, n_theta);
  const double diam = diameter(domain);
  const double kappa = domain.max_curvature();
  auto fits = [&](const Vec2& p, const Vec2& inward, double r) {
    const Vec2 c = p + r * inward;
    if (!domain.in_region(c)) return false;
    return domain.distance_to_boundary(c) >= r * (1.0 - 1e-10);
  };
  auto largest = [&](const Vec2& p, const Vec2& inward, double cap) {
    if (fits(p, inward, cap)) return cap;
    double lo = 0.0, hi = cap;
    while (hi - lo > 1e-9) {
      const double mid = 0.5 * (lo + hi);
      (fits(p, inward, mid) ? lo : hi) = mid;
    }
    return lo;
  };
  double r_i = std::numeric_limits<double>::infinity();
  const double gamma_cap = kappa > 0.0 ? std::min(0.5 * diam, 1.0 / kappa) : 0.5 * diam;
  for (std::size_t j = 0; j < bq.gamma.size(); ++j) {
    r_i = std::min(r_i, largest(bq.gamma.nodes[j], -bq.gamma.normals[j], std::min(gamma_cap, r_i)));
  }
  for (const auto& hole : bq.holes) {
    for (std::size_t j = 0; j < hole.size(); ++j) {
      r_i = std::min(r_i, largest(hole.nodes[j], -hole.normals[j], std::min(0.5 * diam, r_i)));
    }
  }
  if (!(r_i > 1e-6))
    throw NumericalFailure("interior_sphere_radius: no uniform interior sphere at resolution", r_i);
  return r_i;
}

double diameter(const Domain& domain) {
  auto polish = [&](double a, double b) {
    for (int it = 0; it < 50; ++it) {
      const Vec2 d = domain.point(a) - domain.point(b);
      const Vec2 ta = domain.tangent(a), tb = domain.tangent(b);
      Eigen::Vector2d g(2.0 * d.dot(ta), -2.0 * d.dot(tb));
      if (g.norm() < 1e-15) break;
      Eigen::Matrix2d H;
      H(0, 0) = 2.0 * (ta.squaredNorm() + d.dot(domain.tangent_d1(a)));
      H(1, 1) = 2.0 * (tb.squaredNorm() - d.dot(domain.tangent_d1(b)));
      H(0, 1) = H(1, 0) = -2.0 * ta.dot(tb);
      Eigen::Vector2d step;
      if (H.determinant() > 1e-14 && H(0, 0) < 0.0) {
        step = -H.inverse() * g;
      } else {
        step = 1e-3 * g / g.norm();
      }
      const double f0 = d.squaredNorm();
      double s = 1.0;
      bool improved = false;
      for (int k = 0; k < 30; ++k, s *= 0.5) {
        const double f1 = (domain.point(a + s * step(0)) - domain.point(b + s * step(1))).squaredNorm();
        if (f1 >= f0) {
          a += s * step(0);
          b += s * step(1);
          improved = true;
          break;
        }
      }
      if (!improved || step.norm() * s < 1e-14) break;
    }
    return (domain.point(a) - domain.point(b)).norm();
  };
  double previous = -1.0;
  for (int n = 256;; n *= 2) {
    std::vector<Vec2> p(n);
    for (int j = 0; j < n; ++j) p[j] = domain.point(kTwoPi * j / n);
    double best = -1.0;
    int ia = 0, ib = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double d2 = (p[i] - p[j]).squaredNorm();
        if (d2 > best) {
          best = d2;
          ia = i;
          ib = j;
        }
      }
    const double d = std::max(std::sqrt(best), polish(kTwoPi * ia / n, kTwoPi * ib / n));
    if (std::abs(d - previous) < 1e-9 || n >= 4096) return d;
    previous = d;
  }
}

RadiiAboutCenter rho_e_rho_i(const Domain& domain, const Vec2& z) {
  if (!domain.inside_outer(z)) throw ExteriorPoint("rho_e_rho_i: center outside domain");
  constexpr int n = 2048;
  auto f = [&](double th) { return (domain.point(th) - z).squaredNorm(); };
  int imax = 0, imin = 0;
  double fmax = -1.0, fmin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    const double v = f(kTwoPi * j / n);
    if (v > fmax) { fmax = v; imax = j; }
    if (v < fmin) { fmin = v; imin = j; }
  }
  // Newton on f' = 2 <p - z, p'> from each extreme sample.
  auto polish = [&](double th, double sign) {
    double best = f(th);
    for (int it = 0; it < 50; ++it) {
      const Vec2 d = domain.point(th) - z;
      const Vec2 t = domain.tangent(th);
      const double g = 2.0 * d.dot(t);
      const double h = 2.0 * (t.squaredNorm() + d.dot(domain.tangent_d1(th)));
      if (sign * h >= 0.0) break;  // wrong curvature; keep the sample
      double step = std::clamp(-g / h, -kTwoPi / n, kTwoPi / n);
      const double v = f(th + step);
      if (sign * (v - best) < 0.0) break;
      th += step;
      best = v;
      if (std::abs(step) < 1e-15) break;
    }
    return best;
  };
  RadiiAboutCenter out;
  out.rho_e = std::sqrt(std::max(fmax, polish(kTwoPi * imax / n, 1.0)));
  out.rho_i = std::sqrt(std::min(fmin, polish(kTwoPi * imin / n, -1.0)));
  return out;
}

double symmetric_difference_ratio(const Domain& domain, const Vec2& z, double radius) {
  if (!(radius > 0.0)) throw InvalidInput("symmetric_difference_ratio: radius must be positive");
  const double z2 = z.squaredNorm();
  // Along the ray at angle th from the origin, the disk occupies [b - sq, b + sq].
  auto chord = [&](double th, double& lo, double& hi) {
    const Vec2 e(std::cos(th), std::sin(th));
    const double b = e.dot(z);
    const double disc = b * b - z2 + radius * radius;
    if (disc <= 0.0) return disc;
    const double sq = std::sqrt(disc);
    lo = b - sq;
    hi = b + sq;
    return disc;
  };
  auto overlap = [&](double th) {
    double lo = 0.0, hi = 0.0;
    if (chord(th, lo, hi) <= 0.0) return 0.0;
    lo = std::max(0.0, lo);
    hi = std::min(domain.radius(th), hi);
    return hi > lo ? 0.5 * (hi * hi - lo * lo) : 0.0;
  };
  // The integrand has kinks where the circle crosses Gamma or the origin and
  // square-root points where rays become tangent to it; split there so each
  // piece is smooth for the adaptive rule.
  auto switches = [&](double th) {
    double lo = 0.0, hi = 0.0;
    const double disc = chord(th, lo, hi);
    if (disc <= 0.0) return std::array<double, 4>{disc, 1.0, 1.0, 1.0};
    const double r = domain.radius(th);
    return std::array<double, 4>{disc, r - hi, r - lo, lo};
  };
  constexpr int grid = 2048;
  std::vector<double> cuts;
  for (int s = 0; s <= 16; ++s) cuts.push_back(kTwoPi * s / 16);
  auto prev = switches(0.0);
  for (int j = 1; j <= grid; ++j) {
    const double th = kTwoPi * j / grid;
    const auto cur = switches(th);
    for (int k = 0; k < 4; ++k) {
      if ((prev[k] > 0.0) == (cur[k] > 0.0)) continue;
      double a = kTwoPi * (j - 1) / grid, b = th;
      const bool sa = prev[k] > 0.0;
      for (int it = 0; it < 60 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b);
        ((switches(m)[k] > 0.0) == sa ? a : b) = m;
      }
      cuts.push_back(0.5 * (a + b));
    }
    prev = cur;
  }
  std::sort(cuts.begin(), cuts.end());
  double inter = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    if (cuts[s + 1] - cuts[s] <= 0.0) continue;
    inter += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(overlap, cuts[s],
                                                                           cuts[s + 1], 10, 1e-13);
  }
  const double ball = kPi * radius * radius;
  return (domain.outer_area() + ball - 2.0 * inter) / ball;
}

TubularSets tubular_sets(const Domain& domain, double sigma, double r_i, int n_theta,
                         int n_normal) {
  if (!(sigma > 0.0)) throw InvalidInput("tubular_sets: sigma must be positive");
  if (sigma > r_i * (1.0 + 1e-12))
    throw InvalidInput("tubular_sets: sigma = " + fmt(sigma) + " exceeds r_i = " + fmt(r_i));
  TubularSets out;
  out.sigma = sigma;
  const GaussRule ts = gauss_legendre(n_normal, 0.0, sigma);
  const double dth = kTwoPi / n_theta;
  auto& inner = out.inner_curve;
  inner.component = kOuter;
  for (int j = 0; j < n_theta; ++j) {
    const double th = dth * j;
    const Vec2 p = domain.point(th);
    const Vec2 nu = domain.normal(th);
    const double speed = domain.tangent(th).norm();
    const double kappa = domain.curvature(th);
    for (int m = 0; m < n_normal; ++m) {
      const double t = ts.nodes[m];
      out.tube.nodes.push_back(p - t * nu);
      out.tube.weights.push_back(dth * ts.weights[m] * speed * (1.0 - t * kappa));
    }
    inner.nodes.push_back(p - sigma * nu);
    inner.normals.push_back(-nu);
    inner.weights.push_back(dth * speed * (1.0 - sigma * kappa));
    inner.params.push_back(th);
  }
  return out;
}

TubularSets tubular_sets(const Domain& domain, double sigma) {
  return tubular_sets(domain, sigma, interior_sphere_radius(domain));
}

double max_hole_diameter(const Domain& domain) {
  double d = 0.0;
  for (const auto& h : domain.holes()) d = std::max(d, 2.0 * h.radius);
  return d;
}

}  // namespace torsionlab::geometry
