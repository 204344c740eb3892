#include "torsionlab/shapeflow.hpp"

#include "torsionlab/errors.hpp"
#include "torsionlab/rules.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace torsionlab::shapeflow {

using geometry::Domain;
using geometry::DomainSpec;
using geometry::FourierMode;

namespace {

void require_passive_holes(const DomainSpec& spec) {
  for (std::size_t i = 0; i < spec.holes.size(); ++i) {
    const auto& g = spec.holes[i].g;
    if (!g || *g != 0.0)
      throw InvalidInput("shapeflow: holes[" + std::to_string(i) +
                         "].g must be 0 (the energy derivative gains hole terms otherwise)");
  }
}

double field_value(const RadialField& w, double R, double theta) {
  double s = w.dilation;
  for (const auto& m : w.modes) s += m.cos_amp * std::cos(m.k * theta) + m.sin_amp * std::sin(m.k * theta);
  return R * s;
}

// Trapezoid integral over theta of f(theta) on a uniform periodic grid.
template <class F>
double periodic_integral(int n, F&& f) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) v[j] = f(kTwoPi * j / n);
  return pairwise_sum(v) * kTwoPi / n;
}

struct BoundaryFlux {
  std::vector<double> theta;
  std::vector<double> u_nu;
  std::vector<double> weights;  // dS
  std::vector<double> radius;
  std::vector<double> speed;    // |x'(theta)|
  double mean = 0.0;            // dS-weighted mean of u_nu
  double std = 0.0;
  double mean_sq = 0.0;         // dS-weighted mean of u_nu^2
};

BoundaryFlux boundary_flux(const Domain& domain, const solver::FieldModel& model, int n_theta) {
  const geometry::BoundarySet b = geometry::build_boundary_quadrature(domain, n_theta);
  const auto& g = b.gamma;
  BoundaryFlux out;
  const std::size_t n = g.size();
  out.theta = g.params;
  out.weights = g.weights;
  out.u_nu.resize(n);
  out.radius.resize(n);
  out.speed.resize(n);
  std::vector<double> m1(n), m2(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.u_nu[j] = model.evaluate(g.nodes[j]).grad.dot(g.normals[j]);
    out.radius[j] = domain.radius(g.params[j]);
    out.speed[j] = domain.tangent(g.params[j]).norm();
    m1[j] = g.weights[j] * out.u_nu[j];
    m2[j] = g.weights[j] * out.u_nu[j] * out.u_nu[j];
  }
  const double len = pairwise_sum(g.weights);
  out.mean = pairwise_sum(m1) / len;
  out.mean_sq = pairwise_sum(m2) / len;
  out.std = std::sqrt(std::max(0.0, out.mean_sq - out.mean * out.mean));
  return out;
}

struct Evaluated {
  double energy = 0.0;
  BoundaryFlux flux;
};

Evaluated evaluate(const DomainSpec& spec, const Discretization& disc) {
  const Domain domain(spec);
  const solver::Solution s = solver::solve_dirichlet(spec, disc.solver);
  const geometry::AreaQuadrature q = geometry::build_area_quadrature(domain, disc.n_r, disc.n_theta);
  std::vector<double> terms(q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    terms[i] = q.weights[i] * s.model.evaluate(q.nodes[i]).grad.squaredNorm();
  Evaluated e;
  e.energy = 0.5 * pairwise_sum(terms);
  e.flux = boundary_flux(domain, s.model, disc.n_theta);
  return e;
}

double rho_gap(const Domain& domain) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int j = 0; j < 4096; ++j) {
    const double r = domain.radius(kTwoPi * j / 4096);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi - lo;
}

// Fourier coefficients (in units of R) of samples w_j on the uniform grid,
// modes 0..n_modes.
RadialField fourier_project(const std::vector<double>& theta, const std::vector<double>& w, double R,
                            int n_modes) {
  const std::size_t n = w.size();
  RadialField f;
  std::vector<double> c(n), s(n);
  for (std::size_t j = 0; j < n; ++j) c[j] = w[j];
  f.dilation = pairwise_sum(c) / static_cast<double>(n) / R;
  for (int k = 1; k <= n_modes; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      c[j] = w[j] * std::cos(k * theta[j]);
      s[j] = w[j] * std::sin(k * theta[j]);
    }
    f.modes.push_back(FourierMode{k, 2.0 * pairwise_sum(c) / static_cast<double>(n) / R,
                                  2.0 * pairwise_sum(s) / static_cast<double>(n) / R});
  }
  return f;
}

DomainSpec rescale_to_area(DomainSpec spec, double target_area) {
  const double a = Domain(spec).outer_area();
  spec.outer_radius *= std::sqrt(target_area / a);
  return spec;
}

ShapeState make_state(int iteration, const DomainSpec& spec, const Evaluated& e, double area0) {
  const Domain d(spec);
  ShapeState st;
  st.iteration = iteration;
  st.spec = spec;
  st.energy = e.energy;
  st.u_nu = e.flux.u_nu;
  st.mean_u_nu = e.flux.mean;
  st.std_u_nu = e.flux.std;
  st.rho_gap = rho_gap(d);
  st.area_drift = (d.outer_area() - area0) / area0;
  return st;
}

}  // namespace

double energy(const DomainSpec& spec, const Discretization& disc) {
  require_passive_holes(spec);
  return evaluate(spec, disc).energy;
}

DomainSpec displace(const DomainSpec& spec, const RadialField& w, double t) {
  const double scale = 1.0 + t * w.dilation;
  if (!(scale > 0.0)) throw InvalidInput("shapeflow.displace: dilation collapses Gamma");
  std::map<int, std::pair<double, double>> modes;
  for (const auto& m : spec.modes) modes[m.k] = {m.cos_amp, m.sin_amp};
  for (const auto& m : w.modes) {
    auto& e = modes[m.k];
    e.first += t * m.cos_amp;
    e.second += t * m.sin_amp;
  }
  DomainSpec out = spec;
  out.outer_radius = spec.outer_radius * scale;
  out.modes.clear();
  for (const auto& [k, a] : modes) {
    if (a.first == 0.0 && a.second == 0.0) continue;
    out.modes.push_back(FourierMode{k, a.first / scale, a.second / scale});
  }
  return out;
}

double volume_flux(const DomainSpec& spec, const RadialField& w) {
  const Domain d(spec);
  const double R = spec.outer_radius;
  return periodic_integral(1024, [&](double th) { return d.radius(th) * field_value(w, R, th); });
}

RadialField project_volume(const DomainSpec& spec, const RadialField& w, double* removed) {
  // w - mu r with mu = int w r / int r^2; r itself is R (1 + sum a_k cos + b_k sin).
  const Domain d(spec);
  const double r2 = periodic_integral(1024, [&](double th) { return d.radius(th) * d.radius(th); });
  const double mu = volume_flux(spec, w) / r2;
  std::map<int, std::pair<double, double>> modes;
  for (const auto& m : w.modes) modes[m.k] = {m.cos_amp, m.sin_amp};
  for (const auto& m : spec.modes) {
    auto& e = modes[m.k];
    e.first -= mu * m.cos_amp;
    e.second -= mu * m.sin_amp;
  }
  RadialField out;
  out.dilation = w.dilation - mu;
  for (const auto& [k, a] : modes) out.modes.push_back(FourierMode{k, a.first, a.second});
  if (removed) *removed = mu;
  return out;
}

ShapeGradient shape_gradient(const DomainSpec& spec, const RadialField& w, const Discretization& disc,
                             int n_modes) {
  require_passive_holes(spec);
  if (n_modes < 0) throw InvalidInput("shapeflow.shape_gradient: n_modes must be >= 0");
  const Domain d(spec);
  const solver::Solution s = solver::solve_dirichlet(spec, disc.solver);
  const BoundaryFlux f = boundary_flux(d, s.model, disc.n_theta);
  const double R = spec.outer_radius;
  const double dth = kTwoPi / static_cast<double>(f.theta.size());
  // <nu, v> dS = w <nu, e_r> |x'| dtheta = w r dtheta.
  auto integrate = [&](const RadialField& field) {
    std::vector<double> t(f.theta.size());
    for (std::size_t j = 0; j < t.size(); ++j)
      t[j] = 0.5 * f.u_nu[j] * f.u_nu[j] * field_value(field, R, f.theta[j]) * f.radius[j] * dth;
    return pairwise_sum(t);
  };
  ShapeGradient g;
  g.flux = volume_flux(spec, w);
  g.value = integrate(project_volume(spec, w, &g.removed));
  for (int k = 1; k <= n_modes; ++k) {
    for (int part = 0; part < 2; ++part) {
      RadialField b;
      b.modes.push_back(FourierMode{k, part == 0 ? 1.0 : 0.0, part == 1 ? 1.0 : 0.0});
      g.basis.push_back(integrate(project_volume(spec, b)));
    }
  }
  return g;
}

Trajectory descend(const DomainSpec& initial, const DescentOptions& options) {
  require_passive_holes(initial);
  double amp = 0.0;
  for (const auto& m : initial.modes) amp += std::abs(m.cos_amp) + std::abs(m.sin_amp);
  if (amp > 0.1)
    throw InvalidInput("shapeflow.descend: sum of |a_k| + |b_k| must be <= 0.1");
  if (options.max_iters < 0 || options.max_halvings < 0 || options.n_modes < 1)
    throw InvalidInput("shapeflow.descend: max_iters, max_halvings >= 0 and n_modes >= 1 required");

  Trajectory traj;
  const double area0 = Domain(initial).outer_area();
  Evaluated cur;
  try {
    cur = evaluate(initial, options.disc);
  } catch (const NumericalFailure& e) {
    traj.solver_failed = true;
    traj.message = std::string("initial solve failed: ") + e.what();
    return traj;
  }
  DomainSpec spec = initial;
  traj.states.push_back(make_state(0, spec, cur, area0));

  for (int it = 1;; ++it) {
    const ShapeState& last = traj.states.back();
    if (last.std_ratio() <= options.tol_std) {
      traj.converged = true;
      break;
    }
    if (it > options.max_iters) {
      traj.message = "max_iters reached";
      break;
    }
    // Normal velocity V = u_nu^2 - avg raises I (I' = (1/2) int u_nu^2 V dS >= 0);
    // converted to the radial displacement w = V |x'| / r and band-limited.
    const BoundaryFlux& f = cur.flux;
    std::vector<double> w(f.u_nu.size());
    double vmax = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double v = f.u_nu[j] * f.u_nu[j] - f.mean_sq;
      vmax = std::max(vmax, std::abs(v));
      w[j] = v * f.speed[j] / f.radius[j];
    }
    const RadialField dir = fourier_project(f.theta, w, spec.outer_radius, options.n_modes);
    double step = 0.5 / vmax;
    bool accepted = false;
    int halvings = 0;
    for (; halvings <= options.max_halvings; ++halvings, step *= 0.5) {
      DomainSpec trial;
      try {
        trial = rescale_to_area(displace(spec, dir, step), area0);
        geometry::validate(trial);
      } catch (const InvalidInput&) {
        continue;
      }
      Evaluated next;
      try {
        next = evaluate(trial, options.disc);
      } catch (const NumericalFailure& e) {
        traj.solver_failed = true;
        traj.message = "solver failed at iteration " + std::to_string(it) + ": " + e.what();
        return traj;
      }
      const bool energy_ok = next.energy >= cur.energy - options.energy_tolerance * std::abs(cur.energy);
      const bool spread_ok = next.flux.std / next.flux.mean <= cur.flux.std / cur.flux.mean;
      if (energy_ok && spread_ok) {
        spec = trial;
        cur = std::move(next);
        ShapeState st = make_state(it, spec, cur, area0);
        st.step = step;
        st.halvings = halvings;
        traj.states.push_back(std::move(st));
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      traj.stalled = true;
      std::ostringstream os;
      os << "stalled at iteration " << it << " after " << options.max_halvings << " halvings";
      traj.message = os.str();
      break;
    }
  }
  if (traj.converged) traj.message = "converged";
  return traj;
}

}  // namespace torsionlab::shapeflow
