#include "torsionlab/identities.hpp"

#include "torsionlab/errors.hpp"
#include "torsionlab/rules.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace torsionlab::identities {
namespace {

constexpr double kN = static_cast<double>(kDim);

using solver::FieldModel;
using solver::FieldValue;

/// Pointwise integrand of a boundary integral, given the field at the node,
/// the node and its outward (out of the region) unit normal.
using BoundaryIntegrand = std::function<double(const FieldValue&, const Vec2&, const Vec2&)>;

double integrate(const FieldModel& model, const geometry::BoundaryQuadrature& rule,
                 const BoundaryIntegrand& f) {
  std::vector<double> terms(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const FieldValue v = model.evaluate(rule.nodes[i]);
    terms[i] = rule.weights[i] * f(v, rule.nodes[i], rule.normals[i]);
  }
  return pairwise_sum(terms);
}

std::string hole_name(std::size_t i) { return "hole" + std::to_string(i); }

IdentityReport finish(std::string id, double lhs, std::vector<Term> breakdown) {
  IdentityReport r;
  r.id = std::move(id);
  r.lhs = lhs;
  std::vector<double> parts;
  parts.reserve(breakdown.size());
  for (const Term& t : breakdown) parts.push_back(t.value);
  r.rhs = pairwise_sum(parts);
  r.abs_residual = std::abs(r.lhs - r.rhs);
  r.rel_residual = r.abs_residual / (std::abs(r.lhs) + std::abs(r.rhs) + 1.0);
  r.breakdown = std::move(breakdown);
  return r;
}

void check_holes_match(const geometry::Domain& domain, const Quadratures& q) {
  if (q.boundary.holes.size() != domain.holes().size()) {
    throw InvalidInput("quadrature does not match the domain: " +
                       std::to_string(q.boundary.holes.size()) + " hole rules for " +
                       std::to_string(domain.holes().size()) + " holes");
  }
  if (q.area.size() == 0 || q.boundary.gamma.size() == 0) {
    throw InvalidInput("empty quadrature");
  }
}

/// int (-u) 2 {|Hess u|^2 - (Delta u)^2/N} over the area rule.
double fundamental_lhs(const FieldModel& model, const Quadratures& q) {
  std::vector<double> terms(q.area.size());
  for (std::size_t i = 0; i < q.area.size(); ++i) {
    const FieldValue v = model.evaluate(q.area.nodes[i]);
    const double tr = v.hess.trace();
    const double deficit = v.hess.squaredNorm() - tr * tr / kN;
    terms[i] = q.area.weights[i] * (-v.u) * 2.0 * deficit;
  }
  return pairwise_sum(terms);
}

/// Hole integrand of the fundamental identity: 2u(<x,nu>/N - u_nu).
double hole_u_term(const FieldValue& v, const Vec2& x, const Vec2& nu) {
  return 2.0 * v.u * (x.dot(nu) / kN - v.grad.dot(nu));
}

/// Hole integrand of the fundamental identity: the braced group.
double hole_brace_term(const FieldValue& v, const Vec2& x, const Vec2& nu) {
  const double un = v.grad.dot(nu);
  const double g2 = v.grad.squaredNorm();
  const double xn = x.dot(nu);
  return un * g2 - 2.0 * x.dot(v.grad) * un / kN + g2 * xn / kN + (2.0 / kN) * v.u * un -
         2.0 * (v.hess * v.grad).dot(nu) * v.u;
}

}  // namespace

Quadratures make_quadratures(const geometry::Domain& domain, int n_theta, int n_r) {
  return Quadratures{geometry::build_boundary_quadrature(domain, n_theta),
                     geometry::build_area_quadrature(domain, n_r, n_theta)};
}

double p_function(const FieldModel& model, const Vec2& x) {
  const FieldValue v = model.evaluate(x);
  return v.grad.squaredNorm() - (2.0 / kN) * v.u;
}

double cs_deficit(const FieldModel& model, const Vec2& x) {
  const FieldValue v = model.evaluate(x);
  const double tr = v.hess.trace();
  const double deficit = v.hess.squaredNorm() - tr * tr / kN;
  if (deficit < -1e-12) {
    throw NumericalFailure("Cauchy-Schwarz deficit is negative", deficit);
  }
  return deficit;
}

double harmonic_hessian_norm2(const FieldModel& model, const Vec2& x) {
  return model.harmonic_part(x).hess.squaredNorm();
}

IdentityReport check_pohozaev(const FieldModel& model, const geometry::Domain& domain,
                              const Quadratures& q) {
  check_holes_match(domain, q);
  std::vector<double> terms(q.area.size());
  for (std::size_t i = 0; i < q.area.size(); ++i) {
    terms[i] = q.area.weights[i] * model.evaluate(q.area.nodes[i]).grad.squaredNorm();
  }
  const double lhs = (kN + 2.0) * pairwise_sum(terms);

  std::vector<Term> breakdown;
  breakdown.push_back({"gamma", integrate(model, q.boundary.gamma,
                                          [](const FieldValue& v, const Vec2& x, const Vec2& nu) {
                                            const double un = v.grad.dot(nu);
                                            return x.dot(nu) * un * un;
                                          })});
  for (std::size_t h = 0; h < q.boundary.holes.size(); ++h) {
    const double value =
        2.0 * kN *
        integrate(model, q.boundary.holes[h], [](const FieldValue& v, const Vec2& x, const Vec2& nu) {
          const double un = v.grad.dot(nu);
          const double xn = x.dot(nu);
          return v.u * un - xn * v.u / kN + x.dot(v.grad) * un / kN -
                 xn * v.grad.squaredNorm() / (2.0 * kN);
        });
    breakdown.push_back({hole_name(h), value});
  }
  return finish("pohozaev", lhs, std::move(breakdown));
}

IdentityReport check_fundamental(const FieldModel& model, const geometry::Domain& domain,
                                 const Quadratures& q) {
  check_holes_match(domain, q);
  const double lhs = fundamental_lhs(model, q);

  std::vector<Term> breakdown;
  breakdown.push_back({"gamma", integrate(model, q.boundary.gamma,
                                          [](const FieldValue& v, const Vec2& x, const Vec2& nu) {
                                            const double un = v.grad.dot(nu);
                                            return un * un * (un - x.dot(nu) / kN);
                                          })});
  for (std::size_t h = 0; h < q.boundary.holes.size(); ++h) {
    const auto& rule = q.boundary.holes[h];
    const double value = integrate(model, rule, [](const FieldValue& v, const Vec2& x, const Vec2& nu) {
      return hole_u_term(v, x, nu) + hole_brace_term(v, x, nu);
    });
    breakdown.push_back({hole_name(h), value});
  }
  return finish("fundamental", lhs, std::move(breakdown));
}

OverdeterminedReport check_overdetermined(const FieldModel& model, const geometry::Domain& domain,
                                          double c, const Quadratures& q, double tol_overdet) {
  check_holes_match(domain, q);
  if (!std::isfinite(c)) throw InvalidInput("c must be finite");
  if (!(tol_overdet > 0.0)) throw InvalidInput("tol_overdet must be positive");

  OverdeterminedReport report;
  const auto& gamma = q.boundary.gamma;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const double un = model.evaluate(gamma.nodes[i]).grad.dot(gamma.normals[i]);
    report.max_deviation = std::max(report.max_deviation, std::abs(un - c));
  }
  if (!(report.max_deviation <= tol_overdet)) {
    throw HypothesisFailure("u_nu is not constant on the outer boundary", report.max_deviation);
  }

  std::vector<Term> groups;
  for (std::size_t h = 0; h < q.boundary.holes.size(); ++h) {
    const auto& rule = q.boundary.holes[h];
    const std::string name = hole_name(h);
    groups.push_back({"c2:" + name, c * c * integrate(model, rule,
                                                      [](const FieldValue& v, const Vec2& x,
                                                         const Vec2& nu) {
                                                        return x.dot(nu) / kN - v.grad.dot(nu);
                                                      })});
    groups.push_back({"u:" + name, integrate(model, rule, hole_u_term)});
    groups.push_back({"brace:" + name, integrate(model, rule, hole_brace_term)});
  }
  report.identity = finish("overdetermined", fundamental_lhs(model, q), std::move(groups));

  const auto flux = [](const FieldValue& v, const Vec2&, const Vec2& nu) { return v.grad.dot(nu); };
  std::vector<Term> value_terms;
  value_terms.push_back({"area", domain.region_area()});
  for (std::size_t h = 0; h < q.boundary.holes.size(); ++h) {
    value_terms.push_back({hole_name(h), -integrate(model, q.boundary.holes[h], flux)});
  }
  report.value_c = finish("value_c", integrate(model, gamma, flux), std::move(value_terms));
  return report;
}

CValue compute_c(const geometry::Domain& domain, const FieldModel& model, const Quadratures& q) {
  check_holes_match(domain, q);
  const auto flux = [](const FieldValue& v, const Vec2&, const Vec2& nu) { return v.grad.dot(nu); };
  const double gamma_length = q.boundary.gamma.length();
  std::vector<double> hole_flux;
  for (const auto& rule : q.boundary.holes) hole_flux.push_back(integrate(model, rule, flux));

  CValue out;
  out.balance = (domain.region_area() - pairwise_sum(hole_flux)) / gamma_length;
  out.direct = integrate(model, q.boundary.gamma, flux) / gamma_length;
  out.mismatch = std::abs(out.balance - out.direct);
  out.inconsistent = out.mismatch > 1e-5;
  return out;
}

IdentityReport check_divergence_x(const geometry::Domain& domain, const Quadratures& q) {
  check_holes_match(domain, q);
  const auto support = [](const geometry::BoundaryQuadrature& rule) {
    std::vector<double> terms(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) {
      terms[i] = rule.weights[i] * rule.nodes[i].dot(rule.normals[i]) / kN;
    }
    return pairwise_sum(terms);
  };
  std::vector<Term> breakdown;
  breakdown.push_back({"gamma", support(q.boundary.gamma)});
  for (std::size_t h = 0; h < q.boundary.holes.size(); ++h) {
    breakdown.push_back({hole_name(h), support(q.boundary.holes[h])});
  }
  return finish("divergence_x", q.area.area(), std::move(breakdown));
}

}  // namespace torsionlab::identities
