#pragma once

// Both sides of the integral identities satisfied by solutions of
// Delta u = 1 in Omega \ closure(omega), u = 0 on Gamma, computed from
// independent code paths: left-hand sides from the area rule and Hessians,
// right-hand sides from boundary rules only.

#include "torsionlab/geometry.hpp"
#include "torsionlab/solver.hpp"

#include <string>
#include <vector>

namespace torsionlab::identities {

struct Quadratures {
  geometry::BoundarySet boundary;
  geometry::AreaQuadrature area;
};

/// Boundary rule with n_theta nodes per component and area rule (n_r, n_theta).
Quadratures make_quadratures(const geometry::Domain& domain, int n_theta, int n_r);

struct Term {
  std::string name;
  double value = 0.0;
};

struct IdentityReport {
  /// pohozaev | fundamental | overdetermined | value_c | divergence_x
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_residual = 0.0;
  /// |lhs - rhs| / (|lhs| + |rhs| + 1)
  double rel_residual = 0.0;
  /// Right-hand side split by boundary component / term group; sums to rhs.
  std::vector<Term> breakdown;
};

/// P = |grad u|^2 - (2/N) u.
double p_function(const solver::FieldModel& model, const Vec2& x);

/// |Hess u|_F^2 - (Delta u)^2 / N. Throws NumericalFailure below -1e-12.
double cs_deficit(const solver::FieldModel& model, const Vec2& x);

/// |Hess h|_F^2 for the harmonic part h = q - u (equal to cs_deficit).
double harmonic_hessian_norm2(const solver::FieldModel& model, const Vec2& x);

/// (N+2) int |grad u|^2 = int_Gamma <x,nu> u_nu^2
///   + 2N int_{d omega} { u u_nu - <x,nu> u/N + <x,grad u> u_nu/N - <x,nu>|grad u|^2/(2N) }.
IdentityReport check_pohozaev(const solver::FieldModel& model, const geometry::Domain& domain,
                              const Quadratures& q);

/// int (-u) 2 {|Hess u|^2 - (Delta u)^2/N} = int_Gamma u_nu^2 (u_nu - <x,nu>/N)
///   + int_{d omega} 2u(<x,nu>/N - u_nu)
///   + int_{d omega} { u_nu|grad u|^2 - 2<x,grad u>u_nu/N + |grad u|^2 <x,nu>/N
///                     + (2/N) u u_nu - 2 <Hess u grad u, nu> u }.
IdentityReport check_fundamental(const solver::FieldModel& model, const geometry::Domain& domain,
                                 const Quadratures& q);

struct OverdeterminedReport {
  /// Same left-hand side as check_fundamental, right-hand side with the Gamma
  /// integral replaced by c^2 int_{d omega} (<x,nu>/N - u_nu); groups
  /// "c2", "u", "brace" per hole in the breakdown.
  IdentityReport identity;
  /// int_Gamma u_nu = |Omega| - |omega| - int_{d omega} u_nu.
  IdentityReport value_c;
  /// max_Gamma |u_nu - c| measured before the check.
  double max_deviation = 0.0;
};

/// Throws HypothesisFailure (carrying max_Gamma |u_nu - c|) when the deviation
/// exceeds tol_overdet.
OverdeterminedReport check_overdetermined(const solver::FieldModel& model,
                                          const geometry::Domain& domain, double c,
                                          const Quadratures& q, double tol_overdet = 1e-6);

struct CValue {
  /// (|Omega| - |omega| - int_{d omega} u_nu) / |Gamma|
  double balance = 0.0;
  /// int_Gamma u_nu / |Gamma|
  double direct = 0.0;
  double mismatch = 0.0;
  /// mismatch > 1e-5: quadrature or solver inconsistency.
  bool inconsistent = false;
};

CValue compute_c(const geometry::Domain& domain, const solver::FieldModel& model,
                 const Quadratures& q);

/// |Omega \ closure(omega)| from the area rule against sum over components of
/// int <x,nu>/N dS; the breakdown lists every component (orientation guard).
IdentityReport check_divergence_x(const geometry::Domain& domain, const Quadratures& q);

}  // namespace torsionlab::identities
