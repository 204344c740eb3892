#pragma once

// Torsion energy I(Omega) = (1/2) int_Omega |grad u|^2 of star-shaped domains,
// its Hadamard shape derivative I'(0) = (1/2) int_Gamma u_nu^2 <nu, v> dS, and a
// volume-preserving gradient flow on the radial Fourier coefficients. The disk
// maximizes I at fixed area and is its only stationary point (u_nu constant),
// so the flow ascends I.

#include "torsionlab/geometry.hpp"
#include "torsionlab/solver.hpp"

#include <string>
#include <vector>

namespace torsionlab::shapeflow {

struct Discretization {
  solver::DirichletOptions solver;
  int n_theta = 256;
  int n_r = 64;
};

/// (1/2) int |grad u|^2 over the area rule. Holes, if any, must carry g = 0
/// (otherwise the Hadamard formula above gains hole terms). Propagates solver
/// failures.
double energy(const geometry::DomainSpec& spec, const Discretization& disc = {});

/// Radial displacement field w(theta) = R (dilation + sum c_k cos k theta + d_k sin k theta):
/// the boundary point at angle theta moves by w(theta) along e_r. Its normal
/// velocity is <v, nu> = w <e_r, nu>.
struct RadialField {
  double dilation = 0.0;
  std::vector<geometry::FourierMode> modes;
};

/// Gamma moved by t w: r_t = r + t w, re-expressed in the R(1 + sum ...) form.
geometry::DomainSpec displace(const geometry::DomainSpec& spec, const RadialField& w, double t);

/// First-order area change int_Gamma <v, nu> dS = int r w dtheta.
double volume_flux(const geometry::DomainSpec& spec, const RadialField& w);

/// Removes the dilation component (w_0 = r) so that the flux vanishes; `removed`
/// receives the coefficient mu in w - mu r.
RadialField project_volume(const geometry::DomainSpec& spec, const RadialField& w,
                           double* removed = nullptr);

struct ShapeGradient {
  /// (1/2) int_Gamma u_nu^2 <nu, v> dS for the volume-projected field.
  double value = 0.0;
  /// Flux of the field before projection and the removed dilation coefficient.
  double flux = 0.0;
  double removed = 0.0;
  /// Volume-projected gradient over cos k, sin k for k = 1..n_modes, interleaved
  /// (cos 1, sin 1, cos 2, ...).
  std::vector<double> basis;
};

ShapeGradient shape_gradient(const geometry::DomainSpec& spec, const RadialField& w,
                             const Discretization& disc = {}, int n_modes = 8);

struct ShapeState {
  int iteration = 0;
  geometry::DomainSpec spec;
  double energy = 0.0;
  /// u_nu at the Gamma nodes (uniform in theta).
  std::vector<double> u_nu;
  double mean_u_nu = 0.0;
  /// Arc-length weighted standard deviation of u_nu.
  double std_u_nu = 0.0;
  double rho_gap = 0.0;
  /// (|Omega| - |Omega_0|) / |Omega_0|.
  double area_drift = 0.0;
  /// Step accepted to reach this state, and how many halvings it took.
  double step = 0.0;
  int halvings = 0;
  double std_ratio() const { return mean_u_nu != 0.0 ? std_u_nu / mean_u_nu : 0.0; }
};

struct DescentOptions {
  int max_iters = 200;
  /// Stop when std(u_nu)/mean(u_nu) <= tol_std.
  double tol_std = 1e-3;
  int max_halvings = 12;
  /// Fourier modes kept in the boundary parametrization.
  int n_modes = 12;
  /// Accepted steps may lower I by at most this (relative) amount.
  double energy_tolerance = 1e-9;
  Discretization disc;
};

struct Trajectory {
  std::vector<ShapeState> states;
  bool converged = false;
  bool stalled = false;
  bool solver_failed = false;
  std::string message;
};

/// Initial perturbation must satisfy sum |a_k| + |b_k| <= 0.1.
Trajectory descend(const geometry::DomainSpec& initial, const DescentOptions& options = {});

}  // namespace torsionlab::shapeflow
