#pragma once

// Fields u with Delta u = 1 (or harmonic fields, Delta v = 0) represented as
//   w |x - x0|^2 / (2N) + constant + sum_j a_j G(x - s_j) + Re sum_k alpha_k (x - x0)^k
//   + Re sum_m sum_k beta_mk (x - c_m)^(-k)
// with G(x) = log|x| / (2 pi) and w in {0, 1}. Derivatives are closed form, so
// Laplacians are exact and only boundary data carry discretization error.

#include "torsionlab/geometry.hpp"
#include "torsionlab/types.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace torsionlab::solver {

struct FieldValue {
  double u = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

/// Re sum_k alpha_k (x - center)^(-k), k = 1, 2, ...: the regular-at-infinity
/// Laurent tail of a field whose singularities lie inside a disk about center.
struct Multipole {
  Vec2 center = Vec2::Zero();
  std::vector<std::complex<double>> coefficients;
};

struct FieldModel {
  Vec2 anchor = Vec2::Zero();
  /// 1 for torsion fields (Delta u = 1), 0 for harmonic fields.
  double quadratic_weight = 1.0;
  double constant = 0.0;
  std::vector<Vec2> sources;
  std::vector<double> coefficients;
  /// alpha_1, alpha_2, ...: harmonic polynomial Re(alpha_k (x - anchor)^k).
  std::vector<std::complex<double>> polynomial;
  std::vector<Multipole> multipoles;

  FieldValue evaluate(const Vec2& x) const;
  double value(const Vec2& x) const;
  /// Harmonic part h = q - u, q = |x - anchor|^2 / (2N) (zero quadratic removed).
  FieldValue harmonic_part(const Vec2& x) const;
};

/// Torsion field with only the quadratic part: |x - anchor|^2/4 + constant.
FieldModel quadratic_field(const Vec2& anchor, double constant);

struct SolveDiagnostics {
  /// Max |residual| at collocation and midpoint nodes; index 0 is Gamma, then holes.
  /// For Cauchy solves entry 0 is max(|u|, |u_nu - c|) on Gamma.
  std::vector<double> residual_per_component;
  double max_residual = 0.0;
  /// sigma_max / sigma_min of the collocation matrix.
  double condition = 0.0;
  /// Effective Tikhonov weight lambda * sigma_max^2 (0 when none).
  double regularization = 0.0;
  /// True when the spectrum had to be truncated to obtain a stable solve.
  bool truncated = false;
  int n_sources = 0;
  int n_collocation = 0;
};

struct Solution {
  FieldModel model;
  SolveDiagnostics diagnostics;
};

struct DirichletOptions {
  int n_src_per_ring = 128;
  double offset_ratio = 1.5;
  double residual_tolerance = 1e-6;
};

/// Delta u = 1 in Omega \ closure(omega), u = 0 on Gamma, u = g_i on each hole.
/// Throws InvalidInput on bad options or holes without g; NumericalFailure when
/// the boundary residual exceeds the tolerance.
Solution solve_dirichlet(const geometry::DomainSpec& spec, const DirichletOptions& options = {});

struct SourceDisk {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

/// How the continued field's interior singularities are represented.
enum class InteriorBasis {
  /// Logarithmic term plus Laurent tail (x - c)^-k about each source disk center.
  kMultipole,
  /// Ring of point sources at radius/offset_ratio inside each source disk.
  kRing,
};

struct CauchyOptions {
  int n_src_per_ring = 128;
  InteriorBasis interior_basis = InteriorBasis::kMultipole;
  double offset_ratio = 1.5;
  /// Relative Tikhonov weight: lambda_eff = tikhonov * sigma_max^2.
  double tikhonov = 1e-10;
  /// Disks (future holes) that host the interior singular part of the field.
  /// Empty: a single disk at the origin of radius 0.5 * min r(theta).
  std::vector<SourceDisk> source_disks;
  double residual_tolerance = 1e-6;
};

/// Continues the Cauchy data u = 0, u_nu = c on Gamma inward. The spec must have
/// no holes; carve holes afterwards with carve(). Throws NumericalFailure
/// ("continuation failed") when the joint residual exceeds the tolerance.
Solution solve_cauchy(const geometry::DomainSpec& spec, double c, const CauchyOptions& options = {});

/// Same fit without the residual check, for studying the ill-posed regime.
Solution fit_cauchy(const geometry::DomainSpec& spec, double c, const CauchyOptions& options = {});

/// Attaches holes (without Dirichlet data) to a hole-free spec; validates.
geometry::DomainSpec carve(const geometry::DomainSpec& spec, const std::vector<SourceDisk>& holes);

/// u = (|x|^2 - R^2) / (2N), the torsion function of B_R in R^N, evaluated on
/// planar points (for N = 2 this is the exact solution).
struct RadialReference {
  double R = 1.0;
  int N = 2;

  double u(const Vec2& x) const;
  Vec2 grad(const Vec2& x) const;
  Mat2 hess() const;
  /// u_nu on the sphere and the overdetermined constant, both R/N.
  double c() const { return R / N; }
  /// FieldModel form (N = 2 only).
  FieldModel model() const;
};

RadialReference radial_reference(double R, int N);

}  // namespace torsionlab::solver
