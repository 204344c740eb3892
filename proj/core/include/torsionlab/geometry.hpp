#pragma once

// Planar domains Omega \ closure(omega): a star-shaped outer curve Gamma given
// by a Fourier-perturbed circle about the origin, minus disjoint circular holes.
// Everything here is purely geometric; no field values are involved.

#include "torsionlab/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace torsionlab::geometry {

/// One Fourier mode of the outer radius: r(theta) = R (1 + sum a_k cos k theta + b_k sin k theta).
struct FourierMode {
  int k = 1;
  double cos_amp = 0.0;
  double sin_amp = 0.0;
};

struct Hole {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  /// Dirichlet datum for well-posed solves; must be <= 0. Empty for holes
  /// carved out of a continued field, where u on the hole is whatever it is.
  std::optional<double> g;
};

struct DomainSpec {
  double outer_radius = 1.0;
  std::vector<FourierMode> modes;
  std::vector<Hole> holes;
};

/// Throws InvalidInput naming the first violated invariant.
void validate(const DomainSpec& spec);

/// Index of a boundary component: kOuter for Gamma, otherwise the hole index.
inline constexpr int kOuter = -1;

struct BoundaryQuadrature {
  int component = kOuter;
  std::vector<Vec2> nodes;
  /// Unit normals pointing out of Omega \ closure(omega); on holes they point
  /// into the hole.
  std::vector<Vec2> normals;
  std::vector<double> weights;
  /// Parameter of each node (theta on Gamma, polar angle about the center on holes).
  std::vector<double> params;

  std::size_t size() const { return nodes.size(); }
  double length() const;
};

struct BoundarySet {
  BoundaryQuadrature gamma;
  std::vector<BoundaryQuadrature> holes;
};

struct AreaQuadrature {
  std::vector<Vec2> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  double area() const;
};

/// Output of tubular_sets: Omega^c_sigma and its inner curve Gamma_sigma.
/// Normals on Gamma_sigma point out of the tube, i.e. towards the core.
struct TubularSets {
  double sigma = 0.0;
  AreaQuadrature tube;
  BoundaryQuadrature inner_curve;
};

/// A validated domain with cached samples of Gamma. Cheap to copy.
class Domain {
 public:
  explicit Domain(DomainSpec spec);

  const DomainSpec& spec() const { return spec_; }
  const std::vector<Hole>& holes() const { return spec_.holes; }

  double radius(double theta) const;
  double radius_d1(double theta) const;
  double radius_d2(double theta) const;

  Vec2 point(double theta) const;
  /// d/dtheta of point(theta).
  Vec2 tangent(double theta) const;
  Vec2 tangent_d1(double theta) const;
  /// Outward unit normal of Gamma.
  Vec2 normal(double theta) const;
  /// Signed curvature of Gamma, positive where Gamma is convex.
  double curvature(double theta) const;
  double max_curvature() const { return max_curvature_; }

  /// Strictly inside Gamma.
  bool inside_outer(const Vec2& x) const;
  /// Strictly inside Omega \ closure(omega).
  bool in_region(const Vec2& x) const;

  /// Distance from x to Gamma and the parameter of the foot point.
  std::pair<double, double> project_to_outer(const Vec2& x) const;
  double distance_to_outer(const Vec2& x) const { return project_to_outer(x).first; }
  /// Distance to Gamma union the hole circles, for any x.
  double distance_to_boundary(const Vec2& x) const;

  /// Closed-form |Omega| (area enclosed by Gamma).
  double outer_area() const;
  /// Sum of hole areas.
  double holes_area() const;
  double region_area() const { return outer_area() - holes_area(); }
  /// Sum of hole circumferences |d omega|.
  double holes_perimeter() const;

 private:
  DomainSpec spec_;
  std::vector<double> sample_theta_;
  std::vector<Vec2> samples_;
  double max_curvature_ = 0.0;
};

/// Periodic trapezoid nodes on Gamma and on every hole. n_theta >= 64 and even.
BoundarySet build_boundary_quadrature(const Domain& domain, int n_theta);

/// Area rule for Omega \ closure(omega); total weight within relative 1e-6 of the
/// closed-form area, else NumericalFailure carrying the residual.
AreaQuadrature build_area_quadrature(const Domain& domain, int n_r, int n_theta);

/// delta(x) = dist(x, Gamma union d omega). Throws ExteriorPoint outside the region.
double delta(const Domain& domain, const Vec2& x);

/// Certified-at-resolution lower bound of the uniform interior sphere radius.
double interior_sphere_radius(const Domain& domain, int n_theta = 256);

/// d_Omega: diameter of Omega (attained on Gamma).
double diameter(const Domain& domain);

struct RadiiAboutCenter {
  double rho_e = 0.0;
  double rho_i = 0.0;
};

/// Largest and smallest |x - z| over Gamma. Throws ExteriorPoint if z is not in Omega.
RadiiAboutCenter rho_e_rho_i(const Domain& domain, const Vec2& z);

/// |Omega symmetric-difference B_radius(z)| / |B_radius(z)|.
double symmetric_difference_ratio(const Domain& domain, const Vec2& z, double radius);

/// Omega^c_sigma and Gamma_sigma. Throws InvalidInput if sigma > r_i.
TubularSets tubular_sets(const Domain& domain, double sigma, double r_i, int n_theta = 256,
                         int n_normal = 24);
TubularSets tubular_sets(const Domain& domain, double sigma);

/// Largest hole diameter (d-bar_omega).
double max_hole_diameter(const Domain& domain);

}  // namespace torsionlab::geometry
