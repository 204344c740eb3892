#include "torsionlab/solver.hpp"

#include "torsionlab/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace torsionlab::solver {

namespace {

constexpr double kInvTwoPi = 1.0 / kTwoPi;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// G(d) = log|d| / (2 pi) and its derivatives.
double kernel(const Vec2& d) { return 0.5 * kInvTwoPi * std::log(d.squaredNorm()); }
Vec2 kernel_grad(const Vec2& d) { return kInvTwoPi * d / d.squaredNorm(); }
Mat2 kernel_hess(const Vec2& d) {
  const double r2 = d.squaredNorm();
  return kInvTwoPi * (Mat2::Identity() * r2 - 2.0 * d * d.transpose()) / (r2 * r2);
}

struct LeastSquaresResult {
  Eigen::VectorXd x;
  double condition = 0.0;
  double regularization = 0.0;
  bool truncated = false;
};

// Minimum-norm least squares through the SVD, with optional Tikhonov filter
// sigma / (sigma^2 + lambda sigma_max^2) and truncation below rcond * sigma_max.
LeastSquaresResult svd_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tikhonov) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  LeastSquaresResult out;
  const double smax = s.size() ? s(0) : 0.0;
  const double smin = s.size() ? s(s.size() - 1) : 0.0;
  out.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  out.regularization = tikhonov * smax * smax;
  const double cutoff = 1e-15 * smax;
  const Eigen::VectorXd utb = svd.matrixU().transpose() * b;
  Eigen::VectorXd filtered(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) <= cutoff) {
      filtered(i) = 0.0;
      out.truncated = true;
      continue;
    }
    filtered(i) = s(i) / (s(i) * s(i) + out.regularization) * utb(i);
  }
  out.x = svd.matrixV() * filtered;
  return out;
}

struct BoundaryNodes {
  std::vector<Vec2> x;
  std::vector<Vec2> nu;
};

BoundaryNodes gamma_nodes(const geometry::Domain& d, int n, double shift) {
  BoundaryNodes b;
  for (int j = 0; j < n; ++j) {
    const double th = kTwoPi * (j + shift) / n;
    b.x.push_back(d.point(th));
    b.nu.push_back(d.normal(th));
  }
  return b;
}

BoundaryNodes circle_nodes(const Vec2& c, double rho, int n, double shift) {
  BoundaryNodes b;
  for (int j = 0; j < n; ++j) {
    const double ph = kTwoPi * (j + shift) / n;
    const Vec2 e(std::cos(ph), std::sin(ph));
    b.x.push_back(c + rho * e);
    b.nu.push_back(-e);
  }
  return b;
}

std::vector<Vec2> outer_ring(const geometry::Domain& d, int n, double offset) {
  std::vector<Vec2> s;
  for (int j = 0; j < n; ++j) {
    const double th = kTwoPi * j / n;
    const Vec2 p = d.radius(th) * offset * Vec2(std::cos(th), std::sin(th));
    const double clearance = 0.1 * (offset - 1.0) * d.radius(th);
    if (d.inside_outer(p) || d.distance_to_outer(p) < clearance)
      throw InvalidInput("solver: outer source ring too close to Gamma; increase offset_ratio");
    s.push_back(p);
  }
  return s;
}

void inner_ring(std::vector<Vec2>& s, const Vec2& c, double radius, int n) {
  for (int j = 0; j < n; ++j) {
    const double ph = kTwoPi * j / n;
    s.push_back(c + radius * Vec2(std::cos(ph), std::sin(ph)));
  }
}

void check_ring_options(int n_src, double offset) {
  if (n_src < 32) throw InvalidInput("solver.n_src must be >= 32");
  if (!(offset >= 1.1 && offset <= 3.0))
    throw InvalidInput("solver.offset_ratio must lie in [1.1, 3]");
}

FieldModel assemble_model(const std::vector<Vec2>& sources, const Eigen::VectorXd& x) {
  FieldModel m;
  m.sources = sources;
  m.coefficients.assign(x.data(), x.data() + sources.size());
  m.constant = x(static_cast<Eigen::Index>(sources.size()));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// FieldModel

namespace {

// Everything except the quadratic: constant + sources + harmonic polynomial.
FieldValue non_quadratic(const FieldModel& m, const Vec2& x) {
  FieldValue f;
  f.u = m.constant;
  for (std::size_t j = 0; j < m.sources.size(); ++j) {
    const Vec2 d = x - m.sources[j];
    const double a = m.coefficients[j];
    f.u += a * kernel(d);
    f.grad += a * kernel_grad(d);
    f.hess += a * kernel_hess(d);
  }
  if (!m.polynomial.empty()) {
    // p = sum alpha_k z^k; Re p has gradient (Re p', -Im p') and Hessian
    // [[Re p'', -Im p''], [-Im p'', -Re p'']].
    const std::complex<double> z(x.x() - m.anchor.x(), x.y() - m.anchor.y());
    std::complex<double> p(0.0), dp(0.0), ddp(0.0), zk(1.0), zk1(0.0), zk2(0.0);
    for (std::size_t i = 0; i < m.polynomial.size(); ++i) {
      const double k = static_cast<double>(i + 1);
      zk2 = zk1;
      zk1 = zk;
      zk *= z;
      p += m.polynomial[i] * zk;
      dp += k * m.polynomial[i] * zk1;
      ddp += k * (k - 1.0) * m.polynomial[i] * zk2;
    }
    f.u += p.real();
    f.grad += Vec2(dp.real(), -dp.imag());
    Mat2 h;
    h << ddp.real(), -ddp.imag(), -ddp.imag(), -ddp.real();
    f.hess += h;
  }
  for (const auto& mp : m.multipoles) {
    const std::complex<double> z(x.x() - mp.center.x(), x.y() - mp.center.y());
    const std::complex<double> iz = 1.0 / z;
    std::complex<double> p(0.0), dp(0.0), ddp(0.0), zk(1.0);
    for (std::size_t i = 0; i < mp.coefficients.size(); ++i) {
      const double k = static_cast<double>(i + 1);
      zk *= iz;  // z^-k
      p += mp.coefficients[i] * zk;
      dp += -k * mp.coefficients[i] * zk * iz;
      ddp += k * (k + 1.0) * mp.coefficients[i] * zk * iz * iz;
    }
    f.u += p.real();
    f.grad += Vec2(dp.real(), -dp.imag());
    Mat2 h;
    h << ddp.real(), -ddp.imag(), -ddp.imag(), -ddp.real();
    f.hess += h;
  }
  return f;
}

}  // namespace

FieldValue FieldModel::harmonic_part(const Vec2& x) const {
  FieldValue f = non_quadratic(*this, x);
  f.u = -f.u;
  f.grad = -f.grad;
  f.hess = -f.hess;
  return f;
}

FieldValue FieldModel::evaluate(const Vec2& x) const {
  FieldValue f = non_quadratic(*this, x);
  const Vec2 d = x - anchor;
  const double w = quadratic_weight / (2.0 * kDim);
  f.u += w * d.squaredNorm();
  f.grad += 2.0 * w * d;
  f.hess += 2.0 * w * Mat2::Identity();
  return f;
}

double FieldModel::value(const Vec2& x) const {
  double u = constant + quadratic_weight / (2.0 * kDim) * (x - anchor).squaredNorm();
  for (std::size_t j = 0; j < sources.size(); ++j) u += coefficients[j] * kernel(x - sources[j]);
  if (!polynomial.empty()) {
    const std::complex<double> z(x.x() - anchor.x(), x.y() - anchor.y());
    std::complex<double> p(0.0);
    for (std::size_t k = polynomial.size(); k-- > 0;) p = (p + polynomial[k]) * z;
    u += p.real();
  }
  for (const auto& mp : multipoles) {
    const std::complex<double> iz =
        1.0 / std::complex<double>(x.x() - mp.center.x(), x.y() - mp.center.y());
    std::complex<double> p(0.0);
    for (std::size_t k = mp.coefficients.size(); k-- > 0;) p = (p + mp.coefficients[k]) * iz;
    u += p.real();
  }
  return u;
}

FieldModel quadratic_field(const Vec2& anchor, double constant) {
  FieldModel m;
  m.anchor = anchor;
  m.constant = constant;
  return m;
}

// ---------------------------------------------------------------------------
// Dirichlet

Solution solve_dirichlet(const geometry::DomainSpec& spec, const DirichletOptions& options) {
  check_ring_options(options.n_src_per_ring, options.offset_ratio);
  const geometry::Domain domain(spec);
  for (std::size_t i = 0; i < spec.holes.size(); ++i) {
    if (!spec.holes[i].g)
      throw InvalidInput("holes[" + std::to_string(i) + "].g is required for a Dirichlet solve");
  }
  const int n = options.n_src_per_ring;
  const int m = 2 * n;
  std::vector<Vec2> sources = outer_ring(domain, n, options.offset_ratio);
  for (const auto& h : spec.holes) inner_ring(sources, h.center, h.radius / options.offset_ratio, n);

  const FieldModel q = quadratic_field(Vec2::Zero(), 0.0);
  std::vector<BoundaryNodes> comps;
  std::vector<double> data;
  comps.push_back(gamma_nodes(domain, m, 0.0));
  data.push_back(0.0);
  for (const auto& h : spec.holes) {
    comps.push_back(circle_nodes(h.center, h.radius, m, 0.0));
    data.push_back(*h.g);
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(comps.size()) * m;
  const Eigen::Index cols = static_cast<Eigen::Index>(sources.size()) + 1;
  Eigen::MatrixXd A(rows, cols);
  Eigen::VectorXd b(rows);
  Eigen::Index r = 0;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (const auto& x : comps[c].x) {
      for (std::size_t j = 0; j < sources.size(); ++j) A(r, j) = kernel(x - sources[j]);
      A(r, cols - 1) = 1.0;
      b(r) = data[c] - q.value(x);
      ++r;
    }
  }
  const LeastSquaresResult ls = svd_solve(A, b, 0.0);

  Solution sol;
  sol.model = assemble_model(sources, ls.x);
  auto& diag = sol.diagnostics;
  diag.condition = ls.condition;
  diag.regularization = 0.0;
  diag.truncated = ls.truncated;
  diag.n_sources = static_cast<int>(sources.size());
  diag.n_collocation = static_cast<int>(rows);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    double worst = 0.0;
    for (double shift : {0.0, 0.5}) {
      const BoundaryNodes nodes = c == 0 ? gamma_nodes(domain, m, shift)
                                         : circle_nodes(spec.holes[c - 1].center,
                                                        spec.holes[c - 1].radius, m, shift);
      for (const auto& x : nodes.x) worst = std::max(worst, std::abs(sol.model.value(x) - data[c]));
    }
    diag.residual_per_component.push_back(worst);
    diag.max_residual = std::max(diag.max_residual, worst);
  }
  if (!std::isfinite(diag.max_residual) || diag.max_residual > options.residual_tolerance)
    throw NumericalFailure("solver did not converge: boundary residual " + fmt(diag.max_residual) +
                               " (condition " + fmt(diag.condition) + ")",
                           diag.max_residual);
  return sol;
}

// ---------------------------------------------------------------------------
// Cauchy continuation

Solution fit_cauchy(const geometry::DomainSpec& spec, double c, const CauchyOptions& options) {
  check_ring_options(options.n_src_per_ring, options.offset_ratio);
  if (!spec.holes.empty())
    throw InvalidInput("solve_cauchy: spec must have no holes at solve time (carve them afterwards)");
  if (!(options.tikhonov >= 0.0)) throw InvalidInput("solver.tikhonov must be >= 0");
  if (!std::isfinite(c)) throw InvalidInput("solve_cauchy: c must be finite");
  const geometry::Domain domain(spec);
  const int n = options.n_src_per_ring;
  const int m = 2 * n;

  std::vector<SourceDisk> disks = options.source_disks;
  if (disks.empty()) {
    double rmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 1024; ++j) rmin = std::min(rmin, domain.radius(kTwoPi * j / 1024));
    disks.push_back(SourceDisk{Vec2::Zero(), 0.5 * rmin});
  }
  std::vector<Vec2> sources = outer_ring(domain, n, options.offset_ratio);
  // Laurent columns are (radius / z)^k: a unit coefficient is a unit-size term on
  // the disk boundary, so the Tikhonov penalty bounds the field where holes go.
  std::vector<double> scales;
  for (std::size_t i = 0; i < disks.size(); ++i) {
    const auto& dk = disks[i];
    if (!(dk.radius > 0.0) || !domain.inside_outer(dk.center) ||
        domain.distance_to_outer(dk.center) <= dk.radius)
      throw InvalidInput("solve_cauchy: source_disks[" + std::to_string(i) +
                         "] must lie strictly inside Gamma");
    if (options.interior_basis == InteriorBasis::kRing) {
      inner_ring(sources, dk.center, dk.radius / options.offset_ratio, n);
    } else {
      sources.push_back(dk.center);  // logarithmic (monopole) term
      scales.push_back(dk.radius);
    }
  }
  const int n_laurent = options.interior_basis == InteriorBasis::kMultipole ? n / 2 : 0;

  const FieldModel q = quadratic_field(Vec2::Zero(), 0.0);
  const BoundaryNodes nodes = gamma_nodes(domain, m, 0.0);
  const Eigen::Index n_src = static_cast<Eigen::Index>(sources.size());
  const Eigen::Index cols = n_src + 2 * n_laurent * static_cast<Eigen::Index>(scales.size()) + 1;
  Eigen::MatrixXd A(2 * m, cols);
  Eigen::VectorXd b(2 * m);
  for (int i = 0; i < m; ++i) {
    const Vec2& x = nodes.x[i];
    const Vec2& nu = nodes.nu[i];
    for (Eigen::Index j = 0; j < n_src; ++j) {
      A(i, j) = kernel(x - sources[j]);
      A(m + i, j) = kernel_grad(x - sources[j]).dot(nu);
    }
    Eigen::Index col = n_src;
    for (std::size_t d = 0; d < scales.size(); ++d) {
      const std::complex<double> z(x.x() - disks[d].center.x(), x.y() - disks[d].center.y());
      std::complex<double> w(1.0);
      for (int k = 1; k <= n_laurent; ++k) {
        w *= scales[d] / z;  // (radius / z)^k
        const std::complex<double> dw = -double(k) * w / z;
        // Re w has gradient (Re w', -Im w'); Im w has gradient (Im w', Re w').
        A(i, col) = w.real();
        A(m + i, col) = dw.real() * nu.x() - dw.imag() * nu.y();
        A(i, col + 1) = w.imag();
        A(m + i, col + 1) = dw.imag() * nu.x() + dw.real() * nu.y();
        col += 2;
      }
    }
    A(i, cols - 1) = 1.0;
    A(m + i, cols - 1) = 0.0;
    const FieldValue qv = q.evaluate(x);
    b(i) = -qv.u;
    b(m + i) = c - qv.grad.dot(nu);
  }
  // Rows carry sqrt of the arc-length weights so the discrete residual norm
  // approximates the L2(Gamma) norm and lambda means the same at every resolution.
  for (int i = 0; i < m; ++i) {
    const double w = std::sqrt(kTwoPi / m * domain.tangent(kTwoPi * i / m).norm());
    A.row(i) *= w;
    A.row(m + i) *= w;
    b(i) *= w;
    b(m + i) *= w;
  }
  // Ring columns are scaled so the unknowns are a single-layer density times
  // sqrt(2 pi/n): the Tikhonov penalty then approximates the L2 norm of the
  // density and the regularized problem has a limit as n grows.
  Eigen::VectorXd col_scale = Eigen::VectorXd::Ones(cols);
  const Eigen::Index ring_cols =
      options.interior_basis == InteriorBasis::kRing ? n_src : static_cast<Eigen::Index>(n);
  col_scale.head(ring_cols).setConstant(std::sqrt(kTwoPi / n));
  A = A * col_scale.asDiagonal();
  LeastSquaresResult ls = svd_solve(A, b, options.tikhonov);
  ls.x = ls.x.cwiseProduct(col_scale);

  Solution sol;
  sol.model = assemble_model(sources, ls.x);
  sol.model.constant = ls.x(cols - 1);
  Eigen::Index col = n_src;
  for (std::size_t d = 0; d < scales.size(); ++d) {
    Multipole mp;
    mp.center = disks[d].center;
    double scale_k = 1.0;
    for (int k = 1; k <= n_laurent; ++k) {
      scale_k *= scales[d];
      // a Re w + b Im w = Re((a - i b) w) and w = radius^k z^-k.
      mp.coefficients.emplace_back(ls.x(col) * scale_k, -ls.x(col + 1) * scale_k);
      col += 2;
    }
    sol.model.multipoles.push_back(std::move(mp));
  }
  auto& diag = sol.diagnostics;
  diag.condition = ls.condition;
  diag.regularization = ls.regularization;
  diag.truncated = ls.truncated;
  diag.n_sources = static_cast<int>(sources.size());
  diag.n_collocation = static_cast<int>(2 * m);
  double worst = 0.0;
  for (double shift : {0.0, 0.5}) {
    const BoundaryNodes probe = gamma_nodes(domain, m, shift);
    for (int i = 0; i < m; ++i) {
      const FieldValue f = sol.model.evaluate(probe.x[i]);
      worst = std::max({worst, std::abs(f.u), std::abs(f.grad.dot(probe.nu[i]) - c)});
    }
  }
  diag.residual_per_component = {worst};
  diag.max_residual = worst;
  return sol;
}

Solution solve_cauchy(const geometry::DomainSpec& spec, double c, const CauchyOptions& options) {
  Solution sol = fit_cauchy(spec, c, options);
  const double res = sol.diagnostics.max_residual;
  if (!std::isfinite(res) || res > options.residual_tolerance)
    throw NumericalFailure("continuation failed: joint Cauchy residual " + fmt(res) +
                               " exceeds " + fmt(options.residual_tolerance),
                           res);
  return sol;
}

geometry::DomainSpec carve(const geometry::DomainSpec& spec, const std::vector<SourceDisk>& holes) {
  geometry::DomainSpec out = spec;
  out.holes.clear();
  for (const auto& h : holes) out.holes.push_back(geometry::Hole{h.center, h.radius, std::nullopt});
  geometry::validate(out);
  return out;
}

// ---------------------------------------------------------------------------
// Radial reference

double RadialReference::u(const Vec2& x) const { return (x.squaredNorm() - R * R) / (2.0 * N); }
Vec2 RadialReference::grad(const Vec2& x) const { return x / static_cast<double>(N); }
Mat2 RadialReference::hess() const { return Mat2::Identity() / static_cast<double>(N); }

FieldModel RadialReference::model() const {
  if (N != kDim) throw InvalidInput("radial_reference: FieldModel form exists only for N = 2");
  return quadratic_field(Vec2::Zero(), -R * R / (2.0 * N));
}

RadialReference radial_reference(double R, int N) {
  if (!(R > 0.0)) throw InvalidInput("radial_reference: R must be positive");
  if (N < 2) throw InvalidInput("radial_reference: N must be >= 2");
  return RadialReference{R, N};
}

}  // namespace torsionlab::solver
