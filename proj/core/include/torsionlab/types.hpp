#pragma once

#include <Eigen/Dense>

#include <numbers>

namespace torsionlab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Spatial dimension of every PDE and geometry computation in the library.
/// N-parametric formulas (constants, exponents) take N as an explicit argument.
inline constexpr int kDim = 2;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace torsionlab
