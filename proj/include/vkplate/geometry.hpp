#pragma once

// Affine triangle geometry and the quadratic Lagrange basis in physical
// coordinates. Local node order: vertices 0,1,2 then the midpoints of the
// edges opposite vertices 0,1,2.

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

namespace vkplate {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Bary = std::array<double, 3>;

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Frobenius inner product of two 2x2 matrices.
inline double ddot(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

/// von Karman bracket of two Hessians: a_xx b_yy + a_yy b_xx - 2 a_xy b_xy.
inline double bracket(const Mat2& a, const Mat2& b) {
  return a(0, 0) * b(1, 1) + a(1, 1) * b(0, 0) - 2.0 * a(0, 1) * b(0, 1);
}

struct ElementGeometry {
  std::array<Vec2, 3> p;
  std::array<Vec2, 3> grad_lambda;
  double area = 0.0;
  double diameter = 0.0;

  ElementGeometry() = default;

  ElementGeometry(const Vec2& p0, const Vec2& p1, const Vec2& p2) : p{p0, p1, p2} {
    const double det = cross2(p1 - p0, p2 - p0);
    area = 0.5 * det;
    // rows of J^{-1}, J = [p1-p0, p2-p0]
    grad_lambda[1] = Vec2((p2 - p0).y(), -(p2 - p0).x()) / det;
    grad_lambda[2] = Vec2(-(p1 - p0).y(), (p1 - p0).x()) / det;
    grad_lambda[0] = -grad_lambda[1] - grad_lambda[2];
    diameter = std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
  }

  Vec2 point(const Bary& b) const { return b[0] * p[0] + b[1] * p[1] + b[2] * p[2]; }

  Bary barycentric(const Vec2& x) const {
    const double l1 = grad_lambda[1].dot(x - p[0]);
    const double l2 = grad_lambda[2].dot(x - p[0]);
    return {1.0 - l1 - l2, l1, l2};
  }

  /// Midpoint of the edge opposite local vertex i.
  Vec2 edge_midpoint(int i) const { return 0.5 * (p[(i + 1) % 3] + p[(i + 2) % 3]); }

  /// Lagrange node `a` (0..5).
  Vec2 node(int a) const { return a < 3 ? p[a] : edge_midpoint(a - 3); }
};

struct P2Values {
  std::array<double, 6> value;
  std::array<Vec2, 6> grad;
};

/// Lagrange P2 values and gradients at barycentric point `b`.
inline P2Values p2_eval(const ElementGeometry& g, const Bary& b) {
  P2Values out;
  const auto& gl = g.grad_lambda;
  for (int i = 0; i < 3; ++i) {
    out.value[i] = b[i] * (2.0 * b[i] - 1.0);
    out.grad[i] = (4.0 * b[i] - 1.0) * gl[i];
  }
  for (int k = 0; k < 3; ++k) {
    const int i = (k + 1) % 3, j = (k + 2) % 3;
    out.value[3 + k] = 4.0 * b[i] * b[j];
    out.grad[3 + k] = 4.0 * (b[j] * gl[i] + b[i] * gl[j]);
  }
  return out;
}

/// Constant Hessians of the six Lagrange P2 functions.
inline std::array<Mat2, 6> p2_hessians(const ElementGeometry& g) {
  std::array<Mat2, 6> h;
  const auto& gl = g.grad_lambda;
  for (int i = 0; i < 3; ++i) h[i] = 4.0 * gl[i] * gl[i].transpose();
  for (int k = 0; k < 3; ++k) {
    const int i = (k + 1) % 3, j = (k + 2) % 3;
    h[3 + k] = 4.0 * (gl[i] * gl[j].transpose() + gl[j] * gl[i].transpose());
  }
  return h;
}

/// Integral of each Lagrange P2 function over the element (0 at vertices, |K|/3 at midpoints).
inline std::array<double, 6> p2_integrals(const ElementGeometry& g) {
  return {0.0, 0.0, 0.0, g.area / 3.0, g.area / 3.0, g.area / 3.0};
}

}  // namespace vkplate
