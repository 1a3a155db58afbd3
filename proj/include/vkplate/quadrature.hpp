#pragma once

// Gauss rules on the reference triangle {(x,y): x,y >= 0, x+y <= 1} and on [0,1].
//
// Triangle rules are conical products of Gauss-Legendre rules (Duffy collapse),
// so every rule has strictly positive weights and interior points, and any
// degree can be produced without tables.

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "vkplate/error.hpp"

namespace vkplate {

inline constexpr int kMaxQuadratureDegree = 10;

struct EdgeRule {
  std::vector<double> points;   // in [0,1]
  std::vector<double> weights;  // sum to 1
  int degree = 0;

  std::size_t size() const { return points.size(); }
};

struct TriangleRule {
  std::vector<std::array<double, 3>> points;  // barycentric (1-x-y, x, y)
  std::vector<double> weights;                // sum to 1; multiply by |K|
  int degree = 0;

  std::size_t size() const { return points.size(); }
};

namespace detail {

/// n-point Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_n(z), p0 = P_{n-1}(z)
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace detail

/// Gauss-Legendre rule on [0,1] exact for polynomials up to `degree`.
inline EdgeRule edge_rule(int degree) {
  if (degree < 1 || degree > kMaxQuadratureDegree) {
    throw InvalidArgument("edge_rule: unsupported degree " + std::to_string(degree));
  }
  const int n = (degree + 2) / 2;
  std::vector<double> x, w;
  detail::gauss_legendre(n, x, w);
  EdgeRule rule;
  rule.degree = degree;
  for (int i = 0; i < n; ++i) {
    rule.points.push_back(0.5 * (x[i] + 1.0));
    rule.weights.push_back(0.5 * w[i]);
  }
  return rule;
}

/// Collapsed Gauss rule on the reference triangle exact up to `degree`.
///
/// The map (s,t) -> (s, t(1-s)) has Jacobian (1-s), so the s-direction
/// integrand gains one degree; it uses one more point when needed.
inline TriangleRule triangle_rule(int degree) {
  if (degree < 1 || degree > kMaxQuadratureDegree) {
    throw InvalidArgument("triangle_rule: unsupported degree " + std::to_string(degree));
  }
  const int ns = (degree + 3) / 2;
  const int nt = (degree + 2) / 2;
  std::vector<double> xs, ws, xt, wt;
  detail::gauss_legendre(ns, xs, ws);
  detail::gauss_legendre(nt, xt, wt);
  TriangleRule rule;
  rule.degree = degree;
  for (int i = 0; i < ns; ++i) {
    const double s = 0.5 * (xs[i] + 1.0);
    for (int j = 0; j < nt; ++j) {
      const double t = 0.5 * (xt[j] + 1.0);
      const double x = s;
      const double y = t * (1.0 - s);
      // reference area 1/2 normalised away: weight * 2
      const double w = 0.5 * ws[i] * 0.5 * wt[j] * (1.0 - s) * 2.0;
      rule.points.push_back({1.0 - x - y, x, y});
      rule.weights.push_back(w);
    }
  }
  return rule;
}

/// Integral of f over the triangle with corners p0, p1, p2 (affine push-forward).
template <class F>
double integrate_triangle(const TriangleRule& rule, F&& f, const Eigen::Vector2d& p0,
                          const Eigen::Vector2d& p1, const Eigen::Vector2d& p2) {
  const double det = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
  if (!(std::abs(det) > 0.0)) throw InvalidArgument("integrate_triangle: degenerate triangle");
  const double area = 0.5 * std::abs(det);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto& b = rule.points[q];
    const Eigen::Vector2d x = b[0] * p0 + b[1] * p1 + b[2] * p2;
    sum += rule.weights[q] * f(x);
  }
  return area * sum;
}

}  // namespace vkplate
