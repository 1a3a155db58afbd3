#pragma once

// Manufactured solutions for the two benchmark domains.
//
// Loads follow from the strong form Delta^2 u = [u,v] + f, Delta^2 v = -1/2 [u,u] + g:
//   f = Delta^2 u - [u,v],   g = Delta^2 v + 1/2 [u,u].

#include <cmath>
#include <limits>
#include <numbers>

#include "vkplate/analysis.hpp"
#include "vkplate/geometry.hpp"

namespace vkplate {

// ---------------------------------------------------------------- unit square

namespace detail {

// sin^2(pi t) and derivatives 0..4
inline std::array<double, 5> sin2_derivs(double t) {
  constexpr double pi = std::numbers::pi;
  const double s = std::sin(pi * t), c2 = std::cos(2 * pi * t), s2 = std::sin(2 * pi * t);
  return {s * s, pi * s2, 2 * pi * pi * c2, -4 * pi * pi * pi * s2, -8 * pi * pi * pi * pi * c2};
}

// t^2 (1-t)^2 and derivatives 0..4
inline std::array<double, 5> bump_derivs(double t) {
  const double p = t * t * (1 - t) * (1 - t);
  return {p, 2 * t * (1 - t) * (1 - 2 * t), 2 - 12 * t + 12 * t * t, -12 + 24 * t, 24.0};
}

template <class D>
Jet tensor_jet(const D& dx, const D& dy) {
  Jet j;
  j.value = dx[0] * dy[0];
  j.grad = Vec2(dx[1] * dy[0], dx[0] * dy[1]);
  j.hess << dx[2] * dy[0], dx[1] * dy[1], dx[1] * dy[1], dx[0] * dy[2];
  return j;
}

template <class D>
double tensor_bilaplacian(const D& dx, const D& dy) {
  return dx[4] * dy[0] + 2 * dx[2] * dy[2] + dx[0] * dy[4];
}

}  // namespace detail

/// u = sin^2(pi x) sin^2(pi y), v = x^2 y^2 (1-x)^2 (1-y)^2 on the unit square.
inline ExactSolutionPair exact_square() {
  ExactSolutionPair p;
  p.u = [](const Vec2& x) {
    return detail::tensor_jet(detail::sin2_derivs(x.x()), detail::sin2_derivs(x.y()));
  };
  p.v = [](const Vec2& x) {
    return detail::tensor_jet(detail::bump_derivs(x.x()), detail::bump_derivs(x.y()));
  };
  p.f = [](const Vec2& x) {
    const auto ux = detail::sin2_derivs(x.x()), uy = detail::sin2_derivs(x.y());
    const auto vx = detail::bump_derivs(x.x()), vy = detail::bump_derivs(x.y());
    return detail::tensor_bilaplacian(ux, uy) -
           bracket(detail::tensor_jet(ux, uy).hess, detail::tensor_jet(vx, vy).hess);
  };
  p.g = [](const Vec2& x) {
    const auto ux = detail::sin2_derivs(x.x()), uy = detail::sin2_derivs(x.y());
    const auto vx = detail::bump_derivs(x.x()), vy = detail::bump_derivs(x.y());
    const Mat2 hu = detail::tensor_jet(ux, uy).hess;
    return detail::tensor_bilaplacian(vx, vy) + 0.5 * bracket(hu, hu);
  };
  return p;
}

// ------------------------------------------------------------------ L-shape

struct SingularSolutionParams {
  double alpha = 0.5444837367;
  double omega = 1.5 * std::numbers::pi;

  /// |sin^2(alpha omega) - alpha^2 sin^2(omega)|
  double residual() const {
    const double s = std::sin(alpha * omega), so = std::sin(omega);
    return std::abs(s * s - alpha * alpha * so * so);
  }
};

/// Angular part g_{alpha,omega}(theta) of the corner singularity and its first
/// two derivatives.
inline std::array<double, 3> singular_angular(double theta, const SingularSolutionParams& sp = {}) {
  const double am = sp.alpha - 1.0, ap = sp.alpha + 1.0, w = sp.omega;
  const double a = std::sin(am * w) / am - std::sin(ap * w) / ap;
  const double b = std::cos(am * w) - std::cos(ap * w);
  const double cm = std::cos(am * theta), cp = std::cos(ap * theta);
  const double sm = std::sin(am * theta), spp = std::sin(ap * theta);
  return {
      a * (cm - cp) - (sm / am - spp / ap) * b,
      a * (-am * sm + ap * spp) - (cm - cp) * b,
      a * (-am * am * cm + ap * ap * cp) - (-am * sm + ap * spp) * b,
  };
}

namespace detail {

// Polar angle in [0, 2 pi), or unwrapped to lie within pi of `reference`.
inline double polar_angle(const Vec2& x, double reference = -1.0) {
  double t = std::atan2(x.y(), x.x());
  if (reference < 0.0) return t < 0.0 ? t + 2.0 * std::numbers::pi : t;
  while (t < reference - std::numbers::pi) t += 2.0 * std::numbers::pi;
  while (t > reference + std::numbers::pi) t -= 2.0 * std::numbers::pi;
  return t;
}

// u = (1-x^2)^2 (1-y^2)^2 r^{1+alpha} g(theta). theta_ref < 0 means the
// standard branch theta in [0, 2 pi).
inline Jet lshape_jet(const Vec2& x, const SingularSolutionParams& sp, double theta_ref = -1.0) {
  Jet out;
  const double r = x.norm();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (r == 0.0) {
    out.hess << nan, nan, nan, nan;
    return out;
  }
  const double theta = polar_angle(x, theta_ref);
  const double beta = 1.0 + sp.alpha;
  const auto g = singular_angular(theta, sp);
  const double c = std::cos(theta), s = std::sin(theta);

  // singular factor S = r^beta g(theta)
  const double rb = std::pow(r, beta);
  const double sv = rb * g[0];
  const double s_r = beta * rb / r * g[0];
  const double s_t = rb * g[1];
  const double s_rr = beta * (beta - 1.0) * rb / (r * r) * g[0];
  const double s_rt = beta * rb / r * g[1];
  const double s_tt = rb * g[2];
  const Vec2 gs(c * s_r - s / r * s_t, s * s_r + c / r * s_t);
  const double lap_part = s_r / r + s_tt / (r * r);
  const double mix = s_rt / r - s_t / (r * r);
  Mat2 hs;
  hs(0, 0) = c * c * s_rr + s * s * lap_part - 2 * s * c * mix;
  hs(1, 1) = s * s * s_rr + c * c * lap_part + 2 * s * c * mix;
  hs(0, 1) = hs(1, 0) = s * c * (s_rr - lap_part) + (c * c - s * s) * mix;

  // cutoff C = (1-x^2)^2 (1-y^2)^2
  const double px = 1 - x.x() * x.x(), py = 1 - x.y() * x.y();
  const double cx = px * px, cy = py * py;
  const double dcx = -4 * x.x() * px, dcy = -4 * x.y() * py;
  const double ddcx = 12 * x.x() * x.x() - 4, ddcy = 12 * x.y() * x.y() - 4;
  const double cv = cx * cy;
  const Vec2 gc(dcx * cy, cx * dcy);
  Mat2 hc;
  hc << ddcx * cy, dcx * dcy, dcx * dcy, cx * ddcy;

  out.value = cv * sv;
  out.grad = cv * gs + sv * gc;
  out.hess = sv * hc + gc * gs.transpose() + gs * gc.transpose() + cv * hs;
  return out;
}

// Delta^2 u by fourth-order central differences of the analytic Laplacian.
inline double lshape_bilaplacian(const Vec2& x, const SingularSolutionParams& sp) {
  const double r = x.norm();
  const double h = 1e-4 * r;
  const double ref = polar_angle(x);
  auto lap = [&](const Vec2& p) { return lshape_jet(p, sp, ref).hess.trace(); };
  auto d2 = [&](const Vec2& dir) {
    return (-lap(x + 2 * h * dir) + 16 * lap(x + h * dir) - 30 * lap(x) + 16 * lap(x - h * dir) -
            lap(x - 2 * h * dir)) /
           (12 * h * h);
  };
  return d2(Vec2(1, 0)) + d2(Vec2(0, 1));
}

}  // namespace detail

/// u = v = (1-x^2)^2 (1-y^2)^2 r^{1+alpha} g_{alpha,omega}(theta) on
/// (-1,1)^2 minus [0,1)x(-1,0], theta in [0, 3 pi / 2] from the positive x-axis.
inline ExactSolutionPair exact_lshape(const SingularSolutionParams& sp = {}) {
  ExactSolutionPair p;
  p.u = [sp](const Vec2& x) { return detail::lshape_jet(x, sp); };
  p.v = p.u;
  p.f = [sp](const Vec2& x) {
    const Mat2 h = detail::lshape_jet(x, sp).hess;
    return detail::lshape_bilaplacian(x, sp) - bracket(h, h);
  };
  p.g = [sp](const Vec2& x) {
    const Mat2 h = detail::lshape_jet(x, sp).hess;
    return detail::lshape_bilaplacian(x, sp) + 0.5 * bracket(h, h);
  };
  return p;
}

}  // namespace vkplate
