#pragma once

// Assembly of the discrete biharmonic forms, the von Karman trilinear form and
// the load functional. The unknown is the block vector [u; v] of length
// 2 * n_global.

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "vkplate/error.hpp"
#include "vkplate/femspace.hpp"
#include "vkplate/geometry.hpp"
#include "vkplate/mesh.hpp"
#include "vkplate/quadrature.hpp"

namespace vkplate {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

struct PenaltyConfig {
  double sigma_ip = 20.0;
  double sigma_dg = 20.0;
  /// Edge terms on boundary edges (jump = trace). Only switched off in tests.
  bool boundary_edges = true;
};

struct DiscreteSolution {
  Method method = Method::DG;
  Vector u;
  Vector v;

  Vector block() const {
    Vector x(u.size() + v.size());
    x << u, v;
    return x;
  }
  static DiscreteSolution from_block(Method m, const Vector& x) {
    const auto n = x.size() / 2;
    return {m, x.head(n), x.tail(n)};
  }
};

/// max |A - A^T| relative to max |A|.
inline double asymmetry(const SparseMatrix& a) {
  const SparseMatrix d = SparseMatrix(a.transpose()) - a;
  double amax = 0.0, dmax = 0.0;
  for (int j = 0; j < a.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) amax = std::max(amax, std::abs(it.value()));
  for (int j = 0; j < d.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(d, j); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
  return amax > 0.0 ? dmax / amax : dmax;
}

namespace detail {

// Scatters a local Lagrange-frame matrix of one (nl = 6) or two (nl = 12)
// elements into global triplets, offset by (row_off, col_off).
inline void scatter(const DofMap& map, std::span<const int> elems, const Eigen::MatrixXd& local,
                    Triplets& out, int row_off = 0, int col_off = 0) {
  const int ne = static_cast<int>(elems.size());
  Eigen::MatrixXd m = local;
  if (map.method == Method::Morley) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(6 * ne, 6 * ne);
    for (int s = 0; s < ne; ++s) t.block<6, 6>(6 * s, 6 * s) = map.elements[elems[s]].to_lagrange;
    m = t.transpose() * local * t;
  }
  for (int s = 0; s < ne; ++s) {
    for (int a = 0; a < 6; ++a) {
      const int ga = map.elements[elems[s]].global[a];
      if (ga == kConstrained) continue;
      for (int r = 0; r < ne; ++r) {
        for (int b = 0; b < 6; ++b) {
          const int gb = map.elements[elems[r]].global[b];
          if (gb == kConstrained) continue;
          const double val = m(6 * s + a, 6 * r + b);
          if (val != 0.0) out.emplace_back(row_off + ga, col_off + gb, val);
        }
      }
    }
  }
}

inline void scatter_vector(const DofMap& map, int k, const Vec6& local_lagrange, Vector& out,
                           int offset = 0) {
  const auto& ed = map.elements[k];
  const Vec6 m = map.method == Method::Morley ? Vec6(ed.to_lagrange.transpose() * local_lagrange)
                                              : local_lagrange;
  for (int a = 0; a < 6; ++a)
    if (ed.global[a] != kConstrained) out[offset + ed.global[a]] += m[a];
}

inline SparseMatrix from_triplets(int rows, int cols, const Triplets& t) {
  SparseMatrix a(rows, cols);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

// Traces of the Lagrange frames of the (one or two) elements adjacent to an
// edge at one edge point. Entries 0..5 belong to adjacent[0] (sign +1),
// entries 6..11 to adjacent[1] (sign -1).
struct EdgeTrace {
  int n_sides = 1;
  std::array<double, 12> value{};
  std::array<Vec2, 12> grad{};
  std::array<Mat2, 12> hess{};
};

class EdgeEvaluator {
 public:
  EdgeEvaluator(const Triangulation& mesh, int e) : edge_(mesh.edges[e]) {
    n_sides_ = edge_.on_boundary() ? 1 : 2;
    for (int s = 0; s < n_sides_; ++s) {
      geom_[s] = mesh.geometry(edge_.adjacent[s]);
      hess_[s] = p2_hessians(geom_[s]);
    }
    a_ = mesh.point(edge_.v[0]);
    b_ = mesh.point(edge_.v[1]);
  }

  int n_sides() const { return n_sides_; }
  const Edge& edge() const { return edge_; }
  Vec2 point(double t) const { return a_ + t * (b_ - a_); }

  EdgeTrace trace(double t) const {
    EdgeTrace tr;
    tr.n_sides = n_sides_;
    const Vec2 x = point(t);
    for (int s = 0; s < n_sides_; ++s) {
      const P2Values pv = p2_eval(geom_[s], geom_[s].barycentric(x));
      for (int a = 0; a < 6; ++a) {
        tr.value[6 * s + a] = pv.value[a];
        tr.grad[6 * s + a] = pv.grad[a];
        tr.hess[6 * s + a] = hess_[s][a];
      }
    }
    return tr;
  }

 private:
  const Edge& edge_;
  int n_sides_ = 1;
  std::array<ElementGeometry, 2> geom_;
  std::array<std::array<Mat2, 6>, 2> hess_;
  Vec2 a_, b_;
};

}  // namespace detail

/// Broken Hessian form sum_K int_K D^2 u : D^2 v (volume terms only), for any dof map.
inline SparseMatrix assemble_hessian_form(const Triangulation& mesh, const DofMap& map) {
  Triplets trip;
  trip.reserve(36 * mesh.triangles.size());
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const ElementGeometry g = mesh.geometry(k);
    const auto h = p2_hessians(g);
    Eigen::MatrixXd local(6, 6);
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) local(a, b) = g.area * ddot(h[a], h[b]);
    const int elems[1] = {k};
    detail::scatter(map, elems, local, trip);
  }
  return detail::from_triplets(map.n_global, map.n_global, trip);
}

/// Scalar biharmonic matrix for the given method: a_NC (Morley), a_IP (C0IP)
/// or a_dG (DG). The vector form is block diagonal with two copies.
inline SparseMatrix assemble_biharmonic(const Triangulation& mesh, const DofMap& map, Method method,
                                        const PenaltyConfig& penalty = {}) {
  if (map.method != method) throw InvalidArgument("assemble_biharmonic: method/dof map mismatch");
  SparseMatrix a = assemble_hessian_form(mesh, map);
  if (method == Method::Morley) return a;

  const EdgeRule rule = edge_rule(4);  // value jumps are degree 4 on the edge
  Triplets trip;
  trip.reserve(144 * mesh.edges.size());
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const Edge& edge = mesh.edges[e];
    if (edge.on_boundary() && !penalty.boundary_edges) continue;
    const detail::EdgeEvaluator ev(mesh, e);
    const int ns = ev.n_sides();
    const int nl = 6 * ns;
    const double avg = ns == 2 ? 0.5 : 1.0;
    const Vec2& nu = edge.normal;
    const double h = edge.length;
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nl, nl);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * h;
      const auto tr = ev.trace(rule.points[q]);
      std::array<double, 12> jump{}, jump_dn{}, avg_nn{};
      std::array<Vec2, 12> jump_grad, avg_hn;
      for (int i = 0; i < nl; ++i) {
        const double sign = i < 6 ? 1.0 : -1.0;
        jump[i] = sign * tr.value[i];
        jump_grad[i] = sign * tr.grad[i];
        jump_dn[i] = jump_grad[i].dot(nu);
        avg_hn[i] = avg * (tr.hess[i] * nu);
        avg_nn[i] = avg_hn[i].dot(nu);
      }
      for (int i = 0; i < nl; ++i) {
        for (int j = 0; j < nl; ++j) {
          double val;
          if (method == Method::C0IP) {
            val = -avg_nn[i] * jump_dn[j] - avg_nn[j] * jump_dn[i] +
                  penalty.sigma_ip / h * jump_dn[i] * jump_dn[j];
          } else {
            val = -avg_hn[i].dot(jump_grad[j]) - avg_hn[j].dot(jump_grad[i]) +
                  penalty.sigma_dg / (h * h * h) * jump[i] * jump[j] +
                  penalty.sigma_dg / h * jump_dn[i] * jump_dn[j];
          }
          local(i, j) += w * val;
        }
      }
    }
    std::array<int, 2> elems{edge.adjacent[0], edge.adjacent[1]};
    detail::scatter(map, std::span<const int>(elems.data(), ns), local, trip);
  }
  return a + detail::from_triplets(map.n_global, map.n_global, trip);
}

/// Block-diagonal vector operator diag(a, a).
inline SparseMatrix block_diagonal(const SparseMatrix& a) {
  const int n = static_cast<int>(a.rows());
  Triplets trip;
  trip.reserve(2 * a.nonZeros());
  for (int j = 0; j < a.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) {
      trip.emplace_back(it.row(), it.col(), it.value());
      trip.emplace_back(n + it.row(), n + it.col(), it.value());
    }
  }
  return detail::from_triplets(2 * n, 2 * n, trip);
}

/// Constant Hessian of the field `x` on element k.
inline Mat2 element_hessian(const Triangulation& mesh, const DofMap& map, const Vector& x, int k) {
  const auto h = p2_hessians(mesh.geometry(k));
  const Vec6 c = map.local_lagrange(k, x);
  Mat2 out = Mat2::Zero();
  for (int a = 0; a < 6; ++a) out += c[a] * h[a];
  return out;
}

/// The (constant) value of [xi, theta] on element k.
inline double assemble_bracket_element(const Triangulation& mesh, const DofMap& map,
                                       const Vector& xi, const Vector& theta, int k) {
  return bracket(element_hessian(mesh, map, xi, k), element_hessian(mesh, map, theta, k));
}

/// Block vector with entries B_h(Xi, Theta, Phi_i) for every test function Phi_i, where
/// B_h(Xi,Theta,Phi) = b_h(xi1,theta2,phi1) + b_h(xi2,theta1,phi1) - b_h(xi1,theta1,phi2)
/// and b_h(eta,chi,phi) = -1/2 sum_K int_K [eta,chi] phi.
inline Vector assemble_trilinear_vector(const Triangulation& mesh, const DofMap& map,
                                        const DiscreteSolution& xi, const DiscreteSolution& theta) {
  const int n = map.n_global;
  Vector out = Vector::Zero(2 * n);
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const ElementGeometry g = mesh.geometry(k);
    const auto mass = p2_integrals(g);
    const Mat2 x1 = element_hessian(mesh, map, xi.u, k), x2 = element_hessian(mesh, map, xi.v, k);
    const Mat2 t1 = element_hessian(mesh, map, theta.u, k);
    const Mat2 t2 = element_hessian(mesh, map, theta.v, k);
    const double c1 = -0.5 * (bracket(x1, t2) + bracket(x2, t1));
    const double c2 = 0.5 * bracket(x1, t1);
    Vec6 l1, l2;
    for (int a = 0; a < 6; ++a) {
      l1[a] = c1 * mass[a];
      l2[a] = c2 * mass[a];
    }
    detail::scatter_vector(map, k, l1, out, 0);
    detail::scatter_vector(map, k, l2, out, n);
  }
  return out;
}

/// Matrix of Theta -> 2 B_h(Psi, Theta, .), the derivative of B_h(Psi,Psi,.).
///
/// Blocks (test, trial): (u,u) = -[psi2, .], (u,v) = -[psi1, .], (v,u) = +[psi1, .],
/// (v,v) = 0, each weighted by int_K phi.
inline SparseMatrix assemble_trilinear_jacobian(const Triangulation& mesh, const DofMap& map,
                                                const DiscreteSolution& psi) {
  const int n = map.n_global;
  Triplets trip;
  trip.reserve(3 * 36 * mesh.triangles.size());
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const ElementGeometry g = mesh.geometry(k);
    const auto mass = p2_integrals(g);
    const auto h = p2_hessians(g);
    const Mat2 p1 = element_hessian(mesh, map, psi.u, k), p2 = element_hessian(mesh, map, psi.v, k);
    Eigen::MatrixXd uu(6, 6), uv(6, 6), vu(6, 6);
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        uu(a, b) = -mass[a] * bracket(p2, h[b]);
        uv(a, b) = -mass[a] * bracket(p1, h[b]);
        vu(a, b) = mass[a] * bracket(p1, h[b]);
      }
    }
    const int elems[1] = {k};
    detail::scatter(map, elems, uu, trip, 0, 0);
    detail::scatter(map, elems, uv, trip, 0, n);
    detail::scatter(map, elems, vu, trip, n, 0);
  }
  return detail::from_triplets(2 * n, 2 * n, trip);
}

using LoadFunction = std::function<double(const Vec2&)>;

/// Block load vector [(f, phi_i); (g, phi_i)].
inline Vector assemble_load(const LoadFunction& f, const LoadFunction& g, const Triangulation& mesh,
                            const DofMap& map, int degree = 8) {
  const int n = map.n_global;
  const TriangleRule rule = triangle_rule(degree);
  Vector out = Vector::Zero(2 * n);
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const ElementGeometry geo = mesh.geometry(k);
    Vec6 l1 = Vec6::Zero(), l2 = Vec6::Zero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 x = geo.point(rule.points[q]);
      const P2Values pv = p2_eval(geo, rule.points[q]);
      const double w = rule.weights[q] * geo.area;
      const double fx = f ? f(x) : 0.0, gx = g ? g(x) : 0.0;
      for (int a = 0; a < 6; ++a) {
        l1[a] += w * fx * pv.value[a];
        l2[a] += w * gx * pv.value[a];
      }
    }
    detail::scatter_vector(map, k, l1, out, 0);
    detail::scatter_vector(map, k, l2, out, n);
  }
  return out;
}

}  // namespace vkplate
