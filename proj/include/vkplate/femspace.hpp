#pragma once

// Degree-of-freedom maps for the three quadratic discretisations.
//
// Every element carries six local functions. Their restriction to the element
// is stored as a 6x6 matrix `to_lagrange` whose columns are the coefficients
// in the Lagrange P2 frame (see geometry.hpp); all assembly happens in that
// frame and is pulled back through this matrix. Constrained local functions
// map to kConstrained and are dropped from the global system.

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vkplate/error.hpp"
#include "vkplate/geometry.hpp"
#include "vkplate/mesh.hpp"
#include "vkplate/quadrature.hpp"

namespace vkplate {

enum class Method { Morley, C0IP, DG };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Morley: return "morley";
    case Method::C0IP: return "c0ip";
    case Method::DG: return "dg";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "morley") return Method::Morley;
  if (s == "c0ip") return Method::C0IP;
  if (s == "dg") return Method::DG;
  throw InvalidArgument("unknown method '" + std::string(s) + "'");
}

inline constexpr int kConstrained = -1;

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

struct ElementDofs {
  std::array<int, 6> global{};
  Mat6 to_lagrange = Mat6::Identity();
};

struct DofMap {
  Method method = Method::DG;
  int n_global = 0;
  std::vector<ElementDofs> elements;

  /// Lagrange-frame coefficients of the global field `x` on element k.
  Vec6 local_lagrange(int k, const Eigen::VectorXd& x) const {
    const auto& ed = elements[k];
    Vec6 local;
    for (int a = 0; a < 6; ++a) local[a] = ed.global[a] == kConstrained ? 0.0 : x[ed.global[a]];
    return method == Method::Morley ? Vec6(ed.to_lagrange * local) : local;
  }
};

namespace detail {

/// Morley dual functionals applied to the Lagrange frame: rows are vertex
/// values (0..2) and edge means of the normal derivative (3..5) along the
/// global edge normal.
inline Mat6 morley_dual_matrix(const Triangulation& mesh, int k) {
  const ElementGeometry g = mesh.geometry(k);
  Mat6 d = Mat6::Zero();
  for (int i = 0; i < 3; ++i) d(i, i) = 1.0;
  for (int e = 0; e < 3; ++e) {
    const Vec2 normal = mesh.edges[mesh.tri_to_edge[k][e]].normal;
    // gradient of a P2 function is affine, so its edge mean is the midpoint value
    const P2Values vals = p2_eval(g, g.barycentric(g.edge_midpoint(e)));
    for (int j = 0; j < 6; ++j) d(3 + e, j) = vals.grad[j].dot(normal);
  }
  return d;
}

}  // namespace detail

/// Builds the global numbering: interior vertices, then interior edges (Morley,
/// C0IP), or six independent functions per element (DG).
inline DofMap build_dofmap(const Triangulation& mesh, Method method) {
  DofMap map;
  map.method = method;
  map.elements.resize(mesh.triangles.size());
  if (method == Method::DG) {
    map.n_global = 6 * mesh.n_triangles();
    for (int k = 0; k < mesh.n_triangles(); ++k)
      for (int a = 0; a < 6; ++a) map.elements[k].global[a] = 6 * k + a;
    return map;
  }

  std::vector<int> vertex_dof(mesh.vertices.size(), kConstrained);
  std::vector<int> edge_dof(mesh.edges.size(), kConstrained);
  int n = 0;
  for (int i = 0; i < mesh.n_vertices(); ++i)
    if (!mesh.vertices[i].on_boundary) vertex_dof[i] = n++;
  for (int e = 0; e < mesh.n_edges(); ++e)
    if (!mesh.edges[e].on_boundary()) edge_dof[e] = n++;
  map.n_global = n;

  for (int k = 0; k < mesh.n_triangles(); ++k) {
    auto& ed = map.elements[k];
    for (int i = 0; i < 3; ++i) {
      ed.global[i] = vertex_dof[mesh.triangles[k].v[i]];
      ed.global[3 + i] = edge_dof[mesh.tri_to_edge[k][i]];
    }
    if (method == Method::Morley) ed.to_lagrange = detail::morley_dual_matrix(mesh, k).inverse();
  }
  return map;
}

/// Renumbers global dofs: new index of old dof i is perm[i].
inline DofMap permute_dofs(DofMap map, const std::vector<int>& perm) {
  for (auto& ed : map.elements)
    for (auto& g : ed.global)
      if (g != kConstrained) g = perm[g];
  return map;
}

struct BasisJet {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

/// The six local functions of element k (in the dof map's own frame) at the
/// reference point `ref` = (x, y) of the reference triangle.
inline std::array<BasisJet, 6> eval_basis(const Triangulation& mesh, const DofMap& map, int k,
                                          const Vec2& ref) {
  const ElementGeometry g = mesh.geometry(k);
  const Bary b{1.0 - ref.x() - ref.y(), ref.x(), ref.y()};
  const P2Values lag = p2_eval(g, b);
  const auto hess = p2_hessians(g);
  const Mat6& t = map.elements[k].to_lagrange;
  const bool identity = map.method != Method::Morley;
  std::array<BasisJet, 6> out;
  for (int l = 0; l < 6; ++l) {
    for (int j = 0; j < 6; ++j) {
      const double c = identity ? (j == l ? 1.0 : 0.0) : t(j, l);
      if (c == 0.0) continue;
      out[l].value += c * lag.value[j];
      out[l].grad += c * lag.grad[j];
      out[l].hess += c * hess[j];
    }
  }
  return out;
}

/// A scalar field with value, gradient and Hessian.
struct Jet {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

using ScalarField = std::function<Jet(const Vec2&)>;

/// Morley interpolation: vertex values at interior vertices and edge means of
/// the normal derivative on interior edges (boundary dofs are zero).
inline Eigen::VectorXd morley_interpolate(const ScalarField& v, const Triangulation& mesh,
                                          const DofMap& map, int edge_degree = 8) {
  if (map.method != Method::Morley) throw InvalidArgument("morley_interpolate: needs a Morley dof map");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(map.n_global);
  const EdgeRule rule = edge_rule(edge_degree);
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const auto& ed = map.elements[k];
    for (int i = 0; i < 3; ++i) {
      if (ed.global[i] != kConstrained) x[ed.global[i]] = v(mesh.point(mesh.triangles[k].v[i])).value;
      if (ed.global[3 + i] != kConstrained) {
        const Edge& e = mesh.edges[mesh.tri_to_edge[k][i]];
        const Vec2 a = mesh.point(e.v[0]), b = mesh.point(e.v[1]);
        double mean = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
          mean += rule.weights[q] * v(a + rule.points[q] * (b - a)).grad.dot(e.normal);
        x[ed.global[3 + i]] = mean;
      }
    }
  }
  return x;
}

/// Nodal Lagrange interpolation for C0IP (interior nodes only) or DG (all
/// nodes of every element).
inline Eigen::VectorXd lagrange_interpolate(const std::function<double(const Vec2&)>& v,
                                            const Triangulation& mesh, const DofMap& map) {
  if (map.method == Method::Morley)
    throw InvalidArgument("lagrange_interpolate: needs a C0IP or DG dof map");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(map.n_global);
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const ElementGeometry g = mesh.geometry(k);
    for (int a = 0; a < 6; ++a) {
      const int gi = map.elements[k].global[a];
      if (gi != kConstrained) x[gi] = v(g.node(a));
    }
  }
  return x;
}

/// Element-wise Lagrange coefficients of a global field, as a DG vector.
inline Eigen::VectorXd to_broken(const DofMap& map, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(6 * map.elements.size());
  for (std::size_t k = 0; k < map.elements.size(); ++k)
    out.segment<6>(6 * k) = map.local_lagrange(static_cast<int>(k), x);
  return out;
}

}  // namespace vkplate
