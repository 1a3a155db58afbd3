#pragma once

// Conforming triangulations with edge topology, red refinement and
// newest-vertex bisection.
//
// Local conventions: triangle vertices are counterclockwise; local edge i is
// the edge opposite local vertex i; `refinement_edge` is the local index of
// the edge opposite the newest vertex. Edge normals point out of the
// lower-indexed adjacent triangle (outward on the boundary).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vkplate/error.hpp"
#include "vkplate/geometry.hpp"

namespace vkplate {

struct Vertex {
  double x = 0.0;
  double y = 0.0;
  bool on_boundary = false;

  Vec2 point() const { return {x, y}; }
};

struct Triangle {
  std::array<int, 3> v{};
  int refinement_edge = 0;
};

struct Edge {
  std::array<int, 2> v{};               // sorted vertex indices
  std::array<int, 2> adjacent{-1, -1};  // adjacent[1] == -1 on the boundary
  Vec2 normal = Vec2::Zero();
  Vec2 tangent = Vec2::Zero();
  double length = 0.0;

  bool on_boundary() const { return adjacent[1] < 0; }
};

struct Triangulation {
  std::vector<Vertex> vertices;
  std::vector<Triangle> triangles;
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> tri_to_edge;
  double h_max = 0.0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }

  int n_interior_vertices() const {
    return static_cast<int>(std::count_if(vertices.begin(), vertices.end(),
                                          [](const Vertex& v) { return !v.on_boundary; }));
  }
  int n_interior_edges() const {
    return static_cast<int>(
        std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return !e.on_boundary(); }));
  }

  Vec2 point(int vertex) const { return vertices[vertex].point(); }

  ElementGeometry geometry(int k) const {
    const auto& t = triangles[k].v;
    return ElementGeometry(point(t[0]), point(t[1]), point(t[2]));
  }

  /// Local index of edge `e` within triangle `k`, or -1.
  int local_edge(int k, int e) const {
    for (int i = 0; i < 3; ++i)
      if (tri_to_edge[k][i] == e) return i;
    return -1;
  }
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

inline int longest_edge(const std::vector<Vec2>& x, const std::array<int, 3>& t) {
  int best = 0;
  double best_len = -1.0;
  for (int i = 0; i < 3; ++i) {
    const double len = (x[t[(i + 1) % 3]] - x[t[(i + 2) % 3]]).norm();
    const double tol = 1e-12 * std::max(len, best_len);
    if (len > best_len + tol || (std::abs(len - best_len) <= tol && t[i] < t[best])) {
      best = i;
      best_len = std::max(len, best_len);
    }
  }
  return best;
}

// True if p lies strictly inside segment [a,b].
inline bool strictly_inside(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  const double t = (p - a).dot(d) / len2;
  if (t <= 1e-12 || t >= 1.0 - 1e-12) return false;
  return std::abs(cross2(d, p - a)) <= 1e-12 * len2;
}

}  // namespace detail

/// Builds edges, adjacency and boundary flags. `refinement_edges` may be empty,
/// in which case the longest edge of each triangle is tagged (ties go to the
/// lowest opposite-vertex index).
inline Triangulation build_topology(const std::vector<Vec2>& coords,
                                    const std::vector<std::array<int, 3>>& tris,
                                    std::span<const int> refinement_edges = {}) {
  const int nv = static_cast<int>(coords.size());
  if (!refinement_edges.empty() && refinement_edges.size() != tris.size()) {
    throw MeshError("build_topology: refinement edge list has wrong length");
  }
  Triangulation mesh;
  mesh.vertices.reserve(nv);
  for (const auto& c : coords) {
    if (!std::isfinite(c.x()) || !std::isfinite(c.y()))
      throw MeshError("build_topology: non-finite vertex coordinate");
    mesh.vertices.push_back({c.x(), c.y(), false});
  }

  mesh.triangles.reserve(tris.size());
  mesh.tri_to_edge.resize(tris.size());
  std::unordered_map<std::uint64_t, int> edge_index;
  edge_index.reserve(tris.size() * 2);
  for (std::size_t k = 0; k < tris.size(); ++k) {
    const auto& t = tris[k];
    for (int i = 0; i < 3; ++i) {
      if (t[i] < 0 || t[i] >= nv)
        throw MeshError("build_topology: triangle " + std::to_string(k) + " has invalid vertex index");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw MeshError("build_topology: triangle " + std::to_string(k) + " repeats a vertex");
    const double det = cross2(coords[t[1]] - coords[t[0]], coords[t[2]] - coords[t[0]]);
    if (!(det > 0.0))
      throw MeshError("build_topology: triangle " + std::to_string(k) +
                      " has non-positive signed area");
    Triangle tri{t, refinement_edges.empty() ? detail::longest_edge(coords, t)
                                             : refinement_edges[k]};
    if (tri.refinement_edge < 0 || tri.refinement_edge > 2)
      throw MeshError("build_topology: refinement edge out of range");
    mesh.triangles.push_back(tri);

    for (int i = 0; i < 3; ++i) {
      const int a = t[(i + 1) % 3], b = t[(i + 2) % 3];
      auto [it, inserted] = edge_index.try_emplace(detail::edge_key(a, b), mesh.n_edges());
      if (inserted) {
        Edge e;
        e.v = {std::min(a, b), std::max(a, b)};
        e.adjacent = {static_cast<int>(k), -1};
        const Vec2 d = coords[b] - coords[a];
        e.length = d.norm();
        e.normal = Vec2(d.y(), -d.x()) / e.length;  // outward from k (counterclockwise)
        e.tangent = Vec2(-e.normal.y(), e.normal.x());
        mesh.edges.push_back(e);
      } else {
        Edge& e = mesh.edges[it->second];
        if (e.adjacent[1] >= 0)
          throw MeshError("build_topology: edge (" + std::to_string(e.v[0]) + "," +
                          std::to_string(e.v[1]) + ") has more than two adjacent triangles");
        e.adjacent[1] = static_cast<int>(k);
      }
      mesh.tri_to_edge[k][i] = it->second;
    }
  }

  // Hanging vertices can only sit on edges with a single neighbour.
  std::vector<int> single;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (mesh.edges[e].on_boundary()) single.push_back(e);
  }
  std::vector<int> single_vertices;
  for (int e : single) {
    single_vertices.push_back(mesh.edges[e].v[0]);
    single_vertices.push_back(mesh.edges[e].v[1]);
  }
  std::sort(single_vertices.begin(), single_vertices.end());
  single_vertices.erase(std::unique(single_vertices.begin(), single_vertices.end()),
                        single_vertices.end());
  for (int e : single) {
    const Vec2 a = coords[mesh.edges[e].v[0]], b = coords[mesh.edges[e].v[1]];
    for (int z : single_vertices) {
      if (z == mesh.edges[e].v[0] || z == mesh.edges[e].v[1]) continue;
      if (detail::strictly_inside(coords[z], a, b))
        throw MeshError("build_topology: hanging vertex " + std::to_string(z) + " on edge (" +
                        std::to_string(mesh.edges[e].v[0]) + "," +
                        std::to_string(mesh.edges[e].v[1]) + ")");
    }
  }

  for (const auto& e : mesh.edges) {
    if (e.on_boundary()) {
      mesh.vertices[e.v[0]].on_boundary = true;
      mesh.vertices[e.v[1]].on_boundary = true;
    }
  }
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    mesh.h_max = std::max(mesh.h_max, mesh.geometry(k).diameter);
  }
  return mesh;
}

inline Triangulation build_topology(const Triangulation& like_coords_and_tris) {
  std::vector<Vec2> x;
  std::vector<std::array<int, 3>> t;
  std::vector<int> r;
  for (const auto& v : like_coords_and_tris.vertices) x.push_back(v.point());
  for (const auto& tri : like_coords_and_tris.triangles) {
    t.push_back(tri.v);
    r.push_back(tri.refinement_edge);
  }
  return build_topology(x, t, r);
}

/// V - E + F; equals 1 for a conforming mesh of a simply-connected domain.
inline int euler_characteristic(const Triangulation& mesh) {
  return mesh.n_vertices() - mesh.n_edges() + mesh.n_triangles();
}

/// Minimum interior angle over all triangles, in radians.
inline double shape_regularity(const Triangulation& mesh) {
  double min_angle = std::numbers::pi;
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      const Vec2 a = mesh.point(t.v[i]);
      const Vec2 u = mesh.point(t.v[(i + 1) % 3]) - a;
      const Vec2 w = mesh.point(t.v[(i + 2) % 3]) - a;
      const double angle = std::atan2(std::abs(cross2(u, w)), u.dot(w));
      min_angle = std::min(min_angle, angle);
    }
  }
  return min_angle;
}

/// Red refinement: each triangle is split into four similar children through
/// its edge midpoints. `parent`, if given, receives the parent index of every
/// child triangle.
inline Triangulation uniform_refine(const Triangulation& mesh, std::vector<int>* parent = nullptr) {
  std::vector<Vec2> x;
  x.reserve(mesh.vertices.size() + mesh.edges.size());
  for (const auto& v : mesh.vertices) x.push_back(v.point());
  std::vector<int> mid(mesh.edges.size());
  for (int e = 0; e < mesh.n_edges(); ++e) {
    mid[e] = static_cast<int>(x.size());
    x.push_back(0.5 * (mesh.point(mesh.edges[e].v[0]) + mesh.point(mesh.edges[e].v[1])));
  }
  std::vector<std::array<int, 3>> tris;
  std::vector<int> ref;
  tris.reserve(4 * mesh.triangles.size());
  if (parent) parent->clear();
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const auto& v = mesh.triangles[k].v;
    const int r = mesh.triangles[k].refinement_edge;
    const std::array<int, 3> m{mid[mesh.tri_to_edge[k][0]], mid[mesh.tri_to_edge[k][1]],
                               mid[mesh.tri_to_edge[k][2]]};
    // Children keep the vertex correspondence of the parent, so the local
    // refinement edge index carries over unchanged.
    tris.push_back({v[0], m[2], m[1]});
    tris.push_back({m[2], v[1], m[0]});
    tris.push_back({m[1], m[0], v[2]});
    tris.push_back({m[0], m[1], m[2]});
    for (int c = 0; c < 4; ++c) {
      ref.push_back(r);
      if (parent) parent->push_back(k);
    }
  }
  return build_topology(x, tris, ref);
}

/// Newest-vertex bisection of the marked triangles followed by closure.
///
/// Every marked triangle is bisected through its refinement edge; triangles
/// whose edges were split are bisected as often as needed to remove hanging
/// vertices. Untouched triangles keep their position and data.
inline Triangulation nvb_refine(const Triangulation& mesh, std::span<const int> marked,
                                std::vector<int>* parent = nullptr) {
  using detail::edge_key;
  std::vector<char> edge_marked(mesh.edges.size(), 0);
  for (int k : marked) {
    if (k < 0 || k >= mesh.n_triangles())
      throw MeshError("nvb_refine: marked triangle index out of range");
    const auto& t = mesh.triangles[k];
    edge_marked[mesh.tri_to_edge[k][t.refinement_edge]] = 1;
  }

  // closure: any triangle with a marked edge must also split its refinement edge
  const long max_sweeps = 10L * std::max(1, mesh.n_vertices());
  bool changed = true;
  long sweeps = 0;
  while (changed) {
    if (++sweeps > max_sweeps)
      throw MeshError("nvb_refine: closure did not terminate (corrupt refinement edges?)");
    changed = false;
    for (int k = 0; k < mesh.n_triangles(); ++k) {
      const auto& te = mesh.tri_to_edge[k];
      const int r = te[mesh.triangles[k].refinement_edge];
      if (!edge_marked[r] && (edge_marked[te[0]] || edge_marked[te[1]] || edge_marked[te[2]])) {
        edge_marked[r] = 1;
        changed = true;
      }
    }
  }

  std::vector<Vec2> x;
  for (const auto& v : mesh.vertices) x.push_back(v.point());
  std::unordered_map<std::uint64_t, int> midpoint;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (!edge_marked[e]) continue;
    const auto& ev = mesh.edges[e].v;
    midpoint.emplace(edge_key(ev[0], ev[1]), static_cast<int>(x.size()));
    x.push_back(0.5 * (x[ev[0]] + x[ev[1]]));
  }

  std::vector<std::array<int, 3>> tris;
  std::vector<int> ref;
  std::vector<int> par;

  // Recursive bisection: triangle (a,b,c) with refinement edge (b,c).
  auto emit = [&](auto&& self, int a, int b, int c, int k) -> void {
    auto it = midpoint.find(edge_key(b, c));
    if (it == midpoint.end()) {
      tris.push_back({a, b, c});
      ref.push_back(0);
      par.push_back(k);
      return;
    }
    const int m = it->second;
    // children (m,a,b) and (m,c,a): newest vertex m first, refinement edge 0
    self(self, m, a, b, k);
    self(self, m, c, a, k);
  };

  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const auto& t = mesh.triangles[k];
    const int r = t.refinement_edge;
    const int a = t.v[r], b = t.v[(r + 1) % 3], c = t.v[(r + 2) % 3];
    if (!edge_marked[mesh.tri_to_edge[k][r]]) {
      tris.push_back(t.v);
      ref.push_back(r);
      par.push_back(k);
      continue;
    }
    emit(emit, a, b, c, k);
  }
  if (parent) *parent = std::move(par);
  return build_topology(x, tris, ref);
}

// -- text format: "nv nt", nv lines "x y", nt lines "i j k" (0-based, ccw) --

inline Triangulation read_mesh(std::istream& in) {
  int nv = 0, nt = 0;
  if (!(in >> nv >> nt) || nv < 3 || nt < 1) throw MeshError("read_mesh: bad header");
  std::vector<Vec2> x(nv);
  for (int i = 0; i < nv; ++i) {
    if (!(in >> x[i].x() >> x[i].y())) throw MeshError("read_mesh: truncated vertex list");
  }
  std::vector<std::array<int, 3>> t(nt);
  for (int k = 0; k < nt; ++k) {
    if (!(in >> t[k][0] >> t[k][1] >> t[k][2]))
      throw MeshError("read_mesh: truncated triangle list");
  }
  return build_topology(x, t);
}

inline void write_mesh(std::ostream& out, const Triangulation& mesh) {
  std::ostringstream s;
  s.precision(17);
  s << mesh.n_vertices() << ' ' << mesh.n_triangles() << '\n';
  for (const auto& v : mesh.vertices) s << v.x << ' ' << v.y << '\n';
  for (const auto& t : mesh.triangles) s << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << '\n';
  out << s.str();
}

// -- fixture meshes --

/// Unit square cut by the diagonal (0,0)-(1,1).
inline Triangulation unit_square_two_triangles() {
  return build_topology({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
}

/// Unit square as 2x2 sub-squares, each cut by its bottom-left to top-right diagonal.
inline Triangulation unit_square_mesh() {
  std::vector<Vec2> x;
  for (int j = 0; j <= 2; ++j)
    for (int i = 0; i <= 2; ++i) x.emplace_back(0.5 * i, 0.5 * j);
  std::vector<std::array<int, 3>> t;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const int v00 = 3 * j + i, v10 = v00 + 1, v01 = v00 + 3, v11 = v00 + 4;
      t.push_back({v00, v10, v11});
      t.push_back({v00, v11, v01});
    }
  }
  return build_topology(x, t);
}

/// L-shaped domain (-1,1)^2 minus [0,1)x(-1,0] with 8 vertices and 6 triangles.
inline Triangulation lshape_mesh() {
  const std::vector<Vec2> x{{-1, -1}, {0, -1}, {0, 0}, {1, 0}, {1, 1}, {-1, 1}, {-1, 0}, {0, 1}};
  const std::vector<std::array<int, 3>> t{{0, 1, 2}, {0, 2, 6}, {6, 2, 7},
                                          {6, 7, 5}, {2, 3, 4}, {2, 4, 7}};
  return build_topology(x, t);
}

inline Triangulation single_triangle(const Vec2& a = {0, 0}, const Vec2& b = {1, 0},
                                     const Vec2& c = {0, 1}) {
  return build_topology({a, b, c}, {{0, 1, 2}});
}

/// Applies `n` red refinements.
inline Triangulation refine_uniformly(Triangulation mesh, int n) {
  for (int i = 0; i < n; ++i) mesh = uniform_refine(mesh);
  return mesh;
}

}  // namespace vkplate
