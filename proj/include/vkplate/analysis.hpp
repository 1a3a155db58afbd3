#pragma once

// Discrete norms on X + P2(T), errors against exact solutions, data
// oscillation and convergence rates.
//
// All norms act on "broken" fields: six Lagrange coefficients per element
// (see to_broken). Jumps follow the mesh edge orientation; on boundary edges
// the jump is the trace.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "vkplate/assembly.hpp"
#include "vkplate/femspace.hpp"
#include "vkplate/mesh.hpp"
#include "vkplate/quadrature.hpp"

namespace vkplate {

struct ExactSolutionPair {
  ScalarField u;
  ScalarField v;
  LoadFunction f;
  LoadFunction g;
};

enum class NormKind { NC, IP, DG, UnifiedH };

inline NormKind method_norm(Method m) {
  switch (m) {
    case Method::Morley: return NormKind::NC;
    case Method::C0IP: return NormKind::IP;
    case Method::DG: return NormKind::DG;
  }
  return NormKind::NC;
}

/// Squared pieces of all four norms for one scalar field.
struct NormParts {
  double hessian = 0.0;        // sum_K |D^2 e|^2_K
  double normal_jump = 0.0;    // sum_E h^-1 |[d_nu e]|^2_E
  double value_jump = 0.0;     // sum_E h^-3 |[e]|^2_E
  double mean_normal = 0.0;    // sum_E (mean_E [d_nu e])^2
  double vertex_jump = 0.0;    // sum_E h^-2 sum_{z in E} [e(z)]^2

  double squared(NormKind kind) const {
    switch (kind) {
      case NormKind::NC: return hessian;
      case NormKind::IP: return hessian + normal_jump;
      case NormKind::DG: return hessian + normal_jump + value_jump;
      case NormKind::UnifiedH: return hessian + mean_normal + vertex_jump;
    }
    return hessian;
  }
  double norm(NormKind kind) const { return std::sqrt(squared(kind)); }
};

/// Norm pieces of e = exact - field, or of the field alone when `exact` is empty.
inline NormParts norm_parts(const Triangulation& mesh, const Vector& broken,
                            const ScalarField& exact = {}, int degree = 8) {
  NormParts parts;
  const TriangleRule trule = triangle_rule(degree);
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const ElementGeometry g = mesh.geometry(k);
    const auto h = p2_hessians(g);
    Mat2 hk = Mat2::Zero();
    for (int a = 0; a < 6; ++a) hk += broken[6 * k + a] * h[a];
    if (!exact) {
      parts.hessian += g.area * ddot(hk, hk);
      continue;
    }
    double s = 0.0;
    for (std::size_t q = 0; q < trule.size(); ++q) {
      const Mat2 d = exact(g.point(trule.points[q])).hess - hk;
      s += trule.weights[q] * ddot(d, d);
    }
    parts.hessian += g.area * s;
  }

  const EdgeRule erule = edge_rule(exact ? degree : 4);
  auto jump_at = [&](const detail::EdgeEvaluator& ev, double t, double& value, Vec2& grad) {
    const auto tr = ev.trace(t);
    const int k0 = ev.edge().adjacent[0];
    value = 0.0;
    grad = Vec2::Zero();
    for (int a = 0; a < 6; ++a) {
      value += broken[6 * k0 + a] * tr.value[a];
      grad += broken[6 * k0 + a] * tr.grad[a];
    }
    if (ev.n_sides() == 2) {
      const int k1 = ev.edge().adjacent[1];
      for (int a = 0; a < 6; ++a) {
        value -= broken[6 * k1 + a] * tr.value[6 + a];
        grad -= broken[6 * k1 + a] * tr.grad[6 + a];
      }
      value = -value;
      grad = -grad;
    } else if (exact) {
      const Jet ex = exact(ev.point(t));
      value = ex.value - value;
      grad = ex.grad - grad;
    }
  };

  for (int e = 0; e < mesh.n_edges(); ++e) {
    const detail::EdgeEvaluator ev(mesh, e);
    const Edge& edge = ev.edge();
    const double he = edge.length;
    double dn2 = 0.0, val2 = 0.0, mean = 0.0;
    for (std::size_t q = 0; q < erule.size(); ++q) {
      double j;
      Vec2 jg;
      jump_at(ev, erule.points[q], j, jg);
      const double dn = jg.dot(edge.normal);
      dn2 += erule.weights[q] * dn * dn;
      val2 += erule.weights[q] * j * j;
      mean += erule.weights[q] * dn;
    }
    parts.normal_jump += dn2;            // h^-1 * (h * sum w)
    parts.value_jump += val2 / (he * he);
    parts.mean_normal += mean * mean;
    double j0, j1;
    Vec2 unused;
    jump_at(ev, 0.0, j0, unused);
    jump_at(ev, 1.0, j1, unused);
    parts.vertex_jump += (j0 * j0 + j1 * j1) / (he * he);
  }
  return parts;
}

/// Unified norm |v_h|_h of a discrete field in any of the three frames.
inline double unified_h_norm(const Triangulation& mesh, const DofMap& map, const Vector& x) {
  return norm_parts(mesh, to_broken(map, x)).norm(NormKind::UnifiedH);
}

inline double discrete_norm(const Triangulation& mesh, const DofMap& map, const Vector& x,
                            NormKind kind) {
  return norm_parts(mesh, to_broken(map, x)).norm(kind);
}

struct ErrorTriple {
  double u = 0.0;
  double v = 0.0;
  double total = 0.0;
};

/// Errors of Psi_h against the exact pair in the requested norm.
inline ErrorTriple error_norm(const Triangulation& mesh, const DofMap& map,
                              const DiscreteSolution& psi, const ExactSolutionPair& exact,
                              NormKind kind, int degree = 8) {
  ErrorTriple out;
  out.u = norm_parts(mesh, to_broken(map, psi.u), exact.u, degree).norm(kind);
  out.v = norm_parts(mesh, to_broken(map, psi.v), exact.v, degree).norm(kind);
  out.total = std::hypot(out.u, out.v);
  return out;
}

/// Local oscillations osc(f,K) = h_K^2 |f - mean_K f|_{L2(K)} and their l2 sum.
struct Oscillation {
  std::vector<double> local;
  double total = 0.0;
};

inline Oscillation oscillation(const LoadFunction& f, const Triangulation& mesh, int degree = 8) {
  const TriangleRule rule = triangle_rule(degree);
  Oscillation osc;
  osc.local.resize(mesh.triangles.size());
  double sum = 0.0;
  std::vector<double> fx(rule.size());
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const ElementGeometry g = mesh.geometry(k);
    double mean = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      fx[q] = f(g.point(rule.points[q]));
      mean += rule.weights[q] * fx[q];
    }
    double l2 = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) l2 += rule.weights[q] * (fx[q] - mean) * (fx[q] - mean);
    l2 *= g.area;
    const double h2 = g.diameter * g.diameter;
    osc.local[k] = h2 * std::sqrt(l2);
    sum += osc.local[k] * osc.local[k];
  }
  osc.total = std::sqrt(sum);
  return osc;
}

/// Element means of the Hessian of a smooth field.
inline std::vector<Mat2> mean_hessians(const ScalarField& u, const Triangulation& mesh, int degree = 8) {
  const TriangleRule rule = triangle_rule(degree);
  std::vector<Mat2> out(mesh.triangles.size());
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const ElementGeometry g = mesh.geometry(k);
    Mat2 m = Mat2::Zero();
    for (std::size_t q = 0; q < rule.size(); ++q) m += rule.weights[q] * u(g.point(rule.points[q])).hess;
    out[k] = m;
  }
  return out;
}

/// |(1 - Pi_0) D^2 Psi|_{L2}: distance of the Hessians from their element means.
inline double best_approx_term(const ExactSolutionPair& exact, const Triangulation& mesh, int degree = 8) {
  const TriangleRule rule = triangle_rule(degree);
  double sum = 0.0;
  for (const ScalarField* field : {&exact.u, &exact.v}) {
    const auto means = mean_hessians(*field, mesh, degree);
    for (int k = 0; k < mesh.n_triangles(); ++k) {
      const ElementGeometry g = mesh.geometry(k);
      double s = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Mat2 d = (*field)(g.point(rule.points[q])).hess - means[k];
        s += rule.weights[q] * ddot(d, d);
      }
      sum += g.area * s;
    }
  }
  return std::sqrt(sum);
}

/// Minimiser over P2(T) of |u - v_dG|_h via the normal equations of the
/// h-inner product. Returns DG (broken) coefficients.
inline Vector h_norm_best_approximation(const ScalarField& u, const Triangulation& mesh, int degree = 8) {
  const DofMap dg = build_dofmap(mesh, Method::DG);
  const int n = dg.n_global;
  SparseMatrix gram = assemble_hessian_form(mesh, dg);
  Vector rhs = Vector::Zero(n);

  const TriangleRule trule = triangle_rule(degree);
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const ElementGeometry g = mesh.geometry(k);
    const auto h = p2_hessians(g);
    Mat2 mean = Mat2::Zero();
    for (std::size_t q = 0; q < trule.size(); ++q) mean += trule.weights[q] * u(g.point(trule.points[q])).hess;
    for (int a = 0; a < 6; ++a) rhs[6 * k + a] += g.area * ddot(mean, h[a]);
  }

  // Edge functionals: mean normal-derivative jump and the two vertex jumps.
  const EdgeRule erule = edge_rule(degree);
  Triplets trip;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const detail::EdgeEvaluator ev(mesh, e);
    const Edge& edge = ev.edge();
    const int ns = ev.n_sides();
    std::array<int, 12> idx{};
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < 6; ++a) idx[6 * s + a] = 6 * edge.adjacent[s] + a;

    auto add_functional = [&](const std::array<double, 12>& row, double exact_value, double weight) {
      for (int i = 0; i < 6 * ns; ++i) {
        rhs[idx[i]] += weight * exact_value * row[i];
        for (int j = 0; j < 6 * ns; ++j)
          if (row[i] != 0.0 && row[j] != 0.0) trip.emplace_back(idx[i], idx[j], weight * row[i] * row[j]);
      }
    };

    std::array<double, 12> mean_row{};
    double mean_exact = 0.0;
    for (std::size_t q = 0; q < erule.size(); ++q) {
      const auto tr = ev.trace(erule.points[q]);
      for (int i = 0; i < 6 * ns; ++i)
        mean_row[i] += erule.weights[q] * (i < 6 ? 1.0 : -1.0) * tr.grad[i].dot(edge.normal);
      if (ns == 1) mean_exact += erule.weights[q] * u(ev.point(erule.points[q])).grad.dot(edge.normal);
    }
    add_functional(mean_row, mean_exact, 1.0);

    for (double t : {0.0, 1.0}) {
      const auto tr = ev.trace(t);
      std::array<double, 12> row{};
      for (int i = 0; i < 6 * ns; ++i) row[i] = (i < 6 ? 1.0 : -1.0) * tr.value[i];
      const double exact_value = ns == 1 ? u(ev.point(t)).value : 0.0;
      add_functional(row, exact_value, 1.0 / (edge.length * edge.length));
    }
  }
  gram += detail::from_triplets(n, n, trip);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw SolverError("h-norm Gram matrix is singular", "dg", 0);
  return ldlt.solve(rhs);
}

/// Empirical rate: -slope of the least-squares line through (log ndof, log error)
/// over the trailing `window` entries, so error ~ C ndof^{-rate}.
inline double fit_rate(const std::vector<double>& ndof, const std::vector<double>& error, int window = 3) {
  if (ndof.size() != error.size()) throw InvalidArgument("fit_rate: size mismatch");
  if (ndof.size() < 3 || window < 2) throw InvalidArgument("fit_rate: need at least 3 records");
  const std::size_t m = std::min<std::size_t>(window, ndof.size());
  const std::size_t first = ndof.size() - m;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = first; i < ndof.size(); ++i) {
    const double x = std::log(ndof[i]), y = std::log(error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dm = static_cast<double>(m);
  return -(dm * sxy - sx * sy) / (dm * sxx - sx * sx);
}

struct ConvergenceRecord {
  std::string method;
  int level = 0;
  int ndof = 0;
  double error_u = 0.0;
  double error_v = 0.0;
  double error_h = 0.0;       // unified h-norm of the pair error
  double error_method = 0.0;  // method's own norm of the pair error
  double estimator = 0.0;
  double oscillation = 0.0;
  double rate = std::nan("");
};

/// Rates of the h-norm error column, one per record (NaN until `window` records exist).
inline std::vector<double> convergence_rates(const std::vector<ConvergenceRecord>& records, int window = 3) {
  if (records.size() < 3) throw InvalidArgument("convergence_rates: need at least 3 records");
  std::vector<double> ndof, err, out(records.size(), std::nan(""));
  for (std::size_t i = 0; i < records.size(); ++i) {
    ndof.push_back(records[i].ndof);
    err.push_back(records[i].error_h);
    if (ndof.size() >= static_cast<std::size_t>(std::max(window, 3)))
      out[i] = fit_rate(ndof, err, window);
  }
  return out;
}

}  // namespace vkplate
