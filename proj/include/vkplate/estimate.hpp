#pragma once

// Residual a posteriori estimators, bulk (Doerfler) marking and the
// solve-estimate-mark-refine loop.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "vkplate/analysis.hpp"
#include "vkplate/assembly.hpp"
#include "vkplate/mesh.hpp"
#include "vkplate/solver.hpp"

namespace vkplate {

struct LocalEstimates {
  Method method = Method::Morley;
  std::vector<double> eta2;

  double total_squared() const { return std::accumulate(eta2.begin(), eta2.end(), 0.0); }
  double total() const { return std::sqrt(total_squared()); }
};

/// Local contributions eta^2(K) of the estimator matching psi.method.
///
/// Volume part (all methods): h_K^4 (|f + [u,v]|^2_K + |g - 1/2 [u,u]|^2_K).
/// Edge parts, each split evenly between the two neighbours:
///   Morley: h_E |[D^2 w] tau|^2_E on interior edges,
///   C0IP:   h_E |[D^2 w nu].nu|^2_E on interior edges, h_E^-1 |[grad w]|^2_E on all edges,
///   DG:     h_E^-3 |[w]|^2_E + h_E^-1 |[grad w]|^2_E on all edges,
/// summed over w = u, v.
inline LocalEstimates estimate(const Triangulation& mesh, const DofMap& map,
                               const DiscreteSolution& psi, const LoadFunction& f,
                               const LoadFunction& g, int degree = 8) {
  LocalEstimates out;
  out.method = psi.method;
  out.eta2.assign(mesh.triangles.size(), 0.0);
  const int nt = mesh.n_triangles();

  std::vector<Mat2> hu(nt), hv(nt);
  for (int k = 0; k < nt; ++k) {
    hu[k] = element_hessian(mesh, map, psi.u, k);
    hv[k] = element_hessian(mesh, map, psi.v, k);
  }

  const TriangleRule rule = triangle_rule(degree);
  for (int k = 0; k < nt; ++k) {
    const ElementGeometry geo = mesh.geometry(k);
    const double buv = bracket(hu[k], hv[k]);
    const double buu = bracket(hu[k], hu[k]);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 x = geo.point(rule.points[q]);
      const double r1 = (f ? f(x) : 0.0) + buv;
      const double r2 = (g ? g(x) : 0.0) - 0.5 * buu;
      s += rule.weights[q] * (r1 * r1 + r2 * r2);
    }
    const double h2 = geo.diameter * geo.diameter;
    out.eta2[k] += h2 * h2 * geo.area * s;
  }

  const Vector bu = to_broken(map, psi.u), bv = to_broken(map, psi.v);
  const EdgeRule erule = edge_rule(4);
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const detail::EdgeEvaluator ev(mesh, e);
    const Edge& edge = ev.edge();
    const double he = edge.length;
    const bool interior = !edge.on_boundary();
    double contrib = 0.0;

    if (interior && psi.method != Method::DG) {
      const int k0 = edge.adjacent[0], k1 = edge.adjacent[1];
      for (const auto* h : {&hu, &hv}) {
        const Mat2 jump = (*h)[k0] - (*h)[k1];
        if (psi.method == Method::Morley) {
          contrib += he * he * (jump * edge.tangent).squaredNorm();
        } else {
          const double nn = edge.normal.dot(jump * edge.normal);
          contrib += he * he * nn * nn;
        }
      }
    }

    if (psi.method != Method::Morley) {
      double grad2 = 0.0, val2 = 0.0;
      for (std::size_t q = 0; q < erule.size(); ++q) {
        const auto tr = ev.trace(erule.points[q]);
        for (const Vector* b : {&bu, &bv}) {
          double j = 0.0;
          Vec2 jg = Vec2::Zero();
          for (int s = 0; s < ev.n_sides(); ++s) {
            const double sign = s == 0 ? 1.0 : -1.0;
            const int k = edge.adjacent[s];
            for (int a = 0; a < 6; ++a) {
              j += sign * (*b)[6 * k + a] * tr.value[6 * s + a];
              jg += sign * (*b)[6 * k + a] * tr.grad[6 * s + a];
            }
          }
          grad2 += erule.weights[q] * jg.squaredNorm();
          val2 += erule.weights[q] * j * j;
        }
      }
      contrib += grad2;  // h^-1 * h * sum w
      if (psi.method == Method::DG) contrib += val2 / (he * he);
    }

    if (interior) {
      out.eta2[edge.adjacent[0]] += 0.5 * contrib;
      out.eta2[edge.adjacent[1]] += 0.5 * contrib;
    } else {
      out.eta2[edge.adjacent[0]] += contrib;
    }
  }
  return out;
}

/// Minimal set M with theta * sum eta^2 <= sum_M eta^2, chosen greedily by
/// decreasing eta^2 (ties: lower index first). Returned in ascending order.
inline std::vector<int> dorfler_mark(const std::vector<double>& eta2, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw InvalidArgument("dorfler_mark: theta must lie in (0,1]");
  std::vector<int> order(eta2.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return eta2[a] > eta2[b]; });
  double total = 0.0;
  for (int k : order) total += eta2[k];
  std::vector<int> marked;
  if (!(total > 0.0)) return marked;
  const double goal = theta * total;
  double sum = 0.0;
  for (int k : order) {
    if (sum >= goal) break;
    marked.push_back(k);
    sum += eta2[k];
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

struct AdaptiveConfig {
  double theta = 0.5;
  int max_levels = 12;
  int max_ndof = 100000;
  PenaltyConfig penalty;
  NewtonOptions newton;
  int quad_degree = 8;
};

struct LevelResult {
  DiscreteSolution solution;
  NewtonReport report;
  LocalEstimates estimates;
  ConvergenceRecord record;
};

/// Solve, estimate and (when exact data is known) measure errors on one mesh.
inline LevelResult solve_level(const Triangulation& mesh, Method method,
                               const ExactSolutionPair& problem, const AdaptiveConfig& cfg, int level) {
  const DofMap map = build_dofmap(mesh, method);
  const Vector load = assemble_load(problem.f, problem.g, mesh, map, cfg.quad_degree);
  NewtonOptions nopt = cfg.newton;
  nopt.level = level;
  auto [psi, report] = newton_solve(mesh, map, cfg.penalty, load, nopt);
  if (!report.converged)
    throw SolverError("Newton iteration did not converge in " + std::to_string(report.iterations) +
                          " steps",
                      std::string(to_string(method)), level);

  LevelResult out{psi, report, estimate(mesh, map, psi, problem.f, problem.g, cfg.quad_degree), {}};
  ConvergenceRecord& rec = out.record;
  rec.method = std::string(to_string(method));
  rec.level = level;
  rec.ndof = 2 * map.n_global;
  rec.estimator = out.estimates.total();
  const double of = oscillation(problem.f, mesh, cfg.quad_degree).total;
  const double og = problem.g ? oscillation(problem.g, mesh, cfg.quad_degree).total : 0.0;
  rec.oscillation = std::hypot(of, og);
  if (problem.u && problem.v) {
    const Vector u = to_broken(map, psi.u), v = to_broken(map, psi.v);
    const NormParts pu = norm_parts(mesh, u, problem.u, cfg.quad_degree);
    const NormParts pv = norm_parts(mesh, v, problem.v, cfg.quad_degree);
    const NormKind own = method_norm(method);
    rec.error_u = pu.norm(NormKind::UnifiedH);
    rec.error_v = pv.norm(NormKind::UnifiedH);
    rec.error_h = std::hypot(rec.error_u, rec.error_v);
    rec.error_method = std::sqrt(pu.squared(own) + pv.squared(own));
  }
  return out;
}

struct AdaptiveResult {
  std::vector<ConvergenceRecord> records;  // one per level and reported method
  std::vector<Triangulation> meshes;
};

/// Solve -> Estimate -> Mark -> Refine driven by the estimator of `driver`.
/// Every method in `report` is solved on each mesh and recorded. Stops after
/// cfg.max_levels meshes or once the driver's ndof exceeds cfg.max_ndof.
inline AdaptiveResult adaptive_loop(const Triangulation& initial, const ExactSolutionPair& problem,
                                    Method driver, const std::vector<Method>& report,
                                    const AdaptiveConfig& cfg) {
  if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) throw InvalidArgument("adaptive_loop: theta must lie in (0,1]");
  AdaptiveResult out;
  Triangulation mesh = initial;
  for (int level = 0; level < cfg.max_levels; ++level) {
    out.meshes.push_back(mesh);
    const LevelResult drive = solve_level(mesh, driver, problem, cfg, level);
    for (Method m : report) {
      out.records.push_back(m == driver ? drive.record : solve_level(mesh, m, problem, cfg, level).record);
    }
    if (drive.record.ndof >= cfg.max_ndof || level + 1 == cfg.max_levels) break;
    const auto marked = dorfler_mark(drive.estimates.eta2, cfg.theta);
    mesh = nvb_refine(mesh, marked);
  }
  return out;
}

inline std::vector<ConvergenceRecord> adaptive_loop(const Triangulation& initial,
                                                    const ExactSolutionPair& problem, Method method,
                                                    const AdaptiveConfig& cfg) {
  return adaptive_loop(initial, problem, method, {method}, cfg).records;
}

}  // namespace vkplate
