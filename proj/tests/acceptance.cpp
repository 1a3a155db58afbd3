// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance            run everything (several minutes, dominated by 1-4)
//   acceptance 5 6 10     run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "vkplate/experiment.hpp"

using namespace vkplate;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::vector<Method> kMethods{Method::Morley, Method::C0IP, Method::DG};

std::map<std::string, std::vector<ConvergenceRecord>> by_method(const std::vector<ConvergenceRecord>& all) {
  std::map<std::string, std::vector<ConvergenceRecord>> out;
  for (const auto& r : all) out[r.method].push_back(r);
  return out;
}

double trailing_slope(const std::vector<ConvergenceRecord>& recs, int n) {
  std::vector<double> ndof, err;
  for (std::size_t i = recs.size() - n; i < recs.size(); ++i) {
    ndof.push_back(recs[i].ndof);
    err.push_back(recs[i].error_h);
  }
  return fit_rate(ndof, err, n);
}

const std::vector<ConvergenceRecord>& uniform_run(Example e, int levels) {
  static std::map<std::pair<Example, int>, std::vector<ConvergenceRecord>> cache;
  auto it = cache.find({e, levels});
  if (it != cache.end()) return it->second;
  ExperimentSpec spec;
  spec.example = e;
  spec.methods = kMethods;
  spec.refine = Refinement::Uniform;
  spec.levels = levels;
  return cache[{e, levels}] = run_experiment(spec);
}

std::vector<Triangulation> fixture_meshes() { return {unit_square_mesh(), lshape_mesh()}; }

// --------------------------------------------------------------- criteria

Outcome square_rates() {
  const auto groups = by_method(uniform_run(Example::SquareAnalytic, 5));
  Outcome o{true, "slopes"};
  for (Method m : kMethods) {
    const double s = trailing_slope(groups.at(std::string(to_string(m))), 3);
    o.pass = o.pass && s >= 0.42 && s <= 0.58;
    o.detail += fmt(" %s=%.3f", std::string(to_string(m)).c_str(), s);
  }
  o.detail += " (band [0.42,0.58])";
  return o;
}

Outcome error_equivalence() {
  Outcome o{true, ""};
  for (auto [e, levels] : {std::pair{Example::SquareAnalytic, 5}, std::pair{Example::LShapeUniform, 6}}) {
    const auto g = by_method(uniform_run(e, levels));
    double lo = INFINITY, hi = 0.0, drift = 1.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        const auto& a = g.at(std::string(to_string(kMethods[i])));
        const auto& b = g.at(std::string(to_string(kMethods[j])));
        std::vector<double> ratios;
        for (std::size_t l = 2; l < a.size(); ++l) {
          const double r = a[l].error_h / b[l].error_h;
          lo = std::min(lo, r), hi = std::max(hi, r);
          ratios.push_back(r);
        }
        const auto [mn, mx] = std::minmax_element(ratios.end() - 3, ratios.end());
        drift = std::max(drift, *mx / *mn);
      }
    }
    o.pass = o.pass && lo >= 0.2 && hi <= 5.0 && drift < 2.0;
    o.detail += fmt("%s ratios in [%.3f,%.3f], drift %.3f; ", std::string(to_string(e)).c_str(), lo, hi, drift);
  }
  o.detail += "need [0.2,5] and drift < 2";
  return o;
}

Outcome lshape_uniform_rates() {
  const auto g = by_method(uniform_run(Example::LShapeUniform, 6));
  std::vector<double> s;
  Outcome o{true, "slopes"};
  for (Method m : kMethods) {
    s.push_back(trailing_slope(g.at(std::string(to_string(m))), 3));
    o.pass = o.pass && s.back() >= 0.18 && s.back() <= 0.35;
    o.detail += fmt(" %s=%.3f", std::string(to_string(m)).c_str(), s.back());
  }
  const double spread = *std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end());
  o.pass = o.pass && spread <= 0.05;
  o.detail += fmt(", spread %.3f (need each in [0.18,0.35], spread <= 0.05)", spread);
  return o;
}

Outcome adaptive_rates() {
  Outcome o{true, ""};
  for (Method driver : kMethods) {
    AdaptiveConfig cfg;
    cfg.theta = 0.5;
    cfg.max_levels = 40;
    cfg.max_ndof = 10000;
    const AdaptiveResult run = adaptive_loop(lshape_mesh(), exact_lshape(), driver, kMethods, cfg);
    const auto g = by_method(run.records);
    o.detail += fmt("driver %s:", std::string(to_string(driver)).c_str());
    for (Method m : kMethods) {
      const double s = trailing_slope(g.at(std::string(to_string(m))), 4);
      o.pass = o.pass && s >= 0.42;
      o.detail += fmt(" %s=%.3f", std::string(to_string(m)).c_str(), s);
    }

    const Triangulation& last = run.meshes.back();
    double mean = 0.0, corner = 0.0;
    for (int k = 0; k < last.n_triangles(); ++k) {
      const ElementGeometry geo = last.geometry(k);
      mean += geo.diameter;
      for (int v : last.triangles[k].v)
        if (last.point(v).norm() == 0.0) corner = std::max(corner, geo.diameter);
    }
    mean /= last.n_triangles();
    o.pass = o.pass && corner > 0.0 && corner < mean;
    o.detail += fmt(" corner diam %.2e < mean %.2e; ", corner, mean);
  }
  o.detail += "need slopes >= 0.42";
  return o;
}

Jet sin_squared(const Vec2& x) {
  const double pi = std::numbers::pi;
  const double sx = std::sin(pi * x.x()), cx = std::cos(pi * x.x());
  const double sy = std::sin(pi * x.y()), cy = std::cos(pi * x.y());
  const double X = sx * sx, Y = sy * sy;
  const double dX = 2 * pi * sx * cx, dY = 2 * pi * sy * cy;
  const double ddX = 2 * pi * pi * (cx * cx - sx * sx), ddY = 2 * pi * pi * (cy * cy - sy * sy);
  Jet j;
  j.value = X * Y;
  j.grad = Vec2(dX * Y, X * dY);
  j.hess << ddX * Y, dX * dY, dX * dY, X * ddY;
  return j;
}

Outcome morley_hessian_identity() {
  Outcome o{true, "max relative deviation"};
  for (int level : {2, 3, 4}) {
    const Triangulation m = refine_uniformly(unit_square_mesh(), level);
    const DofMap map = build_dofmap(m, Method::Morley);
    const Vector x = morley_interpolate(sin_squared, m, map);
    const auto means = mean_hessians(sin_squared, m, 8);
    double scale = 0.0, worst = 0.0;
    for (const Mat2& h : means) scale = std::max(scale, h.norm());
    for (int k = 0; k < m.n_triangles(); ++k)
      worst = std::max(worst, (element_hessian(m, map, x, k) - means[k]).norm());
    o.pass = o.pass && worst <= 1e-8 * scale;
    o.detail += fmt(" level %d: %.2e", level, worst / scale);
  }
  o.detail += " (need <= 1e-8)";
  return o;
}

Outcome norm_equality() {
  std::mt19937 rng(6);
  std::normal_distribution<double> N;
  double worst = 0.0;
  int samples = 0;
  for (const Triangulation& base : fixture_meshes()) {
    for (int level = 0; level < 3; ++level) {
      const Triangulation m = refine_uniformly(base, level);
      const DofMap map = build_dofmap(m, Method::Morley);
      for (int i = 0; i < 100; ++i, ++samples) {
        Vector x(map.n_global);
        for (auto& c : x) c = N(rng);
        const double nc = discrete_norm(m, map, x, NormKind::NC);
        worst = std::max(worst, std::abs(unified_h_norm(m, map, x) - nc) / nc);
      }
    }
  }
  return {worst <= 1e-10, fmt("%d vectors, max |h - NC| / NC = %.2e (need <= 1e-10)", samples, worst)};
}

Outcome best_approximation() {
  const ExactSolutionPair p = exact_square();
  const Triangulation m = refine_uniformly(unit_square_mesh(), 2);
  const DofMap map = build_dofmap(m, Method::Morley);
  const Vector best = h_norm_best_approximation(p.u, m);
  const double qp = norm_parts(m, best, p.u).norm(NormKind::UnifiedH);
  const double nc = norm_parts(m, to_broken(map, morley_interpolate(p.u, m, map)), p.u).norm(NormKind::NC);
  const double rel = std::abs(qp - nc) / nc;
  return {rel <= 1e-6, fmt("QP min %.10e, |u - I_M u|_NC %.10e, relative gap %.2e (need <= 1e-6)", qp, nc, rel)};
}

Outcome coercivity() {
  int factored = 0, total = 0;
  for (const Triangulation& base : fixture_meshes()) {
    Triangulation m = base;
    for (int level = 0; level <= 4; ++level) {
      for (Method method : {Method::C0IP, Method::DG}) {
        const DofMap map = build_dofmap(m, method);
        Eigen::SimplicialLLT<SparseMatrix> llt(assemble_biharmonic(m, map, method, PenaltyConfig{}));
        factored += llt.info() == Eigen::Success;
        ++total;
      }
      m = uniform_refine(m);
    }
  }
  return {factored == total, fmt("%d of %d Cholesky factorisations succeeded at sigma = 20", factored, total)};
}

Outcome newton_convergence() {
  const ExactSolutionPair p = exact_square();
  const Triangulation m = refine_uniformly(unit_square_mesh(), 3);
  Outcome o{true, "order"};
  double jac_worst = 0.0;
  std::mt19937 rng(9);
  std::normal_distribution<double> N;
  for (Method method : kMethods) {
    const DofMap map = build_dofmap(m, method);
    const NonlinearSystem sys(m, map, {}, assemble_load(p.f, p.g, m, map));
    const NewtonOptions opt;
    auto [psi, rep] = newton_solve(sys, opt);
    const double floor = opt.tol * std::max(1.0, sys.load().norm());
    const double order = newton_order(rep.residual_history, floor);
    o.pass = o.pass && rep.converged && order >= 1.7;
    if (std::isnan(order))
      o.detail += fmt(" %s=n/a (%zu residuals, fewer than 3 above tol)", std::string(to_string(method)).c_str(),
                      rep.residual_history.size());
    else
      o.detail += fmt(" %s=%.2f", std::string(to_string(method)).c_str(), order);

    // the residual is quadratic, so central differences are exact up to round-off
    const SparseMatrix jac = sys.jacobian(psi);
    const Vector base = psi.block();
    Vector dir(base.size());
    for (auto& c : dir) c = N(rng);
    const double t = 1e-3 * base.norm() / dir.norm();
    const auto at = [&](const Vector& x) { return sys.residual(DiscreteSolution::from_block(method, x)); };
    const Vector fd = (at(base + t * dir) - at(base - t * dir)) / (2 * t);
    const Vector exact = jac * dir;
    jac_worst = std::max(jac_worst, (fd - exact).norm() / exact.norm());
  }
  o.pass = o.pass && jac_worst <= 1e-9;
  o.detail += fmt(" (need >= 1.7); Jacobian central-difference gap %.2e (need <= 1e-9)", jac_worst);
  return o;
}

Outcome dorfler() {
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(U(rng) * 200);
    std::vector<double> eta2(n);
    for (double& e : eta2) e = std::pow(U(rng), 4);
    const double theta = std::max(1e-3, U(rng));
    const std::vector<int> marked = dorfler_mark(eta2, theta);
    double total = 0.0, sum = 0.0, smallest = INFINITY;
    for (double e : eta2) total += e;
    for (int k : marked) sum += eta2[k], smallest = std::min(smallest, eta2[k]);
    const bool bulk = sum >= theta * total;
    const bool minimal = !marked.empty() && sum - smallest < theta * total;
    bad += !(bulk && minimal);
  }
  return {bad == 0, fmt("%d of 1000 random cases violate bulk or minimality", bad)};
}

Outcome mesh_integrity() {
  std::mt19937 rng(11);
  std::bernoulli_distribution pick(0.3);
  struct Domain {
    Triangulation mesh;
    double area, perimeter;
  };
  double min_angle = std::numbers::pi;
  std::string failure;
  for (const Domain& d : {Domain{unit_square_mesh(), 1.0, 4.0}, Domain{lshape_mesh(), 3.0, 8.0}}) {
    Triangulation m = d.mesh;
    for (int round = 0; round < 10; ++round) {
      std::vector<int> marked;
      for (int k = 0; k < m.n_triangles(); ++k)
        if (pick(rng)) marked.push_back(k);
      m = nvb_refine(m, marked);
      std::vector<Vec2> x;
      std::vector<std::array<int, 3>> t;
      for (const auto& v : m.vertices) x.push_back(v.point());
      for (const auto& tri : m.triangles) t.push_back(tri.v);
      try {
        build_topology(x, t);  // rejects hanging vertices and over-shared edges
      } catch (const MeshError& e) {
        failure = e.what();
      }
      double area = 0.0, perimeter = 0.0;
      for (int k = 0; k < m.n_triangles(); ++k) area += m.geometry(k).area;
      for (const Edge& e : m.edges)
        if (e.on_boundary()) perimeter += e.length;
      if (std::abs(area - d.area) > 1e-12 || std::abs(perimeter - d.perimeter) > 1e-12)
        failure = "area or boundary length changed";
      if (euler_characteristic(m) != 1) failure = "Euler characteristic " + std::to_string(euler_characteristic(m));
      min_angle = std::min(min_angle, shape_regularity(m));
    }
  }
  const double bound = std::numbers::pi / 4;
  const bool ok = failure.empty() && min_angle >= bound * (1 - 1e-12);
  return {ok, fmt("20 rounds conforming%s, V-E+F=1, min angle %.2f deg (need >= 45)",
                  failure.empty() ? "" : (" FAILED: " + failure).c_str(), min_angle * 180 / std::numbers::pi)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"analytic square uniform rates", square_rates},
      {"error equivalence of the three methods", error_equivalence},
      {"L-shape uniform suboptimal rates", lshape_uniform_rates},
      {"adaptive optimal rates and corner refinement", adaptive_rates},
      {"Morley interpolation Hessian identity", morley_hessian_identity},
      {"h-norm equals NC norm on Morley functions", norm_equality},
      {"best-approximation equivalence", best_approximation},
      {"C0IP / DG matrices are SPD", coercivity},
      {"Newton quadratic convergence and exact Jacobian", newton_convergence},
      {"Doerfler marking correctness", dorfler},
      {"NVB mesh integrity", mesh_integrity},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s | %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
