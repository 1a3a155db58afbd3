#pragma once

// The three benchmark experiments (analytic square, L-shape uniform, L-shape
// adaptive) and their CSV / gnuplot output.

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "vkplate/estimate.hpp"
#include "vkplate/problems.hpp"

namespace vkplate {

enum class Example { SquareAnalytic, LShapeUniform, LShapeAdaptive };

inline std::string_view to_string(Example e) {
  switch (e) {
    case Example::SquareAnalytic: return "square_analytic";
    case Example::LShapeUniform: return "lshape_uniform";
    case Example::LShapeAdaptive: return "lshape_adaptive";
  }
  return "?";
}

inline Example parse_example(std::string_view s) {
  if (s == "square_analytic") return Example::SquareAnalytic;
  if (s == "lshape_uniform") return Example::LShapeUniform;
  if (s == "lshape_adaptive") return Example::LShapeAdaptive;
  throw InvalidArgument("unknown example '" + std::string(s) + "'");
}

enum class Refinement { Uniform, Adaptive };

struct ExperimentSpec {
  Example example = Example::SquareAnalytic;
  std::vector<Method> methods{Method::Morley};
  std::optional<Refinement> refine;        // default follows the example
  std::optional<Method> estimator;         // adaptive driver; default: first method
  int levels = 5;
  double theta = 0.5;
  int max_ndof = 10000;
  PenaltyConfig penalty;
  int quad_degree = 8;
  double newton_tol = 1e-10;
  std::optional<Triangulation> initial_mesh;

  Refinement refinement() const {
    if (refine) return *refine;
    return example == Example::LShapeAdaptive ? Refinement::Adaptive : Refinement::Uniform;
  }

  void validate() const {
    if (levels < 1) throw InvalidArgument("levels must be >= 1");
    if (!(theta > 0.0 && theta <= 1.0)) throw InvalidArgument("theta must lie in (0,1]");
    if (methods.empty()) throw InvalidArgument("no method selected");
    if (!(penalty.sigma_ip > 0.0) || !(penalty.sigma_dg > 0.0))
      throw InvalidArgument("penalty parameters must be positive");
    if (quad_degree < 1 || quad_degree > kMaxQuadratureDegree)
      throw InvalidArgument("quadrature degree must lie in [1," + std::to_string(kMaxQuadratureDegree) + "]");
    if (!(newton_tol > 0.0)) throw InvalidArgument("newton tolerance must be positive");
    if (max_ndof < 1) throw InvalidArgument("max_ndof must be positive");
  }
};

inline ExactSolutionPair example_problem(Example e) {
  return e == Example::SquareAnalytic ? exact_square() : exact_lshape();
}

inline Triangulation example_mesh(Example e) {
  return e == Example::SquareAnalytic ? unit_square_mesh() : lshape_mesh();
}

/// Trailing window of the empirical rate column.
inline int rate_window(Refinement r) { return r == Refinement::Adaptive ? 4 : 3; }

/// Runs the experiment, handing every record to `sink` as soon as it is
/// complete (so output survives a later solver failure). Rates are fitted per
/// method over the trailing window and are NaN until enough levels exist.
inline std::vector<ConvergenceRecord> run_experiment(
    const ExperimentSpec& spec, const std::function<void(const ConvergenceRecord&)>& sink = {}) {
  spec.validate();
  const ExactSolutionPair problem = example_problem(spec.example);
  Triangulation mesh = spec.initial_mesh ? *spec.initial_mesh : example_mesh(spec.example);
  const Refinement refine = spec.refinement();
  const int window = rate_window(refine);

  AdaptiveConfig cfg;
  cfg.theta = spec.theta;
  cfg.penalty = spec.penalty;
  cfg.quad_degree = spec.quad_degree;
  cfg.newton.tol = spec.newton_tol;
  const Method driver = spec.estimator.value_or(spec.methods.front());

  std::vector<ConvergenceRecord> all;
  std::map<std::string, std::vector<ConvergenceRecord>> per_method;
  auto emit = [&](ConvergenceRecord rec) {
    auto& hist = per_method[rec.method];
    hist.push_back(rec);
    if (static_cast<int>(hist.size()) >= std::max(window, 3) && rec.error_h > 0.0)
      rec.rate = convergence_rates(hist, window).back();
    all.push_back(rec);
    if (sink) sink(rec);
  };

  for (int level = 0; level < spec.levels; ++level) {
    if (refine == Refinement::Uniform) {
      for (Method m : spec.methods) emit(solve_level(mesh, m, problem, cfg, level).record);
      if (level + 1 < spec.levels) mesh = uniform_refine(mesh);
      continue;
    }
    const LevelResult drive = solve_level(mesh, driver, problem, cfg, level);
    for (Method m : spec.methods)
      emit(m == driver ? drive.record : solve_level(mesh, m, problem, cfg, level).record);
    if (drive.record.ndof >= spec.max_ndof || level + 1 == spec.levels) break;
    mesh = nvb_refine(mesh, dorfler_mark(drive.estimates.eta2, spec.theta));
  }
  return all;
}

// ------------------------------------------------------------------ output

inline constexpr std::string_view kCsvHeader =
    "method,level,ndof,error_u,error_v,error_h_norm,error_method_norm,estimator,oscillation,rate";

inline std::string csv_row(const ConvergenceRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%d,%d,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e", r.method.c_str(),
                r.level, r.ndof, r.error_u, r.error_v, r.error_h, r.error_method, r.estimator,
                r.oscillation, r.rate);
  return buf;
}

/// gnuplot script drawing error and estimator against ndof on log-log axes.
inline void write_gnuplot(std::ostream& out, const std::string& csv_path, const std::vector<Method>& methods,
                          std::string_view title) {
  out << "# gnuplot script for " << csv_path << "\n"
      << "set datafile separator ','\n"
      << "set logscale xy\n"
      << "set key outside right\n"
      << "set xlabel 'ndof'\n"
      << "set ylabel 'error / estimator'\n"
      << "set title '" << title << "'\n"
      << "set terminal pngcairo size 900,600\n"
      << "set output '" << csv_path << ".png'\n"
      << "plot \\\n";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const std::string m(to_string(methods[i]));
    out << "  '" << csv_path << "' every ::1 using 3:(strcol(1) eq '" << m
        << "' ? $6 : NaN) with linespoints title '" << m << " error', \\\n"
        << "  '" << csv_path << "' every ::1 using 3:(strcol(1) eq '" << m
        << "' ? $8 : NaN) with linespoints dashtype 2 title '" << m << " estimator'"
        << (i + 1 < methods.size() ? ", \\\n" : "\n");
  }
}

}  // namespace vkplate
