// vkplate: run the von Karman benchmark experiments and write convergence CSVs.
//
//   vkplate --example square_analytic --method all --levels 5 --out square.csv
//   vkplate --example lshape_adaptive --method dg --estimator dg --emit-plot
//
// Exit codes: 0 success, 1 solver failure, 2 invalid input.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vkplate/vkplate.hpp"

namespace {

std::vector<vkplate::Method> parse_methods(const std::string& s) {
  using vkplate::Method;
  if (s == "all") return {Method::Morley, Method::C0IP, Method::DG};
  return {vkplate::parse_method(s)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morley / C0IP / DG finite element experiments for the von Karman plate equations"};

  std::string example = "square_analytic", method = "morley", refine, estimator, out = "vkplate.csv";
  std::string mesh_file;
  int levels = 5;
  unsigned seed = 0;
  bool emit_plot = false;
  vkplate::ExperimentSpec spec;

  app.add_option("--example", example, "square_analytic | lshape_uniform | lshape_adaptive")
      ->capture_default_str();
  app.add_option("--method", method, "morley | c0ip | dg | all")->capture_default_str();
  app.add_option("--levels", levels, "number of meshes (uniform) or maximal adaptive levels")
      ->capture_default_str();
  app.add_option("--theta", spec.theta, "Doerfler bulk parameter")->capture_default_str();
  app.add_option("--sigma-ip", spec.penalty.sigma_ip, "C0IP penalty")->capture_default_str();
  app.add_option("--sigma-dg", spec.penalty.sigma_dg, "DG penalty")->capture_default_str();
  app.add_option("--refine", refine, "uniform | adaptive (default follows --example)");
  app.add_option("--estimator", estimator, "estimator driving adaptive refinement: morley | c0ip | dg");
  app.add_option("--max-ndof", spec.max_ndof, "stop adaptive refinement once the driver exceeds this")
      ->capture_default_str();
  app.add_option("--out", out, "CSV output file")->capture_default_str();
  app.add_option("--quad-degree", spec.quad_degree, "volume quadrature degree")->capture_default_str();
  app.add_option("--newton-tol", spec.newton_tol, "relative Newton residual tolerance")->capture_default_str();
  app.add_option("--mesh", mesh_file, "initial mesh file (overrides the example's mesh)");
  app.add_option("--seed", seed, "unused by the deterministic experiments; accepted for scripting");
  app.add_flag("--emit-plot", emit_plot, "also write <out>.gp, a gnuplot script");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::ofstream csv;
  try {
    spec.example = vkplate::parse_example(example);
    spec.methods = parse_methods(method);
    spec.levels = levels;
    if (!refine.empty()) {
      if (refine == "uniform") spec.refine = vkplate::Refinement::Uniform;
      else if (refine == "adaptive") spec.refine = vkplate::Refinement::Adaptive;
      else throw vkplate::InvalidArgument("unknown refinement '" + refine + "'");
    }
    if (!estimator.empty()) spec.estimator = vkplate::parse_method(estimator);
    else if (spec.methods.size() > 1) spec.estimator = vkplate::Method::Morley;
    if (!mesh_file.empty()) {
      std::ifstream in(mesh_file);
      if (!in) throw vkplate::InvalidArgument("cannot open mesh file " + mesh_file);
      spec.initial_mesh = vkplate::read_mesh(in);
    }
    spec.validate();
    csv.open(out);
    if (!csv) throw vkplate::InvalidArgument("cannot write " + out);
  } catch (const vkplate::Error& e) {
    std::cerr << "vkplate: " << e.what() << "\n";
    return 2;
  }

  csv << vkplate::kCsvHeader << "\n";
  std::printf("%-7s %5s %8s %13s %13s %13s %7s\n", "method", "level", "ndof", "error_h", "estimator",
              "oscillation", "rate");
  int rc = 0;
  try {
    vkplate::run_experiment(spec, [&](const vkplate::ConvergenceRecord& r) {
      csv << vkplate::csv_row(r) << "\n" << std::flush;
      std::printf("%-7s %5d %8d %13.6e %13.6e %13.6e %7.3f\n", r.method.c_str(), r.level, r.ndof, r.error_h,
                  r.estimator, r.oscillation, r.rate);
      std::fflush(stdout);
    });
  } catch (const vkplate::SolverError& e) {
    std::cerr << "vkplate: solver failure: " << e.what() << "; partial results kept in " << out << "\n";
    rc = 1;
  } catch (const vkplate::Error& e) {
    std::cerr << "vkplate: " << e.what() << "\n";
    rc = 2;
  }

  if (emit_plot) {
    std::ofstream gp(out + ".gp");
    vkplate::write_gnuplot(gp, out, spec.methods, example);
  }
  return rc;
}
