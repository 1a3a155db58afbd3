#pragma once

// Newton's method for the discrete von Karman systems
//   N_h(Psi; Phi) = A_h(Psi, Phi) + B_h(Psi, Psi, Phi) - L_h(Phi) = 0.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "vkplate/assembly.hpp"
#include "vkplate/error.hpp"

namespace vkplate {

struct SolveContext {
  std::string method = "linear";
  int level = 0;
};

/// Solves a symmetric system: sparse LDL^T, falling back to Jacobi-preconditioned CG.
/// Post: |Ax - b| <= 1e-10 |b|.
inline Vector linear_solve(const SparseMatrix& a, const Vector& b, const SolveContext& ctx = {}) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw InvalidArgument("linear_solve: dimension mismatch");
  if (b.size() == 0) return b;
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Vector::Zero(b.size());
  const double tol = 1e-10 * bnorm;

  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() == Eigen::Success) {
    Vector x = ldlt.solve(b);
    if (ldlt.info() == Eigen::Success && (a * x - b).norm() <= tol) return x;
  }
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg(a);
  cg.setTolerance(1e-12);
  cg.setMaxIterations(10 * static_cast<int>(a.rows()) + 100);
  Vector x = cg.solve(b);
  if (cg.info() != Eigen::Success || (a * x - b).norm() > tol)
    throw SolverError("linear_solve: symmetric system could not be solved", ctx.method, ctx.level);
  return x;
}

/// Solves a general (unsymmetric) square system by sparse LU.
inline Vector general_solve(const SparseMatrix& a, const Vector& b, const SolveContext& ctx = {}) {
  if (b.size() == 0) return b;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success)
    throw SolverError("general_solve: LU factorization failed (" + lu.lastErrorMessage() + ")",
                      ctx.method, ctx.level);
  Vector x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw SolverError("general_solve: LU solve failed", ctx.method, ctx.level);
  return x;
}

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
};

struct NewtonOptions {
  double tol = 1e-10;
  int maxit = 50;
  int level = 0;
};

/// The discrete nonlinear system on one mesh: A (block diagonal) and L.
class NonlinearSystem {
 public:
  NonlinearSystem(const Triangulation& mesh, const DofMap& map, const PenaltyConfig& penalty,
                  Vector load)
      : mesh_(mesh), map_(map), load_(std::move(load)) {
    scalar_ = assemble_biharmonic(mesh, map, map.method, penalty);
    block_ = block_diagonal(scalar_);
    if (load_.size() != 2 * map.n_global) throw InvalidArgument("NonlinearSystem: load has wrong size");
  }

  const SparseMatrix& scalar_operator() const { return scalar_; }
  const SparseMatrix& block_operator() const { return block_; }
  const Vector& load() const { return load_; }
  const DofMap& dofmap() const { return map_; }
  const Triangulation& mesh() const { return mesh_; }

  /// N_h(Psi; Phi_i) for every test function.
  Vector residual(const DiscreteSolution& psi) const {
    return block_ * psi.block() + assemble_trilinear_vector(mesh_, map_, psi, psi) - load_;
  }

  /// Derivative A + 2 B_h(Psi, ., .).
  SparseMatrix jacobian(const DiscreteSolution& psi) const {
    return block_ + assemble_trilinear_jacobian(mesh_, map_, psi);
  }

 private:
  const Triangulation& mesh_;
  const DofMap& map_;
  Vector load_;
  SparseMatrix scalar_;
  SparseMatrix block_;
};

/// Residual N_h(Psi) of the discrete system.
inline Vector residual(const Triangulation& mesh, const DofMap& map, const PenaltyConfig& penalty,
                       const DiscreteSolution& psi, const Vector& load) {
  return NonlinearSystem(mesh, map, penalty, load).residual(psi);
}

/// Newton iteration started from the decoupled biharmonic solution A Psi0 = L.
/// Converged when |N_h(Psi)| <= tol * max(1, |L|), or when a correction with
/// |delta| <= tol * |Psi| has been applied (the residual is then at round-off).
inline std::pair<DiscreteSolution, NewtonReport> newton_solve(const NonlinearSystem& sys,
                                                              const NewtonOptions& opt = {}) {
  if (!(opt.tol > 0.0) || opt.maxit < 1) throw InvalidArgument("newton_solve: need tol > 0, maxit >= 1");
  const DofMap& map = sys.dofmap();
  const int n = map.n_global;
  const SolveContext ctx{std::string(to_string(map.method)), opt.level};

  DiscreteSolution psi{map.method, Vector::Zero(n), Vector::Zero(n)};
  NewtonReport report;
  const Vector& load = sys.load();
  if (n > 0) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.scalar_operator());
    if (ldlt.info() != Eigen::Success)
      throw SolverError("newton_solve: biharmonic operator is not factorizable", ctx.method, ctx.level);
    psi.u = ldlt.solve(Vector(load.head(n)));
    psi.v = ldlt.solve(Vector(load.tail(n)));
  }
  const double stop = opt.tol * std::max(1.0, load.norm());

  for (int it = 0;; ++it) {
    const Vector r = sys.residual(psi);
    const double rn = r.norm();
    if (!std::isfinite(rn)) throw SolverError("newton_solve: residual is not finite", ctx.method, ctx.level);
    report.residual_history.push_back(rn);
    if (rn <= stop) {
      report.converged = true;
      break;
    }
    if (it == opt.maxit) break;
    const Vector delta = general_solve(sys.jacobian(psi), -r, ctx);
    const Vector next = psi.block() + delta;
    psi = DiscreteSolution::from_block(map.method, next);
    ++report.iterations;
    if (delta.norm() <= opt.tol * next.norm()) {
      report.residual_history.push_back(sys.residual(psi).norm());
      report.converged = true;
      break;
    }
  }
  return {std::move(psi), std::move(report)};
}

inline std::pair<DiscreteSolution, NewtonReport> newton_solve(const Triangulation& mesh,
                                                              const DofMap& map,
                                                              const PenaltyConfig& penalty,
                                                              const Vector& load,
                                                              const NewtonOptions& opt = {}) {
  return newton_solve(NonlinearSystem(mesh, map, penalty, load), opt);
}

/// Convergence order estimated from the last three residuals above the
/// round-off floor: log(r_{k+1}/r_k) / log(r_k/r_{k-1}). NaN if unavailable.
inline double newton_order(const std::vector<double>& history, double floor) {
  double order = std::nan("");
  for (std::size_t k = 1; k + 1 < history.size(); ++k) {
    if (history[k + 1] <= floor) break;
    order = std::log(history[k + 1] / history[k]) / std::log(history[k] / history[k - 1]);
  }
  return order;
}

}  // namespace vkplate
