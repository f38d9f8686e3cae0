#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <vector>

namespace sosmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// min 0.5 x'Hx + q'x  s.t.  A x <= b,  E x = e.
// Inequality rows live either in A or, for large stacked problems, in A_sparse.
struct QpProblem {
  MatrixXd H;
  VectorXd q;
  MatrixXd A;
  SparseRowMatrix A_sparse;
  VectorXd b;
  MatrixXd E;
  VectorXd e;

  int n() const { return static_cast<int>(q.size()); }
  int m_ineq() const { return static_cast<int>(b.size()); }
  int m_eq() const { return static_cast<int>(e.size()); }
  bool sparse() const { return A_sparse.rows() > 0; }
  double objective(const VectorXd& x) const { return 0.5 * x.dot(H * x) + q.dot(x); }
  VectorXd ineq_lhs(const VectorXd& x) const;
  MatrixXd dense_A() const;
};

// Multipliers follow H x + q + A' mu + E' nu = 0 with mu >= 0.
struct QpSolution {
  VectorXd x;
  double objective = 0.0;
  std::vector<int> active_set;   // inequality rows tight at x
  std::vector<int> working_set;  // linearly independent rows carrying multipliers
  VectorXd multipliers;          // one per inequality row, zero off the working set
  VectorXd eq_multipliers;
  int iterations = 0;
};

struct QpOptions {
  int max_iterations = 0;  // 0 selects 50 * (n + m)
  double feas_tol = 1e-9;
};

// Dispatches on the Hessian: dual active-set when H is positive definite,
// primal active-set with phase one otherwise.
QpSolution qp_solve(const QpProblem& p, const QpOptions& opt = {});

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double dual = 0.0;  // most negative multiplier, as a positive number
};

KktResiduals kkt_residuals(const QpProblem& p, const QpSolution& s);

// Scale used to normalize KKT residuals: max(1, |H|, |q|, |A|, |b|, |x|).
double kkt_scale(const QpProblem& p, const VectorXd& x);

struct EnumerateOptions {
  // Upper bound on active-set candidates after grouping mutually exclusive
  // rows (opposite bounds); 3^12 covers twelve boxed variables.
  long long max_candidates = 531441;
};

QpSolution kkt_enumerate_solve(const QpProblem& p, const EnumerateOptions& opt = {});

namespace detail {
QpSolution dual_active_set(const QpProblem& p, const Eigen::LLT<MatrixXd>& llt, const QpOptions& opt);
QpSolution primal_active_set(const QpProblem& p, const QpOptions& opt);
QpSolution proximal_active_set(const QpProblem& p, const QpOptions& opt);
void finalize(const QpProblem& p, QpSolution& s, double feas_tol);
}  // namespace detail

}  // namespace sosmpc
