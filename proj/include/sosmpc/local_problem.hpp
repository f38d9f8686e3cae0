#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sosmpc/pwq.hpp"
#include "sosmpc/qp.hpp"

namespace sosmpc {

// J = z'Q_pt z + U'Q_uu U + z'Q_ptu U with z = [Phi; Theta],
// subject to C_U U <= C_c + C_pt z.
struct LocalProblem {
  int n_U = 0;
  int n_Phi = 0;
  MatrixXd Q_pt;   // (n_Phi + 1) x (n_Phi + 1)
  MatrixXd Q_uu;   // n_U x n_U, positive definite
  MatrixXd Q_ptu;  // (n_Phi + 1) x n_U
  MatrixXd C_U;    // rows x n_U
  VectorXd C_c;    // rows
  MatrixXd C_pt;   // rows x (n_Phi + 1)
  int n_u0 = 1;    // leading entries of U that form the first input

  int rows() const { return static_cast<int>(C_c.size()); }
  // Throws bad_argument on shape errors or a non-PD Q_uu.
  void validate() const;
  double cost(const VectorXd& phi, double theta, const VectorXd& U) const;
};

// The U-subproblem at fixed (Phi, Theta):
// min 0.5 U'H U + (q0 + theta q1)'U  s.t.  A U <= b0 + theta b1,
// with the constant c0 + theta c1 + theta^2 c2 added to the objective.
// Rows of C_U that vanish are kept out of A and reported in param_rows.
struct SliceQp {
  MatrixXd H;
  VectorXd q0, q1;
  MatrixXd A;
  VectorXd b0, b1;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  std::vector<int> rows;        // original row index of each row of A
  std::vector<int> param_rows;  // rows constraining Theta only

  QpProblem at(double theta) const;
};

SliceQp slice_qp(const LocalProblem& p, const VectorXd& phi);

struct AffinePiece {
  VectorXd K;
  VectorXd k;
  VectorXd eval(double theta) const { return K * theta + k; }
};

struct PiecewiseAffinePolicy {
  std::vector<double> breakpoints;
  std::vector<AffinePiece> pieces;
  // Left piece on a shared breakpoint.
  VectorXd eval(double theta) const;
};

struct SliceBundle {
  PwqScalar value;
  PiecewiseAffinePolicy policy;
  int qp_solves = 0;

  double lo() const { return value.lo(); }
  double hi() const { return value.hi(); }
  bool is_point() const { return value.hi() <= value.lo(); }
};

struct SliceOptions {
  int max_retries = 5;
  double merge_tol = 1e-10;
};

SliceBundle parametric_slice(const LocalProblem& p, const VectorXd& phi, const SliceOptions& opt = {});

// Feasible Theta range at fixed Phi (two auxiliary LPs).
std::pair<double, double> theta_range(const LocalProblem& p, const VectorXd& phi);

enum class Relation { eq, le };

// sum_i a[i] * Theta_i (rel) b
struct Coupling {
  std::vector<double> a;
  double b = 0.0;
  Relation rel = Relation::eq;
};

struct CentralizedResult {
  VectorXd theta;
  std::vector<VectorXd> U;
  double cost = 0.0;
  int iterations = 0;
};

CentralizedResult centralized_solve(const std::vector<LocalProblem>& subsystems,
                                    const std::vector<VectorXd>& phis,
                                    const std::vector<Coupling>& couplings);

}  // namespace sosmpc
