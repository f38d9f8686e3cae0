#include <algorithm>
#include <cmath>

#include "sosmpc/error.hpp"
#include "sosmpc/local_problem.hpp"

namespace sosmpc {

void LocalProblem::validate() const {
  const int nz = n_Phi + 1;
  const int m = rows();
  const bool ok = n_U >= 0 && n_Phi >= 0 && Q_pt.rows() == nz && Q_pt.cols() == nz && Q_uu.rows() == n_U &&
                  Q_uu.cols() == n_U && Q_ptu.rows() == nz && Q_ptu.cols() == n_U && C_U.rows() == m &&
                  C_U.cols() == n_U && C_pt.rows() == m && C_pt.cols() == nz && n_u0 >= 0 && n_u0 <= n_U;
  if (!ok) throw SolverError(ErrorKind::bad_argument, "local problem: inconsistent dimensions");
  if (n_U > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (Q_uu + Q_uu.transpose()));
    if (eig.eigenvalues().minCoeff() <= 0.0) {
      throw SolverError(ErrorKind::bad_argument, "local problem: Q_uu is not positive definite");
    }
  }
}

double LocalProblem::cost(const VectorXd& phi, double theta, const VectorXd& U) const {
  VectorXd z(n_Phi + 1);
  z.head(n_Phi) = phi;
  z[n_Phi] = theta;
  return z.dot(Q_pt * z) + U.dot(Q_uu * U) + z.dot(Q_ptu * U);
}

QpProblem SliceQp::at(double theta) const {
  QpProblem qp;
  qp.H = H;
  qp.q = q0 + theta * q1;
  qp.A = A;
  qp.b = b0 + theta * b1;
  qp.E = MatrixXd::Zero(0, H.rows());
  qp.e = VectorXd::Zero(0);
  return qp;
}

SliceQp slice_qp(const LocalProblem& p, const VectorXd& phi) {
  p.validate();
  if (phi.size() != p.n_Phi) throw SolverError(ErrorKind::bad_argument, "slice: Phi has the wrong dimension");
  const int nz = p.n_Phi + 1;
  VectorXd z0 = VectorXd::Zero(nz);
  z0.head(p.n_Phi) = phi;
  VectorXd ez = VectorXd::Zero(nz);
  ez[p.n_Phi] = 1.0;
  const MatrixXd Qp = 0.5 * (p.Q_pt + p.Q_pt.transpose());

  SliceQp s;
  s.H = p.Q_uu + p.Q_uu.transpose();
  s.q0 = p.Q_ptu.transpose() * z0;
  s.q1 = p.Q_ptu.transpose() * ez;
  s.c0 = z0.dot(Qp * z0);
  s.c1 = 2.0 * z0.dot(Qp * ez);
  s.c2 = ez.dot(Qp * ez);

  const VectorXd rb0 = p.C_c + p.C_pt * z0;
  const VectorXd rb1 = p.C_pt * ez;
  for (int i = 0; i < p.rows(); ++i) {
    const double rn = p.n_U ? p.C_U.row(i).lpNorm<Eigen::Infinity>() : 0.0;
    if (rn == 0.0) s.param_rows.push_back(i);
    else s.rows.push_back(i);
  }
  const int m = static_cast<int>(s.rows.size());
  s.A.resize(m, p.n_U);
  s.b0.resize(m);
  s.b1.resize(m);
  for (int j = 0; j < m; ++j) {
    s.A.row(j) = p.C_U.row(s.rows[j]);
    s.b0[j] = rb0[s.rows[j]];
    s.b1[j] = rb1[s.rows[j]];
  }
  return s;
}

VectorXd PiecewiseAffinePolicy::eval(double theta) const {
  if (pieces.empty()) throw SolverError(ErrorKind::bad_argument, "policy: empty");
  auto begin = breakpoints.begin() + 1;
  auto end = breakpoints.end() - 1;
  const auto r = static_cast<std::size_t>(std::lower_bound(begin, end, theta) - begin);
  return pieces[r].eval(theta);
}

}  // namespace sosmpc
