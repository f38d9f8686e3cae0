#include <vector>

#include "sosmpc/error.hpp"
#include "sosmpc/local_problem.hpp"

namespace sosmpc {

CentralizedResult centralized_solve(const std::vector<LocalProblem>& subsystems,
                                    const std::vector<VectorXd>& phis,
                                    const std::vector<Coupling>& couplings) {
  const int M = static_cast<int>(subsystems.size());
  if (static_cast<int>(phis.size()) != M) throw SolverError(ErrorKind::bad_argument, "centralized: one Phi per subsystem");
  for (const auto& c : couplings) {
    if (static_cast<int>(c.a.size()) != M) throw SolverError(ErrorKind::bad_argument, "centralized: coupling width != M");
  }

  // variable layout: [U_0; Theta_0; U_1; Theta_1; ...]
  std::vector<int> offset(M + 1, 0);
  int rows = 0;
  for (int i = 0; i < M; ++i) {
    subsystems[i].validate();
    offset[i + 1] = offset[i] + subsystems[i].n_U + 1;
    rows += subsystems[i].rows();
  }
  const int n = offset[M];
  int n_le = 0, n_eq = 0;
  for (const auto& c : couplings) (c.rel == Relation::le ? n_le : n_eq)++;

  QpProblem qp;
  qp.H = MatrixXd::Zero(n, n);
  qp.q = VectorXd::Zero(n);
  qp.b = VectorXd::Zero(rows + n_le);
  qp.E = MatrixXd::Zero(n_eq, n);
  qp.e = VectorXd::Zero(n_eq);
  std::vector<Eigen::Triplet<double>> trip;
  double constant = 0.0;
  int row = 0;
  for (int i = 0; i < M; ++i) {
    const LocalProblem& p = subsystems[i];
    const int nu = p.n_U;
    const int o = offset[i];
    const int t = o + nu;  // Theta index
    const int np = p.n_Phi;
    const MatrixXd Qp = 0.5 * (p.Q_pt + p.Q_pt.transpose());
    const VectorXd& phi = phis[i];
    if (phi.size() != np) throw SolverError(ErrorKind::bad_argument, "centralized: Phi has the wrong dimension");
    // quadratic part in (U, Theta), written as 0.5 v'Hv
    qp.H.block(o, o, nu, nu) = p.Q_uu + p.Q_uu.transpose();
    qp.H.block(o, t, nu, 1) = p.Q_ptu.row(np).transpose();
    qp.H.block(t, o, 1, nu) = p.Q_ptu.row(np);
    qp.H(t, t) = 2.0 * Qp(np, np);
    qp.q.segment(o, nu) = p.Q_ptu.topRows(np).transpose() * phi;
    qp.q[t] = 2.0 * Qp.row(np).head(np).dot(phi);
    constant += phi.dot(Qp.topLeftCorner(np, np) * phi);
    const VectorXd rhs = p.C_c + p.C_pt.leftCols(np) * phi;
    for (int r = 0; r < p.rows(); ++r, ++row) {
      for (int j = 0; j < nu; ++j) {
        if (p.C_U(r, j) != 0.0) trip.emplace_back(row, o + j, p.C_U(r, j));
      }
      if (p.C_pt(r, np) != 0.0) trip.emplace_back(row, t, -p.C_pt(r, np));
      qp.b[row] = rhs[r];
    }
  }
  int eq = 0;
  for (const auto& c : couplings) {
    if (c.rel == Relation::le) {
      for (int i = 0; i < M; ++i) {
        if (c.a[i] != 0.0) trip.emplace_back(row, offset[i] + subsystems[i].n_U, c.a[i]);
      }
      qp.b[row++] = c.b;
    } else {
      for (int i = 0; i < M; ++i) qp.E(eq, offset[i] + subsystems[i].n_U) = c.a[i];
      qp.e[eq++] = c.b;
    }
  }
  qp.A_sparse.resize(rows + n_le, n);
  qp.A_sparse.setFromTriplets(trip.begin(), trip.end());
  qp.A_sparse.makeCompressed();
  if (qp.A_sparse.rows() == 0) qp.A = MatrixXd::Zero(0, n);

  const QpSolution sol = qp_solve(qp);
  CentralizedResult res;
  res.theta.resize(M);
  for (int i = 0; i < M; ++i) {
    res.U.push_back(sol.x.segment(offset[i], subsystems[i].n_U));
    res.theta[i] = sol.x[offset[i] + subsystems[i].n_U];
  }
  res.cost = sol.objective + constant;
  res.iterations = sol.iterations;
  return res;
}

}  // namespace sosmpc
