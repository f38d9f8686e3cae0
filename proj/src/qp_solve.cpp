#include <algorithm>
#include <cmath>

#include "sosmpc/error.hpp"
#include "sosmpc/qp.hpp"

namespace sosmpc {

VectorXd QpProblem::ineq_lhs(const VectorXd& x) const {
  if (sparse()) return A_sparse * x;
  if (A.rows() == 0) return VectorXd::Zero(0);
  return A * x;
}

MatrixXd QpProblem::dense_A() const {
  if (sparse()) return MatrixXd(A_sparse);
  if (A.rows() == 0) return MatrixXd::Zero(0, n());
  return A;
}

namespace detail {

void finalize(const QpProblem& p, QpSolution& s, double feas_tol) {
  s.objective = p.objective(s.x);
  s.active_set.clear();
  const VectorXd lhs = p.ineq_lhs(s.x);
  const double xs = std::max(1.0, s.x.lpNorm<Eigen::Infinity>());
  for (int i = 0; i < p.m_ineq(); ++i) {
    const double rn = p.sparse() ? p.A_sparse.row(i).norm() : p.A.row(i).norm();
    if (std::abs(lhs[i] - p.b[i]) <= feas_tol * std::max({1.0, std::abs(p.b[i]), rn * xs})) {
      s.active_set.push_back(i);
    }
  }
  std::sort(s.working_set.begin(), s.working_set.end());
  if (s.multipliers.size() != p.m_ineq()) s.multipliers = VectorXd::Zero(p.m_ineq());
  if (s.eq_multipliers.size() != p.m_eq()) s.eq_multipliers = VectorXd::Zero(p.m_eq());
}

}  // namespace detail

namespace {

void check_shapes(const QpProblem& p) {
  const int n = p.n();
  bool ok = p.H.rows() == n && p.H.cols() == n;
  if (p.sparse()) {
    ok = ok && p.A_sparse.cols() == n && p.A_sparse.rows() == p.b.size();
  } else {
    ok = ok && (p.b.size() == 0 || (p.A.cols() == n && p.A.rows() == p.b.size()));
  }
  ok = ok && (p.e.size() == 0 || (p.E.cols() == n && p.E.rows() == p.e.size()));
  if (!ok) throw SolverError(ErrorKind::bad_argument, "qp: inconsistent problem dimensions");
}

}  // namespace

QpSolution qp_solve(const QpProblem& p, const QpOptions& opt) {
  check_shapes(p);
  const int n = p.n();
  if (n > 0) {
    const MatrixXd Hs = 0.5 * (p.H + p.H.transpose());
    Eigen::LLT<MatrixXd> llt(Hs);
    if (llt.info() == Eigen::Success) {
      const double hmax = std::max(1.0, Hs.diagonal().cwiseAbs().maxCoeff());
      const double lmin = llt.matrixLLT().diagonal().minCoeff();
      if (lmin * lmin > 1e-10 * hmax) return detail::dual_active_set(p, llt, opt);
    }
  }
  if (n <= 40) return detail::primal_active_set(p, opt);
  return detail::proximal_active_set(p, opt);
}

double kkt_scale(const QpProblem& p, const VectorXd& x) {
  double s = 1.0;
  if (p.H.size()) s = std::max(s, p.H.cwiseAbs().maxCoeff());
  if (p.q.size()) s = std::max(s, p.q.cwiseAbs().maxCoeff());
  if (p.b.size()) s = std::max(s, p.b.cwiseAbs().maxCoeff());
  if (p.e.size()) s = std::max(s, p.e.cwiseAbs().maxCoeff());
  if (x.size()) s = std::max(s, x.cwiseAbs().maxCoeff());
  return s;
}

KktResiduals kkt_residuals(const QpProblem& p, const QpSolution& s) {
  KktResiduals r;
  VectorXd grad = p.H * s.x + p.q;
  if (p.m_ineq() > 0) {
    if (p.sparse()) grad += p.A_sparse.transpose() * s.multipliers;
    else grad += p.A.transpose() * s.multipliers;
  }
  if (p.m_eq() > 0) grad += p.E.transpose() * s.eq_multipliers;
  r.stationarity = grad.size() ? grad.lpNorm<Eigen::Infinity>() : 0.0;
  const VectorXd lhs = p.ineq_lhs(s.x);
  for (int i = 0; i < p.m_ineq(); ++i) {
    r.primal = std::max(r.primal, lhs[i] - p.b[i]);
    r.complementarity = std::max(r.complementarity, std::abs(s.multipliers[i] * (p.b[i] - lhs[i])));
    r.dual = std::max(r.dual, -s.multipliers[i]);
  }
  if (p.m_eq() > 0) r.primal = std::max(r.primal, (p.E * s.x - p.e).lpNorm<Eigen::Infinity>());
  return r;
}

}  // namespace sosmpc
