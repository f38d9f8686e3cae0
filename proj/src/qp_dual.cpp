// Dual active-set method for strictly convex QPs (Goldfarb-Idnani).
// The iterate is always the minimizer over the current active set; rows are
// added by most-violated normalized residual, and J = L^{-T} Q is kept so that
// J' * [active normals] = [R; 0] with R upper triangular.
#include <cmath>
#include <limits>
#include <vector>

#include "sosmpc/error.hpp"
#include "sosmpc/qp.hpp"

namespace sosmpc::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Normals are n_i with slack s_i = n_i'x - c_i (>= 0 for inequalities).
// Inequality row a_i x <= b_i maps to n_i = -a_i, c_i = -b_i.
class Normals {
 public:
  explicit Normals(const QpProblem& p) : p_(p) {}

  // out = normal of inequality i
  void ineq(int i, VectorXd& out) const {
    if (p_.sparse()) {
      out.setZero(p_.n());
      for (SparseRowMatrix::InnerIterator it(p_.A_sparse, i); it; ++it) out[it.col()] = -it.value();
    } else {
      out = -p_.A.row(i).transpose();
    }
  }

  // d = J' n_i, exploiting sparse rows.
  void jt_times_ineq(const MatrixXd& J, int i, VectorXd& d) const {
    if (p_.sparse()) {
      d.setZero(J.cols());
      for (SparseRowMatrix::InnerIterator it(p_.A_sparse, i); it; ++it) {
        d.noalias() -= it.value() * J.row(it.col()).transpose();
      }
    } else {
      d.noalias() = -(J.transpose() * p_.A.row(i).transpose());
    }
  }

 private:
  const QpProblem& p_;
};

// Reflection zeroing b in (a, b); applied to the pair of J columns.
inline bool reflect(double& a, double& b, double& cc, double& ss) {
  const double h = std::hypot(a, b);
  if (h < kEps) return false;
  cc = a / h;
  ss = b / h;
  b = 0.0;
  if (cc < 0.0) {
    cc = -cc;
    ss = -ss;
    a = -h;
  } else {
    a = h;
  }
  return true;
}

inline void apply_to_columns(MatrixXd& J, int c1, int c2, double cc, double ss) {
  const int n = static_cast<int>(J.rows());
  double* p1 = J.col(c1).data();
  double* p2 = J.col(c2).data();
  for (int k = 0; k < n; ++k) {
    const double t1 = p1[k];
    const double t2 = p2[k];
    p1[k] = cc * t1 + ss * t2;
    p2[k] = ss * t1 - cc * t2;
  }
}

struct State {
  int n;
  MatrixXd J;
  MatrixXd R;
  VectorXd u;            // multipliers of the active list, slot iq is the candidate
  std::vector<int> act;  // active list; equality j stored as -(j + 1)
  int iq = 0;
  double r_norm = 1.0;

  bool add(VectorXd& d) {
    for (int j = n - 1; j >= iq + 1; --j) {
      double cc, ss;
      if (!reflect(d[j - 1], d[j], cc, ss)) continue;
      apply_to_columns(J, j - 1, j, cc, ss);
    }
    ++iq;
    R.col(iq - 1).head(iq) = d.head(iq);
    if (std::abs(d[iq - 1]) <= kEps * r_norm) return false;
    r_norm = std::max(r_norm, std::abs(d[iq - 1]));
    return true;
  }

  void remove(int label) {
    int qq = -1;
    for (int i = 0; i < iq; ++i) {
      if (act[i] == label) {
        qq = i;
        break;
      }
    }
    if (qq < 0) throw SolverError(ErrorKind::max_iterations, "qp: active-set bookkeeping lost a row");
    for (int i = qq; i < iq; ++i) {
      act[i] = act[i + 1];
      u[i] = u[i + 1];
      if (i + 1 < iq) R.col(i).head(iq) = R.col(i + 1).head(iq);
    }
    act[iq] = 0;
    u[iq] = 0.0;
    --iq;
    R.col(iq).setZero();
    for (int j = qq; j < iq; ++j) {
      double a = R(j, j);
      double b = R(j + 1, j);
      double cc, ss;
      if (!reflect(a, b, cc, ss)) continue;
      R(j, j) = a;
      R(j + 1, j) = 0.0;
      for (int k = j + 1; k < iq; ++k) {
        const double t1 = R(j, k);
        const double t2 = R(j + 1, k);
        R(j, k) = cc * t1 + ss * t2;
        R(j + 1, k) = ss * t1 - cc * t2;
      }
      apply_to_columns(J, j, j + 1, cc, ss);
    }
  }

  // z = J2 d2, r = R^{-1} d1
  void step_dirs(const VectorXd& d, VectorXd& z, VectorXd& r) const {
    z.noalias() = J.rightCols(n - iq) * d.tail(n - iq);
    r = d.head(iq);
    if (iq > 0) {
      R.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solveInPlace(r);
    }
  }
};

}  // namespace

QpSolution dual_active_set(const QpProblem& p, const Eigen::LLT<MatrixXd>& llt, const QpOptions& opt) {
  const int n = p.n();
  const int mi = p.m_ineq();
  const int me = p.m_eq();
  const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : 50 * (n + mi + me) + 100;

  State st;
  st.n = n;
  {
    // J = L^{-T}
    MatrixXd Linv = MatrixXd::Identity(n, n);
    llt.matrixL().solveInPlace(Linv);
    st.J = Linv.transpose();
  }
  st.R = MatrixXd::Zero(n, n + 1);
  st.u = VectorXd::Zero(n + 1);
  st.act.assign(n + 1, 0);

  VectorXd x = -llt.solve(p.q);
  Normals normals(p);
  VectorXd np(n), d(n), z(n), r;

  for (int i = 0; i < me; ++i) {
    np = p.E.row(i).transpose();
    d.noalias() = st.J.transpose() * np;
    st.step_dirs(d, z, r);
    double t2 = 0.0;
    const double znp = z.dot(np);
    if (znp > 1e-22 * d.squaredNorm()) t2 = (p.e[i] - np.dot(x)) / znp;
    x += t2 * z;
    st.u[st.iq] = t2;
    st.u.head(st.iq) -= t2 * r;
    st.act[st.iq] = -(i + 1);
    if (!st.add(d)) {
      throw SolverError(ErrorKind::infeasible, "qp: equality constraints are linearly dependent");
    }
  }

  VectorXd row_norm(mi);
  for (int i = 0; i < mi; ++i) {
    row_norm[i] = p.sparse() ? p.A_sparse.row(i).norm() : p.A.row(i).norm();
    if (row_norm[i] == 0.0) row_norm[i] = 1.0;
  }
  std::vector<char> active(mi, 0), excluded(mi, 0);
  VectorXd lhs(mi);

  int iter = 0;
  for (;;) {
    if (++iter > max_iter) throw SolverError(ErrorKind::max_iterations, "qp: iteration limit reached");
    lhs = p.ineq_lhs(x);
    const double xs = x.lpNorm<Eigen::Infinity>();
    int ip = -1;
    double worst = 0.0;
    for (int i = 0; i < mi; ++i) {
      if (active[i] || excluded[i]) continue;
      const double viol = (lhs[i] - p.b[i]) / row_norm[i];
      const double tol = 1e-13 * (1.0 + std::abs(p.b[i]) / row_norm[i] + xs);
      if (viol > tol && viol > worst) {
        worst = viol;
        ip = i;
      }
    }
    if (ip < 0) break;

    double s_ip = p.b[ip] - lhs[ip];
    normals.ineq(ip, np);
    st.u[st.iq] = 0.0;
    st.act[st.iq] = ip;
    for (;;) {
      if (++iter > max_iter) throw SolverError(ErrorKind::max_iterations, "qp: iteration limit reached");
      normals.jt_times_ineq(st.J, ip, d);
      st.step_dirs(d, z, r);
      double t1 = kInf;
      int l = -1;
      for (int k = 0; k < st.iq; ++k) {
        if (st.act[k] < 0) continue;
        if (r[k] > 0.0 && st.u[k] / r[k] < t1) {
          t1 = st.u[k] / r[k];
          l = st.act[k];
        }
      }
      const double znp = z.dot(np);
      double t2 = kInf;
      if (znp > 1e-22 * d.squaredNorm()) t2 = -s_ip / znp;
      const double t = std::min(t1, t2);
      if (t == kInf) throw SolverError(ErrorKind::infeasible, "qp: constraints are infeasible");
      if (t2 == kInf) {
        st.u.head(st.iq) -= t * r;
        st.u[st.iq] += t;
        active[l] = 0;
        st.remove(l);
        continue;
      }
      x += t * z;
      st.u.head(st.iq) -= t * r;
      st.u[st.iq] += t;
      if (t == t2) {
        if (!st.add(d)) {
          // numerically dependent: drop the candidate and keep going
          --st.iq;
          st.R.col(st.iq).setZero();
          excluded[ip] = 1;
        } else {
          active[ip] = 1;
        }
        break;
      }
      active[l] = 0;
      st.remove(l);
      s_ip = p.b[ip] - (p.sparse() ? p.A_sparse.row(ip).dot(x) : p.A.row(ip).dot(x));
    }
  }

  QpSolution sol;
  sol.x = x;
  sol.iterations = iter;
  sol.multipliers = VectorXd::Zero(mi);
  sol.eq_multipliers = VectorXd::Zero(me);
  for (int k = 0; k < st.iq; ++k) {
    const int lab = st.act[k];
    if (lab < 0) {
      sol.eq_multipliers[-lab - 1] = -st.u[k];
    } else {
      sol.multipliers[lab] = std::max(0.0, st.u[k]);
      sol.working_set.push_back(lab);
    }
  }
  finalize(p, sol, opt.feas_tol);
  return sol;
}

}  // namespace sosmpc::detail
