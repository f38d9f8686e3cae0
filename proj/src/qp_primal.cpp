// Primal active-set method for convex QPs whose Hessian may be singular
// (including LPs), plus a proximal wrapper around the dual method for larger
// semidefinite problems.
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sosmpc/error.hpp"
#include "sosmpc/qp.hpp"

namespace sosmpc::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Core {
  const MatrixXd& H;
  const VectorXd& q;
  const MatrixXd& A;
  const VectorXd& b;
  const MatrixXd& E;
  const VectorXd& e;
  int max_iter;
};

double problem_scale(const MatrixXd& H, const VectorXd& q, const VectorXd& b) {
  double s = 1.0;
  if (H.size()) s = std::max(s, H.cwiseAbs().maxCoeff());
  if (q.size()) s = std::max(s, q.cwiseAbs().maxCoeff());
  if (b.size()) s = std::max(s, b.cwiseAbs().maxCoeff());
  return s;
}

// Minimizes from a feasible x; W holds the working inequality rows.
QpSolution run_core(const Core& c, VectorXd x, std::vector<int> W) {
  const int n = static_cast<int>(x.size());
  const int mi = static_cast<int>(c.b.size());
  const int me = static_cast<int>(c.e.size());
  const double scale = problem_scale(c.H, c.q, c.b);
  std::vector<char> in_w(mi, 0);
  for (int i : W) in_w[i] = 1;

  int degenerate_steps = 0;
  int iter = 0;
  for (;;) {
    if (++iter > c.max_iter) throw SolverError(ErrorKind::max_iterations, "qp: iteration limit reached");
    const int k = me + static_cast<int>(W.size());
    MatrixXd M(k, n);
    if (me) M.topRows(me) = c.E;
    for (std::size_t j = 0; j < W.size(); ++j) M.row(me + static_cast<int>(j)) = c.A.row(W[j]);

    MatrixXd Z;
    if (k == 0) {
      Z = MatrixXd::Identity(n, n);
    } else {
      Eigen::ColPivHouseholderQR<MatrixXd> qr(M.transpose());
      qr.setThreshold(1e-12);
      const int rank = static_cast<int>(qr.rank());
      const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, n);
      Z = Q.rightCols(n - rank);
    }

    const VectorXd g = c.H * x + c.q;
    const double gscale = std::max({1.0, g.lpNorm<Eigen::Infinity>(), scale * std::max(1.0, x.lpNorm<Eigen::Infinity>())});
    VectorXd p;
    double alpha_max = 1.0;
    bool stationary = true;
    if (Z.cols() > 0) {
      const VectorXd gr = Z.transpose() * g;
      if (gr.lpNorm<Eigen::Infinity>() > 1e-12 * gscale) {
        stationary = false;
        const MatrixXd Hr = Z.transpose() * c.H * Z;
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Hr);
        const VectorXd& lam = eig.eigenvalues();
        const MatrixXd& V = eig.eigenvectors();
        const double lmax = std::max(1.0, lam.cwiseAbs().maxCoeff());
        VectorXd coef = V.transpose() * gr;
        VectorXd flat = VectorXd::Zero(coef.size());
        VectorXd newton = VectorXd::Zero(coef.size());
        for (int i = 0; i < coef.size(); ++i) {
          if (lam[i] > 1e-10 * lmax) newton[i] = -coef[i] / lam[i];
          else flat[i] = -coef[i];
        }
        if (flat.lpNorm<Eigen::Infinity>() > 1e-12 * gscale) {
          p = Z * (V * flat);
          alpha_max = kInf;
        } else {
          p = Z * (V * newton);
        }
      }
    }

    if (stationary) {
      // multipliers from M' [nu; mu] = -g
      VectorXd nu_mu = VectorXd::Zero(k);
      if (k > 0) nu_mu = M.transpose().colPivHouseholderQr().solve(-g);
      int drop = -1;
      double most_negative = -1e-11 * gscale;
      for (std::size_t j = 0; j < W.size(); ++j) {
        const double mu = nu_mu[me + static_cast<int>(j)];
        if (mu < most_negative) {
          if (degenerate_steps > 5) {
            if (drop < 0 || W[j] < W[drop]) drop = static_cast<int>(j);
          } else {
            most_negative = mu;
            drop = static_cast<int>(j);
          }
        }
      }
      if (drop < 0) {
        QpSolution s;
        s.x = x;
        s.iterations = iter;
        s.multipliers = VectorXd::Zero(mi);
        s.eq_multipliers = me ? VectorXd(nu_mu.head(me)) : VectorXd::Zero(0);
        for (std::size_t j = 0; j < W.size(); ++j) {
          s.multipliers[W[j]] = std::max(0.0, nu_mu[me + static_cast<int>(j)]);
        }
        s.working_set = W;
        return s;
      }
      in_w[W[drop]] = 0;
      W.erase(W.begin() + drop);
      continue;
    }

    // ratio test, smallest index on ties
    double alpha = alpha_max;
    int block = -1;
    const double pn = p.lpNorm<Eigen::Infinity>();
    for (int i = 0; i < mi; ++i) {
      if (in_w[i]) continue;
      const double ap = c.A.row(i).dot(p);
      if (ap <= 1e-12 * c.A.row(i).lpNorm<Eigen::Infinity>() * pn) continue;
      const double slack = std::max(0.0, c.b[i] - c.A.row(i).dot(x));
      const double ai = slack / ap;
      if (ai < alpha) {
        alpha = ai;
        block = i;
      }
    }
    if (alpha == kInf) throw SolverError(ErrorKind::unbounded, "qp: objective unbounded below");
    x += alpha * p;
    degenerate_steps = (alpha * pn <= 1e-14 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) ? degenerate_steps + 1 : 0;
    if (block >= 0) {
      in_w[block] = 1;
      W.push_back(block);
    }
  }
}

}  // namespace

QpSolution primal_active_set(const QpProblem& p, const QpOptions& opt) {
  const int n = p.n();
  const int mi = p.m_ineq();
  const int me = p.m_eq();
  const MatrixXd A = p.dense_A();
  const MatrixXd E = me ? p.E : MatrixXd::Zero(0, n);
  const VectorXd e = me ? p.e : VectorXd::Zero(0);
  const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : 50 * (n + mi + me) + 100;
  const double bscale = std::max({1.0, mi ? p.b.cwiseAbs().maxCoeff() : 0.0, me ? e.cwiseAbs().maxCoeff() : 0.0});

  VectorXd x0 = VectorXd::Zero(n);
  if (me) {
    x0 = E.completeOrthogonalDecomposition().solve(e);
    if ((E * x0 - e).lpNorm<Eigen::Infinity>() > 1e-10 * bscale) {
      throw SolverError(ErrorKind::infeasible, "qp: equality constraints are inconsistent");
    }
  }
  double viol = 0.0;
  if (mi) viol = std::max(0.0, (A * x0 - p.b).maxCoeff());
  if (viol > 1e-12 * bscale) {
    // phase one: min t  s.t.  A x - t <= b, -t <= 0, E x = e
    MatrixXd H1 = MatrixXd::Zero(n + 1, n + 1);
    VectorXd q1 = VectorXd::Zero(n + 1);
    q1[n] = 1.0;
    MatrixXd A1 = MatrixXd::Zero(mi + 1, n + 1);
    A1.topLeftCorner(mi, n) = A;
    A1.col(n).head(mi).setConstant(-1.0);
    A1(mi, n) = -1.0;
    VectorXd b1 = VectorXd::Zero(mi + 1);
    b1.head(mi) = p.b;
    MatrixXd E1 = MatrixXd::Zero(me, n + 1);
    if (me) E1.leftCols(n) = E;
    VectorXd x1(n + 1);
    x1.head(n) = x0;
    x1[n] = viol;
    const Core c1{H1, q1, A1, b1, E1, e, max_iter};
    QpSolution s1 = run_core(c1, x1, {});
    if (s1.x[n] > 1e-10 * bscale) throw SolverError(ErrorKind::infeasible, "qp: constraints are infeasible");
    x0 = s1.x.head(n);
  }
  const Core c{p.H, p.q, A, p.b, E, e, max_iter};
  QpSolution s = run_core(c, x0, {});
  finalize(p, s, opt.feas_tol);
  return s;
}

namespace {

// Exact KKT solve of the original problem on a working set; coordinate rows
// are eliminated by fixing their variable.
bool polish(const QpProblem& p, const MatrixXd& A, const std::vector<int>& W, QpSolution& out) {
  const int n = p.n();
  const int me = p.m_eq();
  const int mi = p.m_ineq();
  std::vector<int> fixed_row(n, -1);
  VectorXd xfix = VectorXd::Zero(n);
  std::vector<int> general;
  for (int i : W) {
    int nnz = 0, col = -1;
    for (int j = 0; j < n; ++j) {
      if (A(i, j) != 0.0) {
        ++nnz;
        col = j;
      }
    }
    if (nnz == 1 && fixed_row[col] < 0) {
      fixed_row[col] = i;
      xfix[col] = p.b[i] / A(i, col);
    } else {
      general.push_back(i);
    }
  }
  std::vector<int> F;
  for (int j = 0; j < n; ++j) {
    if (fixed_row[j] < 0) F.push_back(j);
  }
  const int nf = static_cast<int>(F.size());
  const int ng = static_cast<int>(general.size());
  const int sz = nf + ng + me;
  MatrixXd K = MatrixXd::Zero(sz, sz);
  VectorXd rhs = VectorXd::Zero(sz);
  const VectorXd hx_fixed = p.H * xfix;
  for (int a = 0; a < nf; ++a) {
    for (int bb = 0; bb < nf; ++bb) K(a, bb) = p.H(F[a], F[bb]);
    rhs[a] = -p.q[F[a]] - hx_fixed[F[a]];
    for (int g = 0; g < ng; ++g) {
      K(a, nf + g) = A(general[g], F[a]);
      K(nf + g, a) = A(general[g], F[a]);
    }
    for (int j = 0; j < me; ++j) {
      K(a, nf + ng + j) = p.E(j, F[a]);
      K(nf + ng + j, a) = p.E(j, F[a]);
    }
  }
  for (int g = 0; g < ng; ++g) rhs[nf + g] = p.b[general[g]] - A.row(general[g]).dot(xfix);
  for (int j = 0; j < me; ++j) rhs[nf + ng + j] = p.e[j] - p.E.row(j).dot(xfix);
  VectorXd sol = sz ? VectorXd(K.completeOrthogonalDecomposition().solve(rhs)) : VectorXd::Zero(0);
  if (sz && (K * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-9 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) {
    return false;
  }
  VectorXd x = xfix;
  for (int a = 0; a < nf; ++a) x[F[a]] = sol[a];
  VectorXd mu = VectorXd::Zero(mi);
  for (int g = 0; g < ng; ++g) mu[general[g]] = sol[nf + g];
  VectorXd nu = me ? VectorXd(sol.tail(me)) : VectorXd::Zero(0);
  VectorXd grad = p.H * x + p.q + A.transpose() * mu;
  if (me) grad += p.E.transpose() * nu;
  for (int j = 0; j < n; ++j) {
    if (fixed_row[j] >= 0) {
      const int i = fixed_row[j];
      mu[i] = -grad[j] / A(i, j);
      grad[j] = 0.0;
    }
  }
  const double scale = kkt_scale(p, x);
  if (grad.lpNorm<Eigen::Infinity>() > 1e-9 * scale) return false;
  if (mi && mu.minCoeff() < -1e-9 * scale) return false;
  if (mi && (A * x - p.b).maxCoeff() > 1e-9 * scale) return false;
  out.x = x;
  out.multipliers = mu.cwiseMax(0.0);
  out.eq_multipliers = nu;
  out.working_set = W;
  return true;
}

}  // namespace

QpSolution proximal_active_set(const QpProblem& p, const QpOptions& opt) {
  const int n = p.n();
  const MatrixXd A = p.dense_A();
  const double hmax = p.H.size() ? p.H.diagonal().cwiseAbs().maxCoeff() : 0.0;
  const double rho = 1e-3 * std::max(1.0, hmax);
  QpProblem reg = p;
  reg.H = 0.5 * (p.H + p.H.transpose()) + rho * MatrixXd::Identity(n, n);
  const Eigen::LLT<MatrixXd> llt(reg.H);
  VectorXd xc = VectorXd::Zero(n);
  int total_iter = 0;
  for (int k = 0; k < 500; ++k) {
    reg.q = p.q - rho * xc;
    QpSolution s = dual_active_set(reg, llt, opt);
    total_iter += s.iterations;
    QpSolution exact;
    if (polish(p, A, s.working_set, exact)) {
      exact.iterations = total_iter;
      finalize(p, exact, opt.feas_tol);
      return exact;
    }
    const double step = (s.x - xc).lpNorm<Eigen::Infinity>();
    if (step <= 1e-13 * std::max(1.0, s.x.lpNorm<Eigen::Infinity>())) {
      s.iterations = total_iter;
      finalize(p, s, opt.feas_tol);
      return s;
    }
    if (s.x.lpNorm<Eigen::Infinity>() > 1e15) {
      throw SolverError(ErrorKind::unbounded, "qp: objective unbounded below");
    }
    xc = s.x;
  }
  throw SolverError(ErrorKind::max_iterations, "qp: proximal iterations did not settle");
}

}  // namespace sosmpc::detail
