// One-dimensional parametric QP by continuation: probe just right of the
// current Theta, take the optimal working set, and extend it over its whole
// critical interval.
#include <algorithm>
#include <cmath>
#include <limits>

#include "sosmpc/error.hpp"
#include "sosmpc/local_problem.hpp"

namespace sosmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// relative slack admitted on region inequalities
constexpr double kRegionTol = 1e-10;

struct Region {
  double lo = -kInf;
  double hi = kInf;
  AffinePiece policy;
};

// alpha * theta <= beta
void restrict_interval(double alpha, double beta, double& lo, double& hi) {
  if (alpha > 0.0) hi = std::min(hi, beta / alpha);
  else if (alpha < 0.0) lo = std::max(lo, beta / alpha);
}

bool critical_region(const SliceQp& s, const std::vector<int>& W, double theta_scale, Region& out) {
  const int n = static_cast<int>(s.H.rows());
  const int w = static_cast<int>(W.size());
  MatrixXd K = MatrixXd::Zero(n + w, n + w);
  K.topLeftCorner(n, n) = s.H;
  MatrixXd rhs(n + w, 2);  // columns: constant, theta coefficient
  rhs.topRows(n).col(0) = -s.q0;
  rhs.topRows(n).col(1) = -s.q1;
  for (int j = 0; j < w; ++j) {
    K.block(0, n + j, n, 1) = s.A.row(W[j]).transpose();
    K.block(n + j, 0, 1, n) = s.A.row(W[j]);
    rhs(n + j, 0) = s.b0[W[j]];
    rhs(n + j, 1) = s.b1[W[j]];
  }
  Eigen::FullPivLU<MatrixXd> lu(K);
  if (!lu.isInvertible()) return false;
  const MatrixXd sol = lu.solve(rhs);
  out.policy.k = sol.topRows(n).col(0);
  out.policy.K = sol.topRows(n).col(1);
  out.lo = -kInf;
  out.hi = kInf;
  std::vector<char> in_w(s.A.rows(), 0);
  for (int i : W) in_w[i] = 1;
  for (int i = 0; i < s.A.rows(); ++i) {
    if (in_w[i]) continue;
    const double alpha = s.A.row(i).dot(out.policy.K) - s.b1[i];
    const double beta = s.b0[i] - s.A.row(i).dot(out.policy.k);
    // rows with a near-zero slope would otherwise turn roundoff into a bound
    const double tol = kRegionTol * std::max({1.0, std::abs(s.b0[i]), std::abs(s.b1[i]) * theta_scale,
                                              s.A.row(i).cwiseAbs().dot(out.policy.k.cwiseAbs())});
    restrict_interval(alpha, beta + tol, out.lo, out.hi);
  }
  double mu_tol = 0.0;
  for (int j = 0; j < w; ++j) mu_tol = std::max(mu_tol, std::abs(sol(n + j, 0)));
  mu_tol = kRegionTol * std::max(1.0, mu_tol);
  for (int j = 0; j < w; ++j) {
    // mu_j = sol(n+j,0) + theta sol(n+j,1) >= 0
    restrict_interval(-sol(n + j, 1), sol(n + j, 0) + mu_tol, out.lo, out.hi);
  }
  return true;
}

PwqPiece value_piece(const SliceQp& s, const AffinePiece& pol) {
  // J = c0 + c1 t + c2 t^2 + 0.5 U'H U + q(t)'U with U = K t + k
  const VectorXd& K = pol.K;
  const VectorXd& k = pol.k;
  const double t2 = s.c2 + 0.5 * K.dot(s.H * K) + s.q1.dot(K);
  const double t1 = s.c1 + K.dot(s.H * k) + s.q0.dot(K) + s.q1.dot(k);
  const double t0 = s.c0 + 0.5 * k.dot(s.H * k) + s.q0.dot(k);
  // curvature is a sum of PSD terms plus cancellation noise
  const double noise = 1e-12 * (std::abs(s.c2) + std::abs(0.5 * K.dot(s.H * K)) + std::abs(s.q1.dot(K)));
  return {2.0 * t2 < 2.0 * noise ? std::max(0.0, 2.0 * t2) : 2.0 * t2, t1, t0};
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

bool same_piece(const PwqPiece& a, const PwqPiece& b, double tol) {
  return close(a.h, b.h, tol) && close(a.f, b.f, tol) && close(a.g, b.g, tol);
}

bool same_policy(const AffinePiece& a, const AffinePiece& b, double tol) {
  for (int i = 0; i < a.K.size(); ++i) {
    if (!close(a.K[i], b.K[i], tol) || !close(a.k[i], b.k[i], tol)) return false;
  }
  return true;
}

}  // namespace

std::pair<double, double> theta_range(const LocalProblem& p, const VectorXd& phi) {
  p.validate();
  const int n = p.n_U + 1;
  const int nz = p.n_Phi + 1;
  VectorXd z0 = VectorXd::Zero(nz);
  z0.head(p.n_Phi) = phi;
  QpProblem lp;
  lp.H = MatrixXd::Zero(n, n);
  lp.A.resize(p.rows(), n);
  lp.A.leftCols(p.n_U) = p.C_U;
  lp.A.col(p.n_U) = -p.C_pt.col(p.n_Phi);
  lp.b = p.C_c + p.C_pt * z0;
  lp.E = MatrixXd::Zero(0, n);
  lp.e = VectorXd::Zero(0);
  double ends[2];
  for (int side = 0; side < 2; ++side) {
    lp.q = VectorXd::Zero(n);
    lp.q[p.n_U] = side == 0 ? 1.0 : -1.0;
    try {
      ends[side] = qp_solve(lp).x[p.n_U];
    } catch (const SolverError& e) {
      if (e.kind() == ErrorKind::infeasible) {
        throw SolverError(ErrorKind::infeasible_slice, "slice: no Theta admits a feasible U at this Phi");
      }
      if (e.kind() == ErrorKind::unbounded) {
        throw SolverError(ErrorKind::unbounded, "slice: feasible Theta range is unbounded");
      }
      throw;
    }
  }
  return {ends[0], ends[1]};
}

SliceBundle parametric_slice(const LocalProblem& p, const VectorXd& phi, const SliceOptions& opt) {
  const SliceQp s = slice_qp(p, phi);
  auto [lo, hi] = theta_range(p, phi);
  SliceBundle out;
  out.qp_solves = 2;
  const double width = hi - lo;
  const double tol_theta = 1e-9 * std::max(1.0, width);
  const double theta_scale = std::max(std::abs(lo), std::abs(hi));
  if (width <= 1e-12 * std::max(1.0, std::abs(lo))) {
    const double t = 0.5 * (lo + hi);
    const QpSolution sol = qp_solve(s.at(t));
    ++out.qp_solves;
    const double v = sol.objective + s.c0 + t * (s.c1 + t * s.c2);
    out.value = PwqScalar({t, t}, {{0.0, 0.0, v}});
    out.policy.breakpoints = {t, t};
    out.policy.pieces = {{VectorXd::Zero(p.n_U), sol.x}};
    return out;
  }

  std::vector<double> bps{lo};
  std::vector<AffinePiece> pols;
  double theta = lo;
  while (theta < hi - tol_theta) {
    bool found = false;
    Region reg;
    double delta = 1e-7 * width;
    for (int attempt = 0; attempt <= opt.max_retries && !found; ++attempt, delta *= 0.1) {
      double probe = theta + delta;
      if (probe >= hi) probe = 0.5 * (theta + hi);
      QpSolution sol;
      try {
        sol = qp_solve(s.at(probe));
      } catch (const SolverError& e) {
        if (e.kind() == ErrorKind::infeasible) continue;
        throw;
      }
      ++out.qp_solves;
      if (!critical_region(s, sol.working_set, theta_scale, reg)) continue;
      found = reg.lo <= theta + tol_theta && reg.hi > theta;
    }
    if (!found) {
      throw SolverError(ErrorKind::degeneracy_unresolved, "slice: no critical region continues past Theta = " +
                                                              std::to_string(theta));
    }
    const double next = reg.hi >= hi - tol_theta ? hi : reg.hi;
    bps.push_back(next);
    pols.push_back(reg.policy);
    theta = next;
  }

  // merge coinciding pieces
  std::vector<PwqPiece> vals;
  for (const auto& pol : pols) vals.push_back(value_piece(s, pol));
  std::vector<double> vb{bps.front()};
  std::vector<PwqPiece> vp;
  std::vector<double> pb{bps.front()};
  std::vector<AffinePiece> pp;
  for (std::size_t r = 0; r < vals.size(); ++r) {
    if (!vp.empty() && same_piece(vp.back(), vals[r], opt.merge_tol)) vb.back() = bps[r + 1];
    else {
      vp.push_back(vals[r]);
      vb.push_back(bps[r + 1]);
    }
    if (!pp.empty() && same_policy(pp.back(), pols[r], opt.merge_tol)) pb.back() = bps[r + 1];
    else {
      pp.push_back(pols[r]);
      pb.push_back(bps[r + 1]);
    }
  }
  out.value = PwqScalar(vb, vp);
  out.policy.breakpoints = pb;
  out.policy.pieces = pp;
  return out;
}

}  // namespace sosmpc
