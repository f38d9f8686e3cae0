// Breakpoint search for the single-row continuous quadratic knapsack problem.
// g(lambda) = b'x(lambda) is non-increasing; the bracket [lamL, lamU] keeps
// g(lamL+) >= c >= g(lamU-) and indices whose breakpoints left the open
// bracket are folded into running sums.
#include <algorithm>
#include <cmath>
#include <limits>

#include "sosmpc/error.hpp"
#include "sosmpc/knapsack.hpp"

namespace sosmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(const VectorXd& v) { return v.allFinite(); }

}  // namespace

void KnapsackInstance::validate() const {
  const int nn = n();
  if (a.size() != nn || l.size() != nn || u.size() != nn) {
    throw SolverError(ErrorKind::bad_argument, "knapsack: d, a, l, u must have equal length");
  }
  if (B.cols() != nn || B.rows() != m()) {
    throw SolverError(ErrorKind::bad_argument, "knapsack: B must be m x n with m = len(c)");
  }
  if (!finite(d) || !finite(a) || !finite(c) || !B.allFinite()) {
    throw SolverError(ErrorKind::bad_argument, "knapsack: non-finite data");
  }
  for (int i = 0; i < nn; ++i) {
    if (std::isnan(l[i]) || std::isnan(u[i]) || l[i] > u[i]) {
      throw SolverError(ErrorKind::bad_argument, "knapsack: need l_i <= u_i");
    }
    if (!std::isfinite(l[i]) || !std::isfinite(u[i])) {
      throw SolverError(ErrorKind::bad_argument, "knapsack: bounds must be finite");
    }
    if (d[i] < 0.0) throw SolverError(ErrorKind::bad_argument, "knapsack: need d_i >= 0");
  }
}

double KnapsackInstance::objective(const VectorXd& x) const {
  return 0.5 * x.dot(d.cwiseProduct(x)) - a.dot(x);
}

double feasibility_tolerance(const KnapsackInstance& inst) {
  const double bn = inst.B.rows() > 0 ? inst.B.norm() : 0.0;
  return 1e-9 * std::max(1.0, bn * (inst.u - inst.l).norm());
}

VectorXd Preprocessed::restore(const VectorXd& core_x) const {
  VectorXd x = VectorXd::Zero(n_original);
  for (const auto& [i, v] : eliminated) x[i] = v;
  for (std::size_t k = 0; k < core_index.size(); ++k) x[core_index[k]] = core_x[static_cast<int>(k)];
  for (int i : flips) x[i] = -x[i];
  return x;
}

Preprocessed preprocess(const KnapsackInstance& raw) {
  raw.validate();
  if (raw.m() != 1) throw SolverError(ErrorKind::bad_argument, "cqkp: exactly one coupling row expected");
  const int n = raw.n();
  Preprocessed out;
  out.n_original = n;
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    const double b = raw.B(0, i);
    if (b == 0.0) {
      double v;
      if (raw.d[i] > 0.0) v = std::clamp(raw.a[i] / raw.d[i], raw.l[i], raw.u[i]);
      else v = raw.a[i] > 0.0 ? raw.u[i] : raw.l[i];
      out.eliminated.emplace_back(i, v);
    } else {
      keep.push_back(i);
      if (b < 0.0) out.flips.push_back(i);
    }
  }
  const int nc = static_cast<int>(keep.size());
  KnapsackInstance& core = out.core;
  core.d.resize(nc);
  core.a.resize(nc);
  core.l.resize(nc);
  core.u.resize(nc);
  core.B.resize(1, nc);
  core.c = raw.c;
  for (int k = 0; k < nc; ++k) {
    const int i = keep[k];
    const double b = raw.B(0, i);
    core.d[k] = raw.d[i];
    if (b > 0.0) {
      core.a[k] = raw.a[i];
      core.l[k] = raw.l[i];
      core.u[k] = raw.u[i];
      core.B(0, k) = b;
    } else {
      core.a[k] = -raw.a[i];
      core.l[k] = -raw.u[i];
      core.u[k] = -raw.l[i];
      core.B(0, k) = -b;
    }
  }
  out.core_index = keep;

  const double lo = core.B.row(0).dot(core.l);
  const double hi = core.B.row(0).dot(core.u);
  const double tol = feasibility_tolerance(core);
  const double c = core.c[0];
  if (c < lo - tol || c > hi + tol) {
    throw SolverError(ErrorKind::infeasible, "cqkp: coupling target outside [b'l, b'u]");
  }
  core.c[0] = std::clamp(c, lo, hi);
  return out;
}

LambdaEval eval_x_lambda(const KnapsackInstance& inst, double lambda, double c) {
  const int n = inst.n();
  LambdaEval ev;
  ev.lambda = lambda;
  ev.x.resize(n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double b = inst.B(0, i);
    double xi;
    if (inst.d[i] > 0.0) {
      xi = std::clamp((inst.a[i] - lambda * b) / inst.d[i], inst.l[i], inst.u[i]);
    } else {
      const double bp = inst.a[i] / b;
      if (lambda > bp) xi = inst.l[i];
      else if (lambda < bp) xi = inst.u[i];
      else {
        ev.ambiguous_set.push_back(i);
        ev.L_bar += b * inst.l[i];
        ev.U_bar += b * inst.u[i];
        continue;
      }
    }
    ev.x[i] = xi;
    s += b * xi;
  }
  ev.s = s;
  if (!ev.ambiguous_set.empty()) {
    const double r = c - s;
    double t;
    if (r > ev.U_bar) {
      ev.fill_case = 2;
      t = 1.0;
    } else if (r < ev.L_bar) {
      ev.fill_case = 3;
      t = 0.0;
    } else {
      ev.fill_case = 1;
      t = ev.U_bar > ev.L_bar ? (r - ev.L_bar) / (ev.U_bar - ev.L_bar) : 0.0;
    }
    for (int i : ev.ambiguous_set) ev.x[i] = inst.l[i] + t * (inst.u[i] - inst.l[i]);
  }
  ev.g = 0.0;
  for (int i = 0; i < n; ++i) ev.g += inst.B(0, i) * ev.x[i];
  return ev;
}

KnapsackSolution bps_solve(const KnapsackInstance& inst) {
  inst.validate();
  if (inst.m() != 1) throw SolverError(ErrorKind::bad_argument, "cqkp: exactly one coupling row expected");
  const int n = inst.n();
  for (int i = 0; i < n; ++i) {
    if (!(inst.B(0, i) > 0.0)) throw SolverError(ErrorKind::bad_argument, "cqkp: instance not preprocessed (b_i <= 0)");
  }
  const double c = inst.c[0];
  {
    const double lo = inst.B.row(0).dot(inst.l);
    const double hi = inst.B.row(0).dot(inst.u);
    const double tol = feasibility_tolerance(inst);
    if (c < lo - tol || c > hi + tol) throw SolverError(ErrorKind::infeasible, "cqkp: coupling target outside [b'l, b'u]");
  }
  KnapsackSolution sol;
  sol.lambda = VectorXd::Zero(1);
  if (n == 0) {
    sol.x = VectorXd::Zero(0);
    return sol;
  }

  // lam_u <= lam_l; the two coincide when d_i = 0
  std::vector<double> lam_u(n), lam_l(n);
  for (int i = 0; i < n; ++i) {
    const double b = inst.B(0, i);
    if (inst.d[i] > 0.0) {
      lam_u[i] = (inst.a[i] - inst.u[i] * inst.d[i]) / b;
      lam_l[i] = (inst.a[i] - inst.l[i] * inst.d[i]) / b;
    } else {
      lam_u[i] = lam_l[i] = inst.a[i] / b;
    }
  }

  double lamL = -kInf, lamU = kInf;
  double fixed = 0.0, aff_const = 0.0, aff_slope = 0.0;
  std::vector<int> undecided(n);
  for (int i = 0; i < n; ++i) undecided[i] = i;
  std::vector<double> cand;
  cand.reserve(2 * n);
  bool found = false;
  double lambda = 0.0;

  while (!undecided.empty()) {
    cand.clear();
    for (int i : undecided) {
      if (lam_u[i] > lamL && lam_u[i] < lamU) cand.push_back(lam_u[i]);
      if (lam_l[i] > lamL && lam_l[i] < lamU) cand.push_back(lam_l[i]);
    }
    if (cand.empty()) break;
    ++sol.iterations;
    const auto mid = cand.begin() + (cand.size() - 1) / 2;
    std::nth_element(cand.begin(), mid, cand.end());
    const double lam = *mid;

    // left and right limits of g at lam
    double gm = fixed + aff_const - lam * aff_slope;
    double gp = gm;
    for (int i : undecided) {
      const double b = inst.B(0, i);
      if (inst.d[i] > 0.0) {
        const double v = b * std::clamp((inst.a[i] - lam * b) / inst.d[i], inst.l[i], inst.u[i]);
        gm += v;
        gp += v;
      } else if (lam < lam_u[i]) {
        gm += b * inst.u[i];
        gp += b * inst.u[i];
      } else if (lam > lam_u[i]) {
        gm += b * inst.l[i];
        gp += b * inst.l[i];
      } else {
        gm += b * inst.u[i];
        gp += b * inst.l[i];
      }
    }
    if (gp > c) lamL = lam;
    else if (gm < c) lamU = lam;
    else {
      lambda = lam;
      found = true;
      break;
    }

    std::size_t w = 0;
    for (int i : undecided) {
      const double b = inst.B(0, i);
      if (lam_l[i] <= lamL) fixed += b * inst.l[i];
      else if (lam_u[i] >= lamU) fixed += b * inst.u[i];
      else if (lam_u[i] <= lamL && lam_l[i] >= lamU) {
        aff_const += b * inst.a[i] / inst.d[i];
        aff_slope += b * b / inst.d[i];
      } else {
        undecided[w++] = i;
      }
    }
    undecided.resize(w);
  }

  if (!found) {
    // g is affine on the open bracket: g = F - lambda * S
    const double F = fixed + aff_const;
    if (aff_slope > 0.0) lambda = (F - c) / aff_slope;
    else lambda = std::isfinite(lamL) ? lamL : (std::isfinite(lamU) ? lamU : 0.0);
    lambda = std::clamp(lambda, lamL, lamU);
  }

  sol.x = eval_x_lambda(inst, lambda, c).x;
  sol.lambda[0] = lambda;
  sol.objective = inst.objective(sol.x);
  return sol;
}

KnapsackSolution solve_cqkp(const KnapsackInstance& raw) {
  const Preprocessed pre = preprocess(raw);
  KnapsackSolution core = bps_solve(pre.core);
  KnapsackSolution out;
  out.x = pre.restore(core.x);
  out.lambda = core.lambda;
  out.iterations = core.iterations;
  out.objective = raw.objective(out.x);
  return out;
}

double knapsack_kkt_violation(const KnapsackInstance& inst, const KnapsackSolution& s) {
  const int n = inst.n();
  double worst = (inst.B * s.x - inst.c).lpNorm<Eigen::Infinity>();
  for (int i = 0; i < n; ++i) {
    const double xi = s.x[i];
    worst = std::max({worst, inst.l[i] - xi, xi - inst.u[i]});
    if (inst.l[i] == inst.u[i]) continue;
    const double r = inst.d[i] * xi - inst.a[i] + inst.B.col(i).dot(s.lambda);
    const double at = 1e-12 * std::max(1.0, std::max(std::abs(inst.l[i]), std::abs(inst.u[i])));
    if (xi <= inst.l[i] + at) worst = std::max(worst, -r);
    else if (xi >= inst.u[i] - at) worst = std::max(worst, r);
    else worst = std::max(worst, std::abs(r));
  }
  return std::max(worst, 0.0);
}

}  // namespace sosmpc
