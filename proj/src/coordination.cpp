// Coordination over value-function slices. Every slice piece becomes one
// knapsack variable measuring how far Theta has advanced into that piece;
// convexity makes the pieces fill left to right, so the separable relaxation
// is exact.
#include <algorithm>
#include <chrono>
#include <cmath>

#include "sosmpc/coordination.hpp"
#include "sosmpc/error.hpp"
#include "sosmpc/hps.hpp"

namespace sosmpc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool is_point(const PwqScalar& f) { return f.hi() <= f.lo(); }

struct Kahan {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

SolverError tagged(const SolverError& e, const char* phase, int subsystem) {
  SolverError out(e.kind(), e.what());
  out.phase = phase;
  if (subsystem >= 0) out.subsystem = subsystem;
  return out;
}

}  // namespace

void CoordinationInstance::validate_shape() const {
  if (slices.empty()) throw SolverError(ErrorKind::bad_argument, "coordinate: no slices");
  for (const Coupling& c : couplings) {
    if (static_cast<int>(c.a.size()) != subsystems()) {
      throw SolverError(ErrorKind::bad_argument, "coordinate: coupling row length differs from slice count");
    }
    for (double v : c.a) {
      if (!std::isfinite(v)) throw SolverError(ErrorKind::bad_argument, "coordinate: non-finite coupling coefficient");
    }
    if (!std::isfinite(c.b)) throw SolverError(ErrorKind::bad_argument, "coordinate: non-finite coupling target");
  }
}

CoordinationInstance add_slacks(const CoordinationInstance& inst) {
  inst.validate_shape();
  CoordinationInstance out = inst;
  const int M = inst.subsystems();
  for (int j = 0; j < inst.rows(); ++j) {
    if (inst.couplings[j].rel != Relation::le) continue;
    double min_lhs = 0.0;
    for (int i = 0; i < M; ++i) {
      const double a = inst.couplings[j].a[i];
      if (a == 0.0) continue;
      min_lhs += std::min(a * inst.slices[i].lo(), a * inst.slices[i].hi());
    }
    const double smax = inst.couplings[j].b - min_lhs;
    if (!std::isfinite(smax)) {
      throw SolverError(ErrorKind::unbounded_slack, "coordinate: row " + std::to_string(j) + " has no finite slack bound");
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(inst.couplings[j].b));
    if (smax < -tol) {
      throw SolverError(ErrorKind::infeasible, "coordinate: row " + std::to_string(j) + " cannot be satisfied");
    }
    out.slices.emplace_back(std::vector<double>{0.0, std::max(0.0, smax)}, std::vector<PwqPiece>{{0.0, 0.0, 0.0}});
    for (int r = 0; r < inst.rows(); ++r) out.couplings[r].a.push_back(r == j ? 1.0 : 0.0);
    out.couplings[j].rel = Relation::eq;
  }
  return out;
}

SeparableForm slice_to_separable(const CoordinationInstance& inst) {
  inst.validate_shape();
  const int M = inst.subsystems();
  const int m = inst.rows();
  for (const Coupling& c : inst.couplings) {
    if (c.rel != Relation::eq) throw SolverError(ErrorKind::bad_argument, "coordinate: add slacks before transforming");
  }
  int n = 0;
  for (const PwqScalar& f : inst.slices) {
    if (!is_point(f)) n += static_cast<int>(f.piece_count());
  }
  SeparableForm out;
  KnapsackInstance& k = out.knap;
  k.d.resize(n);
  k.a.resize(n);
  k.l = VectorXd::Zero(n);
  k.u.resize(n);
  k.B = MatrixXd::Zero(m, n);
  k.c.resize(m);
  std::vector<Kahan> target(m);
  for (int j = 0; j < m; ++j) target[j].add(inst.couplings[j].b);
  Kahan offset;
  out.map.entries.resize(M);
  int v = 0;
  for (int i = 0; i < M; ++i) {
    const PwqScalar& f = inst.slices[i];
    RecoveryEntry& e = out.map.entries[i];
    e.base = f.lo();
    for (int j = 0; j < m; ++j) target[j].add(-inst.couplings[j].a[i] * f.lo());
    offset.add(f.pieces().front().value(f.lo()));
    if (is_point(f)) continue;
    const auto& bp = f.breakpoints();
    for (std::size_t r = 0; r < f.piece_count(); ++r) {
      const PwqPiece& p = f.pieces()[r];
      k.d[v] = p.h;
      k.a[v] = -(p.h * bp[r] + p.f);
      k.u[v] = bp[r + 1] - bp[r];
      for (int j = 0; j < m; ++j) k.B(j, v) = inst.couplings[j].a[i];
      e.vars.push_back(v);
      e.widths.push_back(k.u[v]);
      ++v;
    }
  }
  for (int j = 0; j < m; ++j) k.c[j] = target[j].sum;
  out.const_offset = offset.sum;
  return out;
}

VectorXd recover_theta(const VectorXd& theta_vars, const RecoveryMap& map) {
  VectorXd theta(map.entries.size());
  for (std::size_t i = 0; i < map.entries.size(); ++i) {
    const RecoveryEntry& e = map.entries[i];
    Kahan s;
    s.add(e.base);
    for (int v : e.vars) s.add(theta_vars[v]);
    theta[static_cast<int>(i)] = s.sum;
  }
  return theta;
}

CoordinationResult coordinate(const CoordinationInstance& inst, const CoordinationOptions& opt) {
  inst.validate_shape();
  for (int i = 0; i < inst.subsystems(); ++i) {
    const PwqScalar& f = inst.slices[i];
    if (is_point(f)) continue;
    const ValidationReport rep = pwq_validate(f, opt.tol);
    if (!rep.ok()) {
      SolverError e(ErrorKind::validation, "coordinate: slice " + std::to_string(i) + ": " + rep.violations.front().message);
      e.subsystem = i;
      throw e;
    }
  }
  const CoordinationInstance eq = add_slacks(inst);
  const SeparableForm sep = slice_to_separable(eq);
  const int m = eq.rows();
  KnapsackSolution sol;
  if (m == 0) {
    // no coupling: every variable sits at its unconstrained minimizer
    const KnapsackInstance& k = sep.knap;
    sol.x.resize(k.n());
    for (int v = 0; v < k.n(); ++v) {
      sol.x[v] = k.d[v] > 0.0 ? std::clamp(k.a[v] / k.d[v], k.l[v], k.u[v]) : (k.a[v] > 0.0 ? k.u[v] : k.l[v]);
    }
    sol.lambda = VectorXd::Zero(0);
  } else if (m == 1) {
    sol = solve_cqkp(sep.knap);
  } else {
    HpsOptions ho;
    ho.mmax = opt.mmax;
    sol = hps_solve(sep.knap, ho);
  }
  CoordinationResult out;
  const VectorXd all = recover_theta(sol.x, sep.map);
  const int M = inst.subsystems();
  out.theta = all.head(M);
  for (int i = 0; i < M; ++i) out.theta[i] = std::clamp(out.theta[i], inst.slices[i].lo(), inst.slices[i].hi());
  out.theta_vars = sol.x;
  out.lambda = sol.lambda;
  out.cost = sep.knap.objective(sol.x) + sep.const_offset;
  out.knapsack_size = sep.knap.n();
  out.residuals.resize(inst.rows());
  for (int j = 0; j < inst.rows(); ++j) {
    Kahan s;
    for (int i = 0; i < M; ++i) s.add(inst.couplings[j].a[i] * out.theta[i]);
    s.add(-inst.couplings[j].b);
    out.residuals[j] = s.sum;
  }
  return out;
}

HierarchicalResult hierarchical_step(const std::vector<LocalProblem>& subsystems, const std::vector<VectorXd>& phis,
                                     const std::vector<Coupling>& couplings, const CoordinationOptions& opt) {
  const int M = static_cast<int>(subsystems.size());
  if (static_cast<int>(phis.size()) != M) {
    throw SolverError(ErrorKind::bad_argument, "hierarchical_step: one Phi per subsystem expected");
  }
  HierarchicalResult out;
  out.slices.reserve(M);
  out.timings.slice_each.resize(M);
  out.timings.evaluate_each.resize(M);

  const auto t_slice = Clock::now();
  for (int i = 0; i < M; ++i) {
    const auto t0 = Clock::now();
    try {
      out.slices.push_back(parametric_slice(subsystems[i], phis[i]));
    } catch (const SolverError& e) {
      throw tagged(e, "slice", i);
    }
    out.timings.slice_each[i] = seconds_since(t0);
  }
  out.timings.slice = seconds_since(t_slice);

  CoordinationInstance ci;
  ci.couplings = couplings;
  for (const SliceBundle& s : out.slices) ci.slices.push_back(s.value);
  const auto t_coord = Clock::now();
  try {
    out.coordination = coordinate(ci, opt);
  } catch (const SolverError& e) {
    throw tagged(e, "coordinate", e.subsystem ? *e.subsystem : -1);
  }
  out.timings.coordinate = seconds_since(t_coord);
  out.theta = out.coordination.theta;

  const auto t_eval = Clock::now();
  out.U.resize(M);
  out.u0.resize(M);
  Kahan cost;
  for (int i = 0; i < M; ++i) {
    const auto t0 = Clock::now();
    try {
      const SliceBundle& s = out.slices[i];
      const double th = std::clamp(out.theta[i], s.lo(), s.hi());
      out.U[i] = s.policy.eval(th);
      out.u0[i] = out.U[i].head(subsystems[i].n_u0);
      cost.add(pwq_eval(s.value, th));
    } catch (const SolverError& e) {
      throw tagged(e, "evaluate", i);
    }
    out.timings.evaluate_each[i] = seconds_since(t0);
  }
  out.timings.evaluate = seconds_since(t_eval);
  out.cost = cost.sum;
  return out;
}

}  // namespace sosmpc
