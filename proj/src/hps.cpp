// Hyperplane search: the dual of the separable QP is resolved cell by cell.
// Each round fixes the side of lambda* for a fixed fraction of the breakpoint
// hyperplanes; terms whose two sides are known become explicit quadratics.
#include <algorithm>
#include <cmath>
#include <limits>

#include "sosmpc/error.hpp"
#include "sosmpc/hps.hpp"

namespace sosmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

double lower_median(std::vector<double>& v) {
  const auto mid = v.begin() + (v.size() - 1) / 2;
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

VectorXd solve_level(DualState& st, HpsStats& stats, std::vector<HpsTraceRow>* trace);

// Signs of every unknown hyperplane at a global maximizer.
void resolve_at(DualState& st, const VectorXd& lam) {
  const std::vector<int> ids = st.unknown();
  for (int id : ids) {
    const Hyperplane hp = st.hyperplane(id);
    const double v = hp.h0 + hp.h.dot(lam);
    const double tol = 1e-12 * (std::abs(hp.h0) + hp.h.lpNorm<1>() * lam.lpNorm<Eigen::Infinity>());
    st.set_sign(id, std::abs(v) <= tol ? 0 : sgn(v));
  }
  st.known_maximizer = lam;
}

// Side of f = v + a t1 + c t2 over t1, t2 > 0; kSignUnknown when it changes.
int quadrant_sign(double v, double a, double c) {
  if (v >= 0.0 && a >= 0.0 && c >= 0.0 && (v > 0.0 || a > 0.0 || c > 0.0)) return 1;
  if (v <= 0.0 && a <= 0.0 && c <= 0.0 && (v < 0.0 || a < 0.0 || c < 0.0)) return -1;
  if (v == 0.0 && a == 0.0 && c == 0.0) return 0;
  return kSignUnknown;
}

constexpr int kFree = 3;

// Direction coefficient along an axis whose side is s (kFree: both sides possible).
bool axis_coef(double coef, int s, double& out) {
  if (s == kFree) {
    out = 0.0;
    return coef == 0.0;
  }
  out = coef * s;
  return true;
}

}  // namespace

std::vector<Hyperplane> build_hyperplanes(const KnapsackInstance& inst) {
  inst.validate();
  const int n = inst.n();
  std::vector<Hyperplane> out(2 * n);
  for (int i = 0; i < n; ++i) {
    out[i].h0 = inst.d[i] * inst.l[i] - inst.a[i];
    out[i].h = inst.B.col(i);
    out[i].variable = i;
    out[i].upper = false;
    out[n + i].h0 = inst.d[i] * inst.u[i] - inst.a[i];
    out[n + i].h = inst.B.col(i);
    out[n + i].variable = i;
    out[n + i].upper = true;
  }
  return out;
}

DualState::DualState(int dim)
    : H0(MatrixXd::Zero(dim, dim)), F0(VectorXd::Zero(dim)), cell_lo(-kInf), cell_hi(kInf), k_(dim) {
  base_H_ = H0;
  base_F_ = F0;
}

DualState DualState::from_instance(const KnapsackInstance& inst) {
  inst.validate();
  DualState st(inst.m());
  st.F0 = -inst.c;
  st.base_F_ = st.F0;
  st.f_scale_ = inst.c.size() ? inst.c.lpNorm<Eigen::Infinity>() : 0.0;
  std::vector<double> col(inst.m());
  for (int i = 0; i < inst.n(); ++i) {
    if (!(inst.d[i] > 0.0)) throw SolverError(ErrorKind::bad_argument, "hps: curvature must be positive");
    for (int r = 0; r < inst.m(); ++r) col[r] = inst.B(r, i);
    if (inst.B.col(i).cwiseAbs().maxCoeff() == 0.0) {
      throw SolverError(ErrorKind::bad_argument, "hps: zero coupling column");
    }
    st.push_term(inst.d[i], inst.a[i], inst.l[i], inst.u[i], col.data());
  }
  st.reset_tables();
  return st;
}

void DualState::add_term(double d, double a, double l, double u, const double* b) {
  push_term(d, a, l, u, b);
  reset_tables();
}

void DualState::push_term(double d, double a, double l, double u, const double* b) {
  d_.push_back(d);
  a_.push_back(a);
  l_.push_back(l);
  u_.push_back(u);
  B_.insert(B_.end(), b, b + k_);
}

void DualState::reset_tables() {
  const int n = term_count();
  status_.assign(n, Status::implicit);
  sign_.assign(2 * n, kSignUnknown);
  implicit_.resize(n);
  unknown_.resize(2 * n);
  for (int i = 0; i < n; ++i) implicit_[i] = i;
  for (int i = 0; i < 2 * n; ++i) unknown_[i] = i;
}

Hyperplane DualState::hyperplane(int id) const {
  const int T = term_count();
  const int t = id < T ? id : id - T;
  Hyperplane h;
  h.upper = id >= T;
  h.variable = t;
  h.h0 = d_[t] * (h.upper ? u_[t] : l_[t]) - a_[t];
  h.h = Eigen::Map<const VectorXd>(B_.data() + static_cast<std::size_t>(t) * k_, k_);
  h.sign = sign_[id];
  return h;
}

void DualState::record_halfspace(double p0, double p1, int s) {
  if (p1 == 0.0) return;
  const double at = -p0 / p1;
  if (s == 0) {
    cell_lo = std::max(cell_lo, at);
    cell_hi = std::min(cell_hi, at);
  } else if (s * sgn(p1) > 0) {
    cell_lo = std::max(cell_lo, at);
  } else {
    cell_hi = std::min(cell_hi, at);
  }
}

void DualState::set_sign(int id, int s) {
  if (sign_[id] != kSignUnknown) return;
  sign_[id] = s;
  const int T = term_count();
  const bool upper = id >= T;
  const int t = upper ? id - T : id;
  if (k_ == 1) {
    const double h0 = d_[t] * (upper ? u_[t] : l_[t]) - a_[t];
    record_halfspace(h0, B_[t], s);
  }
  if (status_[t] != Status::implicit) return;
  const int lo = t, up = T + t;
  if (!upper && s >= 0) {
    if (sign_[up] == kSignUnknown) sign_[up] = l_[t] == u_[t] ? s : 1;
    fold(t, Status::lower);
  } else if (upper && s <= 0) {
    if (sign_[lo] == kSignUnknown) sign_[lo] = l_[t] == u_[t] ? s : -1;
    fold(t, Status::upper);
  } else if (sign_[lo] == -1 && sign_[up] == 1) {
    fold(t, Status::interior);
  }
}

void DualState::fold(int t, Status s) {
  status_[t] = s;
  const Eigen::Map<const VectorXd> b(B_.data() + static_cast<std::size_t>(t) * k_, k_);
  const double d = d_[t], a = a_[t];
  if (s == Status::interior) {
    H0.noalias() -= (b * b.transpose()) / d;
    F0.noalias() += b * (a / d);
    G0 -= a * a / (2.0 * d);
    f_scale_ = std::max(f_scale_, b.lpNorm<Eigen::Infinity>() * std::abs(a / d));
  } else {
    const double x = s == Status::lower ? l_[t] : u_[t];
    F0.noalias() += b * x;
    G0 += 0.5 * d * x * x - a * x;
    f_scale_ = std::max(f_scale_, b.lpNorm<Eigen::Infinity>() * std::abs(x));
  }
}

const std::vector<int>& DualState::unknown() {
  std::size_t w = 0;
  for (int id : unknown_) {
    if (sign_[id] == kSignUnknown) unknown_[w++] = id;
  }
  unknown_.resize(w);
  return unknown_;
}

const std::vector<int>& DualState::implicit_terms() {
  std::size_t w = 0;
  for (int t : implicit_) {
    if (status_[t] == Status::implicit) implicit_[w++] = t;
  }
  implicit_.resize(w);
  return implicit_;
}

double DualState::coupling(int t, const VectorXd& lambda) const {
  const double* b = B_.data() + static_cast<std::size_t>(t) * k_;
  double v = 0.0;
  for (int r = 0; r < k_; ++r) v += b[r] * lambda[r];
  return v;
}

double DualState::term_x(int t, const VectorXd& lambda) const {
  return std::clamp((a_[t] - coupling(t, lambda)) / d_[t], l_[t], u_[t]);
}

double DualState::phi_explicit(const VectorXd& lambda) const {
  return 0.5 * lambda.dot(H0 * lambda) + F0.dot(lambda) + G0;
}

double DualState::phi(const VectorXd& lambda) const {
  double v = phi_explicit(lambda);
  for (int t = 0; t < term_count(); ++t) {
    if (status_[t] != Status::implicit) continue;
    const double x = term_x(t, lambda);
    v += 0.5 * d_[t] * x * x + (coupling(t, lambda) - a_[t]) * x;
  }
  return v;
}

double DualState::phi_folded_raw(const VectorXd& lambda) const {
  double v = 0.5 * lambda.dot(base_H_ * lambda) + base_F_.dot(lambda) + base_G_;
  for (int t = 0; t < term_count(); ++t) {
    if (status_[t] == Status::implicit) continue;
    const double x = term_x(t, lambda);
    v += 0.5 * d_[t] * x * x + (coupling(t, lambda) - a_[t]) * x;
  }
  return v;
}

VectorXd DualState::gradient(const VectorXd& lambda) const {
  VectorXd g = H0 * lambda + F0;
  for (int t : implicit_) {
    if (status_[t] != Status::implicit) continue;
    const double x = term_x(t, lambda);
    const double* b = B_.data() + static_cast<std::size_t>(t) * k_;
    for (int r = 0; r < k_; ++r) g[r] += b[r] * x;
  }
  return g;
}

DualState DualState::restrict_to(double p0, const VectorXd& p) const {
  // lambda = T lambda_bar + t0 with the largest |p_r| eliminated
  int r = 0;
  p.cwiseAbs().maxCoeff(&r);
  const int k = k_;
  MatrixXd T = MatrixXd::Zero(k, k - 1);
  for (int i = 0, j = 0; i < k; ++i) {
    if (i == r) continue;
    T(i, j) = 1.0;
    T(r, j) = -p[i] / p[r];
    ++j;
  }
  VectorXd t0 = VectorXd::Zero(k);
  t0[r] = -p0 / p[r];

  DualState out(k - 1);
  out.H0 = T.transpose() * H0 * T;
  out.F0 = T.transpose() * (H0 * t0 + F0);
  out.G0 = 0.5 * t0.dot(H0 * t0) + F0.dot(t0) + G0;
  out.base_H_ = out.H0;
  out.base_F_ = out.F0;
  out.base_G_ = out.G0;
  out.f_scale_ = std::max(f_scale_, out.F0.size() ? out.F0.lpNorm<Eigen::Infinity>() : 0.0);

  std::vector<double> nb(k - 1);
  for (int t : implicit_) {
    if (status_[t] != Status::implicit) continue;
    const double* b = B_.data() + static_cast<std::size_t>(t) * k;
    double bmax = 0.0, nmax = 0.0;
    for (int j = 0; j < k - 1; ++j) {
      double v = 0.0;
      for (int i = 0; i < k; ++i) v += T(i, j) * b[i];
      nb[j] = v;
      nmax = std::max(nmax, std::abs(v));
    }
    for (int i = 0; i < k; ++i) bmax = std::max(bmax, std::abs(b[i]));
    const double a = a_[t] - t0[r] * b[r];
    if (nmax <= 1e-13 * bmax) {
      // constant on the hyperplane
      const double x = std::clamp(a / d_[t], l_[t], u_[t]);
      out.G0 += 0.5 * d_[t] * x * x - a * x;
      continue;
    }
    out.push_term(d_[t], a, l_[t], u_[t], nb.data());
  }
  out.reset_tables();
  return out;
}

OracleResult oracle_query(double p0, const VectorXd& p, DualState& st, HpsStats& stats) {
  ++stats.oracle_queries;
  const int k = st.dim();
  st.implicit_terms();
  OracleResult res;
  if (k == 1) {
    res.lambda_p = VectorXd::Constant(1, -p0 / p[0]);
  } else {
    DualState sub = st.restrict_to(p0, p);
    const VectorXd lb = solve_level(sub, stats, nullptr);
    int r = 0;
    p.cwiseAbs().maxCoeff(&r);
    res.lambda_p.resize(k);
    double acc = p0;
    for (int i = 0, j = 0; i < k; ++i) {
      if (i == r) continue;
      res.lambda_p[i] = lb[j++];
      acc += p[i] * res.lambda_p[i];
    }
    res.lambda_p[r] = -acc / p[r];
  }
  // phi is C^1 (d > 0), so both one-sided derivatives along p coincide
  const VectorXd g = st.gradient(res.lambda_p);
  double scale = (st.H0 * res.lambda_p).lpNorm<Eigen::Infinity>() + st.F0.lpNorm<Eigen::Infinity>();
  for (int t : st.implicit_terms()) {
    const Hyperplane hp = st.hyperplane(t);
    scale += hp.h.lpNorm<Eigen::Infinity>() * std::abs(st.term_x(t, res.lambda_p));
  }
  const double gam = p.dot(g);
  const double tol = 1e-11 * p.norm() * scale;
  res.sign = gam > tol ? 1 : (gam < -tol ? -1 : 0);
  return res;
}

int oracle_sign(double p0, const VectorXd& p, DualState& state) {
  HpsStats stats;
  return oracle_query(p0, p, state, stats).sign;
}

MdsResult mds_round(DualState& st, HpsStats& stats) {
  MdsResult out;
  const std::vector<int> ids = st.unknown();
  if (ids.empty()) return out;
  const int k = st.dim();
  auto query = [&](double p0, const VectorXd& p) {
    ++out.queries;
    OracleResult r = oracle_query(p0, p, st, stats);
    if (k == 1) st.record_halfspace(p0, p[0], r.sign);
    if (r.sign == 0) resolve_at(st, r.lambda_p);
    return r.sign;
  };
  auto finish = [&]() {
    for (int id : ids) {
      if (st.sign(id) != kSignUnknown) out.resolved.push_back(id);
    }
  };

  if (k == 1) {
    std::vector<double> pts;
    pts.reserve(ids.size());
    for (int id : ids) {
      const Hyperplane hp = st.hyperplane(id);
      pts.push_back(-hp.h0 / hp.h[0]);
    }
    const double t = lower_median(pts);
    const int s = query(-t, VectorXd::Constant(1, 1.0));
    if (s != 0) {
      for (int id : ids) {
        const Hyperplane hp = st.hyperplane(id);
        double v = hp.h0 + hp.h[0] * t;
        if (std::abs(v) <= 1e-12 * (std::abs(hp.h0) + std::abs(hp.h[0] * t))) v = 0.0;
        const int r = quadrant_sign(v, hp.h[0] * s, 0.0);
        if (r != kSignUnknown) st.set_sign(id, r);
      }
    }
  } else if (k == 2) {
    struct Line {
      int id;
      double h0, h1, h2;
    };
    std::vector<Line> lines;
    lines.reserve(ids.size());
    std::vector<double> xs, slopes;
    for (int id : ids) {
      const Hyperplane hp = st.hyperplane(id);
      lines.push_back({id, hp.h0, hp.h[0], hp.h[1]});
      if (hp.h[1] == 0.0) xs.push_back(-hp.h0 / hp.h[0]);
      else slopes.push_back(-hp.h[0] / hp.h[1]);
    }
    double astar = 0.0;
    if (!slopes.empty()) astar = lower_median(slopes);
    // pair lines below the median slope with lines above it
    std::vector<std::pair<double, double>> lo_side, hi_side;  // (slope, intercept)
    std::vector<double> parallel;                              // sheared intercepts
    for (const Line& L : lines) {
      if (L.h2 == 0.0) continue;
      const double al = -L.h1 / L.h2, be = -L.h0 / L.h2;
      if (al < astar) lo_side.emplace_back(al, be);
      else if (al > astar) hi_side.emplace_back(al, be);
      else parallel.push_back(be);
    }
    const std::size_t np = std::min(lo_side.size(), hi_side.size());
    std::vector<std::pair<double, double>> meet(np);  // (lambda1, sheared ordinate)
    for (std::size_t j = 0; j < np; ++j) {
      const auto [a1, b1] = lo_side[j];
      const auto [a2, b2] = hi_side[j];
      const double x = (b1 - b2) / (a2 - a1);
      meet[j] = {x, b1 + (a1 - astar) * x};
      xs.push_back(x);
    }
    int s1 = kFree, s2 = kFree;
    double x0 = 0.0, y0 = 0.0;
    if (!xs.empty()) {
      x0 = lower_median(xs);
      VectorXd p(2);
      p << 1.0, 0.0;
      s1 = query(-x0, p);
      if (s1 == 0) {
        finish();
        return out;
      }
    }
    std::vector<double> ys(parallel);
    if (s1 != kFree) {
      for (const auto& [x, y] : meet) {
        if ((s1 > 0 && x <= x0) || (s1 < 0 && x >= x0)) ys.push_back(y);
      }
    }
    if (!ys.empty()) {
      y0 = lower_median(ys);
      VectorXd p(2);
      p << -astar, 1.0;
      s2 = query(-y0, p);
      if (s2 == 0) {
        finish();
        return out;
      }
    }
    // sheared coordinates: lambda2 = y' + astar lambda1
    for (const Line& L : lines) {
      double A = L.h1 + astar * L.h2;
      if (std::abs(A) <= 4.0 * kEps * (std::abs(L.h1) + std::abs(astar * L.h2))) A = 0.0;
      const double C = L.h2;
      double a, c;
      if (!axis_coef(A, s1, a) || !axis_coef(C, s2, c)) continue;
      const double ax = s1 == kFree ? 0.0 : A * x0;
      const double cy = s2 == kFree ? 0.0 : C * y0;
      double v = L.h0 + ax + cy;
      // lines through the corner itself
      if (std::abs(v) <= 1e-12 * (std::abs(L.h0) + std::abs(ax) + std::abs(cy))) v = 0.0;
      const int r = quadrant_sign(v, a, c);
      if (r != kSignUnknown) st.set_sign(L.id, r);
    }
  }

  bool any = false;
  for (int id : ids) any = any || st.sign(id) != kSignUnknown;
  if (!any) {
    // direct query on one hyperplane
    const Hyperplane hp = st.hyperplane(ids.front());
    const int s = query(hp.h0, hp.h);
    if (s != 0) st.set_sign(ids.front(), s);
  }
  finish();
  return out;
}

namespace {

VectorXd finish_level(DualState& st) {
  if (st.known_maximizer) return *st.known_maximizer;
  const int k = st.dim();
  const MatrixXd negH = -st.H0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(negH);
  const double emax = std::max(0.0, es.eigenvalues().maxCoeff());
  const double emin = es.eigenvalues().minCoeff();
  const double fs = std::max(1.0, st.f_scale());
  if (emin > 1e-12 * emax && emin > 0.0) {
    VectorXd lam = negH.ldlt().solve(st.F0);
    if (k == 1) lam[0] = std::clamp(lam[0], st.cell_lo, st.cell_hi);
    return lam;
  }
  if (k == 1) {
    if (std::abs(st.F0[0]) > 1e-9 * fs) {
      throw SolverError(ErrorKind::degenerate_restriction, "hps: dual restriction is unbounded");
    }
    const double lo = st.cell_lo, hi = st.cell_hi;
    double lam = 0.0;
    if (std::isfinite(lo) && std::isfinite(hi)) lam = 0.5 * (lo + hi);
    else if (std::isfinite(lo)) lam = lo;
    else if (std::isfinite(hi)) lam = hi;
    return VectorXd::Constant(1, lam);
  }
  // flat directions: least-norm stationary point
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(negH);
  cod.setThreshold(1e-12);
  const VectorXd lam = cod.solve(st.F0);
  if ((negH * lam - st.F0).lpNorm<Eigen::Infinity>() > 1e-7 * fs) {
    throw SolverError(ErrorKind::degenerate_restriction, "hps: dual function has no stationary point");
  }
  return lam;
}

VectorXd solve_level(DualState& st, HpsStats& stats, std::vector<HpsTraceRow>* trace) {
  int round = 0;
  while (!st.unknown().empty()) {
    const int before = static_cast<int>(st.unknown().size());
    const MdsResult r = mds_round(st, stats);
    ++round;
    if (trace) {
      ++stats.rounds;
      stats.top_queries += r.queries;
      trace->push_back({round, before, r.queries, before - static_cast<int>(st.unknown().size())});
    }
  }
  return finish_level(st);
}

}  // namespace

VectorXd maximize_dual(DualState& state, HpsStats& stats) { return solve_level(state, stats, nullptr); }

HpsResult hps_solve(const KnapsackInstance& inst, const HpsOptions& opt) {
  inst.validate();
  const int n = inst.n(), m = inst.m();
  if (m < 1) throw SolverError(ErrorKind::bad_argument, "hps: at least one coupling row expected");
  if (m > opt.mmax) {
    throw SolverError(ErrorKind::dimension_unsupported,
                      "hps: " + std::to_string(m) + " coupling rows exceed the configured maximum " +
                          std::to_string(opt.mmax));
  }
  const double eps = 1e-9 * std::max(1.0, n ? inst.d.maxCoeff() : 0.0);

  // decoupled columns are fixed at their unconstrained minimizer
  HpsResult out;
  out.x = VectorXd::Zero(n);
  KnapsackInstance core;
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (inst.B.col(i).cwiseAbs().maxCoeff() == 0.0) {
      if (inst.d[i] > 0.0) out.x[i] = std::clamp(inst.a[i] / inst.d[i], inst.l[i], inst.u[i]);
      else out.x[i] = inst.a[i] > 0.0 ? inst.u[i] : inst.l[i];
    } else {
      keep.push_back(i);
    }
  }
  const int nc = static_cast<int>(keep.size());
  core.d.resize(nc);
  core.a.resize(nc);
  core.l.resize(nc);
  core.u.resize(nc);
  core.B.resize(m, nc);
  core.c = inst.c;
  for (int k = 0; k < nc; ++k) {
    const int i = keep[k];
    core.d[k] = inst.d[i] > 0.0 ? inst.d[i] : eps;
    core.a[k] = inst.a[i];
    core.l[k] = inst.l[i];
    core.u[k] = inst.u[i];
    core.B.col(k) = inst.B.col(i);
  }

  DualState st = DualState::from_instance(core);
  VectorXd lam;
  try {
    lam = solve_level(st, out.stats, &out.trace);
  } catch (const SolverError& e) {
    if (e.kind() == ErrorKind::degenerate_restriction) {
      throw SolverError(ErrorKind::infeasible, std::string("hps: ") + e.what());
    }
    throw;
  }
  for (int k = 0; k < nc; ++k) {
    const int i = keep[k];
    switch (st.status(k)) {
      case DualState::Status::lower: out.x[i] = core.l[k]; break;
      case DualState::Status::upper: out.x[i] = core.u[k]; break;
      default: out.x[i] = st.term_x(k, lam); break;
    }
  }
  // Newton polish over the interior set: x_I moves along D^{-1} B_I' dlam
  for (int it = 0; it < 3; ++it) {
    const VectorXd r = inst.c - inst.B * out.x;
    if (r.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, inst.c.lpNorm<Eigen::Infinity>())) break;
    MatrixXd M = MatrixXd::Zero(m, m);
    std::vector<int> inner;
    for (int k = 0; k < nc; ++k) {
      const int i = keep[k];
      if (out.x[i] <= core.l[k] || out.x[i] >= core.u[k]) continue;
      inner.push_back(k);
      M.noalias() += core.B.col(k) * core.B.col(k).transpose() / core.d[k];
    }
    if (inner.empty()) break;
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(M);
    const VectorXd dlam = -cod.solve(r);
    for (int k : inner) {
      const int i = keep[k];
      out.x[i] = std::clamp(out.x[i] - core.B.col(k).dot(dlam) / core.d[k], core.l[k], core.u[k]);
    }
    lam += dlam;
  }
  const double res = (inst.B * out.x - inst.c).lpNorm<Eigen::Infinity>();
  const double cn = m ? inst.c.lpNorm<Eigen::Infinity>() : 0.0;
  if (res > 1e-7 * std::max(1.0, cn)) {
    throw SolverError(ErrorKind::infeasible, "hps: coupling residual " + std::to_string(res) + " after search");
  }
  out.lambda = lam;
  out.objective = inst.objective(out.x);
  out.iterations = out.stats.rounds;
  if (!opt.trace) out.trace.clear();
  return out;
}

}  // namespace sosmpc
