// Microgrid case study: mu-CHP units and storages tracking power references
// set by the coordinator, with electrical and heat balance as couplings.
#include "sosmpc/microgrid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "sosmpc/error.hpp"
#include "sosmpc/format.hpp"

namespace sosmpc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// weight * (g'z + h'U)^2
struct CostTerm {
  double weight;
  VectorXd g;
  VectorXd h;
};

struct Box {
  VectorXd lo, hi;
  std::vector<char> constrained;  // per state; empty means all
};

// Linear dynamics x+ = A x + B u over a horizon with x0 = z.head(nx);
// Theta is the last entry of z and is confined to [theta_lo, theta_hi].
class HorizonBuilder {
 public:
  HorizonBuilder(const MatrixXd& A, const MatrixXd& B, int nz, int horizon)
      : nx_(static_cast<int>(A.rows())), nz_(nz), N_(horizon), Px_(horizon + 1), Ux_(horizon + 1) {
    Px_[0] = MatrixXd::Zero(nx_, nz);
    Px_[0].leftCols(nx_).setIdentity();
    Ux_[0] = MatrixXd::Zero(nx_, horizon);
    for (int k = 0; k < horizon; ++k) {
      Px_[k + 1] = A * Px_[k];
      Ux_[k + 1] = A * Ux_[k];
      Ux_[k + 1].col(k) += B.col(0);
    }
  }

  const MatrixXd& Px(int k) const { return Px_[k]; }
  const MatrixXd& Ux(int k) const { return Ux_[k]; }
  VectorXd unit_z(int j) const { return VectorXd::Unit(nz_, j); }
  VectorXd unit_u(int k) const { return VectorXd::Unit(N_, k); }

  LocalProblem build(const std::vector<CostTerm>& terms, const Box& x, double u_lo, double u_hi, double theta_lo,
                     double theta_hi) const {
    LocalProblem p;
    p.n_U = N_;
    p.n_Phi = nz_ - 1;
    p.n_u0 = 1;
    p.Q_pt = MatrixXd::Zero(nz_, nz_);
    p.Q_uu = MatrixXd::Zero(N_, N_);
    p.Q_ptu = MatrixXd::Zero(nz_, N_);
    for (const CostTerm& t : terms) {
      p.Q_pt.noalias() += t.weight * t.g * t.g.transpose();
      p.Q_uu.noalias() += t.weight * t.h * t.h.transpose();
      p.Q_ptu.noalias() += 2.0 * t.weight * t.g * t.h.transpose();
    }
    std::vector<int> states;
    for (int s = 0; s < nx_; ++s) {
      if (x.constrained.empty() || x.constrained[s]) states.push_back(s);
    }
    const int rows = 2 * static_cast<int>(states.size()) * N_ + 2 * N_ + 2;
    p.C_U = MatrixXd::Zero(rows, N_);
    p.C_c = VectorXd::Zero(rows);
    p.C_pt = MatrixXd::Zero(rows, nz_);
    int r = 0;
    for (int k = 1; k <= N_; ++k) {
      for (int s : states) {
        p.C_U.row(r) = Ux_[k].row(s);
        p.C_c[r] = x.hi[s];
        p.C_pt.row(r) = -Px_[k].row(s);
        p.C_U.row(r + 1) = -Ux_[k].row(s);
        p.C_c[r + 1] = -x.lo[s];
        p.C_pt.row(r + 1) = Px_[k].row(s);
        r += 2;
      }
    }
    for (int k = 0; k < N_; ++k, r += 2) {
      p.C_U(r, k) = 1.0;
      p.C_c[r] = u_hi;
      p.C_U(r + 1, k) = -1.0;
      p.C_c[r + 1] = -u_lo;
    }
    p.C_c[r] = theta_hi;
    p.C_pt(r, nz_ - 1) = -1.0;
    p.C_c[r + 1] = -theta_lo;
    p.C_pt(r + 1, nz_ - 1) = 1.0;
    return p;
  }

 private:
  int nx_, nz_, N_;
  std::vector<MatrixXd> Px_, Ux_;
};

double chp_theta_hi(const ChpParams& p) { return p.x_hi[0]; }

// 24 hourly values, electricity peaks near 08:00 and 19:00, heat elevated
// over 06:00-09:00 and 17:00-22:00.
constexpr double kElecProfile[24] = {0.45, 0.42, 0.40, 0.40, 0.42, 0.50, 0.65, 0.80, 0.85, 0.78, 0.72, 0.70,
                                     0.70, 0.68, 0.66, 0.68, 0.75, 0.88, 0.97, 1.00, 0.92, 0.80, 0.65, 0.52};
constexpr double kHeatProfile[24] = {0.55, 0.52, 0.50, 0.50, 0.55, 0.65, 0.85, 0.92, 0.90, 0.85, 0.65, 0.58,
                                     0.55, 0.52, 0.52, 0.55, 0.65, 0.82, 0.90, 0.95, 0.95, 0.90, 0.85, 0.65};

}  // namespace

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ChpParams chp_params(double zeta, double eta_e) {
  ChpParams p;
  p.zeta = zeta;
  p.eta_e = eta_e;
  p.A.resize(2, 2);
  p.A << 0.6 + 0.2 * zeta, -0.1 - 0.1 * zeta, 1.0, 0.0;
  p.B.resize(2, 1);
  p.B << eta_e, 0.0;
  p.C.resize(1, 2);
  p.C << 1.0, 0.0;
  p.Q = 10.0 * (1.0 + 4.0 * zeta);
  p.R = 0.1 * (1.0 + zeta);
  p.x_lo = VectorXd::Zero(2);
  p.x_hi = VectorXd::Constant(2, 20.0 * (1.0 + 4.0 * zeta));
  p.u_lo = 0.0;
  p.u_hi = p.x_hi[0] / eta_e;
  return p;
}

StorageParams storage_params(double zeta) {
  StorageParams p;
  p.zeta = zeta;
  p.B = -1.0 / (20.0 * (1.0 + 4.0 * zeta));
  p.Q = 1.0 + zeta;
  p.R = 10.0 * (1.0 + zeta);
  p.u_hi = 1.0 / (5.0 * std::abs(p.B));
  p.u_lo = -p.u_hi;
  return p;
}

LocalProblem chp_problem(const ChpParams& p, int horizon) {
  // z = [x0 (2); Theta]
  const HorizonBuilder hb(p.A, p.B, 3, horizon);
  std::vector<CostTerm> terms;
  for (int k = 0; k < horizon; ++k) {
    terms.push_back({p.Q, (p.C * hb.Px(k)).transpose() - hb.unit_z(2), (p.C * hb.Ux(k)).transpose()});
    terms.push_back({p.R, VectorXd::Zero(3), hb.unit_u(k)});
  }
  // x2 is x1 delayed by one step under the same bounds, so its rows repeat x1's
  return hb.build(terms, {p.x_lo, p.x_hi, {1, 0}}, p.u_lo, p.u_hi, 0.0, chp_theta_hi(p));
}

LocalProblem storage_problem(const StorageParams& p, int horizon) {
  // z = [x0; x_ref; Theta]
  const HorizonBuilder hb(MatrixXd::Constant(1, 1, p.A), MatrixXd::Constant(1, 1, p.B), 3, horizon);
  std::vector<CostTerm> terms;
  for (int k = 0; k < horizon; ++k) {
    terms.push_back({p.Q, hb.Px(k).row(0).transpose() - hb.unit_z(1), hb.Ux(k).row(0).transpose()});
    terms.push_back({p.R, -hb.unit_z(2), hb.unit_u(k)});
  }
  return hb.build(terms, {VectorXd::Constant(1, p.x_lo), VectorXd::Constant(1, p.x_hi)}, p.u_lo, p.u_hi, p.u_lo,
                  p.u_hi);
}

const char* unit_kind_name(UnitKind k) {
  switch (k) {
    case UnitKind::chp: return "chp";
    case UnitKind::elec_storage: return "elec_storage";
    case UnitKind::heat_storage: return "heat_storage";
  }
  return "?";
}

VectorXd Unit::step(const VectorXd& x, double u) const {
  if (kind == UnitKind::chp) return chp.A * x + chp.B.col(0) * u;
  return VectorXd::Constant(1, storage.A * x[0] + storage.B * u);
}

VectorXd Unit::phi(const VectorXd& x, double soc_ref) const {
  if (kind == UnitKind::chp) return x;
  return (VectorXd(2) << x[0], soc_ref).finished();
}

bool Unit::state_in_box(const VectorXd& x, double tol) const {
  if (kind == UnitKind::chp) {
    return ((x - chp.x_lo).array() >= -tol).all() && ((chp.x_hi - x).array() >= -tol).all();
  }
  return x[0] >= storage.x_lo - tol && x[0] <= storage.x_hi + tol;
}

std::vector<LocalProblem> Fleet::problems() const {
  std::vector<LocalProblem> out;
  out.reserve(units.size());
  for (const Unit& u : units) out.push_back(u.problem);
  return out;
}

Coupling Fleet::electrical(double demand) const {
  Coupling c;
  for (const Unit& u : units) c.a.push_back(u.elec_coef);
  c.b = demand;
  return c;
}

Coupling Fleet::heat(double demand) const {
  Coupling c;
  for (const Unit& u : units) c.a.push_back(u.heat_coef);
  c.b = demand;
  return c;
}

double Fleet::elec_capacity() const {
  double s = 0.0;
  for (const Unit& u : units) {
    if (u.kind == UnitKind::chp) s += u.theta_hi;
  }
  return s;
}

double Fleet::heat_capacity() const {
  double s = 0.0;
  for (const Unit& u : units) {
    if (u.kind == UnitKind::chp) s += u.heat_coef * u.theta_hi;
  }
  return s;
}

double Fleet::elec_upper() const {
  double s = 0.0;
  for (const Unit& u : units) s += u.elec_coef * u.theta_hi;
  return s;
}

double Fleet::heat_upper() const {
  double s = 0.0;
  for (const Unit& u : units) s += u.heat_coef * u.theta_hi;
  return s;
}

Fleet build_fleet(int M, std::uint64_t seed, const FleetOptions& opt) {
  if (M < 3 || M % 3 != 0) throw SolverError(ErrorKind::bad_argument, "fleet: M must be a positive multiple of 3");
  if (opt.horizon < 1) throw SolverError(ErrorKind::bad_argument, "fleet: horizon must be positive");
  std::mt19937_64 rng(seed);
  const int g = M / 3;
  Fleet f;
  f.horizon = opt.horizon;
  f.units.reserve(M);
  for (int i = 0; i < g; ++i) {
    const double zeta = uniform01(rng);
    const double eta = 0.5 + 0.2 * uniform01(rng);
    Unit u;
    u.kind = UnitKind::chp;
    u.chp = chp_params(zeta, eta);
    u.problem = chp_problem(u.chp, opt.horizon);
    u.theta_lo = 0.0;
    u.theta_hi = chp_theta_hi(u.chp);
    u.elec_coef = 1.0;
    u.heat_coef = u.chp.heat_ratio();
    f.units.push_back(std::move(u));
  }
  for (UnitKind kind : {UnitKind::elec_storage, UnitKind::heat_storage}) {
    for (int i = 0; i < g; ++i) {
      Unit u;
      u.kind = kind;
      u.storage = storage_params(uniform01(rng));
      u.problem = storage_problem(u.storage, opt.horizon);
      u.theta_lo = u.storage.u_lo;
      u.theta_hi = u.storage.u_hi;
      u.elec_coef = kind == UnitKind::elec_storage ? 1.0 : 0.0;
      u.heat_coef = kind == UnitKind::heat_storage ? 1.0 : 0.0;
      f.units.push_back(std::move(u));
    }
  }
  return f;
}

Demand demand_profile(int t) {
  if (t < 0) throw SolverError(ErrorKind::bad_argument, "demand: negative hour");
  return {kElecProfile[t % 24], kHeatProfile[t % 24]};
}

Demand scaled_demand(const Fleet& fleet, int t, double fraction) {
  const Demand p = demand_profile(t);
  return {fraction * p.elec * fleet.elec_capacity(), fraction * p.heat * fleet.heat_capacity()};
}

std::vector<Coupling> step_couplings(const Fleet& fleet, int case_id, const Demand& d) {
  if (case_id != 1 && case_id != 2) throw SolverError(ErrorKind::bad_argument, "simulate: case must be 1 or 2");
  std::vector<Coupling> c{fleet.electrical(d.elec)};
  if (case_id == 2) c.push_back(fleet.heat(d.heat));
  return c;
}

std::vector<VectorXd> fleet_phis(const Fleet& fleet, const std::vector<VectorXd>& x, double soc_ref) {
  std::vector<VectorXd> out;
  out.reserve(fleet.units.size());
  for (std::size_t i = 0; i < fleet.units.size(); ++i) out.push_back(fleet.units[i].phi(x[i], soc_ref));
  return out;
}

std::vector<VectorXd> initial_states(const Fleet& fleet, double soc_init) {
  std::vector<VectorXd> x;
  for (const Unit& u : fleet.units) {
    x.push_back(u.kind == UnitKind::chp ? VectorXd::Zero(2) : VectorXd::Constant(1, soc_init));
  }
  return x;
}

SimulationLog simulate(const SimulationConfig& cfg, const StepObserver& observer) {
  if (cfg.steps < 0) throw SolverError(ErrorKind::bad_argument, "simulate: negative step count");
  SimulationLog log;
  log.config = cfg;
  log.fleet = build_fleet(cfg.M, cfg.seed, cfg.fleet);
  const Fleet& fleet = log.fleet;
  const std::vector<LocalProblem> problems = fleet.problems();
  std::vector<VectorXd> x = initial_states(fleet, cfg.soc_init);
  double cumulative = 0.0;
  log.steps.reserve(cfg.steps);
  for (int t = 0; t < cfg.steps; ++t) {
    StepRecord rec;
    rec.t = t;
    rec.demand = scaled_demand(fleet, t, cfg.demand_fraction);
    rec.x = x;
    const std::vector<Coupling> couplings = step_couplings(fleet, cfg.case_id, rec.demand);
    const std::vector<VectorXd> phis = fleet_phis(fleet, x, cfg.soc_ref);
    HierarchicalResult h;
    try {
      h = hierarchical_step(problems, phis, couplings, cfg.coordination);
    } catch (SolverError& e) {
      e.step = t;
      throw;
    }
    if (observer) observer(t, problems, phis, couplings, h);
    const int M = fleet.size();
    rec.theta = h.theta;
    rec.u0.resize(M);
    rec.p_e = VectorXd::Zero(M);
    rec.p_h = VectorXd::Zero(M);
    for (int i = 0; i < M; ++i) {
      const Unit& u = fleet.units[i];
      rec.u0[i] = h.u0[i][0];
      if (u.kind == UnitKind::chp) {
        rec.p_e[i] = x[i][0];
        rec.p_h[i] = rec.p_e[i] * u.chp.heat_ratio();
      }
      rec.pieces += static_cast<int>(h.slices[i].value.piece_count());
    }
    rec.residuals = h.coordination.residuals;
    rec.cost = h.cost;
    cumulative += h.cost;
    rec.cumulative_cost = cumulative;
    rec.timings = h.timings;
    for (int i = 0; i < M; ++i) x[i] = fleet.units[i].step(x[i], rec.u0[i]);
    log.steps.push_back(std::move(rec));
  }
  log.final_x = x;
  return log;
}

double SimulationLog::average_pieces() const {
  if (steps.empty() || fleet.units.empty()) return 0.0;
  double s = 0.0;
  for (const StepRecord& r : steps) s += r.pieces;
  return s / (static_cast<double>(steps.size()) * fleet.units.size());
}

void SimulationLog::write_csv(std::ostream& os) const {
  os << "step,unit,kind,x1,x2,u0,theta,p_e,p_h,demand_e,demand_h,residual_e,residual_h,step_cost,cumulative_cost\n";
  for (const StepRecord& r : steps) {
    for (int i = 0; i < fleet.size(); ++i) {
      const Unit& u = fleet.units[i];
      os << r.t << ',' << i << ',' << unit_kind_name(u.kind) << ',' << format_real(r.x[i][0]) << ','
         << (r.x[i].size() > 1 ? format_real(r.x[i][1]) : "") << ',' << format_real(r.u0[i]) << ','
         << format_real(r.theta[i]) << ',' << format_real(r.p_e[i]) << ',' << format_real(r.p_h[i]) << ','
         << format_real(r.demand.elec) << ',' << format_real(r.demand.heat) << ',' << format_real(r.residuals[0])
         << ',' << (r.residuals.size() > 1 ? format_real(r.residuals[1]) : "") << ',' << format_real(r.cost) << ','
         << format_real(r.cumulative_cost) << '\n';
    }
  }
}

void SimulationLog::write_timings_csv(std::ostream& os) const {
  os << "step,slice_s,coordinate_s,evaluate_s,pieces\n";
  for (const StepRecord& r : steps) {
    os << r.t << ',' << format_real(r.timings.slice) << ',' << format_real(r.timings.coordinate) << ','
       << format_real(r.timings.evaluate) << ',' << r.pieces << '\n';
  }
}

const BenchmarkRow* BenchmarkReport::find(int M, const std::string& method, const std::string& phase) const {
  for (const BenchmarkRow& r : rows) {
    if (r.M == M && r.method == method && r.phase == phase) return &r;
  }
  return nullptr;
}

void BenchmarkReport::write_csv(std::ostream& os) const {
  os << "M,method,phase,median_s,min_s,max_s,cost_gap\n";
  for (const BenchmarkRow& r : rows) {
    os << r.M << ',' << r.method << ',' << r.phase << ',' << format_real(r.median) << ',' << format_real(r.min)
       << ',' << format_real(r.max) << ',' << format_real(r.cost_gap) << '\n';
  }
}

BenchmarkReport benchmark(const BenchmarkConfig& cfg) {
  if (cfg.repetitions < 1) throw SolverError(ErrorKind::bad_argument, "benchmark: repetitions must be positive");
  BenchmarkReport rep;
  auto summarize = [&](int M, const char* method, const char* phase, std::vector<double> v, double gap) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double med = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    rep.rows.push_back({M, method, phase, med, v.front(), v.back(), gap});
  };
  for (int M : cfg.M_list) {
    const Fleet fleet = build_fleet(M, cfg.seed, cfg.fleet);
    const std::vector<LocalProblem> problems = fleet.problems();
    const std::vector<VectorXd> phis = fleet_phis(fleet, initial_states(fleet, cfg.soc_init), cfg.soc_ref);
    std::vector<double> slice, coord, eval, total, central;
    double gap = 0.0;
    for (int r = 0; r < cfg.repetitions; ++r) {
      const auto couplings = step_couplings(fleet, cfg.case_id, scaled_demand(fleet, r, cfg.demand_fraction));
      auto t0 = Clock::now();
      const HierarchicalResult h = hierarchical_step(problems, phis, couplings);
      total.push_back(seconds_since(t0));
      slice.push_back(h.timings.slice);
      coord.push_back(h.timings.coordinate);
      eval.push_back(h.timings.evaluate);
      t0 = Clock::now();
      const CentralizedResult c = centralized_solve(problems, phis, couplings);
      central.push_back(seconds_since(t0));
      gap = std::max(gap, std::abs(h.cost - c.cost) / std::max(1.0, std::abs(c.cost)));
    }
    summarize(M, "hierarchical", "slice", slice, gap);
    summarize(M, "hierarchical", "coordinate", coord, gap);
    summarize(M, "hierarchical", "evaluate", eval, gap);
    summarize(M, "hierarchical", "total", total, gap);
    summarize(M, "centralized", "total", central, gap);
  }
  return rep;
}

}  // namespace sosmpc
