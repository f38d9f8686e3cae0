#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "sosmpc/coordination.hpp"
#include "sosmpc/local_problem.hpp"

namespace sosmpc {

// Uniform [0, 1) from the top 53 bits of a 64-bit Mersenne twister draw.
double uniform01(std::mt19937_64& rng);

struct ChpParams {
  double zeta = 0.0;
  double eta_e = 0.6;
  MatrixXd A, B, C;
  double Q = 0.0, R = 0.0;
  VectorXd x_lo, x_hi;
  double u_lo = 0.0, u_hi = 0.0;

  double eta_h() const { return 1.0 - eta_e; }
  double heat_ratio() const { return eta_h() / eta_e; }
};

struct StorageParams {
  double zeta = 0.0;
  double A = 1.0, B = 0.0, C = 1.0;
  double Q = 0.0, R = 0.0;
  double x_lo = 0.0, x_hi = 1.0;
  double u_lo = 0.0, u_hi = 0.0;
};

ChpParams chp_params(double zeta, double eta_e);
StorageParams storage_params(double zeta);

// Phi = [x0], Theta = power reference tracked by C x.
LocalProblem chp_problem(const ChpParams& p, int horizon);
// Phi = [x0; x_ref], Theta = power reference tracked by u.
LocalProblem storage_problem(const StorageParams& p, int horizon);

enum class UnitKind { chp, elec_storage, heat_storage };
const char* unit_kind_name(UnitKind k);

struct Unit {
  UnitKind kind = UnitKind::chp;
  ChpParams chp;          // valid for kind == chp
  StorageParams storage;  // valid otherwise
  LocalProblem problem;
  double theta_lo = 0.0, theta_hi = 0.0;
  double elec_coef = 0.0, heat_coef = 0.0;

  int state_dim() const { return kind == UnitKind::chp ? 2 : 1; }
  VectorXd step(const VectorXd& x, double u) const;
  VectorXd phi(const VectorXd& x, double soc_ref) const;
  double u_lo() const { return kind == UnitKind::chp ? chp.u_lo : storage.u_lo; }
  double u_hi() const { return kind == UnitKind::chp ? chp.u_hi : storage.u_hi; }
  bool state_in_box(const VectorXd& x, double tol) const;
};

struct FleetOptions {
  int horizon = 10;
};

struct Fleet {
  std::vector<Unit> units;  // CHPs, then electrical storages, then heat storages
  int horizon = 10;

  int size() const { return static_cast<int>(units.size()); }
  std::vector<LocalProblem> problems() const;
  Coupling electrical(double demand) const;
  Coupling heat(double demand) const;
  // Steady CHP capacity: sum of electrical state bounds, and its heat equivalent.
  double elec_capacity() const;
  double heat_capacity() const;
  // Largest totals reachable with every Theta at its upper bound.
  double elec_upper() const;
  double heat_upper() const;
};

// Draw order: per CHP (zeta, eta_e), then one zeta per electrical storage,
// then one per heat storage.
Fleet build_fleet(int M, std::uint64_t seed, const FleetOptions& opt = {});

struct Demand {
  double elec = 0.0;
  double heat = 0.0;
};

// Representative daily profile in p.u., period 24.
Demand demand_profile(int t);
Demand scaled_demand(const Fleet& fleet, int t, double fraction);

struct SimulationConfig {
  int M = 6;
  std::uint64_t seed = 0;
  int case_id = 1;  // 1: electrical balance only, 2: electrical and heat
  int steps = 168;
  double demand_fraction = 0.6;
  double soc_ref = 0.5;
  double soc_init = 0.5;
  FleetOptions fleet;
  CoordinationOptions coordination;
};

struct StepRecord {
  int t = 0;
  Demand demand;
  std::vector<VectorXd> x;  // states at the start of the step
  VectorXd theta;
  VectorXd u0;
  VectorXd p_e, p_h;  // CHP outputs (zero for storages)
  VectorXd residuals;
  double cost = 0.0;
  double cumulative_cost = 0.0;
  int pieces = 0;  // total value-slice pieces over the fleet
  StepTimings timings;
};

struct SimulationLog {
  SimulationConfig config;
  Fleet fleet;
  std::vector<StepRecord> steps;
  std::vector<VectorXd> final_x;

  double average_pieces() const;
  // One row per (step, unit); deterministic for a fixed configuration.
  void write_csv(std::ostream& os) const;
  // One row per step, wall-clock seconds per phase.
  void write_timings_csv(std::ostream& os) const;
};

std::vector<Coupling> step_couplings(const Fleet& fleet, int case_id, const Demand& d);
std::vector<VectorXd> fleet_phis(const Fleet& fleet, const std::vector<VectorXd>& x, double soc_ref);
std::vector<VectorXd> initial_states(const Fleet& fleet, double soc_init);

// Called after each solved step with the data that produced it.
using StepObserver = std::function<void(int t, const std::vector<LocalProblem>&, const std::vector<VectorXd>& phis,
                                        const std::vector<Coupling>&, const HierarchicalResult&)>;

// Throws SolverError with .step set when a step cannot be solved.
SimulationLog simulate(const SimulationConfig& cfg, const StepObserver& observer = {});

struct BenchmarkConfig {
  std::vector<int> M_list{6};
  std::uint64_t seed = 0;
  int case_id = 1;
  int repetitions = 3;
  double demand_fraction = 0.6;
  double soc_ref = 0.5;
  double soc_init = 0.5;
  FleetOptions fleet;
};

struct BenchmarkRow {
  int M = 0;
  std::string method;  // hierarchical | centralized
  std::string phase;   // slice | coordinate | evaluate | total
  double median = 0.0, min = 0.0, max = 0.0;
  double cost_gap = 0.0;  // worst relative cost difference between methods
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;

  const BenchmarkRow* find(int M, const std::string& method, const std::string& phase) const;
  void write_csv(std::ostream& os) const;
};

// Repetition r solves the instance at hour r from the initial states.
BenchmarkReport benchmark(const BenchmarkConfig& cfg);

}  // namespace sosmpc
