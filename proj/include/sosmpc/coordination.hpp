#pragma once

#include <string>
#include <vector>

#include "sosmpc/knapsack.hpp"
#include "sosmpc/local_problem.hpp"
#include "sosmpc/pwq.hpp"

namespace sosmpc {

// min sum_i J_i(Theta_i)  s.t.  sum_i a_ij Theta_i (= or <=) b_j,  Theta_i in dom J_i.
struct CoordinationInstance {
  std::vector<PwqScalar> slices;
  std::vector<Coupling> couplings;  // a has one entry per slice

  int subsystems() const { return static_cast<int>(slices.size()); }
  int rows() const { return static_cast<int>(couplings.size()); }
  void validate_shape() const;
};

// Each "le" row gains a zero-cost slack slice on [0, s_max]; slack slices are
// appended after the original ones.
CoordinationInstance add_slacks(const CoordinationInstance& inst);

struct RecoveryEntry {
  double base = 0.0;
  std::vector<int> vars;       // knapsack index of theta_{i,r}
  std::vector<double> widths;  // I_r - I_{r-1}
};

struct RecoveryMap {
  std::vector<RecoveryEntry> entries;  // one per slice
};

struct SeparableForm {
  KnapsackInstance knap;
  RecoveryMap map;
  double const_offset = 0.0;
};

// Requires all relations to be equalities. Point slices are fixed and moved
// into the coupling targets.
SeparableForm slice_to_separable(const CoordinationInstance& inst);

VectorXd recover_theta(const VectorXd& theta_vars, const RecoveryMap& map);

struct CoordinationResult {
  VectorXd theta;  // original slices only
  double cost = 0.0;
  VectorXd theta_vars;  // knapsack solution
  VectorXd lambda;
  VectorXd residuals;  // sum_i a_ij Theta_i - b_j (<= 0 allowed on "le" rows)
  int knapsack_size = 0;
};

struct CoordinationOptions {
  int mmax = 3;
  PwqTolerances tol;
};

CoordinationResult coordinate(const CoordinationInstance& inst, const CoordinationOptions& opt = {});

struct StepTimings {
  double slice = 0.0;       // seconds, all subsystems
  double coordinate = 0.0;
  double evaluate = 0.0;
  std::vector<double> slice_each;
  std::vector<double> evaluate_each;
};

struct HierarchicalResult {
  VectorXd theta;
  std::vector<VectorXd> U;
  std::vector<VectorXd> u0;
  double cost = 0.0;  // sum of slice values at theta
  std::vector<SliceBundle> slices;
  CoordinationResult coordination;
  StepTimings timings;
};

// Slice every subsystem, coordinate, then evaluate the local policies.
// Errors carry the phase ("slice", "coordinate", "evaluate") and, where
// applicable, the subsystem index.
HierarchicalResult hierarchical_step(const std::vector<LocalProblem>& subsystems, const std::vector<VectorXd>& phis,
                                     const std::vector<Coupling>& couplings, const CoordinationOptions& opt = {});

}  // namespace sosmpc
