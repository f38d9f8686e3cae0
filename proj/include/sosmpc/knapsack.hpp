#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace sosmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// min sum 0.5 d_i x_i^2 - a_i x_i  s.t.  l <= x <= u,  B x = c.
struct KnapsackInstance {
  VectorXd d, a, l, u;
  MatrixXd B;  // m x n
  VectorXd c;  // m

  int n() const { return static_cast<int>(d.size()); }
  int m() const { return static_cast<int>(c.size()); }
  // Throws bad_argument on shape errors, l > u or d < 0.
  void validate() const;
  double objective(const VectorXd& x) const;
};

struct KnapsackSolution {
  VectorXd x;
  VectorXd lambda;  // stationarity: d_i x_i - a_i + B_i' lambda = 0 off the bounds
  double objective = 0.0;
  int iterations = 0;
};

// Single-row preprocessing: zero coefficients are fixed, negative ones flipped.
struct Preprocessed {
  KnapsackInstance core;            // b > 0 throughout
  std::vector<int> core_index;      // original index of each core variable
  std::vector<std::pair<int, double>> eliminated;
  std::vector<int> flips;           // original indices substituted by -x
  int n_original = 0;

  VectorXd restore(const VectorXd& core_x) const;
};

Preprocessed preprocess(const KnapsackInstance& raw);

double feasibility_tolerance(const KnapsackInstance& inst);

struct LambdaEval {
  double lambda = 0.0;
  VectorXd x;
  double g = 0.0;
  std::vector<int> ambiguous_set;  // d_i = 0 and lambda sits on the breakpoint a_i / b_i
  double L_bar = 0.0;
  double U_bar = 0.0;
  double s = 0.0;
  int fill_case = 0;  // 0: no ambiguity, 1: proportional fill, 2: all upper, 3: all lower
};

LambdaEval eval_x_lambda(const KnapsackInstance& inst, double lambda, double c);

// Breakpoint search on a preprocessed single-row instance.
KnapsackSolution bps_solve(const KnapsackInstance& core);

// preprocess + bps_solve + restore.
KnapsackSolution solve_cqkp(const KnapsackInstance& raw);

// Largest violation of the knapsack KKT conditions (sign conditions at the
// bounds, stationarity inside, coupling residual).
double knapsack_kkt_violation(const KnapsackInstance& inst, const KnapsackSolution& s);

}  // namespace sosmpc
