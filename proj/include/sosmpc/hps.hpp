#pragma once

#include <optional>
#include <vector>

#include "sosmpc/knapsack.hpp"

namespace sosmpc {

constexpr int kSignUnknown = 2;

// h0 + h'lambda = 0; lower side uses l_i, upper side u_i.
struct Hyperplane {
  double h0 = 0.0;
  VectorXd h;
  int variable = 0;
  bool upper = false;
  int sign = kSignUnknown;
};

// Ids 0..n-1 are the lower hyperplanes, n..2n-1 the upper ones.
std::vector<Hyperplane> build_hyperplanes(const KnapsackInstance& inst);

struct HpsStats {
  long long oracle_queries = 0;  // all levels
  long long top_queries = 0;     // issued by the outermost level
  int rounds = 0;
};

struct HpsTraceRow {
  int round = 0;
  int unknown = 0;
  int queries = 0;
  int resolved = 0;
};

// phi(lambda) = 0.5 lambda'H0 lambda + F0'lambda + G0 + sum over implicit terms of
//   min_{x in [l, u]} 0.5 d x^2 + (B_t'lambda - a) x.
// A term leaves the implicit set once its two hyperplane signs fix x(lambda).
class DualState {
 public:
  enum class Status { implicit, lower, upper, interior };

  explicit DualState(int dim);
  // Requires d > 0 and nonzero coupling columns.
  static DualState from_instance(const KnapsackInstance& inst);

  int dim() const { return k_; }
  int term_count() const { return static_cast<int>(d_.size()); }
  // Appends a term; clears every recorded sign.
  void add_term(double d, double a, double l, double u, const double* b);

  Hyperplane hyperplane(int id) const;
  int sign(int id) const { return sign_[id]; }
  Status status(int term) const { return status_[term]; }
  // Records a sign and folds the owning term once x(lambda) is fixed.
  void set_sign(int id, int s);
  // Unresolved hyperplane ids; compacts the internal list.
  const std::vector<int>& unknown();
  const std::vector<int>& implicit_terms();

  double phi(const VectorXd& lambda) const;
  VectorXd gradient(const VectorXd& lambda) const;
  // Base explicit part plus folded terms from their raw definition.
  double phi_folded_raw(const VectorXd& lambda) const;
  double phi_explicit(const VectorXd& lambda) const;
  double term_x(int t, const VectorXd& lambda) const;

  MatrixXd H0;
  VectorXd F0;
  double G0 = 0.0;

  // lambda* once an oracle query landed on it
  std::optional<VectorXd> known_maximizer;
  // one-dimensional cell bounds implied by recorded signs
  double cell_lo;
  double cell_hi;

  DualState restrict_to(double p0, const VectorXd& p) const;
  // Narrows the one-dimensional cell with sign(p0 + p1 lambda) = s.
  void record_halfspace(double p0, double p1, int s);
  // Largest magnitude folded into F0; scales flatness tests.
  double f_scale() const { return f_scale_; }

 private:
  void push_term(double d, double a, double l, double u, const double* b);
  void reset_tables();
  void fold(int t, Status s);
  double coupling(int t, const VectorXd& lambda) const;

  int k_;
  std::vector<double> d_, a_, l_, u_, B_;
  std::vector<int> sign_;  // size 2 * terms, rebuilt lazily
  std::vector<Status> status_;
  std::vector<int> unknown_, implicit_;
  MatrixXd base_H_;
  VectorXd base_F_;
  double base_G_ = 0.0;
  double f_scale_ = 0.0;
};

struct OracleResult {
  int sign = 0;
  VectorXd lambda_p;  // maximizer of phi on the query hyperplane
};

OracleResult oracle_query(double p0, const VectorXd& p, DualState& state, HpsStats& stats);
int oracle_sign(double p0, const VectorXd& p, DualState& state);

struct MdsResult {
  std::vector<int> resolved;
  int queries = 0;
};

// One multidimensional-search round: records signs for a fixed fraction of the
// unknown hyperplanes using a bounded number of oracle queries.
MdsResult mds_round(DualState& state, HpsStats& stats);

// Runs search rounds until every hyperplane is resolved; returns a maximizer.
VectorXd maximize_dual(DualState& state, HpsStats& stats);

struct HpsOptions {
  int mmax = 3;
  bool trace = false;
};

struct HpsResult : KnapsackSolution {
  HpsStats stats;
  std::vector<HpsTraceRow> trace;
};

HpsResult hps_solve(const KnapsackInstance& inst, const HpsOptions& opt = {});

}  // namespace sosmpc
