#include <doctest.h>

#include <cmath>
#include <random>

#include "sosmpc/error.hpp"
#include "sosmpc/knapsack.hpp"
#include "sosmpc/qp.hpp"
#include "knapsack_oracle.hpp"

using namespace sosmpc;
using sosmpc::testing::knapsack_as_qp;

namespace {

KnapsackInstance make(std::vector<double> d, std::vector<double> a, std::vector<double> l, std::vector<double> u,
                      std::vector<double> b, double c) {
  KnapsackInstance k;
  const int n = static_cast<int>(d.size());
  k.d = Eigen::Map<VectorXd>(d.data(), n);
  k.a = Eigen::Map<VectorXd>(a.data(), n);
  k.l = Eigen::Map<VectorXd>(l.data(), n);
  k.u = Eigen::Map<VectorXd>(u.data(), n);
  k.B = Eigen::Map<MatrixXd>(b.data(), 1, n);
  k.c = VectorXd::Constant(1, c);
  return k;
}

KnapsackInstance random_instance(std::mt19937_64& rng, int n, double zero_frac, bool allow_nonpositive_b) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  KnapsackInstance k;
  k.d.resize(n);
  k.a.resize(n);
  k.l.resize(n);
  k.u.resize(n);
  k.B.resize(1, n);
  for (int i = 0; i < n; ++i) {
    k.d[i] = U(rng) < zero_frac ? 0.0 : 0.1 + 2.0 * U(rng);
    k.a[i] = 4.0 * U(rng) - 2.0;
    k.l[i] = -U(rng);
    k.u[i] = k.l[i] + 0.1 + 2.0 * U(rng);
    double b = 0.2 + U(rng);
    if (allow_nonpositive_b) {
      const double r = U(rng);
      if (r < 0.1) b = 0.0;
      else if (r < 0.3) b = -b;
    }
    k.B(0, i) = b;
  }
  const double lo = (k.B.row(0).cwiseMax(0.0).dot(k.l) + k.B.row(0).cwiseMin(0.0).dot(k.u));
  const double hi = (k.B.row(0).cwiseMax(0.0).dot(k.u) + k.B.row(0).cwiseMin(0.0).dot(k.l));
  k.c = VectorXd::Constant(1, lo + U(rng) * (hi - lo));
  return k;
}

}  // namespace

TEST_CASE("preprocess fixes zero coefficients and flips negative ones") {
  const auto k = make({2, 1}, {4, 0}, {0, 0}, {3, 1}, {0, 1}, 0.5);
  const Preprocessed p = preprocess(k);
  REQUIRE(p.eliminated.size() == 1);
  CHECK(p.eliminated[0].first == 0);
  CHECK(p.eliminated[0].second == doctest::Approx(2.0));
  CHECK(p.core.n() == 1);

  const auto f = make({1}, {0}, {-1}, {1}, {-1}, 0.5);
  const Preprocessed pf = preprocess(f);
  CHECK(pf.flips == std::vector<int>{0});
  CHECK(pf.core.B(0, 0) == 1.0);
  CHECK(pf.core.l[0] == -1.0);
  CHECK(pf.core.u[0] == 1.0);
  const KnapsackSolution s = solve_cqkp(f);
  CHECK(s.x[0] == doctest::Approx(-0.5));

  const auto bad = make({1, 1}, {0, 0}, {0, 0}, {1, 1}, {1, 1}, 3.0);
  try {
    preprocess(bad);
    FAIL("expected infeasible");
  } catch (const SolverError& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
  }
}

TEST_CASE("zero-curvature fixing minimizes the linear term") {
  const auto k = make({0, 0, 0, 1}, {-1, 2, 0, 0}, {-1, -2, -3, 0}, {1, 2, 3, 1}, {0, 0, 0, 1}, 0.5);
  const Preprocessed p = preprocess(k);
  REQUIRE(p.eliminated.size() == 3);
  CHECK(p.eliminated[0].second == -1.0);
  CHECK(p.eliminated[1].second == 2.0);
  CHECK(p.eliminated[2].second == -3.0);
}

TEST_CASE("eval_x_lambda median formula and fill cases") {
  const auto k = make({1}, {2}, {0}, {1}, {1}, 0.0);
  CHECK(eval_x_lambda(k, 0.0, 0.0).x[0] == 1.0);
  CHECK(eval_x_lambda(k, 1.5, 0.0).x[0] == 0.5);
  CHECK(eval_x_lambda(k, 2.5, 0.0).x[0] == 0.0);

  const auto z = make({0}, {3}, {0}, {2}, {1}, 1.0);
  const LambdaEval e1 = eval_x_lambda(z, 3.0, 1.0);
  CHECK(e1.ambiguous_set == std::vector<int>{0});
  CHECK(e1.L_bar == 0.0);
  CHECK(e1.U_bar == 2.0);
  CHECK(e1.s == 0.0);
  CHECK(e1.fill_case == 1);
  CHECK(e1.x[0] == doctest::Approx(1.0));
  CHECK(e1.g == doctest::Approx(1.0));

  const auto z2 = make({0, 1}, {3, 1}, {0, 0}, {2, 1}, {1, 1}, 2.5);
  const LambdaEval e2 = eval_x_lambda(z2, 3.0, 2.5);
  CHECK(e2.x[1] == 0.0);
  CHECK(e2.s == 0.0);
  CHECK(e2.fill_case == 2);
  CHECK(e2.x[0] == 2.0);
  CHECK(e2.g == 2.0);
}

TEST_CASE("bps_solve small examples") {
  const auto k = make({2}, {0}, {-1}, {1}, {1}, 0.5);
  const KnapsackSolution s = bps_solve(k);
  CHECK(s.x[0] == doctest::Approx(0.5));
  CHECK(s.lambda[0] == doctest::Approx(-1.0));
  CHECK(s.objective == doctest::Approx(0.25));

  const auto sym = make({1, 1}, {0, 0}, {0, 0}, {1, 1}, {1, 1}, 1.0);
  const KnapsackSolution t = bps_solve(sym);
  CHECK(t.x[0] == doctest::Approx(0.5));
  CHECK(t.x[1] == doctest::Approx(0.5));

  // jump: two linear variables sharing a breakpoint
  const auto jump = make({0, 0}, {1, 2}, {0, 0}, {1, 1}, {1, 2}, 1.0);
  const KnapsackSolution j = bps_solve(jump);
  CHECK(j.lambda[0] == doctest::Approx(1.0));
  CHECK(jump.B.row(0).dot(j.x) == doctest::Approx(1.0));
  CHECK(j.objective == doctest::Approx(-1.0));
}

TEST_CASE("bps_solve matches KKT enumeration with zero curvatures") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    KnapsackInstance k = random_instance(rng, 5, 0.0, false);
    k.d[1] = 0.0;
    k.d[3] = 0.0;
    const KnapsackSolution s = solve_cqkp(k);
    const QpSolution ref = kkt_enumerate_solve(knapsack_as_qp(k));
    CHECK(s.objective == doctest::Approx(ref.objective).epsilon(1e-8).scale(1.0));
    CHECK(std::abs(k.B.row(0).dot(s.x) - k.c[0]) <= 1e-9 * std::max(1.0, std::abs(k.c[0])));
    CHECK(knapsack_kkt_violation(k, s) <= 1e-8);
  }
}

TEST_CASE("random instances with sign mixes against enumeration") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> N(1, 8);
  for (int rep = 0; rep < 300; ++rep) {
    const KnapsackInstance k = random_instance(rng, N(rng), 0.2, true);
    const KnapsackSolution s = solve_cqkp(k);
    const QpSolution ref = kkt_enumerate_solve(knapsack_as_qp(k));
    CHECK(s.objective == doctest::Approx(ref.objective).epsilon(1e-7).scale(1.0));
    CHECK((s.x - k.u).maxCoeff() <= 0.0);
    CHECK((k.l - s.x).maxCoeff() <= 0.0);
  }
}

TEST_CASE("larger instances against the dense QP") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const KnapsackInstance k = random_instance(rng, 150, 0.2, true);
    const KnapsackSolution s = solve_cqkp(k);
    const QpSolution ref = qp_solve(knapsack_as_qp(k));
    CHECK(s.objective == doctest::Approx(ref.objective).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("g is non-increasing and iterations stay logarithmic") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> U(-5.0, 5.0);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 1 + rep * 7;
    const KnapsackInstance k = random_instance(rng, n, 0.2, false);
    std::vector<double> lams(40);
    for (double& v : lams) v = U(rng);
    std::sort(lams.begin(), lams.end());
    double prev = std::numeric_limits<double>::infinity();
    for (double lam : lams) {
      const double g = eval_x_lambda(k, lam, k.c[0]).g;
      CHECK(g <= prev + 1e-12);
      prev = g;
    }
    const KnapsackSolution s = bps_solve(k);
    CHECK(s.iterations <= static_cast<int>(std::ceil(std::log2(2.0 * n))) + 2);
  }
}

TEST_CASE("bps_solve rejects unpreprocessed data") {
  const auto k = make({1}, {0}, {0}, {1}, {-1}, -0.5);
  CHECK_THROWS_AS(bps_solve(k), SolverError);
}
