#include <doctest.h>

#include <cmath>
#include <random>

#include "knapsack_oracle.hpp"
#include "sosmpc/error.hpp"
#include "sosmpc/hps.hpp"

using namespace sosmpc;
using sosmpc::testing::knapsack_as_qp;
using sosmpc::testing::random_multi_instance;

namespace {

KnapsackInstance identity_pair() {
  KnapsackInstance k;
  k.d = VectorXd::Ones(2);
  k.a = VectorXd::Zero(2);
  k.l = VectorXd::Constant(2, -10.0);
  k.u = VectorXd::Constant(2, 10.0);
  k.B = MatrixXd::Identity(2, 2);
  k.c = VectorXd(2);
  k.c << 1.0, 2.0;
  return k;
}

int sgn_expected(double v) { return (v > 0.0) - (v < 0.0); }

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("hyperplanes of a variable share the coupling column") {
  KnapsackInstance k;
  k.d = VectorXd::Constant(1, 1.0);
  k.a = VectorXd::Constant(1, 2.0);
  k.l = VectorXd::Constant(1, 0.0);
  k.u = VectorXd::Constant(1, 1.0);
  k.B = MatrixXd::Ones(2, 1);
  k.c = VectorXd::Zero(2);
  const auto hs = build_hyperplanes(k);
  REQUIRE(hs.size() == 2);
  CHECK(hs[0].h0 == -2.0);
  CHECK(hs[1].h0 == -1.0);
  CHECK(hs[0].h == hs[1].h);
  CHECK(hs[1].upper);

  k.u[0] = 0.0;
  const auto flat = build_hyperplanes(k);
  CHECK(flat[0].h0 == flat[1].h0);

  std::mt19937_64 rng(3);
  const KnapsackInstance r = random_multi_instance(rng, 3, 2);
  const auto six = build_hyperplanes(r);
  REQUIRE(six.size() == 6);
  for (int i = 0; i < 3; ++i) {
    CHECK(six[i].h == VectorXd(r.B.col(i)));
    CHECK(six[i + 3].h == VectorXd(r.B.col(i)));
  }
}

TEST_CASE("equalities pin x and stationarity gives lambda") {
  const HpsResult s = hps_solve(identity_pair());
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.x[1] == doctest::Approx(2.0));
  CHECK(s.lambda[0] == doctest::Approx(-1.0));
  CHECK(s.lambda[1] == doctest::Approx(-2.0));
}

TEST_CASE("oracle signs relative to the stationary point") {
  // lambda* solves the 2x2 stationarity system lambda = a - D x with x = c
  const KnapsackInstance k = identity_pair();
  const VectorXd lstar = k.a - k.d.cwiseProduct(k.c);
  DualState st = DualState::from_instance(k);
  VectorXd p(2);
  p << 1.0, 0.0;
  CHECK(oracle_sign(-10.0, p, st) == sgn_expected(lstar[0] - 10.0));
  CHECK(oracle_sign(-lstar[0], p, st) == 0);
  p << 0.0, 1.0;
  CHECK(oracle_sign(-lstar[1] + 0.5, p, st) == 1);
}

TEST_CASE("restriction to a coordinate hyperplane matches the one-row search") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    const KnapsackInstance k = random_multi_instance(rng, 8, 2);
    DualState st = DualState::from_instance(k);
    VectorXd p(2);
    p << 0.0, 1.0;
    DualState sub = st.restrict_to(0.0, p);
    REQUIRE(sub.dim() == 1);
    HpsStats stats;
    const VectorXd lam = maximize_dual(sub, stats);

    KnapsackInstance one = k;
    one.B = k.B.topRows(1);
    one.c = k.c.head(1);
    // the restricted dual is the dual of the first row alone; compare values
    DualState ref = DualState::from_instance(one);
    const KnapsackSolution s = solve_cqkp(one);
    CHECK(sub.phi(lam) == doctest::Approx(ref.phi(s.lambda)).epsilon(1e-9));
    CHECK(ref.phi(s.lambda) == doctest::Approx(s.objective).epsilon(1e-8));
  }
}

TEST_CASE("symmetric variables receive equal values") {
  KnapsackInstance k;
  k.d = VectorXd::Ones(3);
  k.a = VectorXd::Ones(3);
  k.l = VectorXd::Constant(3, -2.0);
  k.u = VectorXd::Constant(3, 2.0);
  k.B.resize(2, 3);
  k.B << 1, 1, 1, 1, 0, 0;
  k.c.resize(2);
  k.c << 1.5, 0.5;
  const HpsResult s = hps_solve(k);
  CHECK(s.x[0] == doctest::Approx(0.5));
  CHECK(s.x[1] == doctest::Approx(s.x[2]));
  CHECK(s.x[1] == doctest::Approx(0.5));
}

TEST_CASE("random two-row instances match the dense QP") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> N(2, 120);
  for (int rep = 0; rep < 120; ++rep) {
    const int n = rep < 20 ? 6 : N(rng);
    const KnapsackInstance k = random_multi_instance(rng, n, 2);
    const HpsResult s = hps_solve(k);
    const QpSolution ref = qp_solve(knapsack_as_qp(k));
    CHECK(rel_gap(s.objective, ref.objective) <= 1e-6);
    CHECK((k.B * s.x - k.c).lpNorm<Eigen::Infinity>() <= 1e-7 * std::max(1.0, k.c.lpNorm<Eigen::Infinity>()));
    CHECK((s.x - k.u).maxCoeff() <= 0.0);
    CHECK((k.l - s.x).maxCoeff() <= 0.0);
    CHECK(knapsack_kkt_violation(k, s) <= 1e-7);
  }
}

TEST_CASE("zero curvature entries are regularized") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    KnapsackInstance k = random_multi_instance(rng, 10, 2);
    k.d[0] = 0.0;
    k.d[3] = 0.0;
    const HpsResult s = hps_solve(k);
    const QpSolution ref = qp_solve(knapsack_as_qp(k));
    CHECK(rel_gap(s.objective, ref.objective) <= 1e-6);
  }
}

TEST_CASE("folded part agrees with the raw definition and signs are consistent") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> G(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const KnapsackInstance k = random_multi_instance(rng, 30, 2);
    DualState st = DualState::from_instance(k);
    HpsStats stats;
    const VectorXd lam = maximize_dual(st, stats);
    const auto hs = build_hyperplanes(k);
    bool has_zero = false;
    for (int id = 0; id < 2 * k.n(); ++id) {
      const double v = hs[id].h0 + hs[id].h.dot(lam);
      const int s = st.sign(id);
      REQUIRE(s != kSignUnknown);
      const double tol = 1e-9 * (1.0 + hs[id].h.norm() * lam.norm());
      if (s == 0) {
        has_zero = true;
        CHECK(std::abs(v) <= tol);
      } else {
        CHECK(s * v >= -tol);
      }
    }
    CHECK(st.phi_explicit(lam) == doctest::Approx(st.phi_folded_raw(lam)).epsilon(1e-9));
    if (has_zero) continue;
    int tried = 0;
    for (int t = 0; t < 500 && tried < 100; ++t) {
      VectorXd mu = lam + 1e-4 * VectorXd::NullaryExpr(2, [&] { return G(rng); });
      bool consistent = true;
      for (int id = 0; id < 2 * k.n() && consistent; ++id) {
        consistent = st.sign(id) * (hs[id].h0 + hs[id].h.dot(mu)) > 0.0;
      }
      if (!consistent) continue;
      ++tried;
      const double raw = st.phi_folded_raw(mu);
      CHECK(std::abs(st.phi_explicit(mu) - raw) <= 1e-9 * std::max(1.0, std::abs(raw)));
    }
  }
}

TEST_CASE("the dual function is concave") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> G(0.0, 3.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const KnapsackInstance k = random_multi_instance(rng, 40, 2);
  const DualState st = DualState::from_instance(k);
  for (int rep = 0; rep < 1000; ++rep) {
    const VectorXd a = VectorXd::NullaryExpr(2, [&] { return G(rng); });
    const VectorXd b = VectorXd::NullaryExpr(2, [&] { return G(rng); });
    const double t = U(rng);
    const double mix = st.phi(t * a + (1 - t) * b);
    CHECK(mix >= t * st.phi(a) + (1 - t) * st.phi(b) - 1e-9 * (1.0 + std::abs(mix)));
  }
}

TEST_CASE("one query on the median of parallel lines resolves half") {
  KnapsackInstance k;
  const int n = 8;
  k.d = VectorXd::Ones(n);
  k.a = VectorXd::LinSpaced(n, -3.0, 4.0);
  k.l = VectorXd::Zero(n);
  k.u = VectorXd::LinSpaced(n, 0.5, 2.0);
  k.B = MatrixXd::Ones(2, n);
  k.B.row(1) *= 2.0;
  k.c = VectorXd(2);
  k.c << 3.0, 6.0;
  DualState st = DualState::from_instance(k);
  HpsStats stats;
  const MdsResult r = mds_round(st, stats);
  CHECK(r.queries == 1);
  CHECK(r.resolved.size() >= 8);
}

TEST_CASE("two hyperplanes finish within two rounds") {
  KnapsackInstance k;
  k.d = VectorXd::Ones(1);
  k.a = VectorXd::Zero(1);
  k.l = VectorXd::Zero(1);
  k.u = VectorXd::Ones(1);
  k.B = MatrixXd(2, 1);
  k.B << 1.0, 2.0;
  k.c = VectorXd(2);
  k.c << 0.5, 1.0;
  HpsOptions opt;
  opt.trace = true;
  const HpsResult s = hps_solve(k, opt);
  CHECK(s.x[0] == doctest::Approx(0.5));
  CHECK(s.trace.size() <= 2);
  CHECK(s.trace.front().unknown == 2);
  CHECK(s.trace.front().resolved >= 1);
}

TEST_CASE("every round resolves an eighth with at most three queries") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const KnapsackInstance k = random_multi_instance(rng, 64, 2);
    HpsOptions opt;
    opt.trace = true;
    const HpsResult s = hps_solve(k, opt);
    for (const HpsTraceRow& row : s.trace) {
      CHECK(row.queries <= 3);
      CHECK(8 * row.resolved >= row.unknown);
    }
    // K_mds = 3 queries per round over log_{8/7} rounds
    const double k_mds = 3.0 / std::log2(8.0 / 7.0);
    CHECK(s.stats.top_queries <= k_mds * std::log2(128.0));
    MESSAGE("n=64 top-level oracle queries: " << s.stats.top_queries);
  }
}

TEST_CASE("three rows behind the dimension cap") {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 10; ++rep) {
    const KnapsackInstance k = random_multi_instance(rng, 12, 3);
    const HpsResult s = hps_solve(k);
    const QpSolution ref = qp_solve(knapsack_as_qp(k));
    CHECK(rel_gap(s.objective, ref.objective) <= 1e-6);
  }
  const KnapsackInstance k = random_multi_instance(rng, 12, 3);
  HpsOptions opt;
  opt.mmax = 2;
  try {
    hps_solve(k, opt);
    FAIL("expected dimension-unsupported");
  } catch (const SolverError& e) {
    CHECK(e.kind() == ErrorKind::dimension_unsupported);
  }
}

TEST_CASE("infeasible coupling is reported") {
  KnapsackInstance k = identity_pair();
  k.c << 20.0, 0.0;
  try {
    hps_solve(k);
    FAIL("expected infeasible");
  } catch (const SolverError& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
  }
}
