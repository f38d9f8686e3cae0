#include <doctest.h>

#include <random>

#include "sosmpc/error.hpp"
#include "sosmpc/qp.hpp"

using namespace sosmpc;

namespace {

QpProblem make(MatrixXd H, VectorXd q, MatrixXd A, VectorXd b) {
  QpProblem p;
  p.H = std::move(H);
  p.q = std::move(q);
  p.A = std::move(A);
  p.b = std::move(b);
  p.E = MatrixXd::Zero(0, p.q.size());
  p.e = VectorXd::Zero(0);
  return p;
}

QpProblem random_qp(std::mt19937_64& rng, int n, int m, bool strictly_convex) {
  std::normal_distribution<double> N(0.0, 1.0);
  MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = N(rng);
  MatrixXd H = G * G.transpose();
  if (strictly_convex) H += 0.1 * MatrixXd::Identity(n, n);
  else {
    // rank-deficient PSD
    MatrixXd L = G.leftCols(n / 2);
    H = L * L.transpose();
  }
  VectorXd q(n), x0(n);
  for (int i = 0; i < n; ++i) {
    q[i] = N(rng);
    x0[i] = N(rng);
  }
  MatrixXd A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = N(rng);
  VectorXd slack(m);
  for (int i = 0; i < m; ++i) slack[i] = std::abs(N(rng));
  QpProblem p = make(H, q, A, A * x0 + slack);
  if (!strictly_convex) {
    // box keeps the semidefinite problem bounded
    MatrixXd Ab(m + 2 * n, n);
    Ab.topRows(m) = A;
    Ab.middleRows(m, n) = MatrixXd::Identity(n, n);
    Ab.bottomRows(n) = -MatrixXd::Identity(n, n);
    VectorXd bb(m + 2 * n);
    bb.head(m) = p.b;
    bb.segment(m, n) = x0.array() + 3.0;
    bb.tail(n) = -(x0.array() - 3.0);
    p.A = Ab;
    p.b = bb;
  }
  return p;
}

void check_kkt(const QpProblem& p, const QpSolution& s) {
  const auto r = kkt_residuals(p, s);
  const double sc = kkt_scale(p, s.x);
  CHECK(r.stationarity <= 1e-8 * sc);
  CHECK(r.primal <= 1e-9 * sc);
  CHECK(r.complementarity <= 1e-8 * sc);
  CHECK(r.dual <= 1e-9 * sc);
}

}  // namespace

TEST_CASE("qp_solve: single active bound") {
  // min x^2 s.t. x >= 1
  QpProblem p = make(MatrixXd::Constant(1, 1, 2.0), VectorXd::Zero(1), MatrixXd::Constant(1, 1, -1.0),
                     VectorXd::Constant(1, -1.0));
  const QpSolution s = qp_solve(p);
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.objective == doctest::Approx(1.0));
  REQUIRE(s.active_set.size() == 1);
  CHECK(s.active_set[0] == 0);
  check_kkt(p, s);
  const QpSolution k = kkt_enumerate_solve(p);
  CHECK(k.x[0] == doctest::Approx(1.0));
}

TEST_CASE("qp_solve: symmetric halfspace") {
  // (x-2)^2 + (y-2)^2 = x^2 + y^2 - 4x - 4y + 8
  QpProblem p = make(2.0 * MatrixXd::Identity(2, 2), VectorXd::Constant(2, -4.0), MatrixXd::Ones(1, 2),
                     VectorXd::Constant(1, 2.0));
  const QpSolution s = qp_solve(p);
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.x[1] == doctest::Approx(1.0));
  CHECK(s.objective + 8.0 == doctest::Approx(2.0));
  check_kkt(p, s);
}

TEST_CASE("kkt_enumerate: equality only") {
  QpProblem p = make(2.0 * MatrixXd::Identity(2, 2), VectorXd::Zero(2), MatrixXd::Zero(0, 2), VectorXd::Zero(0));
  p.E = MatrixXd::Ones(1, 2);
  p.e = VectorXd::Ones(1);
  const QpSolution k = kkt_enumerate_solve(p);
  CHECK(k.x[0] == doctest::Approx(0.5));
  CHECK(k.x[1] == doctest::Approx(0.5));
  const QpSolution s = qp_solve(p);
  CHECK(s.x[0] == doctest::Approx(0.5));
  check_kkt(p, s);
}

TEST_CASE("kkt_enumerate: cap") {
  std::mt19937_64 rng(3);
  QpProblem p = random_qp(rng, 4, 21, true);
  CHECK_THROWS_AS(kkt_enumerate_solve(p), SolverError);
  EnumerateOptions big;
  big.max_candidates = 1 << 22;
  CHECK_NOTHROW(kkt_enumerate_solve(p, big));
}

TEST_CASE("qp_solve matches enumeration on random strictly convex QPs") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const QpProblem p = random_qp(rng, 6, 10, true);
    const QpSolution s = qp_solve(p);
    const QpSolution k = kkt_enumerate_solve(p);
    CHECK(s.objective == doctest::Approx(k.objective).epsilon(1e-9).scale(1.0));
    CHECK((s.x - k.x).lpNorm<Eigen::Infinity>() <= 1e-7);
    check_kkt(p, s);
  }
}

TEST_CASE("qp_solve matches enumeration on random semidefinite QPs") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 60; ++rep) {
    const QpProblem p = random_qp(rng, 4, 3, false);
    const QpSolution s = qp_solve(p);
    const QpSolution k = kkt_enumerate_solve(p);
    CHECK(s.objective == doctest::Approx(k.objective).epsilon(1e-9).scale(1.0));
    check_kkt(p, s);
  }
}

TEST_CASE("qp_solve: larger semidefinite problem uses the proximal path") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 5; ++rep) {
    const QpProblem p = random_qp(rng, 60, 20, false);
    const QpSolution s = qp_solve(p);
    check_kkt(p, s);
    QpProblem small = p;
    const QpSolution t = detail::primal_active_set(small, {});
    CHECK(s.objective == doctest::Approx(t.objective).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("qp_solve: sparse storage agrees with dense") {
  std::mt19937_64 rng(10);
  QpProblem p = random_qp(rng, 8, 12, true);
  QpProblem ps = p;
  ps.A_sparse = p.A.sparseView();
  ps.A = MatrixXd();
  const QpSolution a = qp_solve(p);
  const QpSolution b = qp_solve(ps);
  CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("qp_solve: errors") {
  // x <= -1 and x >= 1
  MatrixXd A(2, 1);
  A << 1, -1;
  QpProblem p = make(MatrixXd::Constant(1, 1, 2.0), VectorXd::Zero(1), A, VectorXd::Constant(2, -1.0));
  try {
    qp_solve(p);
    FAIL("expected infeasible");
  } catch (const SolverError& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
  }
  p.H(0, 0) = 0.0;
  try {
    qp_solve(p);
    FAIL("expected infeasible");
  } catch (const SolverError& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
  }
  // min -x s.t. x >= 0: unbounded LP
  QpProblem u = make(MatrixXd::Zero(1, 1), VectorXd::Constant(1, -1.0), MatrixXd::Constant(1, 1, -1.0),
                     VectorXd::Zero(1));
  try {
    qp_solve(u);
    FAIL("expected unbounded");
  } catch (const SolverError& e) {
    CHECK(e.kind() == ErrorKind::unbounded);
  }
  CHECK_THROWS_AS(kkt_enumerate_solve(p), SolverError);
}

TEST_CASE("qp_solve: linear program with degenerate vertex") {
  // min -x - y s.t. x + y <= 1, x <= 1, y <= 1, x >= 0, y >= 0, x + 2y <= 2
  MatrixXd A(6, 2);
  A << 1, 1, 1, 0, 0, 1, -1, 0, 0, -1, 1, 2;
  VectorXd b(6);
  b << 1, 1, 1, 0, 0, 2;
  QpProblem p = make(MatrixXd::Zero(2, 2), VectorXd::Constant(2, -1.0), A, b);
  const QpSolution s = qp_solve(p);
  CHECK(s.objective == doctest::Approx(-1.0));
  check_kkt(p, s);
}
