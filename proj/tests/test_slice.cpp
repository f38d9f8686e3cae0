#include <doctest.h>

#include <cmath>
#include <random>

#include "sosmpc/error.hpp"
#include "sosmpc/local_problem.hpp"
#include "generators.hpp"

using namespace sosmpc;
using sosmpc::testing::random_local_problem;

namespace {

// J = (U - Theta)^2, 0 <= U <= 1, -1 <= Theta <= 2
LocalProblem clamped_tracking() {
  LocalProblem p;
  p.n_U = 1;
  p.n_Phi = 0;
  p.Q_pt = MatrixXd::Constant(1, 1, 1.0);
  p.Q_uu = MatrixXd::Constant(1, 1, 1.0);
  p.Q_ptu = MatrixXd::Constant(1, 1, -2.0);
  p.C_U.resize(4, 1);
  p.C_U << 1, -1, 0, 0;
  p.C_c.resize(4);
  p.C_c << 1, 0, 2, 1;
  p.C_pt.resize(4, 1);
  p.C_pt << 0, 0, -1, 1;
  return p;
}


double pointwise(const LocalProblem& p, const VectorXd& phi, double theta) {
  const SliceQp s = slice_qp(p, phi);
  return qp_solve(s.at(theta)).objective + s.c0 + theta * (s.c1 + theta * s.c2);
}

}  // namespace

TEST_CASE("parametric_slice: clamped tracking") {
  const LocalProblem p = clamped_tracking();
  const SliceBundle b = parametric_slice(p, VectorXd::Zero(0));
  const auto& bp = b.value.breakpoints();
  REQUIRE(bp.size() == 4);
  CHECK(bp[0] == doctest::Approx(-1.0));
  CHECK(bp[1] == doctest::Approx(0.0));
  CHECK(bp[2] == doctest::Approx(1.0));
  CHECK(bp[3] == doctest::Approx(2.0));
  const auto& pc = b.value.pieces();
  CHECK(pc[0].h == doctest::Approx(2.0));
  CHECK(pc[0].f == doctest::Approx(0.0));
  CHECK(pc[0].g == doctest::Approx(0.0));
  CHECK(pc[1].h == doctest::Approx(0.0));
  CHECK(pc[1].f == doctest::Approx(0.0));
  CHECK(pc[2].h == doctest::Approx(2.0));
  CHECK(pc[2].f == doctest::Approx(-2.0));
  CHECK(pc[2].g == doctest::Approx(1.0));
  CHECK(b.policy.eval(-0.5)[0] == doctest::Approx(0.0));
  CHECK(b.policy.eval(0.5)[0] == doctest::Approx(0.5));
  CHECK(b.policy.eval(1.5)[0] == doctest::Approx(1.0));
  CHECK(pwq_eval(b.value, -0.5) == doctest::Approx(pointwise(p, VectorXd::Zero(0), -0.5)));
  CHECK(pwq_eval(b.value, -0.5) == doctest::Approx(0.25));
  CHECK(pwq_validate(b.value).ok());
}

TEST_CASE("parametric_slice: empty slice") {
  LocalProblem p = clamped_tracking();
  // Theta <= -2 contradicts Theta >= -1
  p.C_c[2] = -2;
  try {
    parametric_slice(p, VectorXd::Zero(0));
    FAIL("expected infeasible-slice");
  } catch (const SolverError& e) {
    CHECK(e.kind() == ErrorKind::infeasible_slice);
  }
}

TEST_CASE("parametric_slice: unbounded Theta range") {
  LocalProblem p = clamped_tracking();
  p.C_c[2] = 0;
  p.C_pt(2, 0) = 0;
  CHECK_THROWS_AS(parametric_slice(p, VectorXd::Zero(0)), SolverError);
}

TEST_CASE("parametric_slice: point slice") {
  LocalProblem p = clamped_tracking();
  p.C_c[2] = 0.5;   // Theta <= 0.5
  p.C_c[3] = -0.5;  // Theta >= 0.5
  const SliceBundle b = parametric_slice(p, VectorXd::Zero(0));
  CHECK(b.is_point());
  CHECK(b.lo() == doctest::Approx(0.5));
  CHECK(pwq_eval(b.value, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("parametric_slice: random problems agree with pointwise QP") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int rep = 0; rep < 40; ++rep) {
    const LocalProblem p = random_local_problem(rng, 2 + rep % 4, 2, rep % 5);
    VectorXd phi = VectorXd::NullaryExpr(2, [&] { return 0.5 * N(rng); });
    SliceBundle b;
    try {
      b = parametric_slice(p, phi);
    } catch (const SolverError& e) {
      REQUIRE(e.kind() == ErrorKind::infeasible_slice);
      continue;
    }
    const auto rep_v = pwq_validate(b.value);
    for (const auto& v : rep_v.violations) MESSAGE(std::string(violation_kind_name(v.kind)), " at ", v.location, ": ", v.message);
    REQUIRE(rep_v.ok());
    const double w = b.value.width();
    for (int k = 0; k < 200; ++k) {
      const double t = b.lo() + U(rng) * w;
      const double ref = pointwise(p, phi, t);
      CHECK(std::abs(pwq_eval(b.value, t) - ref) <= 1e-7 * std::max(1.0, std::abs(ref)));
      const SliceQp s = slice_qp(p, phi);
      const VectorXd u = qp_solve(s.at(t)).x;
      CHECK((b.policy.eval(t) - u).lpNorm<Eigen::Infinity>() <= 1e-6);
    }
    // policy continuity across breakpoints
    const auto& pb = b.policy.breakpoints;
    for (std::size_t r = 1; r + 1 < pb.size(); ++r) {
      const VectorXd left = b.policy.pieces[r - 1].eval(pb[r]);
      const VectorXd right = b.policy.pieces[r].eval(pb[r]);
      CHECK((left - right).lpNorm<Eigen::Infinity>() <= 1e-7 * std::max(1.0, left.lpNorm<Eigen::Infinity>()));
    }
    // derivative against central differences at piece midpoints
    const auto& vb = b.value.breakpoints();
    const double hstep = 1e-5 * w;
    for (std::size_t r = 0; r + 1 < vb.size(); ++r) {
      const double t = 0.5 * (vb[r] + vb[r + 1]);
      if (t - hstep < vb[r] || t + hstep > vb[r + 1]) continue;
      const double fd = (pointwise(p, phi, t + hstep) - pointwise(p, phi, t - hstep)) / (2 * hstep);
      const double an = b.value.pieces()[r].slope(t);
      CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST_CASE("centralized_solve examples") {
  const LocalProblem p = clamped_tracking();
  const Coupling pin{{1.0}, 1.5, Relation::eq};
  const CentralizedResult r = centralized_solve({p}, {VectorXd::Zero(0)}, {pin});
  CHECK(r.theta[0] == doctest::Approx(1.5));
  CHECK(r.cost == doctest::Approx(0.25));
  const SliceBundle b = parametric_slice(p, VectorXd::Zero(0));
  CHECK(pwq_eval(b.value, 1.5) == doctest::Approx(r.cost));

  const Coupling split{{1.0, 1.0}, 1.0, Relation::eq};
  const CentralizedResult r2 = centralized_solve({p, p}, {VectorXd::Zero(0), VectorXd::Zero(0)}, {split});
  CHECK(r2.cost == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r2.theta.sum() == doctest::Approx(1.0));

  const Coupling cap{{1.0, 1.0}, -1.0, Relation::le};
  const CentralizedResult r3 = centralized_solve({p, p}, {VectorXd::Zero(0), VectorXd::Zero(0)}, {cap});
  CHECK(r3.theta.sum() <= -1.0 + 1e-9);
  CHECK(r3.cost == doctest::Approx(0.5));
}
