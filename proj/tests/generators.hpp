#pragma once

#include <random>
#include <vector>

#include "sosmpc/local_problem.hpp"
#include "sosmpc/pwq.hpp"

namespace sosmpc::testing {

// Random convex continuous PWQ starting at lo; slopes jump upward at breakpoints.
inline PwqScalar random_convex(std::mt19937_64& rng, int pieces, double lo = -1.0, double hmin = 0.0,
                               double zero_frac = 0.0) {
  std::uniform_real_distribution<double> w(0.1, 1.0), hd(hmin, 2.0), jump(0.0, 0.5), U(0.0, 1.0),
      s0(-2.0, 0.0);
  std::vector<double> bp{lo};
  for (int r = 0; r < pieces; ++r) bp.push_back(bp.back() + w(rng));
  std::vector<PwqPiece> pc;
  double slope = zero_frac > 0.0 ? s0(rng) : -1.0;
  double value = 0.3;
  for (int r = 0; r < pieces; ++r) {
    const double h = U(rng) < zero_frac ? 0.0 : hd(rng);
    const double z0 = bp[r];
    // 0.5 h z^2 + f z + g with slope and value matching at z0
    const double f = slope - h * z0;
    const double g = value - 0.5 * h * z0 * z0 - f * z0;
    pc.push_back({h, f, g});
    // a linear piece must be followed by a kink to stay non-redundant
    slope = h * bp[r + 1] + f + (h == 0.0 ? 0.05 : 0.0) + jump(rng);
    value = pc.back().value(bp[r + 1]);
  }
  return PwqScalar(bp, pc);
}

inline LocalProblem random_local_problem(std::mt19937_64& rng, int nu, int nphi, int extra_rows) {
  std::normal_distribution<double> N(0.0, 1.0);
  const int nz = nphi + 1;
  LocalProblem p;
  p.n_U = nu;
  p.n_Phi = nphi;
  // jointly convex in (z, U)
  MatrixXd G = MatrixXd::NullaryExpr(nz + nu, nz + nu, [&] { return N(rng); });
  const MatrixXd joint = G * G.transpose() + 0.2 * MatrixXd::Identity(nz + nu, nz + nu);
  p.Q_pt = joint.topLeftCorner(nz, nz);
  p.Q_uu = joint.bottomRightCorner(nu, nu);
  p.Q_ptu = 2.0 * joint.topRightCorner(nz, nu);
  const int m = 2 * nu + extra_rows + 2;
  p.C_U = MatrixXd::Zero(m, nu);
  p.C_c = VectorXd::Zero(m);
  p.C_pt = MatrixXd::Zero(m, nz);
  for (int j = 0; j < nu; ++j) {
    p.C_U(2 * j, j) = 1;
    p.C_U(2 * j + 1, j) = -1;
    p.C_c[2 * j] = 1;
    p.C_c[2 * j + 1] = 1;
  }
  for (int r = 2 * nu; r < 2 * nu + extra_rows; ++r) {
    for (int j = 0; j < nu; ++j) p.C_U(r, j) = N(rng);
    for (int j = 0; j < nz; ++j) p.C_pt(r, j) = 0.3 * N(rng);
    p.C_c[r] = 0.5 + std::abs(N(rng));
  }
  p.C_c[m - 2] = 2;
  p.C_pt(m - 2, nphi) = -1;
  p.C_c[m - 1] = 2;
  p.C_pt(m - 1, nphi) = 1;
  return p;
}

}  // namespace sosmpc::testing
