// Exhaustive active-set enumeration. Rows that are exact negatives of each
// other with disjoint half-spaces (opposite bounds) can never be active
// together, so they are grouped into one three-state unit.
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sosmpc/error.hpp"
#include "sosmpc/qp.hpp"

namespace sosmpc {

namespace {

// In-place Gaussian elimination with partial pivoting on an sz x sz system
// stored row-major in K; returns false when a pivot is negligible.
bool dense_solve(std::vector<double>& K, std::vector<double>& rhs, int sz) {
  double amax = 0.0;
  for (int i = 0; i < sz * sz; ++i) amax = std::max(amax, std::abs(K[i]));
  const double tiny = 1e-12 * std::max(1.0, amax);
  for (int c = 0; c < sz; ++c) {
    int piv = c;
    double best = std::abs(K[c * sz + c]);
    for (int r = c + 1; r < sz; ++r) {
      const double v = std::abs(K[r * sz + c]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best <= tiny) return false;
    if (piv != c) {
      for (int j = c; j < sz; ++j) std::swap(K[c * sz + j], K[piv * sz + j]);
      std::swap(rhs[c], rhs[piv]);
    }
    const double inv = 1.0 / K[c * sz + c];
    for (int r = c + 1; r < sz; ++r) {
      const double f = K[r * sz + c] * inv;
      if (f == 0.0) continue;
      for (int j = c + 1; j < sz; ++j) K[r * sz + j] -= f * K[c * sz + j];
      rhs[r] -= f * rhs[c];
    }
  }
  for (int c = sz - 1; c >= 0; --c) {
    double v = rhs[c];
    for (int j = c + 1; j < sz; ++j) v -= K[c * sz + j] * rhs[j];
    rhs[c] = v / K[c * sz + c];
  }
  return true;
}

struct Unit {
  int first;
  int second;  // -1 for a single row
};

}  // namespace

QpSolution kkt_enumerate_solve(const QpProblem& p, const EnumerateOptions& opt) {
  const int n = p.n();
  const int mi = p.m_ineq();
  const int me = p.m_eq();
  const MatrixXd A = p.dense_A();
  const MatrixXd H = 0.5 * (p.H + p.H.transpose());

  // coordinate rows: single nonzero
  std::vector<int> coord_col(mi, -1);
  for (int i = 0; i < mi; ++i) {
    int nnz = 0, col = -1;
    for (int j = 0; j < n; ++j) {
      if (A(i, j) != 0.0) {
        ++nnz;
        col = j;
      }
    }
    if (nnz == 1) coord_col[i] = col;
  }

  std::vector<Unit> units;
  std::vector<char> used(mi, 0);
  for (int i = 0; i < mi; ++i) {
    if (used[i]) continue;
    used[i] = 1;
    int partner = -1;
    for (int j = i + 1; j < mi && partner < 0; ++j) {
      if (used[j]) continue;
      if ((A.row(i) + A.row(j)).cwiseAbs().maxCoeff() == 0.0 && p.b[i] + p.b[j] >= 0.0) partner = j;
    }
    if (partner >= 0) used[partner] = 1;
    units.push_back({i, partner});
  }
  long double count = 1;
  for (const Unit& u : units) count *= (u.second >= 0 ? 3 : 2);
  if (count > static_cast<long double>(opt.max_candidates)) {
    throw SolverError(ErrorKind::too_large, "kkt_enumerate: candidate count exceeds cap");
  }
  const long long total = static_cast<long long>(count);

  const VectorXd lhs_scale = A.rowwise().lpNorm<Eigen::Infinity>();
  const double scale = kkt_scale(p, VectorXd::Zero(0));
  std::vector<int> state(units.size(), 0);
  std::vector<int> active, general, eqs, F, fixed_row(n);
  std::vector<double> K, rhs;
  VectorXd x(n), mu(mi), nu(me), grad(n);
  using Entries = std::vector<std::pair<int, double>>;
  std::vector<Entries> arow(mi), hrow(n);
  for (int i = 0; i < mi; ++i) {
    for (int j = 0; j < n; ++j) {
      if (A(i, j) != 0.0) arow[i].emplace_back(j, A(i, j));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (H(i, j) != 0.0) hrow[i].emplace_back(j, H(i, j));
    }
  }

  bool found = false;
  QpSolution best;
  best.objective = std::numeric_limits<double>::infinity();

  for (long long cand = 0; cand < total; ++cand) {
    if (cand > 0) {
      for (std::size_t k = 0; k < units.size(); ++k) {
        const int radix = units[k].second >= 0 ? 3 : 2;
        if (++state[k] < radix) break;
        state[k] = 0;
      }
    }
    active.clear();
    for (std::size_t k = 0; k < units.size(); ++k) {
      if (state[k] == 1) active.push_back(units[k].first);
      else if (state[k] == 2) active.push_back(units[k].second);
    }

    std::fill(fixed_row.begin(), fixed_row.end(), -1);
    general.clear();
    x.setZero();
    bool conflict = false;
    for (int i : active) {
      const int col = coord_col[i];
      if (col >= 0 && fixed_row[col] < 0) {
        fixed_row[col] = i;
        x[col] = p.b[i] / A(i, col);
      } else if (col >= 0) {
        conflict = true;  // second bound on the same variable: dependent
        break;
      } else {
        general.push_back(i);
      }
    }
    if (conflict) continue;
    F.clear();
    for (int j = 0; j < n; ++j) {
      if (fixed_row[j] < 0) F.push_back(j);
    }
    const int nf = static_cast<int>(F.size());
    // rows with no free support are either consistent (dropped) or fatal
    bool bad = false;
    auto no_free_support = [&](auto row) {
      for (int j : F) {
        if (row(j) != 0.0) return false;
      }
      return true;
    };
    auto fixed_residual = [&](auto row, double rhs_v) {
      double r = rhs_v;
      for (int j = 0; j < n; ++j) {
        if (fixed_row[j] >= 0) r -= row(j) * x[j];
      }
      return std::abs(r) <= 1e-9 * std::max(1.0, std::abs(rhs_v));
    };
    std::size_t wg = 0;
    for (int i : general) {
      auto row = [&](int j) { return A(i, j); };
      if (no_free_support(row)) bad = bad || !fixed_residual(row, p.b[i]);
      else general[wg++] = i;
    }
    general.resize(wg);
    eqs.clear();
    for (int k = 0; k < me; ++k) {
      auto row = [&](int j) { return p.E(k, j); };
      if (no_free_support(row)) bad = bad || !fixed_residual(row, p.e[k]);
      else eqs.push_back(k);
    }
    if (bad) continue;
    const int ng = static_cast<int>(general.size());
    const int ne = static_cast<int>(eqs.size());
    const int sz = nf + ng + ne;
    if (ng + ne > nf) continue;  // more independent equations than freedoms
    K.assign(static_cast<std::size_t>(sz) * sz, 0.0);
    rhs.assign(sz, 0.0);
    for (int a = 0; a < nf; ++a) {
      double r = -p.q[F[a]];
      for (const auto& [j, v] : hrow[F[a]]) {
        if (fixed_row[j] >= 0) r -= v * x[j];
      }
      rhs[a] = r;
      for (int c = 0; c < nf; ++c) K[a * sz + c] = H(F[a], F[c]);
      for (int g = 0; g < ng; ++g) {
        const double v = A(general[g], F[a]);
        K[a * sz + nf + g] = v;
        K[(nf + g) * sz + a] = v;
      }
      for (int j = 0; j < ne; ++j) {
        const double v = p.E(eqs[j], F[a]);
        K[a * sz + nf + ng + j] = v;
        K[(nf + ng + j) * sz + a] = v;
      }
    }
    for (int g = 0; g < ng; ++g) {
      double r = p.b[general[g]];
      for (const auto& [j, v] : arow[general[g]]) {
        if (fixed_row[j] >= 0) r -= v * x[j];
      }
      rhs[nf + g] = r;
    }
    for (int k = 0; k < ne; ++k) {
      double r = p.e[eqs[k]];
      for (int j = 0; j < n; ++j) {
        if (fixed_row[j] >= 0) r -= p.E(eqs[k], j) * x[j];
      }
      rhs[nf + ng + k] = r;
    }
    if (sz > 0 && !dense_solve(K, rhs, sz)) continue;

    for (int a = 0; a < nf; ++a) x[F[a]] = rhs[a];
    const double xs = std::max(1.0, x.lpNorm<Eigen::Infinity>());
    bool ok = true;
    for (int i = 0; i < mi && ok; ++i) {
      double lhs = 0.0;
      for (const auto& [j, v] : arow[i]) lhs += v * x[j];
      if (lhs - p.b[i] > 1e-9 * std::max({1.0, std::abs(p.b[i]), lhs_scale[i] * xs})) ok = false;
    }
    if (!ok) continue;
    mu.setZero();
    for (int g = 0; g < ng; ++g) mu[general[g]] = rhs[nf + g];
    nu.setZero();
    for (int k = 0; k < ne; ++k) nu[eqs[k]] = rhs[nf + ng + k];
    for (int j = 0; j < n; ++j) {
      double v = p.q[j];
      for (const auto& [k, h] : hrow[j]) v += h * x[k];
      grad[j] = v;
    }
    for (int g = 0; g < ng; ++g) {
      for (const auto& [j, v] : arow[general[g]]) grad[j] += v * mu[general[g]];
    }
    if (me) grad.noalias() += p.E.transpose() * nu;
    for (int j = 0; j < n; ++j) {
      if (fixed_row[j] >= 0) {
        const int i = fixed_row[j];
        mu[i] = -grad[j] / A(i, j);
      }
    }
    const double dual_tol = 1e-9 * std::max(scale, xs);
    if (mi && mu.minCoeff() < -dual_tol) continue;
    const double obj = 0.5 * x.dot(H * x) + p.q.dot(x);
    if (obj < best.objective - 1e-12 * std::max(1.0, std::abs(obj))) {
      found = true;
      best.x = x;
      best.objective = obj;
      best.multipliers = mu.cwiseMax(0.0);
      best.eq_multipliers = nu;
      best.working_set = active;
    }
  }
  if (!found) throw SolverError(ErrorKind::infeasible, "kkt_enumerate: no primal-dual feasible active set");
  best.iterations = static_cast<int>(std::min<long long>(total, std::numeric_limits<int>::max()));
  detail::finalize(p, best, 1e-9);
  return best;
}

}  // namespace sosmpc
