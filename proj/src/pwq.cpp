#include "sosmpc/pwq.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sosmpc/error.hpp"

namespace sosmpc {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::unbounded: return "unbounded";
    case ErrorKind::max_iterations: return "max-iterations";
    case ErrorKind::too_large: return "too-large";
    case ErrorKind::domain: return "domain";
    case ErrorKind::infeasible_slice: return "infeasible-slice";
    case ErrorKind::degeneracy_unresolved: return "degeneracy-unresolved";
    case ErrorKind::degenerate_restriction: return "degenerate-restriction";
    case ErrorKind::dimension_unsupported: return "dimension-unsupported";
    case ErrorKind::unbounded_slack: return "unbounded-slack";
    case ErrorKind::validation: return "validation";
    case ErrorKind::bad_argument: return "bad-argument";
  }
  return "unknown";
}

PwqScalar::PwqScalar(std::vector<double> breakpoints, std::vector<PwqPiece> pieces)
    : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
  if (pieces_.empty() || breakpoints_.size() != pieces_.size() + 1) {
    throw SolverError(ErrorKind::bad_argument,
                      "pwq: need N >= 1 pieces and N + 1 breakpoints");
  }
}

std::size_t PwqScalar::locate(double z) const {
  // first breakpoint >= z, among interior ones
  auto begin = breakpoints_.begin() + 1;
  auto end = breakpoints_.end() - 1;
  auto it = std::lower_bound(begin, end, z);
  return static_cast<std::size_t>(it - begin);
}

double PwqScalar::value_scale() const {
  double s = 1.0;
  for (std::size_t r = 0; r < pieces_.size(); ++r) {
    s = std::max(s, std::abs(pieces_[r].value(breakpoints_[r])));
    s = std::max(s, std::abs(pieces_[r].value(breakpoints_[r + 1])));
  }
  return s;
}

double PwqScalar::tau_cont() const { return 1e-8 * value_scale(); }

double PwqScalar::tau_dom() const { return 1e-9 * std::max(1.0, std::abs(width())); }

double pwq_eval(const PwqScalar& f, double z) {
  const double tol = f.tau_dom();
  if (!(z >= f.lo() - tol && z <= f.hi() + tol)) {
    std::ostringstream os;
    os << "pwq_eval: z = " << z << " outside [" << f.lo() << ", " << f.hi() << "]";
    throw SolverError(ErrorKind::domain, os.str());
  }
  z = std::clamp(z, f.lo(), f.hi());
  return f.pieces()[f.locate(z)].value(z);
}

const char* violation_kind_name(PwqViolation::Kind kind) {
  switch (kind) {
    case PwqViolation::Kind::ordering: return "ordering";
    case PwqViolation::Kind::continuity: return "continuity";
    case PwqViolation::Kind::convexity: return "convexity";
    case PwqViolation::Kind::redundancy: return "redundancy";
    case PwqViolation::Kind::degenerate: return "degenerate";
    case PwqViolation::Kind::non_finite: return "non-finite";
  }
  return "unknown";
}

bool ValidationReport::has(PwqViolation::Kind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const PwqViolation& v) { return v.kind == kind; });
}

ValidationReport pwq_validate(const PwqScalar& f, const PwqTolerances& tol) {
  using Kind = PwqViolation::Kind;
  ValidationReport rep;
  const auto& bp = f.breakpoints();
  const auto& pc = f.pieces();
  auto add = [&](Kind k, std::size_t idx, double loc, std::string msg) {
    rep.violations.push_back({k, idx, loc, std::move(msg)});
  };

  for (std::size_t i = 0; i < bp.size(); ++i) {
    if (!std::isfinite(bp[i])) add(Kind::non_finite, i, bp[i], "breakpoint not finite");
  }
  for (std::size_t r = 0; r < pc.size(); ++r) {
    if (!std::isfinite(pc[r].h) || !std::isfinite(pc[r].f) || !std::isfinite(pc[r].g)) {
      add(Kind::non_finite, r, bp[r], "piece coefficient not finite");
    }
  }
  if (!rep.ok()) return rep;

  if (bp.front() == bp.back()) add(Kind::degenerate, 0, bp.front(), "single-point domain");
  for (std::size_t r = 0; r < pc.size(); ++r) {
    if (!(bp[r] < bp[r + 1])) {
      add(Kind::ordering, r, bp[r], "breakpoints not strictly increasing");
    }
    if (pc[r].h < 0.0) add(Kind::convexity, r, bp[r], "negative curvature");
  }

  const double tc = tol.cont_rel * f.value_scale();
  for (std::size_t r = 0; r + 1 < pc.size(); ++r) {
    const double z = bp[r + 1];
    const double vl = pc[r].value(z);
    const double vr = pc[r + 1].value(z);
    if (std::abs(vl - vr) > tc) {
      std::ostringstream os;
      os << "values " << vl << " vs " << vr;
      add(Kind::continuity, r + 1, z, os.str());
    }
    const double dl = pc[r].slope(z);
    const double dr = pc[r + 1].slope(z);
    const double td = std::max(tc, tol.cont_rel * std::max(std::abs(dl), std::abs(dr)));
    if (dr < dl - td) {
      std::ostringstream os;
      os << "right derivative " << dr << " below left derivative " << dl;
      add(Kind::convexity, r + 1, z, os.str());
    }
    const double th = tol.cont_rel * std::max(1.0, std::max(std::abs(pc[r].f), std::abs(pc[r + 1].f)));
    if (pc[r].h <= th && pc[r + 1].h <= th && std::abs(pc[r].f - pc[r + 1].f) <= th &&
        std::abs(pc[r].g - pc[r + 1].g) <= tc) {
      add(Kind::redundancy, r, z, "adjacent affine pieces coincide");
    }
  }
  return rep;
}

std::pair<double, double> pwq_minimize(const PwqScalar& f) {
  const auto& bp = f.breakpoints();
  const auto& pc = f.pieces();
  const double tol = 1e-12 * f.value_scale();
  double best_z = bp.front();
  double best_v = pc.front().value(best_z);
  auto consider = [&](double z, double v) {
    if (v < best_v - tol) {
      best_z = z;
      best_v = v;
    }
  };
  for (std::size_t r = 0; r < pc.size(); ++r) {
    const double a = bp[r];
    const double b = bp[r + 1];
    consider(a, pc[r].value(a));
    if (pc[r].h > 0.0) {
      const double v = std::clamp(-pc[r].f / pc[r].h, a, b);
      consider(v, pc[r].value(v));
    }
    consider(b, pc[r].value(b));
  }
  return {best_z, best_v};
}

}  // namespace sosmpc
