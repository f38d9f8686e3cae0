#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace sosmpc {

// One piece 0.5*h*z^2 + f*z + g.
struct PwqPiece {
  double h = 0.0;
  double f = 0.0;
  double g = 0.0;

  double value(double z) const { return (0.5 * h * z + f) * z + g; }
  double slope(double z) const { return h * z + f; }
  bool operator==(const PwqPiece&) const = default;
};

// Scalar piecewise-quadratic function on [I_0, I_N]; pieces[r] lives on
// [breakpoints[r], breakpoints[r+1]].
class PwqScalar {
 public:
  PwqScalar() = default;
  // Throws bad_argument unless breakpoints.size() == pieces.size() + 1 >= 2.
  PwqScalar(std::vector<double> breakpoints, std::vector<PwqPiece> pieces);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<PwqPiece>& pieces() const { return pieces_; }
  std::size_t piece_count() const { return pieces_.size(); }
  double lo() const { return breakpoints_.front(); }
  double hi() const { return breakpoints_.back(); }
  double width() const { return hi() - lo(); }

  // Index of the piece containing z (left piece on a shared breakpoint).
  std::size_t locate(double z) const;

  // max(1, largest |value| at the breakpoints); the scale behind tau_cont.
  double value_scale() const;
  double tau_cont() const;
  double tau_dom() const;

  bool operator==(const PwqScalar&) const = default;

 private:
  std::vector<double> breakpoints_;
  std::vector<PwqPiece> pieces_;
};

double pwq_eval(const PwqScalar& f, double z);

struct PwqViolation {
  enum class Kind { ordering, continuity, convexity, redundancy, degenerate, non_finite };
  Kind kind;
  std::size_t index;  // breakpoint index for continuity/convexity, piece index otherwise
  double location;
  std::string message;
};

const char* violation_kind_name(PwqViolation::Kind kind);

struct ValidationReport {
  std::vector<PwqViolation> violations;
  bool ok() const { return violations.empty(); }
  bool has(PwqViolation::Kind kind) const;
};

struct PwqTolerances {
  double cont_rel = 1e-8;
};

ValidationReport pwq_validate(const PwqScalar& f, const PwqTolerances& tol = {});

// Smallest global minimizer and its value.
std::pair<double, double> pwq_minimize(const PwqScalar& f);

}  // namespace sosmpc
