#include "sosmpc/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sosmpc/error.hpp"

namespace sosmpc {

namespace {

Json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd vec_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json mat_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

// cols is used when the matrix has no rows
MatrixXd mat_from(const Json& j, Eigen::Index cols) {
  if (!j.is_array()) throw SolverError(ErrorKind::bad_argument, "json: matrix must be an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return MatrixXd::Zero(0, std::max<Eigen::Index>(cols, 0));
  const Eigen::Index c = static_cast<Eigen::Index>(j[0].size());
  MatrixXd m(rows, c);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const VectorXd row = vec_from(j[r]);
    if (row.size() != c) throw SolverError(ErrorKind::bad_argument, "json: ragged matrix rows");
    m.row(r) = row.transpose();
  }
  return m;
}

}  // namespace

void to_json(Json& j, const PwqScalar& f) {
  Json pieces = Json::array();
  for (const PwqPiece& p : f.pieces()) pieces.push_back({{"h", p.h}, {"f", p.f}, {"g", p.g}});
  j = {{"breakpoints", f.breakpoints()}, {"pieces", pieces}};
}

void from_json(const Json& j, PwqScalar& f) {
  std::vector<PwqPiece> pieces;
  for (const Json& p : j.at("pieces")) pieces.push_back({p.at("h").get<double>(), p.at("f").get<double>(), p.at("g").get<double>()});
  f = PwqScalar(j.at("breakpoints").get<std::vector<double>>(), std::move(pieces));
}

void to_json(Json& j, const KnapsackInstance& k) {
  j = {{"d", vec_json(k.d)}, {"a", vec_json(k.a)}, {"l", vec_json(k.l)},
       {"u", vec_json(k.u)}, {"B", mat_json(k.B)}, {"c", vec_json(k.c)}};
}

void from_json(const Json& j, KnapsackInstance& k) {
  k.d = vec_from(j.at("d"));
  k.a = vec_from(j.at("a"));
  k.l = vec_from(j.at("l"));
  k.u = vec_from(j.at("u"));
  k.B = mat_from(j.at("B"), k.d.size());
  k.c = vec_from(j.at("c"));
}

void to_json(Json& j, const Coupling& c) {
  j = {{"a", c.a}, {"b", c.b}, {"rel", c.rel == Relation::eq ? "eq" : "le"}};
}

void from_json(const Json& j, Coupling& c) {
  c.a = j.at("a").get<std::vector<double>>();
  c.b = j.at("b").get<double>();
  const std::string rel = j.value("rel", std::string("eq"));
  if (rel != "eq" && rel != "le") throw SolverError(ErrorKind::bad_argument, "json: rel must be \"eq\" or \"le\"");
  c.rel = rel == "eq" ? Relation::eq : Relation::le;
}

void to_json(Json& j, const CoordinationInstance& c) { j = {{"slices", c.slices}, {"couplings", c.couplings}}; }

void from_json(const Json& j, CoordinationInstance& c) {
  c.slices = j.at("slices").get<std::vector<PwqScalar>>();
  c.couplings = j.at("couplings").get<std::vector<Coupling>>();
}

void to_json(Json& j, const LocalProblem& p) {
  j = {{"n_U", p.n_U},           {"n_Phi", p.n_Phi},         {"n_u0", p.n_u0},
       {"Q_pt", mat_json(p.Q_pt)}, {"Q_uu", mat_json(p.Q_uu)}, {"Q_ptu", mat_json(p.Q_ptu)},
       {"C_U", mat_json(p.C_U)},   {"C_c", vec_json(p.C_c)},   {"C_pt", mat_json(p.C_pt)}};
}

void from_json(const Json& j, LocalProblem& p) {
  p.n_U = j.at("n_U").get<int>();
  p.n_Phi = j.at("n_Phi").get<int>();
  p.n_u0 = j.value("n_u0", 1);
  const int nz = p.n_Phi + 1;
  p.Q_pt = mat_from(j.at("Q_pt"), nz);
  p.Q_uu = mat_from(j.at("Q_uu"), p.n_U);
  p.Q_ptu = mat_from(j.at("Q_ptu"), p.n_U);
  p.C_U = mat_from(j.at("C_U"), p.n_U);
  p.C_c = vec_from(j.at("C_c"));
  p.C_pt = mat_from(j.at("C_pt"), nz);
}

void to_json(Json& j, const SliceBundle& s) {
  to_json(j, s.value);
  Json pol = Json::array();
  for (const AffinePiece& a : s.policy.pieces) pol.push_back({{"K", vec_json(a.K)}, {"k", vec_json(a.k)}});
  j["policy"] = pol;
  j["policy_breakpoints"] = s.policy.breakpoints;
}

void from_json(const Json& j, SliceBundle& s) {
  from_json(j, s.value);
  s.policy.pieces.clear();
  for (const Json& a : j.at("policy")) s.policy.pieces.push_back({vec_from(a.at("K")), vec_from(a.at("k"))});
  s.policy.breakpoints = j.at("policy_breakpoints").get<std::vector<double>>();
}

Json solution_json(const KnapsackSolution& s) {
  return {{"x", vec_json(s.x)}, {"lambda", vec_json(s.lambda)}, {"objective", s.objective}, {"iterations", s.iterations}};
}

Json solution_json(const HpsResult& s) {
  Json j = solution_json(static_cast<const KnapsackSolution&>(s));
  j["stats"] = {{"oracle_queries", s.stats.oracle_queries}, {"top_queries", s.stats.top_queries}, {"rounds", s.stats.rounds}};
  return j;
}

Json solution_json(const CoordinationResult& r) {
  return {{"theta", vec_json(r.theta)},
          {"cost", r.cost},
          {"residuals", vec_json(r.residuals)},
          {"lambda", vec_json(r.lambda)},
          {"knapsack_size", r.knapsack_size}};
}

Json error_json(const std::exception& e) {
  Json j = {{"error", "internal"}, {"message", e.what()}};
  if (const auto* s = dynamic_cast<const SolverError*>(&e)) {
    j["error"] = error_kind_name(s->kind());
    if (s->phase) j["phase"] = *s->phase;
    if (s->subsystem) j["subsystem"] = *s->subsystem;
    if (s->step) j["step"] = *s->step;
  }
  return j;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SolverError(ErrorKind::bad_argument, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw SolverError(ErrorKind::bad_argument, path + ": " + e.what());
  }
}

template <class T>
T parse_json(const Json& j, const char* what) {
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    throw SolverError(ErrorKind::bad_argument, std::string(what) + ": " + e.what());
  }
}

template PwqScalar parse_json<PwqScalar>(const Json&, const char*);
template KnapsackInstance parse_json<KnapsackInstance>(const Json&, const char*);
template CoordinationInstance parse_json<CoordinationInstance>(const Json&, const char*);
template LocalProblem parse_json<LocalProblem>(const Json&, const char*);
template SliceBundle parse_json<SliceBundle>(const Json&, const char*);

}  // namespace sosmpc
