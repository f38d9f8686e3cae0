#include "sosmpc/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "sosmpc/error.hpp"
#include "sosmpc/format.hpp"
#include "sosmpc/io.hpp"
#include "sosmpc/microgrid.hpp"

namespace sosmpc {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kCommands = {"solve-cqkp", "solve-mcqkp", "coordinate", "simulate", "benchmark", "validate"};

std::string resolve_output(const std::string& path) {
  const char* dir = std::getenv(kOutDirEnv);
  if (path.empty() || !dir || !*dir || fs::path(path).is_absolute()) return path;
  return (fs::path(dir) / path).string();
}

// Empty path means the provided fallback stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : path_(resolve_output(path)) {
    if (path_.empty()) {
      os_ = &fallback;
      return;
    }
    if (fs::path(path_).has_parent_path()) fs::create_directories(fs::path(path_).parent_path());
    file_.open(path_);
    if (!file_) throw SolverError(ErrorKind::bad_argument, "cannot write " + path_);
    os_ = &file_;
  }
  std::ostream& stream() { return *os_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

std::string config_scalar(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_real(v.get<double>());
  throw SolverError(ErrorKind::bad_argument, "config: unsupported value " + v.dump());
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Expands --config FILE into flags placed after the subcommand; flags given
// explicitly on the command line win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (!path) return args;
  const Json cfg = read_json_file(*path);
  if (!cfg.is_object()) throw SolverError(ErrorKind::bad_argument, "config: top level must be an object");
  std::vector<std::string> extra;
  for (const auto& [key, v] : cfg.items()) {
    const std::string flag = "--" + key;
    if (given_on_command_line(args, flag)) continue;
    if (v.is_boolean()) {
      if (v.get<bool>()) extra.push_back(flag);
    } else if (v.is_array()) {
      std::string joined;
      for (const Json& e : v) joined += (joined.empty() ? "" : ",") + config_scalar(e);
      extra.insert(extra.end(), {flag, joined});
    } else {
      extra.insert(extra.end(), {flag, config_scalar(v)});
    }
  }
  auto sub = std::find_first_of(args.begin(), args.end(), kCommands.begin(), kCommands.end());
  const auto at = sub == args.end() ? args.begin() : sub + 1;
  args.insert(at, extra.begin(), extra.end());
  return args;
}

struct Globals {
  double tol_feas = 1e-7;
  double tol_cont = 1e-8;
};

bool within(const VectorXd& residual, const VectorXd& rhs, double tol) {
  if (residual.size() == 0) return true;
  const double scale = std::max(1.0, rhs.size() ? rhs.lpNorm<Eigen::Infinity>() : 0.0);
  return residual.lpNorm<Eigen::Infinity>() <= tol * scale;
}

void emit(const Json& j, const std::string& out_path, std::ostream& out) {
  Sink sink(out_path, out);
  sink.stream() << j.dump(2) << '\n';
}

int cmd_solve_cqkp(const std::string& input, const std::string& out_path, const Globals& g, std::ostream& out) {
  const auto inst = parse_json<KnapsackInstance>(read_json_file(input), "knapsack instance");
  if (inst.m() != 1) throw SolverError(ErrorKind::bad_argument, "solve-cqkp expects exactly one coupling row");
  const KnapsackSolution s = solve_cqkp(inst);
  const VectorXd res = inst.B * s.x - inst.c;
  const bool ok = within(res, inst.c, g.tol_feas);
  Json j = solution_json(s);
  j["residuals"] = std::vector<double>(res.data(), res.data() + res.size());
  j["kkt_violation"] = knapsack_kkt_violation(inst, s);
  j["feasible"] = ok;
  emit(j, out_path, out);
  return ok ? 0 : 1;
}

int cmd_solve_mcqkp(const std::string& input, const std::string& out_path, int mmax, bool trace,
                    const std::string& trace_path, const Globals& g, std::ostream& out) {
  const auto inst = parse_json<KnapsackInstance>(read_json_file(input), "knapsack instance");
  HpsOptions opt;
  opt.mmax = mmax;
  opt.trace = trace;
  const HpsResult s = hps_solve(inst, opt);
  const VectorXd res = inst.B * s.x - inst.c;
  const bool ok = within(res, inst.c, g.tol_feas);
  Json j = solution_json(s);
  j["residuals"] = std::vector<double>(res.data(), res.data() + res.size());
  j["kkt_violation"] = knapsack_kkt_violation(inst, s);
  j["feasible"] = ok;
  if (trace) {
    Sink t(trace_path, out);
    t.stream() << "round,unknown,queries,resolved\n";
    for (const HpsTraceRow& r : s.trace) t.stream() << r.round << ',' << r.unknown << ',' << r.queries << ',' << r.resolved << '\n';
    j["trace"] = t.path();
  }
  emit(j, out_path, out);
  return ok ? 0 : 1;
}

int cmd_coordinate(const std::string& input, const std::string& out_path, int mmax, const Globals& g,
                   std::ostream& out) {
  const auto inst = parse_json<CoordinationInstance>(read_json_file(input), "coordination instance");
  CoordinationOptions opt;
  opt.mmax = mmax;
  opt.tol.cont_rel = g.tol_cont;
  const CoordinationResult r = coordinate(inst, opt);
  VectorXd rhs(inst.rows());
  for (int j = 0; j < inst.rows(); ++j) rhs[j] = inst.couplings[j].b;
  // inequality rows report their signed slack; only positive parts are violations
  VectorXd viol = r.residuals;
  for (int j = 0; j < inst.rows(); ++j) {
    if (inst.couplings[j].rel == Relation::le) viol[j] = std::max(0.0, viol[j]);
  }
  const bool ok = within(viol, rhs, g.tol_feas);
  Json j = solution_json(r);
  j["feasible"] = ok;
  emit(j, out_path, out);
  return ok ? 0 : 1;
}

Json violations_json(const ValidationReport& rep, int slice) {
  Json arr = Json::array();
  for (const PwqViolation& v : rep.violations) {
    Json e = {{"kind", violation_kind_name(v.kind)}, {"index", v.index}, {"location", v.location}, {"message", v.message}};
    if (slice >= 0) e["slice"] = slice;
    arr.push_back(e);
  }
  return arr;
}

int cmd_validate(const std::string& input, const std::string& out_path, const Globals& g, std::ostream& out) {
  const Json doc = read_json_file(input);
  PwqTolerances tol;
  tol.cont_rel = g.tol_cont;
  Json report;
  Json violations = Json::array();
  auto fail = [&](const std::string& kind, const std::string& msg) {
    violations.push_back({{"kind", kind}, {"message", msg}});
  };
  if (doc.contains("slices")) {
    report["type"] = "coordination";
    const auto inst = parse_json<CoordinationInstance>(doc, "coordination instance");
    try {
      inst.validate_shape();
    } catch (const SolverError& e) {
      fail("shape", e.what());
    }
    for (int i = 0; i < inst.subsystems(); ++i) {
      for (const Json& v : violations_json(pwq_validate(inst.slices[i], tol), i)) violations.push_back(v);
    }
  } else if (doc.contains("breakpoints")) {
    report["type"] = doc.contains("policy") ? "slice" : "pwq";
    const auto f = parse_json<PwqScalar>(doc, "pwq");
    violations = violations_json(pwq_validate(f, tol), -1);
  } else if (doc.contains("Q_uu")) {
    report["type"] = "local_problem";
    const auto p = parse_json<LocalProblem>(doc, "local problem");
    try {
      p.validate();
    } catch (const SolverError& e) {
      fail("shape", e.what());
    }
  } else if (doc.contains("d")) {
    report["type"] = "knapsack";
    const auto k = parse_json<KnapsackInstance>(doc, "knapsack instance");
    try {
      k.validate();
    } catch (const SolverError& e) {
      fail("shape", e.what());
    }
  } else {
    throw SolverError(ErrorKind::bad_argument, "validate: unrecognized document");
  }
  report["ok"] = violations.empty();
  report["violations"] = violations;
  emit(report, out_path, out);
  return violations.empty() ? 0 : 1;
}

std::string timings_path_for(const std::string& out) {
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + "_timings.csv")).string();
}

int cmd_simulate(SimulationConfig cfg, const std::string& out_path, std::string timings_path, const Globals& g,
                 std::ostream& out) {
  cfg.coordination.tol.cont_rel = g.tol_cont;
  const SimulationLog log = simulate(cfg);
  double worst = 0.0;
  bool ok = true;
  for (const StepRecord& r : log.steps) {
    const double b = std::max(std::abs(r.demand.elec), cfg.case_id == 2 ? std::abs(r.demand.heat) : 0.0);
    const double res = r.residuals.lpNorm<Eigen::Infinity>();
    worst = std::max(worst, res);
    ok = ok && res <= g.tol_feas * std::max(1.0, b);
  }
  {
    Sink sink(out_path, out);
    log.write_csv(sink.stream());
  }
  if (timings_path.empty() && !out_path.empty()) timings_path = timings_path_for(out_path);
  if (!timings_path.empty()) {
    Sink t(timings_path, out);
    log.write_timings_csv(t.stream());
  }
  if (!out_path.empty()) {
    const Json summary = {{"steps", log.steps.size()},
                          {"cumulative_cost", log.steps.empty() ? 0.0 : log.steps.back().cumulative_cost},
                          {"average_pieces", log.average_pieces()},
                          {"max_residual", worst},
                          {"log", resolve_output(out_path)},
                          {"timings", resolve_output(timings_path)}};
    out << summary.dump(2) << '\n';
  }
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical coordination solvers and microgrid simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--tol-feas", g.tol_feas, "Coupling residual tolerance (relative)")->check(CLI::PositiveNumber);
  app.add_option("--tol-cont", g.tol_cont, "Slice continuity tolerance (relative)")->check(CLI::PositiveNumber);
  app.add_option("--config", "JSON object of flag values; command-line flags take precedence");

  std::string input, out_path, trace_path = "mcqkp_trace.csv", timings_path;
  int mmax = 3;
  bool trace = false;

  auto* cqkp = app.add_subcommand("solve-cqkp", "Solve a single-row knapsack instance");
  cqkp->add_option("input", input, "Instance JSON")->required()->check(CLI::ExistingFile);
  cqkp->add_option("--out", out_path, "Output JSON path (default: stdout)");

  auto* mcqkp = app.add_subcommand("solve-mcqkp", "Solve a multi-row knapsack instance");
  mcqkp->add_option("input", input, "Instance JSON")->required()->check(CLI::ExistingFile);
  mcqkp->add_option("--out", out_path, "Output JSON path (default: stdout)");
  mcqkp->add_option("--mmax", mmax, "Largest supported number of rows")->check(CLI::PositiveNumber);
  mcqkp->add_flag("--trace", trace, "Write per-round search statistics as CSV");
  mcqkp->add_option("--trace-out", trace_path, "Trace CSV path")->capture_default_str();

  auto* coord = app.add_subcommand("coordinate", "Coordinate value-function slices");
  coord->add_option("input", input, "Coordination instance JSON")->required()->check(CLI::ExistingFile);
  coord->add_option("--out", out_path, "Output JSON path (default: stdout)");
  coord->add_option("--mmax", mmax, "Largest supported number of coupling rows")->check(CLI::PositiveNumber);

  SimulationConfig sim;
  auto* simc = app.add_subcommand("simulate", "Closed-loop microgrid simulation");
  simc->add_option("--m", sim.M, "Number of subsystems (multiple of 3)")->capture_default_str();
  simc->add_option("--case", sim.case_id, "1: electrical balance, 2: electrical and heat")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  simc->add_option("--seed", sim.seed, "Fleet seed")->capture_default_str();
  simc->add_option("--steps", sim.steps, "Simulated hours")->check(CLI::NonNegativeNumber)->capture_default_str();
  simc->add_option("--horizon", sim.fleet.horizon, "Prediction horizon")->check(CLI::PositiveNumber)->capture_default_str();
  simc->add_option("--demand-fraction", sim.demand_fraction, "Demand as a fraction of CHP capacity")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simc->add_option("--soc-ref", sim.soc_ref, "Storage state-of-charge reference")->capture_default_str();
  simc->add_option("--soc-init", sim.soc_init, "Initial storage state of charge")->capture_default_str();
  simc->add_option("--mmax", sim.coordination.mmax, "Largest supported number of coupling rows")->check(CLI::PositiveNumber);
  simc->add_option("--out", out_path, "Log CSV path (default: stdout)");
  simc->add_option("--timings", timings_path, "Timings CSV path (default: next to --out)");

  BenchmarkConfig bench;
  auto* benc = app.add_subcommand("benchmark", "Time hierarchical and centralized solves");
  benc->add_option("--m-list", bench.M_list, "Fleet sizes, comma separated")->delimiter(',');
  benc->add_option("--case", bench.case_id, "1 or 2")->check(CLI::IsMember({1, 2}))->capture_default_str();
  benc->add_option("--seed", bench.seed, "Fleet seed")->capture_default_str();
  benc->add_option("--repetitions", bench.repetitions, "Instances per size")->check(CLI::PositiveNumber)->capture_default_str();
  benc->add_option("--horizon", bench.fleet.horizon, "Prediction horizon")->check(CLI::PositiveNumber)->capture_default_str();
  benc->add_option("--out", out_path, "Report CSV path (default: stdout)");

  auto* val = app.add_subcommand("validate", "Check a PWQ, slice, coordination, knapsack or local-problem file");
  val->add_option("input", input, "JSON document")->required()->check(CLI::ExistingFile);
  val->add_option("--out", out_path, "Report JSON path (default: stdout)");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    err << error_json(e).dump() << '\n';
    return 2;
  }

  try {
    if (cqkp->parsed()) return cmd_solve_cqkp(input, out_path, g, out);
    if (mcqkp->parsed()) return cmd_solve_mcqkp(input, out_path, mmax, trace, trace_path, g, out);
    if (coord->parsed()) return cmd_coordinate(input, out_path, mmax, g, out);
    if (simc->parsed()) return cmd_simulate(sim, out_path, timings_path, g, out);
    if (benc->parsed()) {
      const BenchmarkReport r = benchmark(bench);
      Sink sink(out_path, out);
      r.write_csv(sink.stream());
      return 0;
    }
    if (val->parsed()) return cmd_validate(input, out_path, g, out);
  } catch (const SolverError& e) {
    err << error_json(e).dump() << '\n';
    return e.kind() == ErrorKind::bad_argument ? 2 : 1;
  } catch (const std::exception& e) {
    err << error_json(e).dump() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sosmpc
