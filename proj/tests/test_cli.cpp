#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "sosmpc/cli.hpp"
#include "sosmpc/io.hpp"

using namespace sosmpc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("sosmpc_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return (path / name).string();
  }
  std::string read(const std::string& name) const {
    std::ifstream in(path / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

}  // namespace

TEST_CASE("solve-cqkp on the symmetric instance") {
  TempDir t;
  const auto f = t.write("k.json", R"({"d":[1,1],"a":[0,0],"l":[0,0],"u":[1,1],"B":[[1,1]],"c":[1]})");
  const Run r = run({"solve-cqkp", f});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["x"][0].get<double>() == doctest::Approx(0.5));
  CHECK(j["x"][1].get<double>() == doctest::Approx(0.5));
  CHECK(j["feasible"].get<bool>());
  // emitted JSON re-parses and re-emits identically
  CHECK(Json::parse(j.dump()).dump() == j.dump());
}

TEST_CASE("solve-mcqkp with a trace file") {
  TempDir t;
  const auto f = t.write("k.json", R"({"d":[1,1,2],"a":[0,0,1],"l":[0,0,0],"u":[1,1,1],"B":[[1,1,1],[1,0,2]],"c":[1.5,1]})");
  const auto trace = (t.path / "trace.csv").string();
  const Run r = run({"solve-mcqkp", f, "--trace", "--trace-out", trace});
  REQUIRE(r.code == 0);
  CHECK(t.read("trace.csv").rfind("round,unknown,queries,resolved\n", 0) == 0);
  const Run small = run({"solve-mcqkp", f, "--mmax", "1"});
  CHECK(small.code == 1);
  CHECK(Json::parse(small.err)["error"] == "dimension-unsupported");
}

TEST_CASE("validate reports non-convex slices") {
  TempDir t;
  const auto f = t.write("s.json", R"({"breakpoints":[0,1,2],"pieces":[{"h":0,"f":1,"g":0},{"h":0,"f":-1,"g":2}]})");
  const Run r = run({"validate", f});
  CHECK(r.code == 1);
  const Json j = Json::parse(r.out);
  CHECK_FALSE(j["ok"].get<bool>());
  CHECK(j["violations"][0]["kind"] == "convexity");
  const auto g = t.write("g.json", R"({"breakpoints":[0,1],"pieces":[{"h":1,"f":0,"g":0}]})");
  CHECK(run({"validate", g}).code == 0);
}

TEST_CASE("coordinate and its error mapping") {
  TempDir t;
  const auto f = t.write("c.json", R"({"slices":[{"breakpoints":[-1,1],"pieces":[{"h":2,"f":0,"g":0}]},
    {"breakpoints":[-1,1],"pieces":[{"h":2,"f":0,"g":0}]}],"couplings":[{"a":[1,1],"b":1,"rel":"eq"}]})");
  const Run r = run({"coordinate", f});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out)["cost"].get<double>() == doctest::Approx(0.5));
  const auto g = t.write("i.json", R"({"slices":[{"breakpoints":[0,1],"pieces":[{"h":2,"f":0,"g":0}]}],
    "couplings":[{"a":[1],"b":3}]})");
  const Run bad = run({"coordinate", g});
  CHECK(bad.code == 1);
  CHECK(Json::parse(bad.err)["error"] == "infeasible");
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"simulate", "--unknown-flag", "1"}).code == 2);
  CHECK(run({"simulate", "--case", "3"}).code == 2);
  CHECK(run({"--tol-feas", "-1", "simulate"}).code == 2);
  CHECK(run({"solve-cqkp", "/nonexistent.json"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("simulate output is deterministic and honours the output directory") {
  TempDir t;
  const Run a = run({"simulate", "--m", "3", "--steps", "4", "--seed", "3"});
  const Run b = run({"simulate", "--m", "3", "--steps", "4", "--seed", "3"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("step,unit,kind,", 0) == 0);
  setenv(kOutDirEnv, t.path.c_str(), 1);
  const Run c = run({"simulate", "--m", "3", "--steps", "4", "--seed", "3", "--out", "log.csv"});
  unsetenv(kOutDirEnv);
  REQUIRE(c.code == 0);
  CHECK(t.read("log.csv") == a.out);
  CHECK(t.read("log_timings.csv").rfind("step,slice_s", 0) == 0);
}

TEST_CASE("config file supplies flags and the command line overrides it") {
  TempDir t;
  const auto cfg = t.write("cfg.json", R"({"m": 6, "steps": 3, "case": 2, "seed": 1})");
  const Run r = run({"simulate", "--config", cfg, "--steps", "1"});
  REQUIRE(r.code == 0);
  // header plus one step of six units
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 7);
  const auto bad = t.write("bad.json", R"({"no-such-flag": 1})");
  CHECK(run({"simulate", "--config", bad}).code == 2);
}

TEST_CASE("benchmark smoke") {
  const Run r = run({"benchmark", "--m-list", "6", "--case", "1", "--repetitions", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("M,method,phase,", 0) == 0);
  CHECK(r.out.find("hierarchical") != std::string::npos);
  CHECK(r.out.find("centralized") != std::string::npos);
}
