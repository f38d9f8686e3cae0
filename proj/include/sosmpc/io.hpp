#pragma once

#include <json.hpp>
#include <string>

#include "sosmpc/coordination.hpp"
#include "sosmpc/hps.hpp"
#include "sosmpc/knapsack.hpp"
#include "sosmpc/local_problem.hpp"
#include "sosmpc/pwq.hpp"

namespace sosmpc {

using Json = nlohmann::json;

// Reals are written in shortest round-trip form; parsing back gives the same bits.
void to_json(Json& j, const PwqScalar& f);
void from_json(const Json& j, PwqScalar& f);
void to_json(Json& j, const KnapsackInstance& k);
void from_json(const Json& j, KnapsackInstance& k);
void to_json(Json& j, const Coupling& c);
void from_json(const Json& j, Coupling& c);
void to_json(Json& j, const CoordinationInstance& c);
void from_json(const Json& j, CoordinationInstance& c);
void to_json(Json& j, const LocalProblem& p);
void from_json(const Json& j, LocalProblem& p);
void to_json(Json& j, const SliceBundle& s);
void from_json(const Json& j, SliceBundle& s);

Json solution_json(const KnapsackSolution& s);
Json solution_json(const HpsResult& s);
Json solution_json(const CoordinationResult& r);
Json error_json(const std::exception& e);

// Throws SolverError(bad_argument) on unreadable files, bad JSON or schema mismatch.
Json read_json_file(const std::string& path);
template <class T>
T parse_json(const Json& j, const char* what);

}  // namespace sosmpc
