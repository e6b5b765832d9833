// Problem files, command dispatch and reports for the command-line front end.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mechsym/geometry.hpp"

namespace mechsym::cli {

using json = nlohmann::ordered_json;

// Validation failure located by a JSON pointer ("/symmetries/0/field/1").
struct ProblemError : Error {
    std::string pointer;
    ProblemError(std::string ptr, const std::string& msg)
        : Error("invalid_problem", ptr + ": " + msg), pointer(std::move(ptr)) {}
};

struct SymmetrySpec {
    std::string name;
    std::string kind;          // newtonian, newtonoid, general, charge
    std::vector<Expr> field;   // on Q (newtonian) or on TQ
    Expr gauge;
    Expr charge;               // kind == "charge": constant of motion fed to the inverse theorem
    bool expect_certified = true;
};

struct HJSpec {
    std::string name;
    Expr W;
    std::vector<std::string> params;
    std::string energy = "E";
    std::vector<Assumption> assumptions;
    std::map<std::string, Expr> characteristics;  // parameter values; empty = not requested
    bool expect_certified = true;
};

struct HJSymmetrySpec {
    std::string name;
    std::vector<Expr> field;  // on Q
    Expr f;
};

struct IntegrationSpec {
    std::string name;
    std::string system = "lagrangian";  // lagrangian, hamiltonian
    std::vector<real> initial;
    real t0 = 0, t1 = 1;
    std::map<std::string, real> params;
    std::vector<Expr> conserved;
    std::optional<real> max_drift;
    std::string method = "dopri";  // dopri, rk4
    long steps = 1000;             // rk4 only
};

struct PrincipalSpec {
    std::string name;
    std::vector<real> q0, q1;
    real T = 1;
    Expr S;
    std::map<std::string, real> point;
    std::map<std::string, real> params;
    real max_difference = 1e-8L;
};

struct Problem {
    std::string path;
    std::string command;  // designated command (may be empty)
    ChartPtr Q, T, Tstar;
    std::set<std::string> functions, parameters;
    std::vector<Assumption> fiber_assumptions;  // chart assumptions involving velocities or momenta
    std::optional<Expr> lagrangian, hamiltonian;
    std::vector<SymmetrySpec> symmetries;
    bool closure = false;
    std::vector<HJSpec> hj;
    std::vector<HJSymmetrySpec> hj_symmetries;
    std::vector<std::string> sides{"hamiltonian", "lagrangian"};
    std::vector<Expr> primaries;
    std::vector<IntegrationSpec> integrate;
    std::vector<PrincipalSpec> principal;
    uint64_t seed = kDefaultSeed;
    int zero_points = 16;
    int max_iterations = 10;
    real tol = 1e-10L;
};

Problem load(const std::string& path);                             // errors: io_error, syntax_error, invalid_problem
Problem load_json(const json& j, const std::string& path = "<memory>");

struct RunOptions {
    std::optional<uint64_t> seed;
    std::optional<real> tol;
    std::optional<int> max_iterations;
    std::string export_csv;  // trajectory CSV path (integrate)
};

// Overall status: "certified", "certified-modulo-sampling", "failed", "error".
struct Report {
    std::string file, command;
    json results;
    bool sampling = false;  // some verdict rested on sampling
    bool failed = false;    // a mandatory residual or numeric bound failed
    int exit_code = 0;
    std::string error;      // module error message (exit codes 1-3)
    std::string status() const;
    json to_json() const;
};

extern const std::vector<std::string> kCommands;

Report run(const std::string& command, const Problem& p, const RunOptions& opts = {});
std::string render_text(const Report& r);
std::string render_json(const Report& r);

// Entry point shared by the executable and the tests; returns the exit code.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mechsym::cli
