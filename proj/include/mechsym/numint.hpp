// Numerical cross-checks: adaptive integration of vector fields, drift of conserved
// quantities along trajectories, and the action along shooting solutions.
#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mechsym/geometry.hpp"
#include "mechsym/lagrangian.hpp"

namespace mechsym {

using State = std::vector<real>;
using Params = std::map<std::string, real>;  // values of non-coordinate symbols

struct Trajectory {
    ChartPtr chart;
    std::vector<real> t;
    std::vector<State> x;
    std::string method;
    real tol = 0;
    uint64_t seed = kDefaultSeed;
    long steps = 0, rejected = 0;
};

struct IntegrateOptions {
    real tol = 1e-10L;         // local error per step (mixed absolute/relative)
    real h0 = 1e-3L;           // first step
    real hmin = 1e-13L;        // below this the step underflows
    long max_steps = 2000000;
    uint64_t seed = kDefaultSeed;  // unknown functions are sampled with RandomFunctions(seed)
};

// Dormand-Prince 5(4). Points where the field cannot be evaluated (|denominator| < 1e-8, domain
// violations) are rejected by halving the step; errors: singular_region, step_underflow.
Trajectory integrate(const VectorField& X, const State& x0, real t0, real t1, const Params& params = {},
                     const IntegrateOptions& opts = {});
// Classical fixed-step RK4 with n steps.
Trajectory integrate_rk4(const VectorField& X, const State& x0, real t0, real t1, long n, const Params& params = {},
                         uint64_t seed = kDefaultSeed);

// Compiled right-hand side; returns false outside the domain.
class FieldEvaluator {
public:
    FieldEvaluator(const VectorField& X, const Params& params, uint64_t seed);
    bool operator()(const State& x, State& dx) const;

private:
    size_t n_;
    std::vector<Compiled> comps_;
    std::vector<real> buf_;
    std::shared_ptr<RandomFunctions> fns_;
    mutable State scratch_;
};

// Scalar evaluator over the chart coordinates with parameters fixed.
class ScalarEvaluator {
public:
    ScalarEvaluator(const Expr& f, const ChartPtr& chart, const Params& params, uint64_t seed);
    std::optional<real> operator()(const State& x) const;

private:
    Compiled c_;
    std::shared_ptr<RandomFunctions> fns_;
    size_t n_;
    mutable State scratch_;
};

struct DriftReport {
    std::vector<real> drift;  // max_t |f(x(t)) - f(x(t0))| per quantity
    real max() const;
};
DriftReport verify_along(const Trajectory& traj, const std::vector<Expr>& quantities, const Params& params = {});

struct PrincipalResult {
    State v0;             // initial velocity found by shooting
    int iterations = 0;
    real endpoint_error = 0;
    real action = 0;      // quadrature of L along the solution
    real claimed = 0;     // S evaluated at the endpoints
    real difference = 0;  // |action - claimed|
    Trajectory traj;
};
// Shoots from q0 at t = 0 to q1 at t = T along the Euler-Lagrange field of the regular system, by
// damped Newton on the initial velocity (100 iterations, tolerance 1e-10); errors: shooting_failed.
// `S` is evaluated with `S_point` (endpoint and time symbols chosen by the caller) plus `params`.
PrincipalResult principal_function_check(const LagrangianSystem& sys, const State& q0, const State& q1, real T,
                                         const Expr& S, const Params& S_point, const Params& params = {},
                                         const IntegrateOptions& opts = {});

// CSV with header t,<coordinates>.
void write_csv(const Trajectory& traj, std::ostream& out);

}  // namespace mechsym
