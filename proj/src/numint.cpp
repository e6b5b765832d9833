#include "mechsym/numint.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include <Eigen/Dense>

namespace mechsym {

namespace {

std::vector<std::string> variables(const ChartPtr& ch, const Params& params, const std::vector<Expr>& es) {
    std::vector<std::string> vars = ch->coords();
    for (const auto& [k, v] : params) vars.push_back(k);
    std::set<std::string> known(vars.begin(), vars.end());
    for (const auto& e : es)
        for (const auto& s : free_symbols(e))
            if (!known.count(s)) throw Error("unbound_symbol", "no value for symbol " + s);
    return vars;
}

void fill(State& buf, const State& x, const Params& params) {
    size_t n = x.size();
    std::copy(x.begin(), x.end(), buf.begin());
    size_t i = n;
    for (const auto& [k, v] : params) buf[i++] = v;
}

using Rhs = std::function<bool(const State&, State&)>;

void axpy(State& out, const State& x, real h, std::initializer_list<std::pair<real, const State*>> terms) {
    out = x;
    for (auto [c, k] : terms)
        if (c != 0)
            for (size_t i = 0; i < out.size(); ++i) out[i] += h * c * (*k)[i];
}

// Dormand-Prince 5(4) tableau.
constexpr real a21 = 1.0L / 5;
constexpr real a31 = 3.0L / 40, a32 = 9.0L / 40;
constexpr real a41 = 44.0L / 45, a42 = -56.0L / 15, a43 = 32.0L / 9;
constexpr real a51 = 19372.0L / 6561, a52 = -25360.0L / 2187, a53 = 64448.0L / 6561, a54 = -212.0L / 729;
constexpr real a61 = 9017.0L / 3168, a62 = -355.0L / 33, a63 = 46732.0L / 5247, a64 = 49.0L / 176,
               a65 = -5103.0L / 18656;
constexpr real b1 = 35.0L / 384, b3 = 500.0L / 1113, b4 = 125.0L / 192, b5 = -2187.0L / 6784, b6 = 11.0L / 84;
constexpr real e1 = 71.0L / 57600, e3 = -71.0L / 16695, e4 = 71.0L / 1920, e5 = -17253.0L / 339200,
               e6 = 22.0L / 525, e7 = -1.0L / 40;

Trajectory dopri(const Rhs& f, const ChartPtr& chart, const State& x0, real t0, real t1, const IntegrateOptions& o) {
    Trajectory tr;
    tr.chart = chart;
    tr.method = "dormand-prince-5(4)";
    tr.tol = o.tol;
    tr.seed = o.seed;
    tr.t.push_back(t0);
    tr.x.push_back(x0);
    size_t n = x0.size();
    State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y(n), tmp(n);
    if (!f(x0, k1)) throw Error("singular_region", "the initial state lies outside the domain of the field");
    real t = t0, h = std::min(o.h0, t1 - t0);
    State x = x0;
    bool singular_last = false;
    while (t < t1) {
        if (tr.steps + tr.rejected > o.max_steps) throw Error("step_underflow", "step budget exhausted");
        if (h < o.hmin) {
            if (singular_last) throw Error("singular_region", "trajectory reaches a singular region at t = " +
                                                                  std::to_string(static_cast<double>(t)));
            throw Error("step_underflow", "step size underflow at t = " + std::to_string(static_cast<double>(t)));
        }
        if (t + h > t1) h = t1 - t;
        bool ok = true;
        axpy(tmp, x, h, {{a21, &k1}});
        ok = ok && f(tmp, k2);
        if (ok) axpy(tmp, x, h, {{a31, &k1}, {a32, &k2}}), ok = f(tmp, k3);
        if (ok) axpy(tmp, x, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}), ok = f(tmp, k4);
        if (ok) axpy(tmp, x, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}), ok = f(tmp, k5);
        if (ok) axpy(tmp, x, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}), ok = f(tmp, k6);
        if (ok) axpy(y, x, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}), ok = f(y, k7);
        if (!ok) {
            singular_last = true;
            ++tr.rejected;
            h /= 2;
            continue;
        }
        real err = 0;
        for (size_t i = 0; i < n; ++i) {
            real ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            real sc = o.tol * (1 + std::max(std::fabs(x[i]), std::fabs(y[i])));
            err = std::max(err, std::fabs(ei) / sc);
        }
        if (!std::isfinite(err)) {
            singular_last = true;
            ++tr.rejected;
            h /= 2;
            continue;
        }
        singular_last = false;
        if (err <= 1) {
            t = (t1 - (t + h) < 1e-15L * std::max<real>(1, std::fabs(t1))) ? t1 : t + h;
            x = y;
            k1 = k7;
            tr.t.push_back(t);
            tr.x.push_back(x);
            ++tr.steps;
        } else {
            ++tr.rejected;
        }
        real fac = err == 0 ? 5 : 0.9L * std::pow(err, -0.2L);
        h *= std::clamp<real>(fac, 0.2L, 5.0L);
    }
    return tr;
}

}  // namespace

// ---------------------------------------------------------------- evaluators

FieldEvaluator::FieldEvaluator(const VectorField& X, const Params& params, uint64_t seed)
    : n_(X.chart->dim()), fns_(std::make_shared<RandomFunctions>(seed)) {
    auto vars = variables(X.chart, params, X.c);
    for (const auto& c : X.c) comps_.emplace_back(c, vars, fns_.get());
    buf_.assign(vars.size(), 0);
    fill(buf_, State(n_, 0), params);
    scratch_ = buf_;
}

bool FieldEvaluator::operator()(const State& x, State& dx) const {
    std::copy(x.begin(), x.end(), scratch_.begin());
    dx.resize(n_);
    for (size_t i = 0; i < n_; ++i) {
        auto v = comps_[i].eval(scratch_);
        if (!v || !std::isfinite(*v)) return false;
        dx[i] = *v;
    }
    return true;
}

ScalarEvaluator::ScalarEvaluator(const Expr& f, const ChartPtr& chart, const Params& params, uint64_t seed)
    : fns_(std::make_shared<RandomFunctions>(seed)), n_(chart->dim()) {
    auto vars = variables(chart, params, {f});
    c_ = Compiled(f, vars, fns_.get());
    scratch_.assign(vars.size(), 0);
    fill(scratch_, State(n_, 0), params);
}

std::optional<real> ScalarEvaluator::operator()(const State& x) const {
    std::copy(x.begin(), x.begin() + n_, scratch_.begin());
    return c_.eval(scratch_);
}

// ---------------------------------------------------------------- integration

Trajectory integrate(const VectorField& X, const State& x0, real t0, real t1, const Params& params,
                     const IntegrateOptions& opts) {
    if (x0.size() != X.chart->dim()) throw Error("dimension_mismatch", "initial state does not match the chart");
    if (!(t1 >= t0)) throw Error("invalid_interval", "t1 must not precede t0");
    FieldEvaluator F(X, params, opts.seed);
    return dopri([&](const State& x, State& dx) { return F(x, dx); }, X.chart, x0, t0, t1, opts);
}

Trajectory integrate_rk4(const VectorField& X, const State& x0, real t0, real t1, long n, const Params& params,
                         uint64_t seed) {
    FieldEvaluator F(X, params, seed);
    Trajectory tr;
    tr.chart = X.chart;
    tr.method = "rk4";
    tr.seed = seed;
    tr.t.push_back(t0);
    tr.x.push_back(x0);
    size_t d = x0.size();
    State x = x0, k1(d), k2(d), k3(d), k4(d), tmp(d);
    real h = (t1 - t0) / n;
    for (long s = 0; s < n; ++s) {
        bool ok = F(x, k1);
        if (ok) axpy(tmp, x, h / 2, {{1, &k1}}), ok = F(tmp, k2);
        if (ok) axpy(tmp, x, h / 2, {{1, &k2}}), ok = F(tmp, k3);
        if (ok) axpy(tmp, x, h, {{1, &k3}}), ok = F(tmp, k4);
        if (!ok) throw Error("singular_region", "fixed-step trajectory enters a singular region");
        for (size_t i = 0; i < d; ++i) x[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        tr.t.push_back(t0 + (s + 1) * h);
        tr.x.push_back(x);
        ++tr.steps;
    }
    return tr;
}

real DriftReport::max() const {
    real m = 0;
    for (auto d : drift) m = std::max(m, d);
    return m;
}

DriftReport verify_along(const Trajectory& traj, const std::vector<Expr>& quantities, const Params& params) {
    DriftReport r;
    for (const auto& q : quantities) {
        ScalarEvaluator f(q, traj.chart, params, traj.seed);
        auto f0 = f(traj.x.front());
        if (!f0) throw Error("singular_region", "quantity undefined at the initial state");
        real m = 0;
        for (const auto& x : traj.x) {
            auto v = f(x);
            if (!v) throw Error("singular_region", "quantity undefined along the trajectory");
            m = std::max(m, std::fabs(*v - *f0));
        }
        r.drift.push_back(m);
    }
    return r;
}

// ---------------------------------------------------------------- principal function

PrincipalResult principal_function_check(const LagrangianSystem& sys, const State& q0, const State& q1, real T,
                                         const Expr& S, const Params& S_point, const Params& params,
                                         const IntegrateOptions& opts) {
    size_t n = sys.n();
    if (q0.size() != n || q1.size() != n) throw Error("dimension_mismatch", "endpoints do not match the chart");
    auto D = solve_second_order_field(sys);
    FieldEvaluator F(D, params, opts.seed);
    ScalarEvaluator Lf(sys.L, sys.T, params, opts.seed);
    // augmented state (q, v, action)
    auto rhs = [&](const State& z, State& dz) {
        State x(z.begin(), z.begin() + 2 * n), dx;
        if (!F(x, dx)) return false;
        auto l = Lf(x);
        if (!l || !std::isfinite(*l)) return false;
        dz.assign(dx.begin(), dx.end());
        dz.push_back(*l);
        return true;
    };
    auto aug = Chart::make([&] {
        auto cs = sys.T->coords();
        cs.push_back("__action");
        return cs;
    }());
    IntegrateOptions shot_opts = opts;  // one shot is cheap; trajectories that need more hit a wall
    shot_opts.max_steps = std::min<long>(opts.max_steps, 20000);
    auto shoot = [&](const State& v) {
        State z(q0);
        z.insert(z.end(), v.begin(), v.end());
        z.push_back(0);
        return dopri(rhs, aug, z, 0, T, shot_opts);
    };
    auto miss = [&](const Trajectory& tr) {
        Eigen::VectorXd r(n);
        for (size_t a = 0; a < n; ++a) r[a] = static_cast<double>(tr.x.back()[a] - q1[a]);
        return r;
    };

    PrincipalResult res;
    State v(n);
    for (size_t a = 0; a < n; ++a) v[a] = (q1[a] - q0[a]) / T;  // straight-line guess
    const real tol = 1e-10L;
    Trajectory tr;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        res.iterations = it;
        try {
            tr = shoot(v);
        } catch (const Error& e) {
            throw Error("shooting_failed", std::string("integration failed during shooting: ") + e.what());
        }
        auto r = miss(tr);
        if (r.norm() < tol) {
            converged = true;
            break;
        }
        Eigen::MatrixXd J(n, n);
        for (size_t b = 0; b < n; ++b) {
            State w = v;
            real eps = 1e-6L * std::max<real>(1, std::fabs(v[b]));
            w[b] += eps;
            auto rb = miss(shoot(w));
            J.col(b) = (rb - r) / static_cast<double>(eps);
        }
        Eigen::VectorXd step = J.fullPivLu().solve(-r);
        if (!step.allFinite()) throw Error("shooting_failed", "singular shooting Jacobian");
        // damping: halve until the miss decreases
        real lam = 1;
        bool descent = false;
        for (int k = 0; k < 30 && !descent; ++k) {
            State w = v;
            for (size_t a = 0; a < n; ++a) w[a] += lam * step[a];
            try {
                descent = miss(shoot(w)).norm() < r.norm();
            } catch (const Error&) {
            }
            if (!descent) lam /= 2;
        }
        if (!descent) throw Error("shooting_failed", "Newton iteration stalled: no damped step reduces the miss");
        for (size_t a = 0; a < n; ++a) v[a] += lam * step[a];
    }
    if (!converged) throw Error("shooting_failed", "Newton iteration did not reach the endpoint");
    res.v0 = v;
    res.endpoint_error = static_cast<real>(miss(tr).norm());
    res.action = tr.x.back()[2 * n];
    for (auto& x : tr.x) x.resize(2 * n);
    tr.chart = sys.T;
    res.traj = tr;
    Params all = params;
    for (const auto& [k, val] : S_point) all[k] = val;
    auto Sv = evaluate(S, all, opts.seed);
    if (!Sv) throw Error("singular_region", "claimed principal function undefined at the endpoints");
    res.claimed = *Sv;
    res.difference = std::fabs(res.action - res.claimed);
    return res;
}

void write_csv(const Trajectory& traj, std::ostream& out) {
    out << "t";
    for (const auto& c : traj.chart->coords()) out << "," << c;
    out << "\n" << std::setprecision(17);
    for (size_t i = 0; i < traj.t.size(); ++i) {
        out << static_cast<double>(traj.t[i]);
        for (auto v : traj.x[i]) out << "," << static_cast<double>(v);
        out << "\n";
    }
}

}  // namespace mechsym
