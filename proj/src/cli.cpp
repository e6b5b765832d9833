#include "mechsym/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "mechsym/constraints.hpp"
#include "mechsym/hamjac.hpp"
#include "mechsym/lagrangian.hpp"
#include "mechsym/noether.hpp"
#include "mechsym/numint.hpp"

namespace mechsym::cli {

const std::vector<std::string> kCommands{"analyze", "noether", "constrain", "hj", "integrate"};

namespace {

// ---------------------------------------------------------------- loading

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string child(const std::string& ptr, size_t i) { return ptr + "/" + std::to_string(i); }

void allow_keys(const json& j, const std::string& ptr, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ProblemError(ptr.empty() ? "/" : ptr, "expected an object");
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
            throw ProblemError(child(ptr, k), "unknown field");
    }
}

std::string get_string(const json& j, const std::string& ptr) {
    if (!j.is_string()) throw ProblemError(ptr, "expected a string");
    return j.get<std::string>();
}

std::vector<std::string> get_names(const json& j, const std::string& ptr) {
    if (!j.is_array()) throw ProblemError(ptr, "expected an array of names");
    std::vector<std::string> r;
    for (size_t i = 0; i < j.size(); ++i) r.push_back(get_string(j[i], child(ptr, i)));
    return r;
}

// Numbers, or constant expressions such as "pi/2" given as strings.
real get_real(const json& j, const std::string& ptr) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        try {
            auto v = evaluate(normalize(parse(j.get<std::string>())), {});
            if (v) return *v;
        } catch (const Error&) {
        }
        throw ProblemError(ptr, "not a numeric constant");
    }
    throw ProblemError(ptr, "expected a number");
}

std::vector<real> get_reals(const json& j, const std::string& ptr) {
    if (!j.is_array()) throw ProblemError(ptr, "expected an array of numbers");
    std::vector<real> r;
    for (size_t i = 0; i < j.size(); ++i) r.push_back(get_real(j[i], child(ptr, i)));
    return r;
}

std::map<std::string, real> get_values(const json& j, const std::string& ptr) {
    if (!j.is_object()) throw ProblemError(ptr, "expected an object of numbers");
    std::map<std::string, real> r;
    for (const auto& [k, v] : j.items()) r[k] = get_real(v, child(ptr, k));
    return r;
}

struct Scope {
    std::set<std::string> symbols, functions;
    Scope with(const std::vector<std::string>& extra) const {
        Scope s = *this;
        s.symbols.insert(extra.begin(), extra.end());
        return s;
    }
};

Expr get_expr(const json& j, const std::string& ptr, const Scope& sc) {
    std::string src;
    if (j.is_number_integer()) src = std::to_string(j.get<long>());
    else src = get_string(j, ptr);
    Expr e;
    try {
        e = normalize(parse(src, {sc.functions}));
    } catch (const ParseError& err) {
        throw ProblemError(ptr, err.what());
    } catch (const Error& err) {
        throw ProblemError(ptr, err.what());
    }
    for (const auto& s : free_symbols(e))
        if (!sc.symbols.count(s)) throw ProblemError(ptr, "undeclared symbol '" + s + "'");
    for (const auto& f : function_names(e))
        if (!sc.functions.count(f)) throw ProblemError(ptr, "undeclared function '" + f + "'");
    return e;
}

std::vector<Expr> get_exprs(const json& j, const std::string& ptr, const Scope& sc) {
    if (!j.is_array()) throw ProblemError(ptr, "expected an array of expressions");
    std::vector<Expr> r;
    for (size_t i = 0; i < j.size(); ++i) r.push_back(get_expr(j[i], child(ptr, i), sc));
    return r;
}

std::vector<Assumption> get_assumptions(const json& j, const std::string& ptr, const Scope& sc) {
    if (!j.is_array()) throw ProblemError(ptr, "expected an array of assumptions");
    std::vector<Assumption> r;
    for (size_t i = 0; i < j.size(); ++i) {
        auto p = child(ptr, i);
        allow_keys(j[i], p, {"positive", "nonzero"});
        if (j[i].size() != 1) throw ProblemError(p, "expected exactly one of positive / nonzero");
        auto it = j[i].begin();
        r.push_back({it.key() == "positive" ? Assumption::positive : Assumption::nonzero,
                     get_expr(it.value(), child(p, it.key()), sc)});
    }
    return r;
}

bool get_expect(const json& j, const std::string& ptr) {
    if (!j.contains("expect")) return true;
    auto s = get_string(j["expect"], child(ptr, "expect"));
    if (s == "certified") return true;
    if (s == "not_certified") return false;
    throw ProblemError(child(ptr, "expect"), "expected \"certified\" or \"not_certified\"");
}

void check_dim(const std::vector<Expr>& v, size_t n, const std::string& ptr) {
    if (v.size() != n)
        throw ProblemError(ptr, "expected " + std::to_string(n) + " components, got " + std::to_string(v.size()));
}

}  // namespace

Problem load_json(const json& j, const std::string& path) {
    Problem p;
    p.path = path;
    allow_keys(j, "", {"command", "chart", "lagrangian", "hamiltonian", "symmetries", "closure", "hj", "constraints",
                       "integrate", "options", "description"});
    if (j.contains("command")) {
        p.command = get_string(j["command"], "/command");
        if (std::find(kCommands.begin(), kCommands.end(), p.command) == kCommands.end())
            throw ProblemError("/command", "unknown command '" + p.command + "'");
    }
    if (!j.contains("chart")) throw ProblemError("/chart", "missing");
    const auto& c = j["chart"];
    allow_keys(c, "/chart", {"coordinates", "velocities", "momenta", "functions", "parameters", "assumptions"});
    if (!c.contains("coordinates")) throw ProblemError("/chart/coordinates", "missing");
    auto coords = get_names(c["coordinates"], "/chart/coordinates");
    if (coords.empty()) throw ProblemError("/chart/coordinates", "at least one coordinate is required");
    auto fns = c.contains("functions") ? get_names(c["functions"], "/chart/functions") : std::vector<std::string>{};
    auto pars = c.contains("parameters") ? get_names(c["parameters"], "/chart/parameters") : std::vector<std::string>{};
    p.functions.insert(fns.begin(), fns.end());
    p.parameters.insert(pars.begin(), pars.end());
    std::vector<std::string> vel, mom;
    if (c.contains("velocities")) {
        vel = get_names(c["velocities"], "/chart/velocities");
        if (vel.size() != coords.size()) throw ProblemError("/chart/velocities", "one name per coordinate expected");
    }
    if (c.contains("momenta")) {
        mom = get_names(c["momenta"], "/chart/momenta");
        if (mom.size() != coords.size()) throw ProblemError("/chart/momenta", "one name per coordinate expected");
    }
    // Charts are built twice: once to learn the derived names, once with the base assumptions.
    auto Q0 = Chart::make(coords);
    auto T0 = Chart::tangent(Q0, vel);
    auto S0 = Chart::cotangent(Q0, mom);
    Scope base{{coords.begin(), coords.end()}, p.functions};
    base.symbols.insert(pars.begin(), pars.end());
    Scope tangent = base.with(T0->fiber_coords());
    Scope phase = base.with(S0->fiber_coords());
    Scope all = tangent.with(S0->fiber_coords());
    std::vector<Assumption> on_base, extra;
    if (c.contains("assumptions")) {
        auto as = get_assumptions(c["assumptions"], "/chart/assumptions", all);
        for (auto& a : as) {
            bool fiber = false;
            for (const auto& s : free_symbols(a.expr)) fiber = fiber || !base.symbols.count(s);
            (fiber ? extra : on_base).push_back(a);
        }
    }
    try {
        p.Q = Chart::make(coords, on_base);
        p.T = Chart::tangent(p.Q, vel);
        p.Tstar = Chart::cotangent(p.Q, mom);
    } catch (const Error& e) {
        throw ProblemError("/chart", e.what());
    }

    if (j.contains("options")) {
        const auto& o = j["options"];
        allow_keys(o, "/options", {"seed", "zero_points", "max_iterations", "tol"});
        try {
            if (o.contains("seed")) p.seed = o["seed"].get<uint64_t>();
            if (o.contains("zero_points")) p.zero_points = o["zero_points"].get<int>();
            if (o.contains("max_iterations")) p.max_iterations = o["max_iterations"].get<int>();
        } catch (const json::exception&) {
            throw ProblemError("/options", "seed, zero_points and max_iterations must be integers");
        }
        if (o.contains("tol")) p.tol = get_real(o["tol"], "/options/tol");
    }
    p.fiber_assumptions = extra;

    if (j.contains("lagrangian")) p.lagrangian = get_expr(j["lagrangian"], "/lagrangian", tangent);
    if (j.contains("hamiltonian")) p.hamiltonian = get_expr(j["hamiltonian"], "/hamiltonian", phase);

    if (j.contains("symmetries")) {
        const auto& ss = j["symmetries"];
        if (!ss.is_array()) throw ProblemError("/symmetries", "expected an array");
        for (size_t i = 0; i < ss.size(); ++i) {
            auto ptr = child("/symmetries", i);
            const auto& s = ss[i];
            allow_keys(s, ptr, {"name", "kind", "field", "gauge", "charge", "expect"});
            SymmetrySpec sp;
            sp.name = s.contains("name") ? get_string(s["name"], child(ptr, "name")) : "symmetry_" + std::to_string(i);
            sp.kind = s.contains("kind") ? get_string(s["kind"], child(ptr, "kind")) : "newtonian";
            sp.expect_certified = get_expect(s, ptr);
            if (sp.kind == "charge") {
                if (!s.contains("charge")) throw ProblemError(child(ptr, "charge"), "missing");
                sp.charge = get_expr(s["charge"], child(ptr, "charge"), tangent);
            } else if (sp.kind == "newtonian" || sp.kind == "newtonoid") {
                if (!s.contains("field")) throw ProblemError(child(ptr, "field"), "missing");
                const Scope& sc = sp.kind == "newtonian" ? base : tangent;
                sp.field = get_exprs(s["field"], child(ptr, "field"), sc);
                check_dim(sp.field, sp.kind == "newtonian" ? coords.size() : 2 * coords.size(), child(ptr, "field"));
                if (s.contains("gauge")) sp.gauge = get_expr(s["gauge"], child(ptr, "gauge"), sc);
            } else {
                throw ProblemError(child(ptr, "kind"), "expected newtonian, newtonoid or charge");
            }
            p.symmetries.push_back(sp);
        }
    }
    if (j.contains("closure")) {
        if (!j["closure"].is_boolean()) throw ProblemError("/closure", "expected a boolean");
        p.closure = j["closure"].get<bool>();
    }

    if (j.contains("hj")) {
        const auto& h = j["hj"];
        allow_keys(h, "/hj", {"candidates", "symmetries"});
        if (h.contains("candidates")) {
            const auto& cs = h["candidates"];
            if (!cs.is_array()) throw ProblemError("/hj/candidates", "expected an array");
            for (size_t i = 0; i < cs.size(); ++i) {
                auto ptr = child("/hj/candidates", i);
                const auto& cj = cs[i];
                allow_keys(cj, ptr, {"name", "W", "parameters", "energy", "assumptions", "characteristics", "expect"});
                HJSpec sp;
                sp.name = cj.contains("name") ? get_string(cj["name"], child(ptr, "name")) : "candidate_" + std::to_string(i);
                if (cj.contains("parameters")) sp.params = get_names(cj["parameters"], child(ptr, "parameters"));
                if (cj.contains("energy")) sp.energy = get_string(cj["energy"], child(ptr, "energy"));
                auto sc = base.with(sp.params).with({sp.energy});
                if (!cj.contains("W")) throw ProblemError(child(ptr, "W"), "missing");
                sp.W = get_expr(cj["W"], child(ptr, "W"), sc);
                if (cj.contains("assumptions"))
                    sp.assumptions = get_assumptions(cj["assumptions"], child(ptr, "assumptions"), sc);
                if (cj.contains("characteristics")) {
                    auto cp = child(ptr, "characteristics");
                    if (!cj["characteristics"].is_object()) throw ProblemError(cp, "expected an object of values");
                    for (const auto& [k, v] : cj["characteristics"].items())
                        sp.characteristics[k] = get_expr(v, child(cp, k), base);
                }
                sp.expect_certified = get_expect(cj, ptr);
                p.hj.push_back(sp);
            }
        }
        if (h.contains("symmetries")) {
            const auto& ss = h["symmetries"];
            if (!ss.is_array()) throw ProblemError("/hj/symmetries", "expected an array");
            for (size_t i = 0; i < ss.size(); ++i) {
                auto ptr = child("/hj/symmetries", i);
                allow_keys(ss[i], ptr, {"name", "field", "f"});
                HJSymmetrySpec sp;
                sp.name = ss[i].contains("name") ? get_string(ss[i]["name"], child(ptr, "name"))
                                                 : "symmetry_" + std::to_string(i);
                if (!ss[i].contains("field")) throw ProblemError(child(ptr, "field"), "missing");
                sp.field = get_exprs(ss[i]["field"], child(ptr, "field"), base);
                check_dim(sp.field, coords.size(), child(ptr, "field"));
                if (ss[i].contains("f")) sp.f = get_expr(ss[i]["f"], child(ptr, "f"), base);
                p.hj_symmetries.push_back(sp);
            }
        }
    }

    if (j.contains("constraints")) {
        const auto& cj = j["constraints"];
        allow_keys(cj, "/constraints", {"sides", "primaries", "max_iterations"});
        if (cj.contains("sides")) {
            p.sides = get_names(cj["sides"], "/constraints/sides");
            for (size_t i = 0; i < p.sides.size(); ++i)
                if (p.sides[i] != "hamiltonian" && p.sides[i] != "lagrangian")
                    throw ProblemError(child("/constraints/sides", i), "expected hamiltonian or lagrangian");
        }
        if (cj.contains("primaries")) p.primaries = get_exprs(cj["primaries"], "/constraints/primaries", phase);
        if (cj.contains("max_iterations")) {
            if (!cj["max_iterations"].is_number_integer())
                throw ProblemError("/constraints/max_iterations", "expected an integer");
            p.max_iterations = cj["max_iterations"].get<int>();
        }
    }

    if (j.contains("integrate")) {
        const auto& ij = j["integrate"];
        allow_keys(ij, "/integrate", {"trajectories", "principal"});
        if (ij.contains("trajectories")) {
            const auto& ts = ij["trajectories"];
            if (!ts.is_array()) throw ProblemError("/integrate/trajectories", "expected an array");
            for (size_t i = 0; i < ts.size(); ++i) {
                auto ptr = child("/integrate/trajectories", i);
                const auto& t = ts[i];
                allow_keys(t, ptr, {"name", "system", "initial", "t0", "t1", "params", "conserved", "max_drift",
                                    "method", "steps"});
                IntegrationSpec sp;
                sp.name = t.contains("name") ? get_string(t["name"], child(ptr, "name")) : "trajectory_" + std::to_string(i);
                if (t.contains("system")) sp.system = get_string(t["system"], child(ptr, "system"));
                if (sp.system != "lagrangian" && sp.system != "hamiltonian")
                    throw ProblemError(child(ptr, "system"), "expected lagrangian or hamiltonian");
                if (t.contains("method")) sp.method = get_string(t["method"], child(ptr, "method"));
                if (sp.method != "dopri" && sp.method != "rk4")
                    throw ProblemError(child(ptr, "method"), "expected dopri or rk4");
                if (t.contains("steps")) {
                    if (!t["steps"].is_number_integer() || t["steps"].get<long>() <= 0)
                        throw ProblemError(child(ptr, "steps"), "expected a positive integer");
                    sp.steps = t["steps"].get<long>();
                }
                if (!t.contains("initial")) throw ProblemError(child(ptr, "initial"), "missing");
                sp.initial = get_reals(t["initial"], child(ptr, "initial"));
                if (sp.initial.size() != 2 * coords.size())
                    throw ProblemError(child(ptr, "initial"), "expected " + std::to_string(2 * coords.size()) + " values");
                if (t.contains("t0")) sp.t0 = get_real(t["t0"], child(ptr, "t0"));
                if (t.contains("t1")) sp.t1 = get_real(t["t1"], child(ptr, "t1"));
                if (t.contains("params")) sp.params = get_values(t["params"], child(ptr, "params"));
                for (const auto& [k, v] : sp.params)
                    if (!p.parameters.count(k)) throw ProblemError(child(child(ptr, "params"), k), "undeclared parameter");
                if (t.contains("conserved"))
                    sp.conserved = get_exprs(t["conserved"], child(ptr, "conserved"),
                                             sp.system == "lagrangian" ? tangent : phase);
                if (t.contains("max_drift")) sp.max_drift = get_real(t["max_drift"], child(ptr, "max_drift"));
                p.integrate.push_back(sp);
            }
        }
        if (ij.contains("principal")) {
            const auto& ps = ij["principal"];
            if (!ps.is_array()) throw ProblemError("/integrate/principal", "expected an array");
            for (size_t i = 0; i < ps.size(); ++i) {
                auto ptr = child("/integrate/principal", i);
                const auto& t = ps[i];
                allow_keys(t, ptr, {"name", "q0", "q1", "T", "S", "point", "params", "max_difference"});
                PrincipalSpec sp;
                sp.name = t.contains("name") ? get_string(t["name"], child(ptr, "name")) : "principal_" + std::to_string(i);
                for (const char* k : {"q0", "q1", "T", "S"})
                    if (!t.contains(k)) throw ProblemError(child(ptr, k), "missing");
                sp.q0 = get_reals(t["q0"], child(ptr, "q0"));
                sp.q1 = get_reals(t["q1"], child(ptr, "q1"));
                if (sp.q0.size() != coords.size()) throw ProblemError(child(ptr, "q0"), "one value per coordinate expected");
                if (sp.q1.size() != coords.size()) throw ProblemError(child(ptr, "q1"), "one value per coordinate expected");
                sp.T = get_real(t["T"], child(ptr, "T"));
                if (t.contains("point")) sp.point = get_values(t["point"], child(ptr, "point"));
                if (t.contains("params")) sp.params = get_values(t["params"], child(ptr, "params"));
                std::vector<std::string> names;
                for (const auto& [k, v] : sp.point) names.push_back(k);
                Scope sc{{p.parameters.begin(), p.parameters.end()}, p.functions};
                sp.S = get_expr(t["S"], child(ptr, "S"), sc.with(names));
                if (t.contains("max_difference"))
                    sp.max_difference = get_real(t["max_difference"], child(ptr, "max_difference"));
                p.principal.push_back(sp);
            }
        }
    }
    return p;
}

Problem load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("syntax_error", path + ": " + e.what());
    }
    return load_json(j, path);
}

// ---------------------------------------------------------------- reports

std::string Report::status() const {
    if (!error.empty()) return "error";
    if (failed) return "failed";
    return sampling ? "certified-modulo-sampling" : "certified";
}

json Report::to_json() const {
    json j;
    j["file"] = file;
    j["command"] = command;
    j["status"] = status();
    j["exit_code"] = exit_code;
    j["sampling_warning"] = sampling;
    if (!error.empty()) j["error"] = error;
    j["results"] = results;
    return j;
}

namespace {

struct Run {
    const Problem& p;
    Report& r;
    ZeroOptions zo;
    real tol;
    int max_iterations;
    std::string csv;
};

json str(const Expr& e) { return to_string(e); }

json strs(const std::vector<Expr>& es) {
    json a = json::array();
    for (const auto& e : es) a.push_back(to_string(e));
    return a;
}

json field_json(const VectorField& X) {
    json j;
    for (size_t i = 0; i < X.c.size(); ++i) j[X.chart->coord(i)] = to_string(X.c[i]);
    return j;
}

json verdict_json(Report& r, const ZeroVerdict& v) {
    if (v.status == ZeroStatus::probably_zero) r.sampling = true;
    json j;
    j["status"] = status_name(v.status);
    if (!v.tier.empty()) j["tier"] = v.tier;
    if (v.status == ZeroStatus::proved_nonzero && !v.witness.empty()) {
        json w;
        for (const auto& [k, q] : v.witness) w[k] = q.get_str();
        j["witness"] = w;
        j["witness_value"] = static_cast<double>(v.witness_value);
    }
    return j;
}

// `count` = false for candidates expected to fail: their residuals do not fail the report.
json checks_json(Report& r, const std::vector<Check>& cs, bool count = true) {
    json a = json::array();
    for (const auto& c : cs) {
        json j;
        j["name"] = c.name;
        j["verdict"] = verdict_json(r, c.verdict);
        j["mandatory"] = c.mandatory;
        if (!c.residual.empty()) j["residual"] = c.residual;
        if (count && c.mandatory && c.verdict.status == ZeroStatus::proved_nonzero) r.failed = true;
        a.push_back(j);
    }
    return a;
}

void expectation(Report& r, json& j, bool expected, bool got) {
    j["expected"] = expected ? "certified" : "not_certified";
    j["as_expected"] = expected == got;
    if (expected != got) r.failed = true;
}

LagrangianSystem system_of(const Run& R) {
    if (!R.p.lagrangian) throw Error("lagrangian_missing", "the problem has no lagrangian");
    return build(*R.p.lagrangian, R.p.T, R.zo);
}

// ---------------------------------------------------------------- commands

json analyze(Run& R) {
    json res;
    const auto& p = R.p;
    if (!p.lagrangian && !p.hamiltonian) throw Error("lagrangian_missing", "analyze needs a lagrangian or hamiltonian");
    if (p.lagrangian) {
        auto sys = system_of(R);
        res["lagrangian"] = str(sys.L);
        res["regular"] = sys.regular;
        res["rank"] = sys.rank;
        if (sys.rank_unstable) R.r.sampling = true;
        json hess = json::array();
        for (const auto& row : sys.hessian) hess.push_back(strs(row));
        res["hessian"] = hess;
        res["theta"] = to_string(sys.theta);
        res["omega"] = to_string(sys.omega);
        res["energy"] = str(sys.energy);
        std::vector<Check> checks;
        if (sys.regular) {
            auto D = solve_second_order_field(sys);
            res["dynamics"] = field_json(D);
            auto el = check_euler_lagrange(sys, D);
            checks.push_back({"euler_lagrange", el.verdict, el.verdict.proved() ? "" : to_string(el.residual), true});
        }
        auto leg = legendre(sys, p.Tstar);
        json lj;
        lj["momenta"] = strs(leg.momenta);
        if (sys.regular) {
            lj["velocities"] = strs(leg.velocities);
            lj["hamiltonian"] = str(leg.hamiltonian);
            checks.push_back({"legendre_energy", leg.energy_match, "", true});
        } else {
            lj["image"] = strs(leg.image);
        }
        checks.push_back({"legendre_pullback", leg.pullback, "", true});
        if (p.hamiltonian) {
            std::map<std::string, Expr> b;
            for (size_t a = 0; a < sys.n(); ++a) b[p.Tstar->coord(sys.n() + a)] = leg.momenta[a];
            Expr diff = substitute(*p.hamiltonian, b) - sys.energy;
            auto v = is_zero(diff, sys.opts);
            checks.push_back({"hamiltonian_matches_energy", v, v.proved() ? "" : to_string(diff), true});
        }
        res["legendre"] = lj;
        res["checks"] = checks_json(R.r, checks);
    } else {
        auto X = PoissonStructure::canonical(p.Tstar).hamiltonian_field(*p.hamiltonian);
        res["hamiltonian"] = str(*p.hamiltonian);
        res["dynamics"] = field_json(X);
    }
    return res;
}

SymmetryCandidate candidate_of(const SymmetrySpec& s, const LagrangianSystem& sys) {
    bool on_q = s.kind == "newtonian";
    VectorField X(on_q ? sys.Q : sys.T, s.field);
    return {X, s.gauge, on_q ? SymmetryKind::newtonian : SymmetryKind::newtonoid};
}

json certificate_json(Run& R, const SymmetrySpec& s, const NoetherCertificate& c) {
    json j;
    j["name"] = s.name;
    j["kind"] = s.kind;
    j["verdict"] = c.certified() ? "certified" : "not_certified";
    expectation(R.r, j, s.expect_certified, c.certified());
    j["charge"] = str(c.charge);
    j["field"] = field_json(c.field);
    j["checks"] = checks_json(R.r, c.checks, s.expect_certified);
    if (!c.diagnosis.empty()) j["diagnosis"] = c.diagnosis;
    return j;
}

json noether(Run& R) {
    json res;
    auto sys = system_of(R);
    res["regular"] = sys.regular;
    json list = json::array();
    if (sys.regular) {
        std::vector<NoetherCertificate> good;
        for (const auto& s : R.p.symmetries) {
            NoetherCertificate c;
            if (s.kind == "charge") c = inverse_noether(sys, s.charge);
            else if (s.kind == "newtonian") c = check_newtonian(sys, candidate_of(s, sys));
            else c = check_newtonoid(sys, candidate_of(s, sys));
            list.push_back(certificate_json(R, s, c));
            if (c.certified()) good.push_back(c);
        }
        res["symmetries"] = list;
        if (R.p.closure && good.size() >= 2) {
            auto t = bracket_closure(sys, good);
            json cl;
            cl["closes"] = t.closes;
            json br = json::array();
            for (size_t a = 0; a < t.size; ++a)
                for (size_t b = a + 1; b < t.size; ++b) {
                    json e;
                    e["a"] = a;
                    e["b"] = b;
                    e["bracket"] = str(t.brackets[a][b]);
                    if (t.closes) {
                        json sc;
                        for (size_t k = 0; k < t.size; ++k)
                            if (t.structure[a][b][k] != 0) sc[std::to_string(k)] = t.structure[a][b][k].get_str();
                        e["structure"] = sc;
                        if (t.structure_const[a][b] != 0) e["constant"] = t.structure_const[a][b].get_str();
                    }
                    br.push_back(e);
                }
            cl["brackets"] = br;
            cl["checks"] = checks_json(R.r, t.checks);
            res["closure"] = cl;
        }
    } else {
        ConstraintOptions co;
        co.max_iterations = R.max_iterations;
        auto led = lagrangian_algorithm(sys, co);
        for (const auto& s : R.p.symmetries) {
            if (s.kind == "charge")
                throw Error("not_regular", "symmetry '" + s.name + "': the inverse theorem needs a regular lagrangian");
            auto c = check_singular_noether(led, candidate_of(s, sys));
            list.push_back(certificate_json(R, s, c));
        }
        res["symmetries"] = list;
    }
    return res;
}

json family_json(const LiftedFamily& f) {
    json j;
    j["field"] = field_json(f.field);
    j["multipliers"] = f.multipliers;
    return j;
}

json constrain(Run& R) {
    json res;
    auto sys = system_of(R);
    res["regular"] = sys.regular;
    ConstraintOptions co;
    co.max_iterations = R.max_iterations;
    co.primaries = R.p.primaries;
    if (R.p.hamiltonian) co.hamiltonian = R.p.hamiltonian;
    co.Tstar = R.p.Tstar;
    bool ham = std::count(R.p.sides.begin(), R.p.sides.end(), "hamiltonian") > 0;
    bool lag = std::count(R.p.sides.begin(), R.p.sides.end(), "lagrangian") > 0;
    ConstraintLedger led = ham && lag ? constraint_algorithm(sys, co)
                           : ham      ? hamiltonian_algorithm(sys, co)
                                      : lagrangian_algorithm(sys, co);
    if (led.ham.done) {
        const auto& h = led.ham;
        json j;
        j["counts"] = h.counts();
        j["H"] = str(h.H);
        j["primaries"] = strs(h.primaries);
        json gens = json::array();
        for (const auto& g : h.generations) gens.push_back(strs(g.constraints));
        j["generations"] = gens;
        j["constraints"] = strs(h.constraints);
        std::vector<Expr> sc;
        for (int i : h.second_class) sc.push_back(h.constraints[i]);
        j["second_class"] = strs(sc);
        j["first_class"] = strs(h.first_class);
        j["first_class_primary"] = strs(h.first_class_primary);
        j["dynamics"] = family_json(h.dynamics);
        j["checks"] = checks_json(R.r, h.checks);
        res["hamiltonian"] = j;
    }
    if (led.lag.done) {
        const auto& l = led.lag;
        json j;
        json ker = json::array(), vert = json::array();
        for (const auto& K : l.kernel.kernel) ker.push_back(field_json(K));
        for (const auto& K : l.kernel.vertical) vert.push_back(field_json(K));
        j["kernel"] = ker;
        j["vertical_kernel"] = vert;
        j["type_II"] = l.kernel.type_II;
        j["counts"] = l.counts();
        json gens = json::array();
        for (const auto& g : l.generations) gens.push_back(strs(g.constraints));
        j["generations"] = gens;
        j["constraints"] = strs(l.constraints);
        j["solutions"] = family_json(l.solutions);
        j["second_order_global"] = l.second_order_global;
        if (l.second_order_global) j["second_order"] = family_json(l.second_order);
        else j["second_order_conditions"] = strs(l.second_order_conditions);
        std::vector<Check> checks = l.kernel.checks;
        checks.insert(checks.end(), l.checks.begin(), l.checks.end());
        j["checks"] = checks_json(R.r, checks);
        res["lagrangian"] = j;
    }
    if (led.ham.done && led.lag.done) res["correspondence"] = checks_json(R.r, check_correspondence(led));
    res["transcript"] = led.transcript;
    return res;
}

Expr hamiltonian_of(const Run& R) {
    if (R.p.hamiltonian) return *R.p.hamiltonian;
    if (R.p.lagrangian) {
        auto sys = system_of(R);
        if (sys.regular) return legendre(sys, R.p.Tstar).hamiltonian;
    }
    throw Error("hamiltonian_unavailable", "the problem needs a hamiltonian or a regular lagrangian");
}

json hj(Run& R) {
    json res;
    Expr H = hamiltonian_of(R);
    res["H"] = str(H);
    json list = json::array();
    for (const auto& s : R.p.hj) {
        HJCandidate c{R.p.Q, s.W, s.params, s.energy, s.assumptions, R.p.Tstar};
        auto cert = complete_integral_check(H, c, R.zo);
        json j;
        j["name"] = s.name;
        j["W"] = str(s.W);
        j["residual"] = str(hj_residual(H, c));
        j["complete"] = cert.complete;
        j["rank"] = cert.rank;
        j["determinant"] = str(cert.determinant);
        j["nondegenerate"] = verdict_json(R.r, cert.nondegenerate);
        j["verdict"] = cert.certified() ? "certified" : "not_certified";
        expectation(R.r, j, s.expect_certified, cert.certified());
        j["checks"] = checks_json(R.r, cert.checks, s.expect_certified);
        if (!s.characteristics.empty()) {
            auto ch = characteristics(H, c, s.characteristics, R.zo);
            json cj;
            cj["base"] = field_json(ch.base);
            cj["momenta"] = strs(ch.momenta);
            j["characteristics"] = cj;
        }
        list.push_back(j);
    }
    res["candidates"] = list;
    json syms = json::array();
    for (const auto& s : R.p.hj_symmetries) {
        auto cert = check_hj_symmetry(H, R.p.Tstar, {VectorField(R.p.Q, s.field), s.f}, R.zo);
        json j;
        j["name"] = s.name;
        j["charge"] = str(cert.charge);
        j["field"] = field_json(cert.X);
        j["verdict"] = cert.certified() ? "certified" : "not_certified";
        j["checks"] = checks_json(R.r, cert.checks);
        syms.push_back(j);
    }
    res["symmetries"] = syms;
    return res;
}

json numbers(const std::vector<real>& v) {
    json a = json::array();
    for (auto x : v) a.push_back(static_cast<double>(x));
    return a;
}

std::string csv_path(const std::string& base, const std::string& name, size_t count) {
    if (count == 1) return base;
    std::filesystem::path p(base);
    auto stem = p.stem().string() + "_" + name;
    return (p.parent_path() / (stem + p.extension().string())).string();
}

json integrate_cmd(Run& R) {
    json res;
    json list = json::array();
    IntegrateOptions io;
    io.tol = R.tol;
    io.seed = R.zo.seed;
    std::optional<LagrangianSystem> sys;
    auto lag_sys = [&]() -> const LagrangianSystem& {
        if (!sys) sys = system_of(R);
        if (!sys->regular) throw Error("not_regular", "integration needs a regular lagrangian");
        return *sys;
    };
    for (const auto& s : R.p.integrate) {
        VectorField X = s.system == "lagrangian" ? solve_second_order_field(lag_sys())
                                                 : PoissonStructure::canonical(R.p.Tstar).hamiltonian_field(hamiltonian_of(R));
        Params params(s.params.begin(), s.params.end());
        auto tr = s.method == "rk4" ? integrate_rk4(X, s.initial, s.t0, s.t1, s.steps, params, io.seed)
                                    : integrate(X, s.initial, s.t0, s.t1, params, io);
        json j;
        j["name"] = s.name;
        j["system"] = s.system;
        j["method"] = tr.method;
        j["t0"] = static_cast<double>(s.t0);
        j["t1"] = static_cast<double>(s.t1);
        j["steps"] = tr.steps;
        j["rejected"] = tr.rejected;
        json fin;
        for (size_t i = 0; i < tr.x.back().size(); ++i) fin[tr.chart->coord(i)] = static_cast<double>(tr.x.back()[i]);
        j["final"] = fin;
        if (!s.conserved.empty()) {
            auto d = verify_along(tr, s.conserved, params);
            json dl = json::array();
            for (size_t k = 0; k < s.conserved.size(); ++k) {
                json e;
                e["quantity"] = str(s.conserved[k]);
                e["drift"] = static_cast<double>(d.drift[k]);
                dl.push_back(e);
            }
            j["drift"] = dl;
            if (s.max_drift) {
                bool ok = d.max() < *s.max_drift;
                j["max_drift"] = static_cast<double>(*s.max_drift);
                j["within_bound"] = ok;
                if (!ok) R.r.failed = true;
            }
        }
        if (!R.csv.empty()) {
            auto path = csv_path(R.csv, s.name, R.p.integrate.size());
            std::ofstream out(path);
            if (!out) throw Error("io_error", "cannot write " + path);
            write_csv(tr, out);
            j["csv"] = path;
        }
        list.push_back(j);
    }
    res["trajectories"] = list;
    json pl = json::array();
    for (const auto& s : R.p.principal) {
        Params params(s.params.begin(), s.params.end()), point(s.point.begin(), s.point.end());
        auto pr = principal_function_check(lag_sys(), s.q0, s.q1, s.T, s.S, point, params, io);
        json j;
        j["name"] = s.name;
        j["S"] = str(s.S);
        j["initial_velocity"] = numbers(pr.v0);
        j["iterations"] = pr.iterations;
        j["action"] = static_cast<double>(pr.action);
        j["claimed"] = static_cast<double>(pr.claimed);
        j["difference"] = static_cast<double>(pr.difference);
        j["max_difference"] = static_cast<double>(s.max_difference);
        bool ok = pr.difference < s.max_difference;
        j["within_bound"] = ok;
        if (!ok) R.r.failed = true;
        pl.push_back(j);
    }
    res["principal"] = pl;
    return res;
}

int error_exit_code(const std::string& code) {
    if (code == "invalid_problem" || code == "syntax_error" || code == "io_error" || code == "usage") return 2;
    if (code == "no_fixed_point" || code == "shooting_failed") return 3;
    return 1;
}

// ---------------------------------------------------------------- text rendering

void render(std::ostream& os, const json& j, int indent) {
    std::string pad(indent, ' ');
    auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    auto flat = [](const json& a) {
        return std::all_of(a.begin(), a.end(), [](const json& v) { return v.is_primitive(); });
    };
    for (const auto& [k, v] : j.items()) {
        if (v.is_primitive()) {
            os << pad << k << ": " << scalar(v) << "\n";
        } else if (v.is_array() && flat(v)) {
            os << pad << k << ": [";
            for (size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << scalar(v[i]);
            os << "]\n";
        } else if (v.is_array()) {
            os << pad << k << ":\n";
            for (const auto& e : v) {
                if (e.is_object()) {
                    std::ostringstream item;
                    render(item, e, indent + 4);
                    auto text = item.str();
                    if (text.size() >= pad.size() + 4) text.replace(pad.size() + 2, 2, "- ");
                    os << text;
                } else if (e.is_array() && flat(e)) {
                    os << pad << "  - [";
                    for (size_t i = 0; i < e.size(); ++i) os << (i ? ", " : "") << scalar(e[i]);
                    os << "]\n";
                } else {
                    os << pad << "  - " << e.dump() << "\n";
                }
            }
        } else {
            os << pad << k << ":\n";
            render(os, v, indent + 2);
        }
    }
}

}  // namespace

Report run(const std::string& command, const Problem& p, const RunOptions& opts) {
    Report r;
    r.file = p.path;
    r.command = command;
    Run R{p, r, {}, opts.tol.value_or(p.tol), opts.max_iterations.value_or(p.max_iterations), opts.export_csv};
    R.zo.seed = opts.seed.value_or(p.seed);
    R.zo.n_points = p.zero_points;
    R.zo.assumptions = p.fiber_assumptions;
    try {
        if (command == "analyze") r.results = analyze(R);
        else if (command == "noether") r.results = noether(R);
        else if (command == "constrain") r.results = constrain(R);
        else if (command == "hj") r.results = hj(R);
        else if (command == "integrate") r.results = integrate_cmd(R);
        else throw Error("usage", "unknown command '" + command + "'");
    } catch (const Error& e) {
        r.error = command + ": " + e.code + ": " + e.what();
        r.exit_code = error_exit_code(e.code);
        return r;
    }
    r.exit_code = r.failed ? 1 : 0;
    return r;
}

std::string render_json(const Report& r) { return r.to_json().dump(2) + "\n"; }

std::string render_text(const Report& r) {
    std::ostringstream os;
    os << "file: " << r.file << "\n"
       << "command: " << r.command << "\n"
       << "status: " << r.status() << "\n";
    if (r.sampling) os << "warning: some verdicts rest on numerical sampling\n";
    if (!r.error.empty()) os << "error: " << r.error << "\n";
    if (r.results.is_object()) render(os, r.results, 0);
    return os.str();
}

namespace {

Report failed_load(const std::string& path, const std::string& command, const Error& e) {
    Report r;
    r.file = path;
    r.command = command;
    r.error = "load: " + e.code + ": " + e.what();
    r.exit_code = 2;
    return r;
}

Report load_and_run(const std::string& path, const std::string& command, const RunOptions& opts) {
    Problem p;
    try {
        p = load(path);
    } catch (const Error& e) {
        return failed_load(path, command, e);
    }
    std::string cmd = command.empty() ? p.command : command;
    if (cmd.empty()) return failed_load(path, command, Error("usage", "no command given and none designated in the file"));
    return run(cmd, p, opts);
}

}  // namespace

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Symbolic certification of Lagrangian and Hamiltonian systems"};
    std::string command, file, all, format = "text", csv;
    std::optional<uint64_t> seed;
    std::optional<double> tol;
    std::optional<int> max_iter;
    app.add_option("command", command, "analyze | noether | constrain | hj | integrate");
    app.add_option("file", file, "problem file (JSON)");
    app.add_option("--all", all, "run every *.json problem in a directory (command defaults to the designated one)");
    app.add_option("--format", format, "report format")->check(CLI::IsMember({"text", "json"}));
    app.add_option("--seed", seed, "seed for sampling and random function stand-ins");
    app.add_option("--tol", tol, "integration tolerance");
    app.add_option("--max-iter", max_iter, "iteration cap of the constraint algorithm");
    app.add_option("--export-csv", csv, "write integrated trajectories to this CSV path");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }
    if (!command.empty() && std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
        err << "usage error: unknown command '" << command << "'\n";
        return 2;
    }
    RunOptions opts;
    opts.seed = seed;
    if (tol) opts.tol = *tol;
    opts.max_iterations = max_iter;
    opts.export_csv = csv;

    std::vector<Report> reports;
    if (!all.empty()) {
        if (!file.empty() || !csv.empty()) {
            err << "usage error: --all takes no problem file and no --export-csv\n";
            return 2;
        }
        std::vector<std::string> paths;
        std::error_code ec;
        for (const auto& e : std::filesystem::directory_iterator(all, ec))
            if (e.path().extension() == ".json") paths.push_back(e.path().string());
        if (ec) {
            err << "usage error: cannot read directory " << all << "\n";
            return 2;
        }
        std::sort(paths.begin(), paths.end());
        std::vector<std::future<Report>> jobs;
        for (const auto& p : paths) jobs.push_back(std::async(std::launch::async, load_and_run, p, command, opts));
        for (auto& j : jobs) reports.push_back(j.get());
    } else {
        if (command.empty() || file.empty()) {
            err << "usage error: expected <command> <file> or --all <dir>\n";
            return 2;
        }
        reports.push_back(load_and_run(file, command, opts));
    }

    int code = 0;
    if (format == "json") {
        if (all.empty()) out << render_json(reports[0]);
        else {
            json a = json::array();
            for (const auto& r : reports) a.push_back(r.to_json());
            out << a.dump(2) << "\n";
        }
    }
    for (size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        if (format == "text") out << (i ? "\n" : "") << render_text(r);
        if (!r.error.empty()) err << r.file << ": " << r.error << "\n";
        code = std::max(code, r.exit_code);
    }
    return code;
}

}  // namespace mechsym::cli
