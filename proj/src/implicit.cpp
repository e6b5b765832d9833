#include "mechsym/implicit.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace mechsym {

ImplicitODE::ImplicitODE(ChartPtr ambient, std::vector<Expr> level, ODEOrder ord)
    : chart(std::move(ambient)), psi(std::move(level)), order(ord) {
    bool ok = ord == ODEOrder::first ? chart->role() == BundleRole::tangent
                                     : chart->role() == BundleRole::tangent_of_tangent;
    if (!ok) throw Error("chart_mismatch", "implicit equation chart does not match the declared order");
    if (psi.empty()) throw Error("invalid_equation", "an implicit equation needs at least one level function");
    for (auto& p : psi) {
        p = normalize(p);
        if (p.is_num()) throw Error("invalid_equation", "level functions must be nonconstant");
    }
}

ChartPtr ImplicitODE::base() const { return order == ODEOrder::first ? chart->base() : chart->base()->base(); }

std::vector<Expr> ImplicitODE::generators() const {
    std::vector<Expr> g = psi;
    if (order == ODEOrder::second) {
        size_t n = base()->dim();
        for (size_t j = 0; j < n; ++j) g.push_back(chart->x(2 * n + j) - chart->x(n + j));
    }
    return g;
}

ImplicitODE ImplicitODE::graph(const VectorField& Gamma, const ChartPtr& T) {
    require_same_chart(T->base(), Gamma.chart);
    size_t n = Gamma.chart->dim();
    std::vector<Expr> psi;
    for (size_t a = 0; a < n; ++a) psi.push_back(T->x(n + a) - Gamma[a]);
    return ImplicitODE(T, psi);
}

const char* status_name(SymmetryStatus s) {
    switch (s) {
        case SymmetryStatus::symmetry: return "symmetry";
        case SymmetryStatus::not_symmetry: return "not_symmetry";
        case SymmetryStatus::inconclusive: return "inconclusive";
    }
    return "?";
}

const char* status_name(SubmanifoldStatus s) {
    switch (s) {
        case SubmanifoldStatus::lagrangian: return "lagrangian";
        case SubmanifoldStatus::nonisotropic: return "nonisotropic";
        case SubmanifoldStatus::rank_deficient: return "rank_deficient";
        case SubmanifoldStatus::wrong_dimension: return "wrong_dimension";
    }
    return "?";
}

namespace {

std::vector<Expr> factors(const Expr& m) {
    if (m.kind() == Kind::Mul) return m.args();
    return {m};
}

bool is_var_power(const Expr& f, const std::set<std::string>& vars) {
    if (f.kind() == Kind::Sym) return vars.count(f.name()) > 0;
    if (f.kind() == Kind::Pow && f.args()[0].kind() == Kind::Sym && vars.count(f.args()[0].name())) {
        const Expr& e = f.args()[1];
        return e.is_num() && e.value().get_den() == 1 && sgn(e.value()) > 0;
    }
    return false;
}

// Non-polynomial cofactors of the target's terms (products of the factors that are not
// nonnegative integer powers of the variables).
std::vector<Expr> cofactors(const Expr& t, const std::set<std::string>& vars) {
    std::map<Expr, bool, ExprLess> seen{{Expr(1), true}};
    std::vector<Expr> out{Expr(1)};
    for (const auto& term : terms(t)) {
        std::vector<Expr> rest;
        for (const auto& f : factors(term.mono))
            if (!is_var_power(f, vars)) rest.push_back(f);
        Expr c = product(rest);
        if (seen.emplace(c, true).second) out.push_back(c);
    }
    return out;
}

std::optional<std::vector<Expr>> ansatz(const Expr& t, const std::vector<Expr>& gens, const std::set<std::string>& vars,
                                        int max_degree) {
    std::vector<std::string> vs(vars.begin(), vars.end());
    auto cof = cofactors(t, vars);
    for (int deg = 0; deg <= max_degree; ++deg) {
        auto monos = monomials(vs, deg);
        if (monos.size() * cof.size() * gens.size() > 4000) break;
        std::vector<Expr> basis, mult;
        for (const auto& c : cof)
            for (const auto& m : monos) mult.push_back(c * m);
        for (const auto& g : gens)
            for (const auto& m : mult) basis.push_back(m * g);
        auto k = match_coefficients(t, basis);
        if (!k) continue;
        std::vector<Expr> lam;
        size_t idx = 0;
        for (size_t a = 0; a < gens.size(); ++a) {
            std::vector<Expr> ts;
            for (const auto& m : mult) {
                if (sgn((*k)[idx]) != 0) ts.push_back(Expr((*k)[idx]) * m);
                ++idx;
            }
            lam.push_back(sum(ts));
        }
        return lam;
    }
    return std::nullopt;
}

ZeroVerdict on_manifold_sampling(const Expr& t, const std::vector<Expr>& gens, const ZeroOptions& opts,
                                 const MembershipOptions& mo) {
    std::set<std::string> fs = free_symbols(t);
    for (const auto& g : gens)
        for (const auto& s : free_symbols(g)) fs.insert(s);
    std::vector<std::string> vars(fs.begin(), fs.end());
    size_t nv = vars.size(), ng = gens.size();
    PointSampler sampler(vars, opts);
    const FunctionSampler* fns = &sampler.functions();
    std::vector<Compiled> G, J, parts, assume;
    for (const auto& g : gens) {
        G.emplace_back(g, vars, fns);
        for (const auto& v : vars) J.emplace_back(differentiate(g, v), vars, fns);
    }
    if (t.kind() == Kind::Add)
        for (const auto& a : t.args()) parts.emplace_back(a, vars, fns);
    else
        parts.emplace_back(t, vars, fns);
    std::vector<Assumption::Kind> kinds;
    for (const auto& a : opts.assumptions) {
        auto as = free_symbols(a.expr);
        bool relevant = !as.empty();
        for (const auto& s : as)
            if (!fs.count(s)) relevant = false;
        if (!relevant) continue;
        assume.emplace_back(a.expr, vars, fns);
        kinds.push_back(a.kind);
    }

    ZeroVerdict v;
    v.tier = "on_manifold_sampling";
    int good = 0, starts = 0;
    std::vector<real> x;
    std::vector<Rational> ex;
    while (good < mo.points && starts < mo.points * 25) {
        if (!sampler.next(x, ex)) break;
        ++starts;
        bool ok = false;
        for (int it = 0; it < mo.newton_iters; ++it) {
            Eigen::VectorXd r(static_cast<long>(ng));
            Eigen::MatrixXd Jm(static_cast<long>(ng), static_cast<long>(nv));
            bool dom = true;
            for (size_t i = 0; i < ng && dom; ++i) {
                auto gv = G[i].eval(x);
                if (!gv) dom = false;
                else r(static_cast<long>(i)) = static_cast<double>(*gv);
                for (size_t j = 0; j < nv && dom; ++j) {
                    auto jv = J[i * nv + j].eval(x);
                    if (!jv) dom = false;
                    else Jm(static_cast<long>(i), static_cast<long>(j)) = static_cast<double>(*jv);
                }
            }
            if (!dom) break;
            if (r.norm() < mo.newton_tol) {
                ok = true;
                break;
            }
            Eigen::MatrixXd JJ = Jm * Jm.transpose();
            Eigen::VectorXd step = Jm.transpose() * JJ.completeOrthogonalDecomposition().solve(r);
            for (size_t j = 0; j < nv; ++j) x[j] -= static_cast<real>(step(static_cast<long>(j)));
        }
        if (!ok) continue;
        bool admissible = true;
        for (size_t k = 0; k < assume.size() && admissible; ++k) {
            auto a = assume[k].eval(x);
            if (!a) admissible = false;
            else if (kinds[k] == Assumption::positive ? *a <= 1e-8L : std::fabs(*a) <= 1e-8L)
                admissible = false;
        }
        if (!admissible) continue;
        real total = 0, scale = 0;
        bool dom = true;
        for (const auto& p : parts) {
            auto pv = p.eval(x);
            if (!pv) {
                dom = false;
                break;
            }
            total += *pv;
            scale += std::fabs(*pv);
        }
        if (!dom) continue;
        ++good;
        if (std::fabs(total) / std::max<real>(1, scale) > 1e-7L) {
            v.status = ZeroStatus::proved_nonzero;
            for (size_t j = 0; j < nv; ++j) v.witness[vars[j]] = Rational(static_cast<double>(x[j]));
            v.witness_value = total;
            return v;
        }
    }
    if (good == 0) throw Error("sampling_failed", "no on-manifold sample points were found");
    v.status = ZeroStatus::probably_zero;
    return v;
}

}  // namespace

Membership ideal_member(const Expr& target, const std::vector<Expr>& gens, const ZeroOptions& opts,
                        const MembershipOptions& mo) {
    Membership m;
    Expr t = normalize(target);
    auto z = is_zero(t, opts);
    if (z.proved()) {
        m.verdict = z;
        m.tier = "normal_form";
        m.multipliers.assign(gens.size(), Expr(0));
        return m;
    }
    std::set<std::string> vars = free_symbols(t);
    for (const auto& g : gens)
        for (const auto& s : free_symbols(g)) vars.insert(s);
    if (auto lam = ansatz(t, gens, vars, mo.max_degree)) {
        m.verdict.status = ZeroStatus::proved_zero;
        m.verdict.tier = m.tier = "ideal_ansatz";
        m.multipliers = *lam;
        return m;
    }
    m.verdict = on_manifold_sampling(t, gens, opts, mo);
    m.tier = m.verdict.tier;
    return m;
}

MotionVerdict check_constant_of_motion(const ImplicitODE& Z, const Expr& f, const ZeroOptions& opts,
                                       const MembershipOptions& mo) {
    for (const auto& v : Z.chart->fiber_coords())
        if (f.depends_on(v)) throw Error("chart_mismatch", "the function must live on the base manifold");
    MotionVerdict r;
    r.dN_f = dN(normalize(f), Z.chart);
    r.membership = ideal_member(r.dN_f, Z.generators(), chart_options(Z.chart, opts), mo);
    return r;
}

SymmetryVerdict check_symmetry(const ImplicitODE& Z, const VectorField& X, const ZeroOptions& opts,
                               const MembershipOptions& mo) {
    require_same_chart(X.chart, Z.base());
    VectorField XN = tangent_lift(X, Z.order == ODEOrder::first ? Z.chart : Z.chart->base());
    if (Z.order == ODEOrder::second) XN = tangent_lift(XN, Z.chart);
    auto gens = Z.generators();
    auto o = chart_options(Z.chart, opts);
    SymmetryVerdict v;
    bool all = true, any_bad = false;
    for (const auto& g : gens) {
        v.residuals.push_back(XN(g));
        v.rows.push_back(ideal_member(v.residuals.back(), gens, o, mo));
        const auto& m = v.rows.back();
        v.A.push_back(m.multipliers.empty() ? Vec(gens.size(), Expr(0)) : m.multipliers);
        if (!m.verdict.proved()) all = false;
        if (m.verdict.status == ZeroStatus::proved_nonzero) any_bad = true;
    }
    v.residuals.resize(Z.psi.size());
    v.status = any_bad ? SymmetryStatus::not_symmetry : all ? SymmetryStatus::symmetry : SymmetryStatus::inconclusive;
    return v;
}

SubmanifoldVerdict check_lagrangian_submanifold(const ParametrizedMap& P, const ZeroOptions& opts) {
    SubmanifoldVerdict v;
    auto o = chart_options(P.params, opts);
    v.pulled = pullback(P.omega, P.params, P.images);
    v.isotropic = is_zero(v.pulled, o);
    Mat Jm;
    for (const auto& y : P.images) {
        Vec row;
        for (const auto& p : P.params->coords()) row.push_back(differentiate(y, p));
        Jm.push_back(row);
    }
    v.rank = rank(Jm, plain_zero_test(o));
    size_t k = P.params->dim();
    if (2 * k != P.omega.chart->dim()) v.status = SubmanifoldStatus::wrong_dimension;
    else if (v.rank < static_cast<int>(k)) v.status = SubmanifoldStatus::rank_deficient;
    else if (!v.isotropic.zero()) v.status = SubmanifoldStatus::nonisotropic;
    else v.status = SubmanifoldStatus::lagrangian;
    return v;
}

}  // namespace mechsym
