#include "mechsym/hamjac.hpp"

#include "mechsym/constraints.hpp"
#include "mechsym/linalg.hpp"

namespace mechsym {

namespace {

Check make_check(const std::string& name, const std::vector<Expr>& rs, const ZeroOptions& o, bool mandatory = true) {
    std::vector<ZeroVerdict> vs;
    std::string s;
    for (const auto& r : rs) {
        Expr n = normalize(r);
        vs.push_back(is_zero(n, o));
        if (!n.is_zero_literal()) s += (s.empty() ? "" : "; ") + to_string(n);
        if (vs.back().status == ZeroStatus::proved_nonzero) break;
    }
    return {name, combine(vs), s, mandatory};
}

Check make_check(const std::string& name, const Expr& r, const ZeroOptions& o, bool mandatory = true) {
    return make_check(name, std::vector<Expr>{r}, o, mandatory);
}

Mat jacobian(const std::vector<Expr>& fs, const std::vector<std::string>& xs) {
    Mat J;
    for (const auto& f : fs) {
        Vec row;
        for (const auto& x : xs) row.push_back(differentiate(f, x));
        J.push_back(row);
    }
    return J;
}

}  // namespace

// ---------------------------------------------------------------- candidates

ChartPtr HJCandidate::cotangent() const { return Tstar ? Tstar : Chart::cotangent(Q); }

ZeroOptions HJCandidate::options(ZeroOptions base) const {
    base = chart_options(cotangent(), base);
    for (const auto& a : assumptions) base.assumptions.push_back(a);
    return base;
}

std::map<std::string, Expr> HJCandidate::momenta() const {
    auto Ts = cotangent();
    size_t n = Q->dim();
    std::map<std::string, Expr> m;
    for (size_t a = 0; a < n; ++a) m[Ts->coord(n + a)] = differentiate(W, Q->coord(a));
    return m;
}

Expr hj_residual(const Expr& H, const HJCandidate& c) {
    return normalize(substitute(H, c.momenta()) - Expr::sym(c.energy));
}

bool HJCertificate::certified() const {
    if (overall(checks) == ZeroStatus::proved_nonzero) return false;
    return nondegenerate.status == ZeroStatus::proved_nonzero;
}

HJCertificate complete_integral_check(const Expr& H, const HJCandidate& c, const ZeroOptions& opts) {
    auto o = c.options(opts);
    auto Ts = c.cotangent();
    size_t n = c.Q->dim();
    HJCertificate cert;
    cert.complete = c.params.size() == n;
    if (c.params.size() > n) throw Error("too_many_parameters", "a complete integral has at most dim Q parameters");

    cert.checks.push_back(make_check("residual", hj_residual(H, c), o));

    // d2W/dq du
    std::vector<Expr> dW;
    for (const auto& q : c.Q->coords()) dW.push_back(differentiate(c.W, q));
    Mat B = jacobian(dW, c.params);
    bool sampled = false;
    cert.rank = rank(B, plain_zero_test(o), &sampled);
    if (cert.complete && n > 0) {
        cert.determinant = normalize(determinant(B));
        cert.nondegenerate = is_zero(cert.determinant, o);
    } else {
        // partial integral: full column rank plays the role of the determinant
        cert.determinant = Expr(static_cast<long>(cert.rank));
        cert.nondegenerate.status = cert.rank == static_cast<int>(c.params.size()) ? ZeroStatus::proved_nonzero
                                                                                  : ZeroStatus::proved_zero;
    }

    // f_j = p_j - dW/dq^j pairwise commute, and {f_j, H} vanishes on their common zero set
    auto P = PoissonStructure::canonical(Ts);
    std::vector<Expr> f;
    for (size_t a = 0; a < n; ++a) f.push_back(Ts->x(n + a) - dW[a]);
    std::vector<Expr> inv, flow;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) inv.push_back(P.bracket(f[i], f[j]));
    auto onW = c.momenta();
    for (size_t j = 0; j < n; ++j) flow.push_back(substitute(P.bracket(f[j], H), onW));
    cert.checks.push_back(make_check("involution", inv, o));
    cert.checks.push_back(make_check("invariance", flow, o));
    return cert;
}

Characteristics characteristics(const Expr& H, const HJCandidate& c, const std::map<std::string, Expr>& values,
                                const ZeroOptions& opts) {
    auto o = c.options(opts);
    if (is_zero(hj_residual(H, c), o).status == ZeroStatus::proved_nonzero)
        throw Error("uncertified_candidate", "W does not solve the Hamilton-Jacobi equation");
    auto Ts = c.cotangent();
    size_t n = c.Q->dim();
    auto onW = c.momenta();
    Characteristics ch;
    ch.base = VectorField::zero(c.Q);
    for (size_t a = 0; a < n; ++a) {
        Expr v = substitute(differentiate(H, Ts->coord(n + a)), onW);
        ch.base.c[a] = normalize(substitute(v, values));
        ch.momenta.push_back(normalize(substitute(onW.at(Ts->coord(n + a)), values)));
    }
    return ch;
}

// ---------------------------------------------------------------- symmetries

HJSymmetryCertificate check_hj_symmetry(const Expr& H, const ChartPtr& Ts, const HJSymmetryCandidate& s,
                                        const ZeroOptions& opts) {
    auto o = chart_options(Ts, opts);
    size_t n = Ts->base_dim();
    require_same_chart(s.X0.chart, Ts->base());
    HJSymmetryCertificate cert;
    auto P = PoissonStructure::canonical(Ts);
    // canonical lift X^a d/dq^a - p_b (d_a X^b) d/dp_a
    VectorField lift = VectorField::zero(Ts);
    Expr F = s.f;
    for (size_t a = 0; a < n; ++a) {
        lift.c[a] = s.X0.c[a];
        F += Ts->x(n + a) * s.X0.c[a];
        Expr w(0);
        for (size_t b = 0; b < n; ++b) w -= Ts->x(n + b) * differentiate(s.X0.c[b], Ts->coord(a));
        lift.c[n + a] = w;
    }
    cert.X = lift + P.hamiltonian_field(s.f);
    cert.charge = normalize(F);
    auto XF = P.hamiltonian_field(cert.charge);
    std::vector<Expr> gen;
    for (size_t i = 0; i < 2 * n; ++i) gen.push_back(cert.X.c[i] - XF.c[i]);
    cert.checks.push_back(make_check("generator", gen, o));
    cert.checks.push_back(make_check("conservation", P.bracket(cert.charge, H), o));
    return cert;
}

GeneralizedHJCertificate generalized_hj_check(const PoissonStructure& P, const Expr& H, const Expr& E,
                                              const std::vector<Expr>& levels, const std::vector<Expr>& commutants,
                                              const ZeroOptions& opts) {
    const auto& ch = P.chart();
    auto o = chart_options(ch, opts);
    GeneralizedHJCertificate cert;
    std::vector<Expr> fs{normalize(H - E)};
    for (const auto& l : levels) fs.push_back(normalize(l));
    cert.count = static_cast<int>(fs.size());
    cert.rank = rank(jacobian(fs, ch->coords()), plain_zero_test(o));

    auto mk = [](const std::string& name, bool ok, const std::string& why) {
        Check c{name, {}, ok ? "" : why, true};
        c.verdict.status = ok ? ZeroStatus::proved_zero : ZeroStatus::proved_nonzero;
        c.verdict.tier = "count";
        return c;
    };
    cert.checks.push_back(mk("dimension", 2 * fs.size() == ch->dim(),
                             std::to_string(fs.size()) + " level functions in dimension " + std::to_string(ch->dim())));
    cert.checks.push_back(mk("independence", cert.rank == cert.count,
                             "generic rank " + std::to_string(cert.rank) + " < " + std::to_string(cert.count)));

    ConstraintSurface S(ch, fs, o);
    for (size_t i = 0; i < fs.size(); ++i)
        for (size_t j = i + 1; j < fs.size(); ++j) {
            Expr b = S.reduce(P.bracket(fs[i], fs[j]));
            auto v = S.test(b);
            cert.checks.push_back({"involution_" + std::to_string(i) + "_" + std::to_string(j), v,
                                   b.is_zero_literal() ? "" : to_string(b), true});
        }
    for (size_t k = 0; k < commutants.size(); ++k)
        cert.checks.push_back(make_check("commutant_" + std::to_string(k), P.bracket(commutants[k], H), o));
    return cert;
}

// ---------------------------------------------------------------- reduction by cyclic coordinates

CyclicReduction separate_cyclic(const Expr& H, const ChartPtr& Ts, const AdaptedChart& chart,
                                const std::vector<CyclicSymmetry>& cyclic, const ZeroOptions& opts) {
    auto o = chart_options(Ts, opts);
    const auto& Q = Ts->base();
    size_t n = Q->dim();
    if (chart.coords.size() != n || chart.forward.size() != n || chart.inverse.size() != n)
        throw Error("dimension_mismatch", "adapted chart must have one expression per coordinate");
    CyclicReduction red;
    red.chart = chart;
    red.cyclic = cyclic;

    auto Qn = Chart::make(chart.coords, Q->assumptions());
    red.adapted = Chart::cotangent(Qn, chart.momenta);
    std::map<std::string, Expr> to_old, to_new;
    for (size_t i = 0; i < n; ++i) {
        to_old[chart.coords[i]] = chart.inverse[i];
        to_new[Q->coord(i)] = chart.inverse[i];
    }
    // forward o inverse = identity
    std::vector<Expr> id;
    for (size_t i = 0; i < n; ++i) id.push_back(substitute(chart.forward[i], to_new) - Qn->x(i));
    red.checks.push_back(make_check("inverse", id, chart_options(Qn, opts)));

    // cotangent lift: p_old_i = (d new_j / d old_i) p_new_j, written in the new coordinates
    std::map<std::string, Expr> p_old;
    for (size_t i = 0; i < n; ++i) {
        Expr s(0);
        for (size_t j = 0; j < n; ++j)
            s += substitute(differentiate(chart.forward[j], Q->coord(i)), to_new) * red.adapted->x(n + j);
        p_old[Ts->coord(n + i)] = s;
    }
    std::map<std::string, Expr> all = to_new;
    for (auto& [k, v] : p_old) all[k] = v;
    red.H_adapted = normalize(substitute(H, all));

    std::map<std::string, Expr> fix;
    std::vector<std::string> keep;
    std::set<std::string> cyc;
    for (const auto& cs : cyclic) {
        size_t a = Qn->index(cs.coordinate);
        for (size_t j = 0; j < n; ++j) {
            Expr push = normalize(substitute(cs.X0(chart.forward[j]), to_new));
            Expr want = j == a ? Expr(1) : Expr(0);
            if (!is_zero(push - want, chart_options(Qn, opts)).zero())
                throw Error("not_adapted", "the symmetry does not push forward to d/d" + cs.coordinate);
        }
        auto sc = check_hj_symmetry(H, Ts, {cs.X0, Expr(0)}, opts);
        red.checks.push_back({"symmetry_" + cs.coordinate, sc.checks.back().verdict, sc.checks.back().residual, true});
        red.checks.push_back(make_check("cyclic_" + cs.coordinate, differentiate(red.H_adapted, cs.coordinate), o));
        fix[red.adapted->coord(n + a)] = Expr::sym(cs.constant);
        cyc.insert(cs.coordinate);
    }
    std::vector<std::string> qs, ps;
    for (size_t i = 0; i < n; ++i)
        if (!cyc.count(chart.coords[i])) {
            qs.push_back(chart.coords[i]);
            ps.push_back(red.adapted->coord(n + i));
        }
    red.reduced = Chart::cotangent(Chart::make(qs, Q->assumptions()), ps);
    red.H_reduced = normalize(substitute(red.H_adapted, fix));
    return red;
}

Expr CyclicReduction::recompose(const Expr& W_reduced) const {
    Expr W = W_reduced;
    for (const auto& cs : cyclic) W += Expr::sym(cs.coordinate) * Expr::sym(cs.constant);
    std::map<std::string, Expr> to_old;
    for (size_t i = 0; i < chart.coords.size(); ++i) to_old[chart.coords[i]] = chart.forward[i];
    return normalize(substitute(W, to_old));
}

Check recomposition_check(const Expr& H, const ChartPtr& Ts, const CyclicReduction& red, const Expr& W_reduced,
                          const std::string& energy, const ZeroOptions& opts) {
    HJCandidate full{Ts->base(), red.recompose(W_reduced), {}, energy, opts.assumptions, Ts};
    HJCandidate part{red.reduced->base(), W_reduced, {}, energy, opts.assumptions, red.reduced};
    std::map<std::string, Expr> to_new;
    for (size_t i = 0; i < red.chart.coords.size(); ++i) to_new[Ts->base()->coord(i)] = red.chart.inverse[i];
    Expr lhs = substitute(hj_residual(H, full), to_new);
    Expr rhs = hj_residual(red.H_reduced, part);
    return make_check("recomposition", lhs - rhs, chart_options(red.adapted, opts));
}

}  // namespace mechsym
