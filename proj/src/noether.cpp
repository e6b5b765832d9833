#include "mechsym/noether.hpp"

namespace mechsym {

const char* kind_name(SymmetryKind k) {
    switch (k) {
        case SymmetryKind::newtonian: return "newtonian";
        case SymmetryKind::general: return "general";
        case SymmetryKind::newtonoid: return "newtonoid";
    }
    return "?";
}

namespace {

Check make_check(const std::string& name, const Expr& r, const ZeroOptions& o, bool mandatory = true) {
    Expr n = normalize(r);
    return {name, is_zero(n, o), n.is_zero_literal() ? "" : to_string(n), mandatory};
}

Check make_check(const std::string& name, const KForm& r, const ZeroOptions& o, bool mandatory = true) {
    return {name, is_zero(r, o), r.c.empty() ? "" : to_string(r), mandatory};
}

Check make_check(const std::string& name, const VectorField& r, const ZeroOptions& o, bool mandatory = true) {
    auto v = is_zero(r, o);
    std::string s = to_string(r);
    return {name, v, s == "0" ? "" : s, mandatory};
}

Check make_check(const std::string& name, const std::vector<Expr>& rs, const ZeroOptions& o, bool mandatory = true) {
    std::vector<ZeroVerdict> vs;
    std::string s;
    for (const auto& r : rs) {
        Expr n = normalize(r);
        vs.push_back(is_zero(n, o));
        if (!n.is_zero_literal()) s += (s.empty() ? "" : "; ") + to_string(n);
    }
    return {name, combine(vs), s, mandatory};
}

void finish(NoetherCertificate& c, const ZeroOptions& o) {
    c.verdict = overall(c.checks) == ZeroStatus::proved_nonzero ? CertificateVerdict::not_certified
                                                                : CertificateVerdict::certified;
    if (!c.charge.is_zero_literal() && is_zero(c.charge, o).proved()) c.charge = Expr(0);
    if (c.charge.is_zero_literal()) c.diagnosis.push_back("degenerate charge: phi = 0");
    for (const auto& k : c.checks)
        if (!k.ok()) c.diagnosis.push_back(k.name + " fails" + (k.residual.empty() ? "" : ": " + k.residual));
}

// The Noether relations shared by every kind: charge, Hamiltonicity, commutation, energy.
void common_checks(NoetherCertificate& c, const LagrangianSystem& sys, const VectorField& D) {
    const auto& X = c.field;
    c.charge = interior(X, sys.theta).value() - c.candidate.u;
    auto iw = interior(X, sys.omega);
    c.checks.push_back(make_check("hamiltonicity", iw - d(sys.T, c.charge), sys.opts));
    c.checks.push_back(make_check("commutator", bracket(X, D), sys.opts));
    c.checks.push_back(make_check("energy_invariance", X(sys.energy), sys.opts));
    c.checks.push_back(make_check("charge_conservation", D(c.charge), sys.opts));
    c.checks.push_back(make_check("closedness", d(iw), sys.opts, false));
}

}  // namespace

NoetherCertificate check_newtonian(const LagrangianSystem& sys, const SymmetryCandidate& cand) {
    require_same_chart(cand.X.chart, sys.Q);
    NoetherCertificate c;
    c.candidate = cand;
    c.candidate.u = normalize(cand.u);
    auto D = solve_second_order_field(sys);
    c.field = tangent_lift(cand.X, sys.T);
    std::vector<Expr> du;
    for (const auto& v : sys.T->fiber_coords()) du.push_back(differentiate(c.candidate.u, v));
    c.checks.push_back(make_check("gauge_basic", du, sys.opts));
    c.checks.push_back(make_check("lagrangian_condition", c.field(sys.L) - D(c.candidate.u), sys.opts));
    common_checks(c, sys, D);
    finish(c, sys.opts);
    return c;
}

VectorField newtonoid_projection(const VectorField& X, const VectorField& D) {
    return X + soldering(bracket(D, X));
}

NoetherCertificate check_newtonoid(const LagrangianSystem& sys, const SymmetryCandidate& cand) {
    require_same_chart(cand.X.chart, sys.T);
    NoetherCertificate c;
    c.candidate = cand;
    c.candidate.u = normalize(cand.u);
    auto D = solve_second_order_field(sys);
    c.field = newtonoid_projection(cand.X, D);
    const auto& u = c.candidate.u;
    c.checks.push_back(make_check("lagrangian_condition", c.field(sys.L) - D(u), sys.opts));
    std::vector<Expr> vert;
    size_t n = sys.n();
    for (size_t a = 0; a < n; ++a) {
        auto V = VectorField::coordinate(sys.T, n + a);
        vert.push_back(soldering(bracket(V, c.field))(sys.L) - V(u));
    }
    c.checks.push_back(make_check("vertical_condition", vert, sys.opts));
    common_checks(c, sys, D);
    finish(c, sys.opts);
    return c;
}

NoetherCertificate inverse_noether(const LagrangianSystem& sys, const Expr& phi0) {
    auto D = solve_second_order_field(sys);
    Expr phi = normalize(phi0);
    auto inv = is_zero(D(phi), sys.opts);
    if (!inv.zero()) throw Error("not_invariant", "the function is not a constant of motion: L_D phi != 0");
    Mat W = sys.omega.matrix();
    size_t m = W.size();
    Mat A(m, Vec(m));
    for (size_t j = 0; j < m; ++j)
        for (size_t i = 0; i < m; ++i) A[j][i] = W[i][j];
    auto dphi = d(sys.T, phi).components();
    auto r = solve_linear(A, dphi, sys.zero_test());
    if (r.rank < static_cast<int>(m)) throw Error("not_regular", "omega_L is degenerate");
    NoetherCertificate c;
    c.field = VectorField(sys.T, r.particular);
    c.candidate.X = c.field;
    c.candidate.kind = SymmetryKind::newtonoid;
    c.candidate.u = interior(c.field, sys.theta).value() - phi;
    c.checks.push_back(make_check("lagrangian_condition", c.field(sys.L) - D(c.candidate.u), sys.opts));
    c.checks.push_back(make_check("gauge_exactness", d(sys.T, c.candidate.u) - lie(c.field, sys.theta), sys.opts));
    common_checks(c, sys, D);
    finish(c, sys.opts);
    c.charge = phi;
    return c;
}

ClosureTable bracket_closure(const LagrangianSystem& sys, const std::vector<NoetherCertificate>& certs) {
    ClosureTable t;
    size_t k = certs.size();
    t.size = k;
    t.brackets.assign(k, std::vector<Expr>(k, Expr(0)));
    for (size_t a = 0; a < k; ++a)
        for (size_t b = 0; b < k; ++b)
            if (a != b) t.brackets[a][b] = certs[b].field(certs[a].charge);
    std::vector<Expr> basis;
    for (const auto& c : certs) basis.push_back(c.charge);
    basis.push_back(Expr(1));
    t.closes = true;
    t.structure.assign(k, std::vector<std::vector<Rational>>(k, std::vector<Rational>(k, Rational(0))));
    t.structure_const.assign(k, std::vector<Rational>(k, Rational(0)));
    for (size_t a = 0; a < k; ++a)
        for (size_t b = 0; b < k; ++b) {
            if (a == b) continue;
            if (a < b) {
                auto lhs = interior(bracket(certs[a].field, certs[b].field), sys.omega);
                t.checks.push_back(make_check("closure_" + std::to_string(a + 1) + "_" + std::to_string(b + 1),
                                              lhs - d(sys.T, t.brackets[b][a]), sys.opts));
            }
            auto m = match_coefficients(t.brackets[a][b], basis);
            if (!m) {
                t.closes = false;
                continue;
            }
            for (size_t c = 0; c < k; ++c) t.structure[a][b][c] = (*m)[c];
            t.structure_const[a][b] = (*m)[k];
        }
    return t;
}

std::optional<Expr> search_gauge(const LagrangianSystem& sys, const VectorField& X) {
    auto D = solve_second_order_field(sys);
    auto XN = X.chart == sys.T ? X : tangent_lift(X, sys.T);
    std::vector<Expr> basis, monos;
    for (const auto& mq : monomials(sys.Q->coords(), 2))
        for (const auto& mv : monomials(sys.T->fiber_coords(), 2)) {
            monos.push_back(mq * mv);
            basis.push_back(D(mq * mv));
        }
    auto k = match_coefficients(XN(sys.L), basis);
    if (!k) return std::nullopt;
    std::vector<Expr> ts;
    for (size_t i = 0; i < monos.size(); ++i)
        if (sgn((*k)[i]) != 0) ts.push_back(Expr((*k)[i]) * monos[i]);
    return sum(ts);
}

NoetherCertificate check_singular_noether(const ConstraintLedger& led, const SymmetryCandidate& cand) {
    if (!led.lag.done) throw Error("ledger_missing", "the Lagrangian side of the constraint ledger is missing");
    const auto& sys = led.sys;
    NoetherCertificate c;
    c.candidate = cand;
    c.candidate.u = normalize(cand.u);
    const auto& u = c.candidate.u;
    VectorField X = cand.X.chart == sys.Q ? tangent_lift(cand.X, sys.T) : cand.X;
    require_same_chart(X.chart, sys.T);

    // symmetry of the Lagrangian for a generic second-order field
    auto G = second_order_field(sys.T, fresh_accelerations(sys.T));
    auto XG = newtonoid_projection(X, G);
    c.checks.push_back(make_check("lagrangian_condition", XG(sys.L) - G(u), sys.opts));
    c.charge = normalize(interior(XG, sys.theta).value() - u);

    // relations on the final set for every solution of the ledger
    const auto& D = led.lag.second_order_global ? led.lag.second_order.field : led.lag.solutions.field;
    auto S = led.lagrangian_surface();
    c.field = newtonoid_projection(X, D);
    const auto& XD = c.field;
    auto on_set = [&](const std::string& name, const std::vector<Expr>& rs, bool mandatory = true) {
        std::vector<ZeroVerdict> vs;
        std::string s;
        for (const auto& r : rs) {
            Expr n = S.reduce(r);
            vs.push_back(S.test(n));
            if (!vs.back().proved()) s += (s.empty() ? "" : "; ") + to_string(n);
        }
        c.checks.push_back({name, combine(vs), s, mandatory});
    };
    std::vector<Expr> kin;
    if (led.ham.done)
        for (const auto& f : led.ham.first_class_primary) kin.push_back(constraint_vertical(led, f)(c.charge));
    on_set("kernel_invariance", kin);
    on_set("hamiltonicity", (interior(XD, sys.omega) - d(sys.T, c.charge)).components());
    on_set("energy_invariance", {XD(sys.energy)});
    on_set("charge_invariance", {XD(c.charge)});
    std::vector<Expr> tg;
    for (const auto& psi : led.lag.constraints) tg.push_back(XD(psi));
    on_set("tangency", tg);
    on_set("charge_conservation", {D(c.charge)}, false);
    c.verdict = overall(c.checks) == ZeroStatus::proved_nonzero ? CertificateVerdict::not_certified
                                                                : CertificateVerdict::certified;
    for (const auto& k : c.checks)
        if (!k.ok()) c.diagnosis.push_back(k.name + " fails" + (k.residual.empty() ? "" : ": " + k.residual));
    return c;
}

}  // namespace mechsym
