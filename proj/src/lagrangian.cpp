#include "mechsym/lagrangian.hpp"

namespace mechsym {

namespace {

ChartPtr tangent_chart(const ChartPtr& chart) {
    if (chart->role() == BundleRole::base) return Chart::tangent(chart);
    if (chart->role() != BundleRole::tangent) throw Error("chart_mismatch", "a Lagrangian lives on a tangent bundle");
    return chart;
}

std::map<std::string, Expr> zero_velocities(const ChartPtr& T) {
    std::map<std::string, Expr> s;
    for (const auto& v : T->fiber_coords()) s[v] = Expr(0);
    return s;
}

}  // namespace

LagrangianSystem build(const Expr& L, const ChartPtr& chart, const ZeroOptions& opts) {
    LagrangianSystem s;
    s.T = tangent_chart(chart);
    s.Q = s.T->base();
    s.L = normalize(L);
    s.opts = chart_options(s.T, opts);
    size_t n = s.Q->dim();
    std::vector<Expr> th(2 * n, Expr(0)), dv(n);
    for (size_t a = 0; a < n; ++a) {
        dv[a] = differentiate(s.L, s.T->coord(n + a));
        th[a] = dv[a];
    }
    s.theta = KForm::one_form(s.T, th);
    s.omega = -d(s.theta);
    s.energy = liouville(s.T)(s.L) - s.L;
    s.hessian.assign(n, Vec(n));
    for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b) s.hessian[a][b] = differentiate(dv[a], s.T->coord(n + b));
    s.rank = rank(s.hessian, s.zero_test(), &s.rank_unstable);
    s.regular = s.rank == static_cast<int>(n);
    return s;
}

VectorField solve_second_order_field(const LagrangianSystem& sys) {
    if (!sys.regular) throw Error("not_regular", "the Lagrangian is singular (Hessian rank " + std::to_string(sys.rank) + ")");
    size_t n = sys.n();
    Vec rhs(n);
    for (size_t s = 0; s < n; ++s) {
        Expr dvs = differentiate(sys.L, sys.T->coord(n + s));
        std::vector<Expr> ts{differentiate(sys.L, sys.Q->coord(s))};
        for (size_t k = 0; k < n; ++k) ts.push_back(-sys.T->x(n + k) * differentiate(dvs, sys.Q->coord(k)));
        rhs[s] = sum(ts);
    }
    auto r = solve_linear(sys.hessian, rhs, sys.zero_test());
    if (r.rank < static_cast<int>(n)) throw Error("not_regular", "the Hessian is singular at a generic point");
    return second_order_field(sys.T, r.particular);
}

EulerLagrangeVerdict check_euler_lagrange(const LagrangianSystem& sys, const VectorField& D) {
    require_same_chart(D.chart, sys.T);
    EulerLagrangeVerdict v;
    v.residual = lie(D, sys.theta) - d(sys.T, sys.L);
    v.verdict = is_zero(v.residual, sys.opts);
    return v;
}

LegendreMap legendre(const LagrangianSystem& sys, const ChartPtr& Tstar) {
    LegendreMap m;
    m.Tstar = Tstar ? Tstar : Chart::cotangent(sys.Q);
    if (m.Tstar->role() != BundleRole::cotangent) throw Error("chart_mismatch", "expected a cotangent chart");
    require_same_chart(m.Tstar->base(), sys.Q);
    size_t n = sys.n();
    m.momenta = sys.theta.components();
    m.momenta.resize(n);

    // Phi_L^* (dq^a ^ dp_a) = omega_L
    KForm wq(m.Tstar, 2);
    for (size_t a = 0; a < n; ++a) wq.add({static_cast<int>(a), static_cast<int>(n + a)}, Expr(1));
    std::vector<Expr> images;
    for (size_t a = 0; a < n; ++a) images.push_back(sys.T->x(a));
    for (size_t a = 0; a < n; ++a) images.push_back(m.momenta[a]);
    m.pullback = is_zero(pullback(wq, sys.T, images) - sys.omega, sys.opts);

    auto vs = sys.T->fiber_coords();
    if (degree_in(sys.L, vs) < 0 || degree_in(sys.L, vs) > 2) return m;
    auto zv = zero_velocities(sys.T);
    Vec rhs(n);
    for (size_t a = 0; a < n; ++a) rhs[a] = m.Tstar->x(n + a) - substitute(m.momenta[a], zv);
    auto r = solve_linear(sys.hessian, rhs, sys.zero_test());
    m.velocities = r.particular;
    if (r.rank == static_cast<int>(n)) {
        m.fiber_solvable = true;
        std::map<std::string, Expr> sub;
        for (size_t a = 0; a < n; ++a) sub[vs[a]] = m.velocities[a];
        m.hamiltonian = substitute(sys.energy, sub);
        std::map<std::string, Expr> back;
        for (size_t a = 0; a < n; ++a) back[m.Tstar->coord(n + a)] = m.momenta[a];
        m.energy_match = is_zero(substitute(m.hamiltonian, back) - sys.energy, sys.opts);
    } else {
        for (const auto& c : r.conditions)
            if (!is_zero(c, chart_options(m.Tstar, sys.opts)).proved()) m.image.push_back(c);
    }
    return m;
}

NullDecomposition classify_null(const Expr& L0, const ChartPtr& chart, const ZeroOptions& opts) {
    auto T = tangent_chart(chart);
    auto Q = T->base();
    auto o = chart_options(T, opts);
    Expr L = normalize(L0);
    size_t n = Q->dim();
    NullDecomposition r;
    auto zv = zero_velocities(T);
    r.gauge = KForm(Q, 1);
    try {
        r.potential = substitute(L, zv);
        std::vector<Expr> lin;
        for (size_t a = 0; a < n; ++a) {
            Expr al = substitute(differentiate(L, T->coord(n + a)), zv);
            r.gauge.add({static_cast<int>(a)}, al);
            lin.push_back(al * T->x(n + a));
        }
        r.residual = L - r.potential - sum(lin);
    } catch (const Error&) {
        // not expandable at v = 0: everything is residual
        r.potential = Expr(0);
        r.gauge = KForm(Q, 1);
        r.residual = L;
    }
    if (!r.residual.is_zero_literal() && is_zero(r.residual, o).proved()) r.residual = Expr(0);
    r.gauge_closed = is_zero(d(r.gauge), o);
    r.omega_zero = is_zero(build(L, T, opts).omega, o);
    return r;
}

}  // namespace mechsym
