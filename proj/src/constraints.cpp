#include "mechsym/constraints.hpp"

#include <set>

namespace mechsym {

// ---------------------------------------------------------------- constraint surfaces

ConstraintSurface::ConstraintSurface(ChartPtr chart, const std::vector<Expr>& gens, ZeroOptions opts,
                                     MembershipOptions mo)
    : chart_(std::move(chart)), opts_(std::move(opts)), mo_(mo) {
    for (const auto& g : gens) add(g);
}

void ConstraintSurface::add(const Expr& g0) {
    Expr g = simplify_constraint(reduce(g0), opts_);
    if (g.is_zero_literal()) return;
    gens_.push_back(g0);
    std::vector<std::string> order;
    if (chart_) {
        order = chart_->fiber_coords();
        auto b = chart_->base_coords();
        order.insert(order.end(), b.rbegin(), b.rend());
    }
    for (const auto& x : order) {
        if (!g.depends_on(x) || degree_in(g, {x}) != 1) continue;
        Expr c = differentiate(g, x);
        if (!c.is_num()) continue;
        Expr val = Expr::sym(x) - g / c;
        std::map<std::string, Expr> b{{x, val}};
        for (auto& [k, v] : solved_) v = substitute(v, b);
        solved_[x] = val;
        return;
    }
    unsolved_.push_back(g);
}

Expr ConstraintSurface::reduce(const Expr& e) const {
    return solved_.empty() ? normalize(e) : substitute(e, solved_);
}

std::vector<Expr> ConstraintSurface::residual() const {
    std::vector<Expr> out;
    for (const auto& g : unsolved_) {
        Expr r = simplify_constraint(reduce(g), opts_);
        if (!r.is_zero_literal()) out.push_back(r);
    }
    return out;
}

ZeroVerdict ConstraintSurface::test(const Expr& e) const {
    Expr r = reduce(e);
    auto z = is_zero(r, opts_);
    if (z.proved()) return z;
    auto res = residual();
    if (res.empty()) return z;
    return ideal_member(r, res, opts_, mo_).verdict;
}

ZeroVerdict ConstraintSurface::test(const VectorField& X) const {
    std::vector<ZeroVerdict> vs;
    for (const auto& c : X.c) {
        vs.push_back(test(c));
        if (vs.back().status == ZeroStatus::proved_nonzero) break;
    }
    return combine(vs);
}

ZeroVerdict ConstraintSurface::test(const KForm& w) const {
    std::vector<ZeroVerdict> vs;
    for (const auto& [i, c] : w.c) {
        vs.push_back(test(c));
        if (vs.back().status == ZeroStatus::proved_nonzero) break;
    }
    return combine(vs);
}

ZeroTest ConstraintSurface::zero_test() const {
    return [s = *this](const Expr& e) { return s.test(e); };
}

// ---------------------------------------------------------------- helpers

namespace {

std::vector<Expr> factors_of(const Expr& m) {
    if (m.kind() == Kind::Mul) return m.args();
    return {m};
}

bool declared_nonzero(const Expr& f, const ZeroOptions& o) {
    if (f.is_num()) return sgn(f.value()) != 0;
    if (f.kind() == Kind::Fn && f.fn_kind() == Fn::Exp) return true;
    for (const auto& a : o.assumptions) {
        Expr n = normalize(a.expr);
        if (n == f || normalize(-n) == f) return true;
    }
    return false;
}

Expr simplify_product(const Expr& e, const ZeroOptions& o) {
    std::vector<Expr> keep;
    for (const auto& f : factors_of(e)) {
        Expr b = f;
        Rational k = 1;
        if (f.kind() == Kind::Pow && f.args()[1].is_num()) {
            b = f.args()[0];
            k = f.args()[1].value();
        }
        if (sgn(k) < 0 || declared_nonzero(b, o)) continue;
        keep.push_back(b);
    }
    if (keep.empty()) return Expr(1);
    return product(keep);
}

// Multiplies a vector through by the denominators of its components.
std::vector<Expr> clear_vector(std::vector<Expr> v) {
    for (int pass = 0; pass < 16; ++pass) {
        std::optional<Expr> den;
        for (const auto& c : v) {
            for (const auto& t : terms(c)) {
                for (const auto& f : factors_of(t.mono)) {
                    if (f.kind() == Kind::Pow && f.args()[1].is_num() && sgn(f.args()[1].value()) < 0) {
                        den = pow(f.args()[0], Rational(-f.args()[1].value()));
                        break;
                    }
                }
                if (den) break;
            }
            if (den) break;
        }
        if (!den) break;
        for (auto& c : v) c = *den * c;
    }
    return v;
}

std::string fresh_name(const std::string& prefix, std::set<std::string>& taken) {
    for (int k = 1;; ++k) {
        std::string s = prefix + std::to_string(k);
        if (taken.insert(s).second) return s;
    }
}

std::set<std::string> taken_names(const ConstraintLedger& led) {
    std::set<std::string> t;
    for (const auto& c : led.sys.T->coords()) t.insert(c);
    if (led.ham.Tstar)
        for (const auto& c : led.ham.Tstar->coords()) t.insert(c);
    for (const auto& s : free_symbols(led.sys.L)) t.insert(s);
    for (const auto& s : free_symbols(led.ham.H)) t.insert(s);
    for (const auto& m : led.ham.dynamics.multipliers) t.insert(m);
    for (const auto& m : led.ham.dynamics_full.multipliers) t.insert(m);
    for (const auto& m : led.ham.on_primary.multipliers) t.insert(m);
    for (const auto& m : led.lag.solutions.multipliers) t.insert(m);
    return t;
}

std::vector<Expr> gradient(const Expr& f, const ChartPtr& ch) {
    std::vector<Expr> g;
    for (const auto& x : ch->coords()) g.push_back(differentiate(f, x));
    return g;
}

// Generic rank of the Jacobian of `fs` (ambient zero test).
int jacobian_rank(const std::vector<Expr>& fs, const ChartPtr& ch, const ZeroOptions& o) {
    if (fs.empty()) return 0;
    Mat J;
    for (const auto& f : fs) J.push_back(gradient(f, ch));
    return rank(J, plain_zero_test(o));
}

std::string join(const std::vector<Expr>& es) {
    std::string s;
    for (const auto& e : es) s += (s.empty() ? "" : ", ") + to_string(e);
    return s.empty() ? "none" : s;
}

Check surface_check(const std::string& name, const std::vector<Expr>& rs, const ConstraintSurface& S,
                    bool mandatory = true) {
    std::vector<ZeroVerdict> vs;
    std::string s;
    for (const auto& r : rs) {
        Expr n = S.reduce(r);
        vs.push_back(S.test(n));
        if (!n.is_zero_literal() && !vs.back().proved()) s += (s.empty() ? "" : "; ") + to_string(n);
        if (vs.back().status == ZeroStatus::proved_nonzero) break;
    }
    return {name, combine(vs), s, mandatory};
}

// Sorts candidate constraints of one generation: zero ones are discarded, constants are
// inconsistent, functionally dependent ones are dropped.
Generation sift(const std::vector<Expr>& candidates, const std::vector<Expr>& known, const ConstraintSurface& S,
                const ChartPtr& ch, const ZeroOptions& o, std::vector<std::string>& transcript) {
    Generation g;
    std::vector<Expr> cur = known;
    int r0 = jacobian_rank(cur, ch, o);
    for (const auto& cand : candidates) {
        Expr c = simplify_constraint(S.reduce(cand), o);
        if (c.is_zero_literal()) continue;
        bool on_chart = false;
        for (const auto& x : ch->coords())
            if (c.depends_on(x)) on_chart = true;
        if (!on_chart) {
            if (is_zero(c, o).zero()) continue;
            transcript.push_back("inconsistent constraint " + to_string(c));
            throw Error("inconsistent", "a constraint reduces to the nonzero constant " + to_string(c));
        }
        if (S.test(c).zero()) continue;
        cur.push_back(c);
        int r1 = jacobian_rank(cur, ch, o);
        if (r1 > r0) {
            g.constraints.push_back(c);
            r0 = r1;
        } else {
            cur.pop_back();
            g.dropped.push_back(c);
            transcript.push_back("dropped dependent constraint " + to_string(c));
        }
    }
    return g;
}

// Rows of a square matrix chosen greedily in order so that they stay independent.
std::vector<int> greedy_rows(const Mat& M, const ZeroTest& z) {
    std::vector<int> pick;
    Mat rows;
    for (size_t i = 0; i < M.size(); ++i) {
        rows.push_back(M[i]);
        if (rank(rows, z) > static_cast<int>(pick.size())) pick.push_back(static_cast<int>(i));
        else rows.pop_back();
    }
    return pick;
}

Mat submatrix(const Mat& M, const std::vector<int>& idx) {
    Mat S(idx.size(), Vec(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i)
        for (size_t j = 0; j < idx.size(); ++j) S[i][j] = M[idx[i]][idx[j]];
    return S;
}

VectorField reduce_field(const VectorField& X, const ConstraintSurface& S) {
    VectorField Y = X;
    for (auto& c : Y.c) c = S.reduce(c);
    return Y;
}

std::map<std::string, Expr> velocity_substitution(const LagrangianSystem& sys, const Vec& vel) {
    std::map<std::string, Expr> sub;
    auto vs = sys.T->fiber_coords();
    for (size_t a = 0; a < vs.size() && a < vel.size(); ++a) sub[vs[a]] = vel[a];
    return sub;
}

}  // namespace

Expr simplify_constraint(const Expr& e0, const ZeroOptions& o) {
    Expr e = normalize(e0);
    switch (e.kind()) {
        case Kind::Mul: return simplify_product(e, o);
        case Kind::Pow: {
            const Expr& k = e.args()[1];
            if (k.is_num()) return sgn(k.value()) < 0 ? Expr(1) : simplify_constraint(e.args()[0], o);
            return e;
        }
        case Kind::Add: {
            Expr c = normalize(clear_denominators(e));
            if (c.kind() == Kind::Mul) return simplify_product(c, o);
            return c;
        }
        default: return e;
    }
}

std::vector<int> HamiltonianSide::counts() const {
    std::vector<int> c;
    for (const auto& g : generations) c.push_back(static_cast<int>(g.constraints.size()));
    return c;
}

std::vector<int> LagrangianSide::counts() const {
    std::vector<int> c;
    for (const auto& g : generations) c.push_back(static_cast<int>(g.constraints.size()));
    return c;
}

// ---------------------------------------------------------------- kernels

KernelDecomposition kernel_decomposition(const LagrangianSystem& sys) {
    if (sys.rank_unstable) throw Error("rank_unstable", "the Hessian rank could not be decided exactly");
    KernelDecomposition k;
    size_t n = sys.n();
    auto z = sys.zero_test();
    for (const auto& h : null_space(sys.hessian, z)) {
        std::vector<Expr> c(2 * n, Expr(0));
        auto hv = clear_vector(h);
        for (size_t a = 0; a < n; ++a) c[n + a] = hv[a];
        k.vertical.emplace_back(sys.T, c);
    }
    k.kernel = k.vertical;
    Mat rows;
    for (const auto& V : k.vertical) rows.push_back(V.c);
    Mat Om = sys.omega.matrix();
    for (const auto& v : null_space(Om, z)) {
        auto cv = clear_vector(v);
        rows.push_back(cv);
        if (rank(rows, z) > static_cast<int>(k.kernel.size())) k.kernel.emplace_back(sys.T, cv);
        else rows.pop_back();
    }
    std::vector<ZeroVerdict> vs, hs;
    for (const auto& K : k.kernel) vs.push_back(is_zero(interior(K, sys.omega), sys.opts));
    k.checks.push_back({"kernel", combine(vs), "", true});

    if (!k.vertical.empty()) {
        Mat A(n, Vec(k.kernel.size()));
        for (size_t a = 0; a < n; ++a)
            for (size_t i = 0; i < k.kernel.size(); ++i) A[a][i] = k.kernel[i].c[a];
        for (const auto& V : k.vertical) {
            Vec rhs(V.c.begin() + static_cast<long>(n), V.c.end());
            auto r = solve_linear(A, rhs, z);
            bool ok = r.consistent;
            for (const auto& c : r.conditions)
                if (!z(c).zero()) ok = false;
            if (!ok) k.type_II = false;
        }
    }
    return k;
}

// ---------------------------------------------------------------- ledger accessors

ZeroOptions ConstraintLedger::cotangent_options() const {
    ZeroOptions o = sys.opts;
    o.assumptions.clear();
    auto vs = sys.T->fiber_coords();
    for (const auto& a : sys.opts.assumptions) {
        bool velocity = false;
        for (const auto& v : vs)
            if (a.expr.depends_on(v)) velocity = true;
        if (!velocity) o.assumptions.push_back(a);
    }
    return o;
}

ConstraintSurface ConstraintLedger::hamiltonian_surface() const {
    return ConstraintSurface(ham.Tstar, ham.constraints, cotangent_options(), options.membership);
}

ConstraintSurface ConstraintLedger::primary_surface() const {
    return ConstraintSurface(ham.Tstar, ham.primaries, cotangent_options(), options.membership);
}

ConstraintSurface ConstraintLedger::lagrangian_surface() const {
    return ConstraintSurface(sys.T, lag.constraints, sys.opts, options.membership);
}

Expr ConstraintLedger::pull(const Expr& f) const {
    ChartPtr Ts = ham.Tstar ? ham.Tstar : (options.Tstar ? options.Tstar : Chart::cotangent(sys.Q));
    auto ps = Ts->fiber_coords();
    auto mom = sys.theta.components();
    std::map<std::string, Expr> sub;
    for (size_t a = 0; a < ps.size(); ++a) sub[ps[a]] = mom[a];
    return substitute(f, sub);
}

// ---------------------------------------------------------------- Hamiltonian side

namespace {

void run_hamiltonian(ConstraintLedger& led) {
    const auto& sys = led.sys;
    const auto& o = led.options;
    auto& h = led.ham;
    h.Tstar = o.Tstar ? o.Tstar : Chart::cotangent(sys.Q);
    h.legendre = legendre(sys, h.Tstar);
    ZeroOptions ho = led.cotangent_options();
    auto ps = PoissonStructure::canonical(h.Tstar);
    auto br = [&](const Expr& a, const Expr& b) { return ps.bracket(a, b); };

    // primaries
    std::vector<Expr> cand;
    if (!o.primaries.empty()) {
        for (const auto& phi : o.primaries) {
            auto v = is_zero(led.pull(phi), sys.opts);
            h.checks.push_back({"primary_pullback", v, v.proved() ? "" : to_string(phi), true});
            if (v.status == ZeroStatus::proved_nonzero)
                throw Error("not_primary", "the Legendre pullback of " + to_string(phi) + " does not vanish");
            cand.push_back(phi);
        }
    } else if (!sys.regular) {
        if (h.legendre.image.empty())
            throw Error("primaries_unavailable",
                        "the Legendre image could not be computed; supply the primary constraints");
        cand = h.legendre.image;
    }
    {
        ConstraintSurface none(h.Tstar, {}, ho, o.membership);
        auto g = sift(cand, {}, none, h.Tstar, ho, led.transcript);
        h.primaries = g.constraints;
        h.generations.push_back(g);
    }
    led.transcript.push_back("primary constraints: " + join(h.primaries));

    // extension of the energy
    if (o.hamiltonian) h.H = normalize(*o.hamiltonian);
    else if (sys.regular && h.legendre.fiber_solvable) h.H = h.legendre.hamiltonian;
    else if (!h.legendre.velocities.empty())
        h.H = substitute(sys.energy, velocity_substitution(sys, h.legendre.velocities));
    else if (is_zero(sys.energy, sys.opts).proved()) h.H = Expr(0);
    else throw Error("hamiltonian_unavailable", "no extension of the energy to T*Q could be built; supply one");
    {
        Expr r = normalize(led.pull(h.H) - sys.energy);
        h.checks.push_back({"hamiltonian_extension", is_zero(r, sys.opts), r.is_zero_literal() ? "" : to_string(r)});
    }
    led.transcript.push_back("H = " + to_string(h.H));

    const auto& prim = h.primaries;
    std::vector<Expr> all = prim;
    Mat A_last;
    for (int it = 0;; ++it) {
        ConstraintSurface S(h.Tstar, all, ho, o.membership);
        Mat A(all.size(), Vec(prim.size()));
        Vec b(all.size());
        for (size_t a = 0; a < all.size(); ++a) {
            for (size_t m = 0; m < prim.size(); ++m) A[a][m] = S.reduce(br(all[a], prim[m]));
            b[a] = S.reduce(-br(all[a], h.H));
        }
        std::vector<Expr> conds;
        if (!all.empty()) {
            auto r = solve_linear(A, b, S.zero_test());
            conds = r.conditions;
        }
        auto g = sift(conds, all, S, h.Tstar, ho, led.transcript);
        led.transcript.push_back("hamiltonian step " + std::to_string(it + 1) + ": " + std::to_string(all.size()) +
                                 " constraints, new: " + join(g.constraints));
        if (g.constraints.empty()) {
            if (!h.generations.back().constraints.empty()) h.generations.push_back(g);
            A_last = A;
            led.transcript.push_back("hamiltonian fixed point after " + std::to_string(it + 1) + " steps");
            break;
        }
        if (it + 1 >= o.max_iterations)
            throw Error("no_fixed_point", "the constraint iteration did not stabilize within " +
                                              std::to_string(o.max_iterations) + " steps");
        h.generations.push_back(g);
        for (const auto& c : g.constraints) all.push_back(c);
    }
    h.constraints = all;

    // class split on the final manifold
    ConstraintSurface S(h.Tstar, all, ho, o.membership);
    auto z = S.zero_test();
    size_t N = all.size();
    h.brackets.assign(N, Vec(N));
    for (size_t a = 0; a < N; ++a)
        for (size_t b = 0; b < N; ++b) h.brackets[a][b] = S.reduce(br(all[a], all[b]));
    h.second_class = greedy_rows(h.brackets, z);
    Mat Msc = submatrix(h.brackets, h.second_class);
    if (!Msc.empty()) {
        auto C = inverse(Msc, z);
        if (!C) throw Error("rank_unstable", "the second-class bracket matrix is singular");
        h.C = *C;
        for (auto& row : h.C)
            for (auto& c : row) c = S.reduce(c);
    }
    if (N > 0)
        for (const auto& lam : left_null_space(h.brackets, z)) {
            auto l = clear_vector(lam);
            Expr f(0);
            for (size_t a = 0; a < N; ++a) f += l[a] * all[a];
            h.first_class.push_back(f);
        }
    if (!prim.empty() && N > 0)
        for (const auto& mu : null_space(A_last, z)) {
            auto m = clear_vector(mu);
            Expr f(0);
            for (size_t a = 0; a < prim.size(); ++a) f += m[a] * prim[a];
            h.first_class_primary.push_back(f);
        }
    led.transcript.push_back("second class: " + std::to_string(h.second_class.size()) +
                             ", first class: " + join(h.first_class) +
                             ", first-class primaries: " + join(h.first_class_primary));

    // lifted dynamics
    auto taken = taken_names(led);
    auto XH = ps.hamiltonian_field(h.H);
    auto second_class_part = [&](const std::vector<Expr>& th, const Mat& C) {
        VectorField X = VectorField::zero(h.Tstar);
        for (size_t i = 0; i < th.size(); ++i) {
            Expr hi = br(th[i], h.H);
            for (size_t j = 0; j < th.size(); ++j) X = X + (hi * C[i][j]) * ps.hamiltonian_field(th[j]);
        }
        return X;
    };
    std::vector<Expr> theta;
    for (int i : h.second_class) theta.push_back(all[i]);
    VectorField base = XH + second_class_part(theta, h.C);
    {
        VectorField X = base;
        for (const auto& f : h.first_class_primary) {
            auto u = fresh_name("u", taken);
            h.dynamics.multipliers.push_back(u);
            X = X + Expr::sym(u) * ps.hamiltonian_field(f);
        }
        h.dynamics.field = reduce_field(X, S);
    }
    {
        VectorField X = base;
        for (const auto& f : h.first_class) {
            auto w = fresh_name("w", taken);
            h.dynamics_full.multipliers.push_back(w);
            X = X + Expr::sym(w) * ps.hamiltonian_field(f);
        }
        h.dynamics_full.field = reduce_field(X, S);
    }
    // dynamics on the primary manifold
    ConstraintSurface S0(h.Tstar, prim, ho, o.membership);
    {
        auto z0 = S0.zero_test();
        size_t P = prim.size();
        Mat M0(P, Vec(P));
        for (size_t a = 0; a < P; ++a)
            for (size_t b = 0; b < P; ++b) M0[a][b] = S0.reduce(br(prim[a], prim[b]));
        auto sc0 = greedy_rows(M0, z0);
        Mat C0;
        if (!sc0.empty()) {
            auto c = inverse(submatrix(M0, sc0), z0);
            if (!c) throw Error("rank_unstable", "the primary bracket matrix is singular");
            C0 = *c;
        }
        std::vector<Expr> th0;
        for (int i : sc0) th0.push_back(prim[i]);
        VectorField X = XH + second_class_part(th0, C0);
        if (P > 0)
            for (const auto& lam : left_null_space(M0, z0)) {
                auto l = clear_vector(lam);
                Expr f(0);
                for (size_t a = 0; a < P; ++a) f += l[a] * prim[a];
                auto u = fresh_name("u", taken);
                h.on_primary.multipliers.push_back(u);
                X = X + Expr::sym(u) * ps.hamiltonian_field(f);
            }
        h.on_primary.field = reduce_field(X, S0);
    }

    // ledger invariants
    {
        std::vector<Expr> r;
        size_t k = h.second_class.size();
        for (size_t i = 0; i < k; ++i)
            for (size_t j = 0; j < k; ++j) {
                Expr s(0);
                for (size_t l = 0; l < k; ++l) s += Msc[i][l] * h.C[l][j];
                r.push_back(s - Expr(i == j ? 1 : 0));
            }
        h.checks.push_back(surface_check("second_class_inverse", r, S));
    }
    {
        std::vector<Expr> r;
        for (const auto& f : h.first_class)
            for (const auto& c : all) r.push_back(br(f, c));
        h.checks.push_back(surface_check("first_class_closure", r, S));
    }
    {
        std::vector<Expr> r, rf, r0;
        for (const auto& c : all) {
            r.push_back(h.dynamics.field(c));
            rf.push_back(h.dynamics_full.field(c));
        }
        for (const auto& c : prim) r0.push_back(h.on_primary.field(c));
        h.checks.push_back(surface_check("tangency", r, S));
        h.checks.push_back(surface_check("tangency_full", rf, S));
        h.checks.push_back(surface_check("primary_tangency", r0, S0, false));
    }
    h.done = true;
}

// ---------------------------------------------------------------- Lagrangian side

void run_lagrangian(ConstraintLedger& led) {
    const auto& sys = led.sys;
    const auto& o = led.options;
    auto& g = led.lag;
    const auto& T = sys.T;
    size_t n = sys.n();
    g.kernel = kernel_decomposition(sys);
    for (const auto& K : g.kernel.kernel) g.kernel_energy.push_back(normalize(K(sys.energy)));
    {
        ConstraintSurface none(T, {}, sys.opts, o.membership);
        g.generations.push_back(sift(g.kernel_energy, {}, none, T, sys.opts, led.transcript));
    }
    std::vector<Expr> all = g.generations.back().constraints;
    led.transcript.push_back("first-generation constraints: " + join(all));

    Mat Om = sys.omega.matrix();
    auto dE = d(T, sys.energy).components();
    SolveResult last;
    for (int it = 0;; ++it) {
        ConstraintSurface S(T, all, sys.opts, o.membership);
        Mat A;
        Vec b;
        for (size_t j = 0; j < 2 * n; ++j) {
            Vec row(2 * n);
            for (size_t i = 0; i < 2 * n; ++i) row[i] = S.reduce(Om[i][j]);
            A.push_back(row);
            b.push_back(S.reduce(dE[j]));
        }
        for (const auto& psi : all) {
            Vec row;
            for (const auto& x : gradient(psi, T)) row.push_back(S.reduce(x));
            A.push_back(row);
            b.push_back(Expr(0));
        }
        last = solve_linear(A, b, S.zero_test());
        auto gen = sift(last.conditions, all, S, T, sys.opts, led.transcript);
        led.transcript.push_back("lagrangian step " + std::to_string(it + 1) + ": " + std::to_string(all.size()) +
                                 " constraints, new: " + join(gen.constraints));
        if (gen.constraints.empty()) {
            if (!g.generations.back().constraints.empty()) g.generations.push_back(gen);
            led.transcript.push_back("lagrangian fixed point after " + std::to_string(it + 1) + " steps");
            break;
        }
        if (it + 1 >= o.max_iterations)
            throw Error("no_fixed_point", "the constraint iteration did not stabilize within " +
                                              std::to_string(o.max_iterations) + " steps");
        g.generations.push_back(gen);
        for (const auto& c : gen.constraints) all.push_back(c);
    }
    g.constraints = all;
    ConstraintSurface S(T, all, sys.opts, o.membership);

    // solution family
    auto taken = taken_names(led);
    VectorField D(T, last.particular);
    for (const auto& nv : last.null_basis) {
        auto m = fresh_name("mu", taken);
        g.solutions.multipliers.push_back(m);
        D = D + Expr::sym(m) * VectorField(T, clear_vector(nv));
    }
    g.solutions.field = reduce_field(D, S);
    const auto& F = g.solutions.field;

    // defect S(D) - Delta and its membership in the vertical kernel
    g.defect = VectorField::zero(T);
    for (size_t a = 0; a < n; ++a) g.defect.c[n + a] = S.reduce(F.c[a] - T->x(n + a));
    {
        std::vector<Expr> r;
        for (size_t a = 0; a < n; ++a) {
            Expr s(0);
            for (size_t b = 0; b < n; ++b) s += sys.hessian[a][b] * g.defect.c[n + b];
            r.push_back(s);
        }
        g.checks.push_back(surface_check("defect_vertical", r, S));
    }
    {
        std::vector<Expr> r;
        for (const auto& c : interior(F, sys.omega).components()) r.push_back(c);
        for (size_t j = 0; j < 2 * n; ++j) r[j] = r[j] - dE[j];
        g.checks.push_back(surface_check("presymplectic", r, S));
        std::vector<Expr> t;
        for (const auto& c : all) t.push_back(F(c));
        g.checks.push_back(surface_check("tangency", t, S));
    }

    // second-order members
    size_t k = g.solutions.multipliers.size();
    Mat Am(n, Vec(k));
    Vec bm(n);
    for (size_t a = 0; a < n; ++a) {
        Expr e = F.c[a] - T->x(n + a);
        Expr rest = e;
        for (size_t j = 0; j < k; ++j) {
            Am[a][j] = S.reduce(differentiate(e, g.solutions.multipliers[j]));
            rest = rest - Am[a][j] * Expr::sym(g.solutions.multipliers[j]);
        }
        bm[a] = S.reduce(-rest);
    }
    auto z = S.zero_test();
    auto r = solve_linear(Am, bm, z);
    bool global = r.consistent;
    for (const auto& c : r.conditions)
        if (!z(c).zero()) {
            global = false;
            g.second_order_conditions.push_back(S.reduce(c));
        }
    g.second_order_global = global;
    if (global) {
        std::map<std::string, Expr> sub;
        std::set<int> piv(r.pivots.begin(), r.pivots.end());
        std::vector<int> frees;
        for (size_t j = 0; j < k; ++j)
            if (!piv.count(static_cast<int>(j))) frees.push_back(static_cast<int>(j));
        for (int p : r.pivots) {
            Expr v = r.particular[p];
            for (size_t f = 0; f < frees.size(); ++f)
                v += r.null_basis[f][p] * Expr::sym(g.solutions.multipliers[frees[f]]);
            sub[g.solutions.multipliers[p]] = v;
        }
        for (int f : frees) g.second_order.multipliers.push_back(g.solutions.multipliers[f]);
        g.second_order.field = reduce_field(substitute(F, sub), S);
    }
    led.transcript.push_back(std::string("second-order solutions on the whole final set: ") +
                             (global ? "yes" : "no"));
    g.done = true;
}

}  // namespace

ConstraintLedger hamiltonian_algorithm(const LagrangianSystem& sys, const ConstraintOptions& opts) {
    ConstraintLedger led;
    led.sys = sys;
    led.options = opts;
    run_hamiltonian(led);
    return led;
}

ConstraintLedger lagrangian_algorithm(const LagrangianSystem& sys, const ConstraintOptions& opts) {
    ConstraintLedger led;
    led.sys = sys;
    led.options = opts;
    run_lagrangian(led);
    return led;
}

ConstraintLedger constraint_algorithm(const LagrangianSystem& sys, const ConstraintOptions& opts) {
    ConstraintLedger led;
    led.sys = sys;
    led.options = opts;
    run_hamiltonian(led);
    run_lagrangian(led);
    return led;
}

// ---------------------------------------------------------------- fields on the final set

ZeroVerdict presymplectic_residual(const ConstraintLedger& led, const VectorField& D) {
    require_same_chart(D.chart, led.sys.T);
    auto S = led.lagrangian_surface();
    return S.test(interior(D, led.sys.omega) - d(led.sys.T, led.sys.energy));
}

Check projectability(const ConstraintLedger& led, const VectorField& D, const VectorField& Y) {
    ChartPtr Ts = led.ham.Tstar ? led.ham.Tstar : Chart::cotangent(led.sys.Q);
    require_same_chart(Y.chart, Ts);
    auto S = led.lagrangian_surface();
    std::vector<Expr> r;
    for (const auto& x : Ts->coords()) {
        Expr f = Expr::sym(x);
        r.push_back(D(led.pull(f)) - led.pull(Y(f)));
    }
    return surface_check("projectable", r, S);
}

SectionResult second_order_section(const ConstraintLedger& led, const VectorField& D0, const VectorField& Y) {
    const auto& sys = led.sys;
    const auto& T = sys.T;
    require_same_chart(D0.chart, T);
    size_t n = sys.n();
    SectionResult res;
    auto S = led.lagrangian_surface();
    if (Y.chart) {
        auto c = projectability(led, D0, Y);
        res.checks.push_back(c);
        if (c.verdict.status == ZeroStatus::proved_nonzero)
            throw Error("not_projectable", "the field does not project along the Legendre map: " + c.residual);
    }

    // use the free multipliers first
    std::vector<std::string> ms;
    std::set<std::string> fs;
    for (const auto& c : D0.c)
        for (const auto& s : free_symbols(c)) fs.insert(s);
    for (const auto& m : led.lag.solutions.multipliers)
        if (fs.count(m)) ms.push_back(m);
    VectorField D = D0;
    if (!ms.empty()) {
        Mat A(n, Vec(ms.size()));
        Vec b(n);
        for (size_t a = 0; a < n; ++a) {
            Expr e = D.c[a] - T->x(n + a);
            Expr rest = e;
            for (size_t j = 0; j < ms.size(); ++j) {
                A[a][j] = S.reduce(differentiate(e, ms[j]));
                rest = rest - A[a][j] * Expr::sym(ms[j]);
            }
            b[a] = S.reduce(-rest);
        }
        auto r = solve_linear(A, b, S.zero_test());
        for (int p : r.pivots) res.multipliers[ms[p]] = r.particular[p];
        D = substitute(D, res.multipliers);
    }

    // remaining second-order conditions define the section
    std::vector<std::string> vs = T->fiber_coords();
    for (size_t a = 0; a < n; ++a) {
        Expr e = S.reduce(substitute(D.c[a] - T->x(n + a), res.sigma));
        if (S.test(e).zero()) continue;
        bool solved = false;
        std::vector<std::string> order{vs[a]};
        for (const auto& v : vs)
            if (v != vs[a]) order.push_back(v);
        for (const auto& v : order) {
            if (res.sigma.count(v) || !e.depends_on(v) || degree_in(e, {v}) != 1) continue;
            Expr c = differentiate(e, v);
            if (!c.is_num()) continue;
            Expr val = Expr::sym(v) - e / c;
            std::map<std::string, Expr> b{{v, val}};
            for (auto& [k, w] : res.sigma) w = substitute(w, b);
            res.sigma[v] = val;
            solved = true;
            break;
        }
        if (!solved) throw Error("no_section", "cannot solve the second-order condition " + to_string(e));
    }
    for (const auto& [v, val] : res.sigma) res.section.push_back(Expr::sym(v) - val);

    // lift: q and free v components from D, fixed v components by tangency
    VectorField Dt = VectorField::zero(T);
    for (size_t i = 0; i < 2 * n; ++i) Dt.c[i] = substitute(D.c[i], res.sigma);
    for (size_t a = 0; a < n; ++a) {
        auto it = res.sigma.find(vs[a]);
        if (it == res.sigma.end()) continue;
        Expr w(0);
        for (size_t i = 0; i < 2 * n; ++i) {
            const auto& x = T->coord(i);
            if (res.sigma.count(x)) continue;
            w += Dt.c[i] * differentiate(it->second, x);
        }
        Dt.c[n + a] = w;
    }
    std::vector<Expr> gens = led.lag.constraints;
    for (const auto& s : res.section) gens.push_back(s);
    ConstraintSurface Sig(T, gens, sys.opts, led.options.membership);
    for (auto& c : Dt.c) c = Sig.reduce(c);
    res.lifted = Dt;

    std::vector<Expr> so, tg, ps;
    for (size_t a = 0; a < n; ++a) so.push_back(Dt.c[a] - T->x(n + a));
    for (const auto& g : gens) tg.push_back(Dt(g));
    auto iw = interior(Dt, sys.omega).components();
    auto dE = d(T, sys.energy).components();
    for (size_t j = 0; j < 2 * n; ++j) ps.push_back(iw[j] - dE[j]);
    res.checks.push_back(surface_check("second_order", so, Sig));
    res.checks.push_back(surface_check("tangent", tg, Sig));
    res.checks.push_back(surface_check("presymplectic", ps, Sig));
    return res;
}

// ---------------------------------------------------------------- bridge between the pictures

Expr k_operator(const ConstraintLedger& led, const Expr& f) {
    const auto& sys = led.sys;
    ChartPtr Ts = led.ham.Tstar ? led.ham.Tstar : Chart::cotangent(sys.Q);
    auto ps = PoissonStructure::canonical(Ts);
    size_t n = sys.n();
    Expr k(0);
    for (size_t j = 0; j < n; ++j) {
        k += led.pull(ps.bracket(f, Ts->x(n + j))) * sys.T->x(n + j);
        k += led.pull(ps.bracket(Ts->x(j), f)) * differentiate(sys.L, sys.T->coord(j));
    }
    return normalize(k);
}

VectorField constraint_vertical(const ConstraintLedger& led, const Expr& phi) {
    const auto& sys = led.sys;
    ChartPtr Ts = led.ham.Tstar ? led.ham.Tstar : Chart::cotangent(sys.Q);
    auto ps = PoissonStructure::canonical(Ts);
    size_t n = sys.n();
    auto K = VectorField::zero(sys.T);
    for (size_t j = 0; j < n; ++j) K.c[n + j] = led.pull(ps.bracket(Ts->x(j), phi));
    return K;
}

std::vector<Check> check_correspondence(const ConstraintLedger& led) {
    if (!led.ham.done) throw Error("ledger_missing", "the Hamiltonian side of the ledger has not been computed");
    const auto& h = led.ham;
    const auto& sys = led.sys;
    auto ps = PoissonStructure::canonical(h.Tstar);
    std::vector<Expr> pulled;
    for (const auto& c : h.constraints) pulled.push_back(simplify_constraint(led.pull(c), sys.opts));
    ConstraintSurface S(sys.T, pulled, sys.opts, led.options.membership);
    std::vector<Check> out;

    std::vector<Expr> dyn, vert, ann;
    for (const auto& f : h.first_class_primary) dyn.push_back(k_operator(led, f) - led.pull(ps.bracket(f, h.H)));
    for (const auto& m : h.primaries)
        for (const auto& s : h.primaries)
            vert.push_back(led.pull(ps.bracket(m, s)) - constraint_vertical(led, s)(k_operator(led, m)));
    for (const auto& f : h.first_class_primary)
        for (const auto& s : h.primaries) ann.push_back(constraint_vertical(led, s)(k_operator(led, f)));
    out.push_back(surface_check("first_class_dynamics", dyn, S));
    out.push_back(surface_check("bracket_vertical", vert, S));
    out.push_back(surface_check("first_class_annihilated", ann, S));
    if (led.lag.done && !h.primaries.empty() && !led.lag.generations.empty()) {
        std::vector<Expr> ks;
        for (const auto& m : h.primaries) ks.push_back(k_operator(led, m));
        ConstraintSurface Sk(sys.T, ks, sys.opts, led.options.membership);
        out.push_back(surface_check("first_generation_from_k", led.lag.generations.front().constraints, Sk, false));
    }
    return out;
}

}  // namespace mechsym
