#include "mechsym/constraints.hpp"
#include "mechsym/noether.hpp"
#include "support.hpp"

using namespace mt;

namespace {

const std::set<std::string> fa{"a"};

// L = a(q1,q2) v1^2 / 2 with a and its q2-derivative nonvanishing.
const ConstraintLedger& sl1() {
    static const ConstraintLedger led = [] {
        auto Q = Chart::make({"q1", "q2"}, {{Assumption::nonzero, P("a(q1,q2)", fa)},
                                            {Assumption::nonzero, P("D[0,1]a(q1,q2)", fa)}});
        return constraint_algorithm(build(P("a(q1,q2)*v1^2/2", fa), Q));
    }();
    return led;
}

// Charged particle in a monopole field, with the extra angle psi.
const ConstraintLedger& monopole() {
    static const ConstraintLedger led = [] {
        auto Q = Chart::make({"r", "th", "ph", "ps"}, {{Assumption::positive, P("r")},
                                                      {Assumption::positive, P("sin(th)")},
                                                      {Assumption::nonzero, P("lam")}});
        auto T = Chart::tangent(Q, {"vr", "vth", "vph", "vps"});
        return lagrangian_algorithm(build(P("(vr^2 + r^2*vth^2 + r^2*sin(th)^2*vph^2)/2 + lam*(vps + vph*cos(th))"), T));
    }();
    return led;
}

// Free relativistic particle in 1+2 dimensions, mass-shell primary supplied.
const ConstraintLedger& relativistic3() {
    static const ConstraintLedger led = [] {
        auto Q = Chart::make({"x0", "x1", "x2"});
        ZeroOptions zo;
        zo.assumptions = {{Assumption::positive, P("v0^2 - v1^2 - v2^2")}, {Assumption::positive, P("m")}};
        auto sys = build(P("-m*(v0^2 - v1^2 - v2^2)^(1/2)"), Chart::tangent(Q, {"v0", "v1", "v2"}), zo);
        ConstraintOptions co;
        co.Tstar = Chart::cotangent(Q, {"p0", "p1", "p2"});
        co.primaries = {P("-p0^2 + p1^2 + p2^2 + m^2")};
        return constraint_algorithm(sys, co);
    }();
    return led;
}

bool all_proved(const std::vector<Check>& cs) {
    for (const auto& c : cs)
        if (c.mandatory && !c.verdict.proved()) return false;
    return true;
}

bool proved(const std::vector<Check>& cs, const std::string& name) {
    auto c = find_check(cs, name);
    return c && c->verdict.proved();
}

int levi(int a, int b, int c) {
    if (a == b || b == c || a == c) return 0;
    return ((b - a) * (c - a) * (c - b) > 0) ? 1 : -1;
}

}  // namespace

TEST_CASE("kernel_decomposition of L = a v1^2/2") {
    const auto& k = sl1().lag.kernel;
    REQUIRE(k.kernel.size() == 2);
    REQUIRE(k.vertical.size() == 1);
    const auto& T = sl1().sys.T;
    auto KV = VectorField::coordinate(T, 3);
    VectorField K(T, {Expr(0), P("-a(q1,q2)", fa), P("v1*D[0,1]a(q1,q2)", fa), Expr(0)});
    CHECK(zero(k.vertical[0] - KV));
    CHECK(zero(k.kernel[0] - KV));
    CHECK(zero(k.kernel[1] - K));
    CHECK(k.type_II);
    CHECK(all_proved(k.checks));
}

TEST_CASE("kernel_decomposition: regular and monopole") {
    auto reg = kernel_decomposition(build(P("(v1^2+v2^2)/2 - q1*q2"), Chart::make({"q1", "q2"})));
    CHECK(reg.kernel.empty());
    CHECK(reg.vertical.empty());
    CHECK(reg.type_II);

    const auto& k = monopole().lag.kernel;
    REQUIRE(k.kernel.size() == 2);
    REQUIRE(k.vertical.size() == 1);
    const auto& T = monopole().sys.T;
    CHECK(zero(k.vertical[0] - VectorField::coordinate(T, 7)));
    CHECK(zero(k.kernel[1] - VectorField::coordinate(T, 3)));
    CHECK(k.type_II);
}

TEST_CASE("hamiltonian_algorithm on L = a v1^2/2") {
    const auto& h = sl1().ham;
    REQUIRE(h.done);
    CHECK(h.counts() == std::vector<int>{1, 1, 0});
    REQUIRE(h.primaries.size() == 1);
    CHECK(same(h.primaries[0], P("p2")));
    REQUIRE(h.constraints.size() == 2);
    CHECK(same(h.constraints[1], P("p1")));
    CHECK(same(h.H, P("p1^2/(2*a(q1,q2))", fa)));
    CHECK(h.second_class.empty());
    CHECK(h.first_class.size() == 2);
    CHECK(h.first_class_primary.size() == 1);
    // on M' = Q the dynamics is B d/dq2 with one free multiplier
    REQUIRE(h.dynamics.multipliers.size() == 1);
    VectorField expect = VectorField::zero(h.Tstar);
    expect.c[1] = Expr::sym(h.dynamics.multipliers[0]);
    CHECK(zero(h.dynamics.field - expect));
    // with the secondary as a generator too, q1 also becomes free
    CHECK(h.dynamics_full.multipliers.size() == 2);
    CHECK_FALSE(h.dynamics_full.field.c[0].is_zero_literal());
    CHECK(all_proved(h.checks));
    CHECK(find_check(h.checks, "primary_tangency")->verdict.status == ZeroStatus::proved_nonzero);
    CHECK_FALSE(find_check(h.checks, "primary_tangency")->mandatory);
}

TEST_CASE("lagrangian_algorithm on L = a v1^2/2") {
    const auto& l = sl1().lag;
    REQUIRE(l.done);
    CHECK(l.counts() == std::vector<int>{1, 0});
    REQUIRE(l.constraints.size() == 1);
    CHECK(same(l.constraints[0], P("v1")));
    // beta d/dq2 + delta d/dv2
    REQUIRE(l.solutions.multipliers.size() == 2);
    const auto& D = l.solutions.field;
    CHECK(D.c[0].is_zero_literal());
    CHECK(D.c[2].is_zero_literal());
    CHECK(same(D.c[1], Expr::sym(l.solutions.multipliers[0])));
    CHECK(same(D.c[3], Expr::sym(l.solutions.multipliers[1])));
    CHECK(l.second_order_global);
    CHECK(same(l.second_order.field.c[1], P("v2")));
    CHECK(all_proved(l.checks));
}

TEST_CASE("lagrangian_algorithm: monopole has no constraints and global second-order dynamics") {
    const auto& l = monopole().lag;
    CHECK(l.constraints.empty());
    CHECK(l.counts() == std::vector<int>{0});
    CHECK(l.solutions.multipliers.size() == 2);
    REQUIRE(l.second_order_global);
    CHECK(same(l.second_order.field.c[3], P("vps")));
    CHECK(all_proved(l.checks));
    auto sec = second_order_section(monopole(), l.solutions.field);
    CHECK(sec.global());
    CHECK(all_proved(sec.checks));
}

TEST_CASE("monopole dynamics family termwise") {
    const auto& led = monopole();
    const auto& D = led.lag.solutions.field;
    const auto& zo = led.sys.opts;
    CHECK(same(D.c[0], P("vr")));
    CHECK(same(D.c[1], P("vth")));
    CHECK(same(D.c[2], P("vph")));
    CHECK(same(D.c[4], P("r*vth^2 + r*sin(th)^2*vph^2"), zo));
    CHECK(same(D.c[5], P("sin(th)*cos(th)*vph^2 - 2*vr*vth/r - lam*sin(th)*vph/r^2"), zo));
    CHECK(same(D.c[6], P("lam*vth/(r^2*sin(th)) - 2*vr*vph/r - 2*cos(th)*vth*vph/sin(th)"), zo));
    // psi and its velocity are left free
    REQUIRE(D.c[3].is_sym());
    REQUIRE(D.c[7].is_sym());
    CHECK(D.c[3] != D.c[7]);
}

TEST_CASE("regular Lagrangian: no constraints, unique solution") {
    auto led = constraint_algorithm(build(P("(v1^2+v2^2)/2 - q1^2/2"), Chart::make({"q1", "q2"})));
    CHECK(led.ham.counts() == std::vector<int>{0});
    CHECK(led.lag.counts() == std::vector<int>{0});
    CHECK(led.lag.solutions.multipliers.empty());
    CHECK(led.lag.second_order_global);
    CHECK(zero(led.lag.solutions.field - solve_second_order_field(led.sys)));
    auto sec = second_order_section(led, led.lag.solutions.field);
    CHECK(sec.global());
    CHECK(sec.section.empty());
}

TEST_CASE("relativistic free particle: mass shell is first class, no secondaries") {
    auto Q = Chart::make({"x0", "x1", "x2", "x3"});
    ZeroOptions zo;
    zo.assumptions = {{Assumption::positive, P("v0^2 - v1^2 - v2^2 - v3^2")}, {Assumption::positive, P("m")}};
    auto sys = build(P("-m*(v0^2 - v1^2 - v2^2 - v3^2)^(1/2)"), Chart::tangent(Q, {"v0", "v1", "v2", "v3"}), zo);
    ConstraintOptions co;
    co.Tstar = Chart::cotangent(Q, {"p0", "p1", "p2", "p3"});
    co.primaries = {P("-p0^2 + p1^2 + p2^2 + p3^2 + m^2")};
    auto led = hamiltonian_algorithm(sys, co);
    CHECK(led.ham.counts() == std::vector<int>{1, 0});
    CHECK(led.ham.first_class_primary.size() == 1);
    CHECK(led.ham.second_class.empty());
    CHECK(same(led.ham.H, Expr(0)));
    CHECK(all_proved(led.ham.checks));

    co.primaries = {P("p0^2 + p1^2 + m^2")};
    CHECK(error_code([&] { hamiltonian_algorithm(sys, co); }) == "not_primary");

    const auto& l3 = relativistic3();
    CHECK(l3.ham.counts() == std::vector<int>{1, 0});
    CHECK(l3.lag.counts() == std::vector<int>{0});
    CHECK(l3.lag.kernel.kernel.size() == 2);
    CHECK(l3.lag.second_order_global);
    CHECK(all_proved(l3.lag.checks));
    CHECK(all_proved(check_correspondence(l3)));
}

TEST_CASE("Lie-Poisson Lagrangian on u(2): second-class primaries and the linear dynamics") {
    // coordinates x0..x3, y0..y3; index 0 central, c_jkl = -2 eps_jkl on 1..3
    const int h[4] = {1, 2, -1, 3};
    auto c = [](int s, int b, int a) { return (s && b && a) ? -2 * levi(s, b, a) : 0; };
    int alpha[4][4] = {};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int s = 0; s < 4; ++s) alpha[a][b] += c(s, a, b) * h[s];
    std::vector<std::string> cs;
    for (auto pre : {"x", "y"})
        for (int i = 0; i < 4; ++i) cs.push_back(pre + std::to_string(i));
    auto Q = Chart::make(cs);
    Expr L(0);
    for (int a = 0; a < 4; ++a) {
        auto x = Q->x(a), y = Q->x(4 + a);
        L = L + Expr(Rational(1, 2)) * (y * Expr::sym("v" + cs[a]) - x * Expr::sym("v" + cs[4 + a]));
        for (int b = 0; b < 4; ++b) L = L - Expr(alpha[b][a]) * Q->x(b) * y;
    }
    auto led = constraint_algorithm(build(normalize(L), Q));
    CHECK(led.ham.counts() == std::vector<int>{8, 0});
    CHECK(led.ham.second_class.size() == 8);
    CHECK(led.ham.first_class.empty());
    CHECK(led.ham.dynamics.multipliers.empty());
    CHECK(all_proved(led.ham.checks));

    // the projected dynamics is the Hamiltonian field of E_L for omega_h = dx^a ^ dy^a
    KForm wh(Q, 2);
    for (int a = 0; a < 4; ++a) wh.add({a, 4 + a}, Expr(1));
    auto Xh = PoissonStructure::from_symplectic(wh).hamiltonian_field(led.sys.energy);
    for (int i = 0; i < 8; ++i) {
        Expr lin(0);
        int a = i % 4, off = i < 4 ? 0 : 4;
        for (int b = 0; b < 4; ++b) lin = lin - Expr(alpha[a][b]) * Q->x(off + b);
        CHECK(same(led.ham.dynamics.field.c[i], lin));  // xdot = -alpha x, ydot = -alpha y
        CHECK(same(led.ham.dynamics.field.c[i], Xh.c[i]));
    }
    // the quadratic function alpha_ba y^b x^a is minus the energy
    Expr fH(0);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) fH = fH + Expr(alpha[b][a]) * Q->x(4 + b) * Q->x(a);
    CHECK(same(fH + led.sys.energy, Expr(0)));

    // Lagrangian side: all velocities are fiber directions of the kernel; second order only on a section
    CHECK(led.lag.counts() == std::vector<int>{0});
    CHECK(led.lag.kernel.kernel.size() == 8);
    CHECK_FALSE(led.lag.second_order_global);
    CHECK(led.lag.second_order_conditions.size() == 8);
    auto sec = second_order_section(led, led.lag.solutions.field);
    CHECK(sec.section.size() == 8);
    CHECK(all_proved(sec.checks));
}

TEST_CASE("second_order_section: lift via the section for L = a v1^2/2") {
    const auto& led = sl1();
    const auto& T = led.sys.T;
    auto b = P("b(q1,q2)", {"b"});
    VectorField D(T, {Expr(0), b, Expr(0), P("d(q1,q2,v1,v2)", {"d"})});
    VectorField Y(led.ham.Tstar, {Expr(0), b, Expr(0), Expr(0)});
    auto sec = second_order_section(led, D, Y);
    REQUIRE(sec.sigma.count("v2"));
    CHECK(same(sec.sigma.at("v2"), b));
    VectorField expect(T, {Expr(0), b, Expr(0), P("b(q1,q2)*D[0,1]b(q1,q2)", {"b"})});
    CHECK(zero(sec.lifted - expect));
    for (auto n : {"projectable", "second_order", "tangent", "presymplectic"}) CHECK(proved(sec.checks, n));

    VectorField Dbad(T, {Expr(0), P("v2"), Expr(0), Expr(0)});
    CHECK(error_code([&] { second_order_section(led, Dbad, VectorField(led.ham.Tstar, {Expr(0), Expr(0), Expr(0), Expr(0)})); }) ==
          "not_projectable");
}

TEST_CASE("k_operator and the bridge between the pictures") {
    const auto& led = sl1();
    CHECK(same(k_operator(led, P("p2")), P("v1^2*D[0,1]a(q1,q2)/2", fa)));
    CHECK(same(k_operator(led, P("p1")), P("v1^2*D[1,0]a(q1,q2)/2", fa)));
    CHECK(same(k_operator(led, Expr(7)), Expr(0)));
    CHECK(led.lagrangian_surface().test(k_operator(led, P("p1"))).proved());
    // Phi^*{phi, H} for the primary equals K(phi) and cuts out the same set as the first-generation constraint
    auto ps = PoissonStructure::canonical(led.ham.Tstar);
    auto kp = k_operator(led, P("p2"));
    CHECK(same(led.pull(ps.bracket(P("p2"), led.ham.H)), kp));
    CHECK(same(simplify_constraint(kp, led.sys.opts), P("v1")));
    auto cs = check_correspondence(led);
    CHECK(all_proved(cs));
    CHECK(proved(cs, "first_generation_from_k"));
    CHECK(zero(constraint_vertical(led, P("p2")) - VectorField::coordinate(led.sys.T, 3)));
}

TEST_CASE("errors: inconsistent and no_fixed_point") {
    auto line = build(P("x"), Chart::make({"x"}));
    CHECK(error_code([&] { hamiltonian_algorithm(line); }) == "inconsistent");
    auto Q = Chart::make({"q1", "q2"}, {{Assumption::nonzero, P("a(q1,q2)", fa)}, {Assumption::nonzero, P("D[0,1]a(q1,q2)", fa)}});
    ConstraintOptions co;
    co.max_iterations = 1;
    CHECK(error_code([&] { hamiltonian_algorithm(build(P("a(q1,q2)*v1^2/2", fa), Q), co); }) == "no_fixed_point");
}

TEST_CASE("projectability equivalence for L = a v1^2/2 with symbolic beta and delta") {
    const auto& led = sl1();
    const auto& T = led.sys.T;
    const auto& Ts = led.ham.Tstar;
    auto beta = P("beta(q1,q2)", {"beta"});
    VectorField D(T, {Expr(0), beta, Expr(0), P("delta(q1,q2,v1,v2)", {"delta"})});
    CHECK(presymplectic_residual(led, D).proved());
    VectorField Y(Ts, {Expr(0), beta, Expr(0), Expr(0)});
    CHECK(projectability(led, D, Y).verdict.proved());
    auto Yh = substitute(led.ham.dynamics.field, {{led.ham.dynamics.multipliers[0], beta}});
    CHECK(zero(Yh - Y));

    auto beta2 = P("beta(q1,q2,v2)", {"beta"});
    VectorField D2(T, {Expr(0), beta2, Expr(0), Expr(0)});
    CHECK(presymplectic_residual(led, D2).proved());
    VectorField Y2(Ts, {Expr(0), P("beta(q1,q2,0)", {"beta"}), Expr(0), Expr(0)});
    CHECK(projectability(led, D2, Y2).verdict.status == ZeroStatus::proved_nonzero);
}

TEST_CASE("property: projectability equivalence on random polynomial fields (200 cases)") {
    const auto& led = sl1();
    const auto& T = led.sys.T;
    const auto& Ts = led.ham.Tstar;
    std::mt19937_64 rng(811);
    for (int k = 0; k < 200; ++k) {
        bool dep = k % 2;
        auto beta = random_poly(rng, dep ? std::vector<std::string>{"q1", "q2", "v2"} : std::vector<std::string>{"q1", "q2"});
        if (dep) beta = beta + P("v2*q1 + v2^2");
        auto delta = random_poly(rng, {"q1", "q2", "v1", "v2"});
        VectorField D(T, {Expr(0), beta, Expr(0), delta});
        CHECK(presymplectic_residual(led, D).proved());
        auto beta0 = substitute(beta, {{"v2", Expr(0)}});
        VectorField Y(Ts, {Expr(0), beta0, Expr(0), Expr(0)});
        auto c = projectability(led, D, Y);
        if (dep)
            CHECK(c.verdict.status == ZeroStatus::proved_nonzero);
        else
            CHECK(c.verdict.proved());
    }
}

TEST_CASE("property: random linear-in-velocity Lagrangians (200 cases)") {
    std::mt19937_64 rng(4242);
    auto Q3 = Chart::make({"q1", "q2", "q3"});
    auto Q2 = Chart::make({"q1", "q2"});
    int inconsistent = 0;
    for (int k = 0; k < 200; ++k) {
        auto Q = (k % 3 == 0) ? Q2 : Q3;
        const auto& qs = Q->coords();
        Expr L(0);
        for (const auto& q : qs) L = L + random_poly(rng, qs, 2, 1) * Expr::sym("v" + q);
        L = L - random_poly(rng, qs, 3, 2);
        auto sys = build(normalize(L), Q);
        ConstraintLedger led;
        try {
            led = hamiltonian_algorithm(sys);
        } catch (const Error& e) {
            CHECK(e.code == "inconsistent");
            ++inconsistent;
            continue;
        }
        const auto& h = led.ham;
        REQUIRE(h.done);
        // one primary per coordinate; later generations never grow
        CHECK(h.counts().front() == static_cast<int>(qs.size()));
        for (size_t g = 2; g < h.counts().size(); ++g) CHECK(h.counts()[g] <= h.counts()[g - 1]);
        CHECK(h.counts().back() == 0);
        CHECK(h.first_class.size() + h.second_class.size() == h.constraints.size());
        CHECK(h.second_class.size() % 2 == 0);
        for (auto n : {"first_class_closure", "second_class_inverse", "tangency", "tangency_full"}) {
            auto c = find_check(h.checks, n);
            REQUIRE(c);
            CHECK(c->ok());
        }
        if (h.constraints.size() == h.primaries.size()) CHECK(find_check(h.checks, "primary_tangency")->ok());
        // the lifted family on M is X_H + u^mu X_phi_mu
        auto ps = PoissonStructure::canonical(h.Tstar);
        auto Y = ps.hamiltonian_field(h.H);
        for (size_t m = 0; m < h.primaries.size(); ++m)
            Y = Y + Expr::sym(h.on_primary.multipliers[m]) * ps.hamiltonian_field(h.primaries[m]);
        CHECK(led.primary_surface().test(Y - h.on_primary.field).zero());
    }
    CHECK(inconsistent < 200);
}

TEST_CASE("check_singular_noether") {
    SUBCASE("monopole: psi-translations with arbitrary profile") {
        const auto& led = monopole();
        const auto& T = led.sys.T;
        auto f = P("f(r,th,ph,ps,vr,vth,vph,vps)", {"f"});
        auto X = VectorField::zero(T);
        X.c[3] = f;
        X.c[7] = led.lag.second_order.field(f);
        auto c = check_singular_noether(led, {X, P("lam") * f, SymmetryKind::newtonoid});
        CHECK(c.certified());
        CHECK(same(c.charge, Expr(0)));
    }
    SUBCASE("trivial candidate") {
        auto c = check_singular_noether(sl1(), {VectorField::zero(sl1().sys.Q), Expr(0), SymmetryKind::newtonian});
        CHECK(c.certified());
        CHECK(same(c.charge, Expr(0)));
    }
    SUBCASE("relativistic particle: rotation and boost") {
        const auto& led = relativistic3();
        auto Q = led.sys.Q;
        auto R = VectorField::zero(Q);
        R.c[1] = P("-x2");
        R.c[2] = P("x1");
        auto c = check_singular_noether(led, {R, Expr(0), SymmetryKind::newtonian});
        CHECK(c.certified());
        CHECK(same(c.charge, P("m*(v2*x1 - v1*x2)*(v0^2 - v1^2 - v2^2)^(-1/2)"), led.sys.opts));
        auto B = VectorField::zero(Q);
        B.c[0] = P("x1");
        B.c[1] = P("x0");
        c = check_singular_noether(led, {B, Expr(0), SymmetryKind::newtonian});
        CHECK(c.certified());
        CHECK(same(c.charge, P("m*(v1*x0 - v0*x1)*(v0^2 - v1^2 - v2^2)^(-1/2)"), led.sys.opts));
        auto S = VectorField::zero(Q);
        S.c[1] = P("x1");
        c = check_singular_noether(led, {S, Expr(0), SymmetryKind::newtonian});
        CHECK_FALSE(c.certified());
    }
}
