#include "mechsym/noether.hpp"
#include "support.hpp"

using namespace mt;

namespace {

ChartPtr plane() { return Chart::make({"x", "y"}); }
ChartPtr q12() { return Chart::make({"q1", "q2"}); }
ChartPtr q123() { return Chart::make({"q1", "q2", "q3"}); }

const std::set<std::string> fnV{"V"};

LagrangianSystem radial() { return build(P("(vx^2+vy^2)/2 - V(sqrt(x^2+y^2))", fnV), plane()); }
LagrangianSystem osc2() { return build(P("(v1^2+v2^2-q1^2-q2^2)/2"), q12()); }
LagrangianSystem alt2() { return build(P("v1*v2 - q1*q2"), q12()); }

VectorField on(const ChartPtr& ch, std::vector<std::string> cs) {
    std::vector<Expr> c;
    for (auto& s : cs) c.push_back(P(s));
    return VectorField(ch, c);
}

bool all_proved(const NoetherCertificate& c) {
    for (const auto& k : c.checks)
        if (k.mandatory && !k.verdict.proved()) return false;
    return true;
}

}  // namespace

TEST_CASE("check_newtonian: rotation of a radial potential") {
    auto s = radial();
    auto c = check_newtonian(s, {on(plane(), {"y", "-x"}), Expr(0), SymmetryKind::newtonian});
    CHECK(c.certified());
    CHECK(same(c.charge, P("y*vx - x*vy")));
    CHECK(all_proved(c));
    for (auto n : {"lagrangian_condition", "hamiltonicity", "commutator", "energy_invariance"}) {
        REQUIRE(c.check(n));
        CHECK(c.check(n)->verdict.proved());
    }
}

TEST_CASE("check_newtonian: squeezing field against two Lagrangians of the oscillator") {
    auto XS = on(q12(), {"q1", "-q2"});
    auto bad = check_newtonian(osc2(), {XS, P("q1*v1 - q2*v2"), SymmetryKind::newtonian});
    CHECK_FALSE(bad.certified());
    CHECK(bad.check("lagrangian_condition")->verdict.proved());
    CHECK(bad.charge.is_zero_literal());
    CHECK(bad.check("hamiltonicity")->verdict.status == ZeroStatus::proved_nonzero);
    CHECK(bad.check("closedness")->verdict.status == ZeroStatus::proved_nonzero);  // i_X omega not even closed
    CHECK(bad.check("gauge_basic")->verdict.status == ZeroStatus::proved_nonzero);
    CHECK_FALSE(bad.diagnosis.empty());
    CHECK(bad.diagnosis[0] == "degenerate charge: phi = 0");

    auto good = check_newtonian(alt2(), {XS, Expr(0), SymmetryKind::newtonian});
    CHECK(good.certified());
    CHECK(all_proved(good));
    CHECK(same(good.charge, P("v2*q1 - v1*q2")));

    auto u = search_gauge(osc2(), XS);
    REQUIRE(u);
    CHECK(same(*u, P("q1*v1 - q2*v2")));
    CHECK_FALSE(search_gauge(osc2(), on(q12(), {"q1^3", "0"})));
}

TEST_CASE("newtonoid_projection") {
    auto s = osc2();
    auto D = solve_second_order_field(s);
    auto V = VectorField::coordinate(s.T, 2);
    CHECK(zero(newtonoid_projection(V, D)));
    auto XN = tangent_lift(on(q12(), {"q2", "-q1"}), s.T);
    CHECK(zero(newtonoid_projection(XN, D) - XN));
    auto X6 = on(s.T, {"v2", "v1", "-q2", "-q1"});
    CHECK(zero(newtonoid_projection(X6, D) - X6));
    std::mt19937_64 rng(37);
    for (int k = 0; k < 50; ++k) {
        auto Y = newtonoid_projection(random_field(rng, s.T), D);
        CHECK(zero(soldering(bracket(Y, D))));
    }
}

TEST_CASE("check_newtonoid and inverse_noether on the oscillator") {
    auto s = osc2();
    auto X6 = on(s.T, {"v2", "v1", "-q2", "-q1"});
    auto c = check_newtonoid(s, {X6, P("v1*v2 - q1*q2"), SymmetryKind::newtonoid});
    CHECK(c.certified());
    CHECK(all_proved(c));
    CHECK(same(c.charge, P("v1*v2 + q1*q2")));

    auto inv = inverse_noether(s, P("v1*v2 + q1*q2"));
    CHECK(zero(inv.field - X6));
    CHECK(all_proved(inv));
    auto back = check_newtonoid(s, inv.candidate);
    CHECK(back.certified());
    CHECK(same(back.charge, P("v1*v2 + q1*q2")));

    // the second quadratic charge: the sign pattern (-q1^2 + q2^2) is not invariant, (+q1^2 - q2^2) is
    CHECK_THROWS_WITH_AS(inverse_noether(s, P("(v1^2 - v2^2 - q1^2 + q2^2)/2")), doctest::Contains("constant of motion"),
                         Error);
    auto phi2 = P("(v1^2 - v2^2 + q1^2 - q2^2)/2");
    auto inv2 = inverse_noether(s, phi2);
    CHECK(all_proved(inv2));
    auto back2 = check_newtonoid(s, inv2.candidate);
    CHECK(back2.certified());
    CHECK(all_proved(back2));
    CHECK(same(back2.charge, phi2));

    CHECK(zero(inverse_noether(s, s.energy).field - solve_second_order_field(s)));
    CHECK_THROWS_WITH_AS(inverse_noether(s, P("q1")), doctest::Contains("constant of motion"), Error);
}

TEST_CASE("inverse_noether recovers the rotation lift of a radial potential") {
    auto s = radial();
    auto inv = inverse_noether(s, P("y*vx - x*vy"));
    CHECK(zero(inv.field - tangent_lift(on(plane(), {"y", "-x"}), s.T)));
    CHECK(all_proved(inv));
}

TEST_CASE("Kepler: Runge-Lenz component is a Newtonoid charge") {
    auto s = build(P("(v1^2+v2^2+v3^2)/2 + c/sqrt(q1^2+q2^2+q3^2)"), q123());
    auto D = solve_second_order_field(s);
    CHECK(zero(D - second_order_field(s.T, {P("-c*q1/(q1^2+q2^2+q3^2)^(3/2)"), P("-c*q2/(q1^2+q2^2+q3^2)^(3/2)"),
                                          P("-c*q3/(q1^2+q2^2+q3^2)^(3/2)")})));
    auto R1 = P("(v1^2+v2^2+v3^2 - c/sqrt(q1^2+q2^2+q3^2))*q1 - (v1*q1+v2*q2+v3*q3)*v1");
    auto inv = inverse_noether(s, R1);
    CHECK(all_proved(inv));
    auto back = check_newtonoid(s, inv.candidate);
    CHECK(back.certified());
    CHECK(all_proved(back));
    CHECK(same(back.charge, R1));
    // not a point symmetry: the field depends on the velocities in its base components
    CHECK_FALSE(zero(VectorField(s.T, {differentiate(inv.field[0], "v2"), Expr(0), Expr(0), Expr(0), Expr(0), Expr(0)})));
}

TEST_CASE("inverse_noether: quadrupole components of the 3-d oscillator") {
    auto s = build(P("(v1^2+v2^2+v3^2-q1^2-q2^2-q3^2)/2"), q123());
    auto inv = inverse_noether(s, P("v1*v2 + q1*q2"));
    CHECK(zero(inv.field - on(s.T, {"v2", "v1", "0", "-q2", "-q1", "0"})));
    CHECK(all_proved(check_newtonoid(s, inv.candidate)));
}

TEST_CASE("bracket_closure: angular momenta and so(2,1)") {
    auto s = build(P("(v1^2+v2^2+v3^2-q1^2-q2^2-q3^2)/2"), q123());
    std::vector<NoetherCertificate> cs;
    for (auto X : {on(q123(), {"0", "-q3", "q2"}), on(q123(), {"q3", "0", "-q1"}), on(q123(), {"-q2", "q1", "0"})})
        cs.push_back(check_newtonian(s, {X, Expr(0), SymmetryKind::newtonian}));
    CHECK(same(cs[0].charge, P("q2*v3 - q3*v2")));
    CHECK(same(cs[1].charge, P("q3*v1 - q1*v3")));
    CHECK(same(cs[2].charge, P("q1*v2 - q2*v1")));
    auto t = bracket_closure(s, cs);
    CHECK(t.closes);
    for (const auto& k : t.checks) CHECK(k.verdict.proved());
    auto eps = [](size_t a, size_t b, size_t c) {
        if (a == b || b == c || a == c) return 0;
        return ((b + 3 - a) % 3 == 1) ? 1 : -1;
    };
    for (size_t a = 0; a < 3; ++a)
        for (size_t b = 0; b < 3; ++b) {
            if (a == b) continue;
            for (size_t c = 0; c < 3; ++c) CHECK(t.structure[a][b][c] == eps(a, b, c));
            CHECK(t.structure_const[a][b] == 0);
        }

    auto h = build(P("(v1^2+v2^2-v3^2-q1^2-q2^2+q3^2)/2"), q123());
    std::vector<NoetherCertificate> so21;
    for (auto X : {on(q123(), {"-q2", "q1", "0"}), on(q123(), {"q3", "0", "q1"}), on(q123(), {"0", "q3", "q2"})})
        so21.push_back(check_newtonian(h, {X, Expr(0), SymmetryKind::newtonian}));
    for (const auto& c : so21) CHECK(all_proved(c));
    auto t2 = bracket_closure(h, so21);
    CHECK(t2.closes);
    for (const auto& k : t2.checks) CHECK(k.verdict.proved());
    // {J,K1} = K2, {J,K2} = -K1, {K1,K2} = -J : the Lie algebra so(2,1)
    CHECK(t2.structure[0][1] == std::vector<Rational>{0, 0, 1});
    CHECK(t2.structure[0][2] == std::vector<Rational>{0, -1, 0});
    CHECK(t2.structure[1][2] == std::vector<Rational>{-1, 0, 0});

    auto one = bracket_closure(s, {cs[0]});
    CHECK(one.size == 1);
    CHECK(one.closes);
    CHECK(one.checks.empty());
}

TEST_CASE("property: lifts commute with the Cartan construction (200 cases)") {
    std::mt19937_64 rng(35);
    auto T = Chart::tangent(q12());
    for (int k = 0; k < 200; ++k) {
        auto s = build(random_poly(rng, T->coords(), 3, 3), q12());
        auto XN = tangent_lift(random_field(rng, q12()), T);
        auto lifted = build(XN(s.L), q12());
        CHECK(zero(lie(XN, s.theta) - lifted.theta));
        CHECK(zero(lie(XN, s.omega) - lifted.omega));
    }
}

TEST_CASE("property: i_{X^(D)} theta_L = i_X theta_L (200 cases)") {
    std::mt19937_64 rng(41);
    auto T = Chart::tangent(q12());
    for (int k = 0; k < 200; ++k) {
        auto s = build(random_poly(rng, T->coords(), 3, 3), q12());
        auto D = second_order_field(T, {random_poly(rng, T->coords()), random_poly(rng, T->coords())});
        auto X = random_field(rng, T);
        CHECK(zero(interior(newtonoid_projection(X, D), s.theta) - interior(X, s.theta)));
    }
}

TEST_CASE("property: energy identity and idempotent inverse map on certified charges (200 cases)") {
    std::mt19937_64 rng(42);
    auto s = osc2();
    auto D = solve_second_order_field(s);
    std::vector<Expr> gens{P("v1^2+q1^2"), P("v2^2+q2^2"), P("v1*v2+q1*q2"), P("q1*v2-q2*v1")};
    std::uniform_int_distribution<int> c(-3, 3);
    for (int k = 0; k < 200; ++k) {
        Expr phi(0);
        for (const auto& g : gens) phi = phi + Expr(c(rng)) * g;
        phi = phi + Expr(c(rng)) * gens[k % 4] * gens[(k + 1) % 4];
        auto inv = inverse_noether(s, phi);
        auto cert = check_newtonoid(s, inv.candidate);
        REQUIRE(cert.certified());
        auto XD = cert.field;
        CHECK(zero(XD(s.energy) - interior(D, d(s.T, cert.charge) - interior(XD, s.omega)).value()));
        CHECK(zero(inverse_noether(s, cert.charge).field - XD));
    }
}
