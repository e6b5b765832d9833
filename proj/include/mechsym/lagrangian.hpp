// Euler-Lagrange package: Cartan forms, energy, Hessian, regular dynamics, Legendre map.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mechsym/check.hpp"
#include "mechsym/geometry.hpp"

namespace mechsym {

struct LagrangianSystem {
    ChartPtr Q;  // base chart
    ChartPtr T;  // tangent chart over Q
    Expr L;
    KForm theta;   // dL/dv^a dq^a
    KForm omega;   // -d theta
    Expr energy;   // Delta(L) - L
    Mat hessian;   // d^2 L / dv^a dv^b
    int rank = 0;
    bool regular = false;
    bool rank_unstable = false;  // some rank decision rested on sampling
    ZeroOptions opts;            // zero-test options including chart assumptions

    ZeroTest zero_test() const { return plain_zero_test(opts); }
    size_t n() const { return Q->dim(); }
};

// `chart` is either a base chart (velocities named by default) or a tangent chart.
LagrangianSystem build(const Expr& L, const ChartPtr& chart, const ZeroOptions& opts = {});

// Unique second-order field of a regular system, with accelerations solved from the Hessian.
VectorField solve_second_order_field(const LagrangianSystem& sys);

// Residual L_D theta_L - dL.
struct EulerLagrangeVerdict {
    ZeroVerdict verdict;
    KForm residual;
    bool admissible() const { return verdict.zero(); }
};
EulerLagrangeVerdict check_euler_lagrange(const LagrangianSystem& sys, const VectorField& D);

struct LegendreMap {
    ChartPtr Tstar;             // cotangent chart over Q
    Vec momenta;                // p_a = dL/dv^a as functions on TQ
    bool fiber_solvable = false;
    Vec velocities;             // v^a(q, p) when solvable (free velocities set to 0 otherwise)
    Expr hamiltonian;           // H with H o Phi_L = E_L (regular case)
    std::vector<Expr> image;    // relations on T*Q cutting out the image (singular case)
    ZeroVerdict pullback;       // Phi_L^* (dq^a ^ dp_a) = omega_L
    ZeroVerdict energy_match;   // H o Phi_L = E_L (regular case)
};
LegendreMap legendre(const LagrangianSystem& sys, const ChartPtr& Tstar = nullptr);

struct NullDecomposition {
    Expr potential;        // v-independent part f(q)
    KForm gauge;           // alpha on Q, the v-linear part
    Expr residual;         // remainder of higher order in v
    ZeroVerdict gauge_closed;
    ZeroVerdict omega_zero;  // omega_L = 0
    bool pure_potential() const { return gauge.c.empty() && residual.is_zero_literal(); }
};
NullDecomposition classify_null(const Expr& L, const ChartPtr& chart, const ZeroOptions& opts = {});

}  // namespace mechsym
