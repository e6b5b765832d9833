// Implicit differential equations as zero-level sets in tangent bundles.
#pragma once

#include <string>
#include <vector>

#include "mechsym/check.hpp"
#include "mechsym/geometry.hpp"

namespace mechsym {

enum class ODEOrder { first, second };

struct ImplicitODE {
    ChartPtr chart;            // tangent chart (first order) or tangent-of-tangent chart (second order)
    std::vector<Expr> psi;     // level functions
    ODEOrder order = ODEOrder::first;

    ImplicitODE(ChartPtr ambient, std::vector<Expr> level, ODEOrder ord = ODEOrder::first);
    // Base manifold M (the chart that symmetry fields live on).
    ChartPtr base() const;
    // Level functions plus, for second order, the identification of the iterated velocities.
    std::vector<Expr> generators() const;
    static ImplicitODE graph(const VectorField& Gamma, const ChartPtr& T);
};

struct MembershipOptions {
    int max_degree = 4;   // multiplier degree cap for the linear ansatz
    int newton_iters = 50;
    double newton_tol = 1e-12;
    int points = 12;      // on-manifold sample points
};

// Decision that `target` vanishes on the common zero set of `gens`.
struct Membership {
    ZeroVerdict verdict;
    std::string tier;                  // normal_form | ideal_ansatz | on_manifold_sampling
    std::vector<Expr> multipliers;     // target = sum multipliers[a] * gens[a] (ideal_ansatz only)
};
Membership ideal_member(const Expr& target, const std::vector<Expr>& gens, const ZeroOptions& opts = {},
                        const MembershipOptions& mo = {});

struct MotionVerdict {
    Membership membership;
    Expr dN_f;
    bool constant() const { return membership.verdict.zero(); }
};
MotionVerdict check_constant_of_motion(const ImplicitODE& Z, const Expr& f, const ZeroOptions& opts = {},
                                       const MembershipOptions& mo = {});

enum class SymmetryStatus { symmetry, not_symmetry, inconclusive };
const char* status_name(SymmetryStatus s);

struct SymmetryVerdict {
    SymmetryStatus status = SymmetryStatus::inconclusive;
    Mat A;                          // L_{X^(N)} psi^a = A^a_b psi^b
    std::vector<Expr> residuals;    // L_{X^(N)} psi^a
    std::vector<Membership> rows;
};
SymmetryVerdict check_symmetry(const ImplicitODE& Z, const VectorField& X, const ZeroOptions& opts = {},
                               const MembershipOptions& mo = {});

struct ParametrizedMap {
    ChartPtr params;           // parameter chart
    KForm omega;               // 2-form on the target chart
    std::vector<Expr> images;  // one per target coordinate, in the parameters
};

enum class SubmanifoldStatus { lagrangian, nonisotropic, rank_deficient, wrong_dimension };
const char* status_name(SubmanifoldStatus s);

struct SubmanifoldVerdict {
    SubmanifoldStatus status = SubmanifoldStatus::nonisotropic;
    ZeroVerdict isotropic;
    int rank = 0;
    KForm pulled;
};
SubmanifoldVerdict check_lagrangian_submanifold(const ParametrizedMap& P, const ZeroOptions& opts = {});

}  // namespace mechsym
