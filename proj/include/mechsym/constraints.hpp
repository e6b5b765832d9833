// Constraint algorithm for singular Lagrangians on T*Q and on TQ.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mechsym/check.hpp"
#include "mechsym/implicit.hpp"
#include "mechsym/lagrangian.hpp"

namespace mechsym {

// Zero test modulo the ideal of a set of constraints. Constraints linear in some coordinate
// with a constant coefficient are eliminated by substitution; the rest go to ideal_member.
class ConstraintSurface {
public:
    ConstraintSurface() = default;
    ConstraintSurface(ChartPtr chart, const std::vector<Expr>& gens, ZeroOptions opts, MembershipOptions mo = {});
    void add(const Expr& g);
    Expr reduce(const Expr& e) const;
    ZeroVerdict test(const Expr& e) const;
    ZeroVerdict test(const VectorField& X) const;
    ZeroVerdict test(const KForm& w) const;
    ZeroTest zero_test() const;
    const std::map<std::string, Expr>& solved() const { return solved_; }
    std::vector<Expr> residual() const;  // unsolved generators, reduced
    const std::vector<Expr>& generators() const { return gens_; }
    const ZeroOptions& options() const { return opts_; }

private:
    ChartPtr chart_;
    ZeroOptions opts_;
    MembershipOptions mo_;
    std::vector<Expr> gens_;
    std::vector<Expr> unsolved_;
    std::map<std::string, Expr> solved_;
};

// Strips numeric factors, denominators, factors declared nonzero and repeated powers from a
// constraint without changing its zero set.
Expr simplify_constraint(const Expr& e, const ZeroOptions& opts);

struct KernelDecomposition {
    std::vector<VectorField> kernel;    // basis of ker omega_L, vertical elements first
    std::vector<VectorField> vertical;  // basis of the vertical part (Hessian null space)
    bool type_II = true;                // S maps the kernel onto its vertical part
    std::vector<Check> checks;
};
// Throws rank_unstable when the Hessian rank rested on sampling.
KernelDecomposition kernel_decomposition(const LagrangianSystem& sys);

struct ConstraintOptions {
    int max_iterations = 10;
    std::vector<Expr> primaries;      // user-supplied primary constraints on T*Q (verified)
    std::optional<Expr> hamiltonian;  // extension of the energy to T*Q
    ChartPtr Tstar;                   // cotangent chart (default momenta names when null)
    MembershipOptions membership;
};

struct Generation {
    std::vector<Expr> constraints;  // independent new constraints
    std::vector<Expr> dropped;      // functionally dependent candidates
};

// A vector field depending linearly on free multiplier symbols.
struct LiftedFamily {
    VectorField field;
    std::vector<std::string> multipliers;
};

struct HamiltonianSide {
    bool done = false;
    ChartPtr Tstar;
    LegendreMap legendre;
    Expr H;                              // extension of the energy
    std::vector<Expr> primaries;
    std::vector<Generation> generations;  // primaries first; the last one is empty at the fixed point
    std::vector<Expr> constraints;        // all constraints in discovery order
    Mat brackets;                         // {phi_a, phi_b} reduced on the final manifold
    std::vector<int> second_class;        // indices into constraints
    Mat C;                                // inverse of the second-class bracket matrix
    std::vector<Expr> first_class;        // first-class combinations w.r.t. all constraints
    std::vector<Expr> first_class_primary;  // first-class combinations of primaries only
    LiftedFamily on_primary;     // dynamics on the primary manifold, primary multipliers
    LiftedFamily dynamics_full;  // final manifold, multipliers for all first-class constraints
    LiftedFamily dynamics;       // final manifold, multipliers for first-class primaries only
    std::vector<Check> checks;
    std::vector<int> counts() const;
};

struct LagrangianSide {
    bool done = false;
    KernelDecomposition kernel;
    std::vector<Expr> kernel_energy;      // L_K E_L per kernel basis element
    std::vector<Generation> generations;  // first generation first; the last one is empty
    std::vector<Expr> constraints;
    LiftedFamily solutions;               // general solution of i_D omega_L = dE_L on the final set
    VectorField defect;                   // S(D) - Delta for the family
    bool second_order_global = false;     // some member is second order on the whole final set
    LiftedFamily second_order;            // second-order members (when global)
    std::vector<Expr> second_order_conditions;  // otherwise: v^a - D^a restricted
    std::vector<Check> checks;
    std::vector<int> counts() const;
};

struct ConstraintLedger {
    LagrangianSystem sys;
    ConstraintOptions options;
    HamiltonianSide ham;
    LagrangianSide lag;
    std::vector<std::string> transcript;

    ZeroOptions cotangent_options() const;
    ZeroOptions tangent_options() const { return sys.opts; }
    ConstraintSurface hamiltonian_surface() const;  // final manifold in T*Q
    ConstraintSurface primary_surface() const;      // primary manifold in T*Q
    ConstraintSurface lagrangian_surface() const;   // final set in TQ
    Expr pull(const Expr& f) const;                 // Legendre pullback of a function on T*Q
};

// Errors: primaries_unavailable, not_primary, hamiltonian_unavailable, no_fixed_point, inconsistent.
ConstraintLedger hamiltonian_algorithm(const LagrangianSystem& sys, const ConstraintOptions& opts = {});
ConstraintLedger lagrangian_algorithm(const LagrangianSystem& sys, const ConstraintOptions& opts = {});
ConstraintLedger constraint_algorithm(const LagrangianSystem& sys, const ConstraintOptions& opts = {});

// Residual of i_D omega_L = dE_L on the final Lagrangian set.
ZeroVerdict presymplectic_residual(const ConstraintLedger& led, const VectorField& D);

// L_D (Phi^* f) = Phi^*(Y f) for the coordinate functions f of T*Q, on the final Lagrangian set.
Check projectability(const ConstraintLedger& led, const VectorField& D, const VectorField& Y);

struct SectionResult {
    std::map<std::string, Expr> multipliers;  // multiplier values making D second order
    std::map<std::string, Expr> sigma;        // velocities fixed on the section
    std::vector<Expr> section;                // v^a - sigma[v^a]
    VectorField lifted;                       // tangent to the section, second order on it
    std::vector<Check> checks;
    bool global() const { return sigma.empty(); }
};
// Y (optional, on T*Q) is the projected field; throws not_projectable, no_section.
SectionResult second_order_section(const ConstraintLedger& led, const VectorField& D, const VectorField& Y = {});

// K(f) = Phi^*{f, p_j} v^j + Phi^*{q^j, f} dL/dq^j.
Expr k_operator(const ConstraintLedger& led, const Expr& f);
// Vertical field Phi^*{q^j, phi} d/dv^j attached to a constraint on T*Q.
VectorField constraint_vertical(const ConstraintLedger& led, const Expr& phi);
// Relations between the Hamiltonian primaries and the first Lagrangian generation.
std::vector<Check> check_correspondence(const ConstraintLedger& led);

}  // namespace mechsym
