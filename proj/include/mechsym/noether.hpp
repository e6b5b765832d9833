// Noether certification for Newtonian, Newtonoid and singular symmetries.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mechsym/check.hpp"
#include "mechsym/constraints.hpp"
#include "mechsym/lagrangian.hpp"

namespace mechsym {

enum class SymmetryKind { newtonian, general, newtonoid };
const char* kind_name(SymmetryKind k);

struct SymmetryCandidate {
    VectorField X;   // on Q for newtonian, on TQ otherwise
    Expr u;          // gauge term
    SymmetryKind kind = SymmetryKind::newtonian;
};

enum class CertificateVerdict { certified, not_certified };

struct NoetherCertificate {
    SymmetryCandidate candidate;
    VectorField field;  // the field actually tested on TQ: X^(N), X^(D) or X_phi
    Expr charge;
    std::vector<Check> checks;
    CertificateVerdict verdict = CertificateVerdict::not_certified;
    std::vector<std::string> diagnosis;
    bool certified() const { return verdict == CertificateVerdict::certified; }
    ZeroStatus status() const { return overall(checks); }
    const Check* check(const std::string& name) const { return find_check(checks, name); }
};

// Newtonian (point) symmetry with gauge u(q): L_{X^(N)} L = L_D u and the Noether relations.
NoetherCertificate check_newtonian(const LagrangianSystem& sys, const SymmetryCandidate& c);

// X^(D) = X + S([D, X]).
VectorField newtonoid_projection(const VectorField& X, const VectorField& D);

// Newtonoid symmetry in the strict sense (both conditions, second one over a vertical basis).
NoetherCertificate check_newtonoid(const LagrangianSystem& sys, const SymmetryCandidate& c);

// From a constant of motion phi to its omega_L-Hamiltonian Newtonoid symmetry; throws not_invariant.
NoetherCertificate inverse_noether(const LagrangianSystem& sys, const Expr& phi);

struct ClosureTable {
    size_t size = 0;
    std::vector<std::vector<Expr>> brackets;       // brackets[a][b] = {phi_a, phi_b}
    std::vector<Check> checks;                     // i_[X_a,X_b] omega_L = d{phi_b, phi_a}
    bool closes = false;                           // every bracket is a constant-coefficient combination
    // structure[a][b][c] = C_ab^c with {phi_a, phi_b} = sum_c C_ab^c phi_c + structure_const[a][b]
    std::vector<std::vector<std::vector<Rational>>> structure;
    std::vector<std::vector<Rational>> structure_const;
};
ClosureTable bracket_closure(const LagrangianSystem& sys, const std::vector<NoetherCertificate>& certs);

// Searches a gauge u as a rational polynomial of degree <= 2 in the velocities and <= 2 in
// the positions with L_{X^(N)} L = L_D u; nullopt when none exists in that class.
std::optional<Expr> search_gauge(const LagrangianSystem& sys, const VectorField& X);

// Symmetry of a singular Lagrangian: L_{X^(G)} L = L_G u for every second-order G, and the
// relations of the charge F = i_{X^(G)} theta_L - u on the final constraint set for every
// solution D of the ledger. Throws ledger_missing when the Lagrangian side is absent.
NoetherCertificate check_singular_noether(const ConstraintLedger& led, const SymmetryCandidate& c);

}  // namespace mechsym
