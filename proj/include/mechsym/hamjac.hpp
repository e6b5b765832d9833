// Time-independent Hamilton-Jacobi theory: residuals, complete integrals, characteristics,
// canonical symmetries, generalized solutions and reduction by cyclic coordinates.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "mechsym/check.hpp"
#include "mechsym/geometry.hpp"

namespace mechsym {

// W(q; u) on Q x U. `energy` names the value E of the Hamiltonian (a parameter or a separate symbol).
struct HJCandidate {
    ChartPtr Q;
    Expr W;
    std::vector<std::string> params;
    std::string energy = "E";
    std::vector<Assumption> assumptions;
    ChartPtr Tstar;  // cotangent chart carrying H (default momentum names when null)

    ChartPtr cotangent() const;
    ZeroOptions options(ZeroOptions base = {}) const;
    std::map<std::string, Expr> momenta() const;  // p_a -> dW/dq^a
};

// H(q, dW/dq) - E, normalized.
Expr hj_residual(const Expr& H, const HJCandidate& c);

struct HJCertificate {
    bool complete = false;          // as many parameters as coordinates
    int rank = 0;                   // generic rank of d2W/dq du
    ZeroVerdict nondegenerate;      // verdict on det d2W/dq du (complete) -- must be nonzero
    Expr determinant;
    std::vector<Check> checks;      // residual, involution, invariance
    bool certified() const;
};
HJCertificate complete_integral_check(const Expr& H, const HJCandidate& c, const ZeroOptions& opts = {});

struct Characteristics {
    VectorField base;          // qdot^a = dH/dp_a at p = dW/dq
    std::vector<Expr> momenta; // p_a = dW/dq^a along the base curves
};
// `values` fixes the parameters; throws uncertified_candidate when the residual is nonzero.
Characteristics characteristics(const Expr& H, const HJCandidate& c, const std::map<std::string, Expr>& values,
                                const ZeroOptions& opts = {});

struct HJSymmetryCandidate {
    VectorField X0;  // on Q
    Expr f;          // function on Q
};
struct HJSymmetryCertificate {
    VectorField X;   // canonical lift of X0 plus the Hamiltonian field of f
    Expr charge;     // F = p_a X0^a + f
    std::vector<Check> checks;  // generator, conservation
    bool certified() const { return overall(checks) != ZeroStatus::proved_nonzero; }
};
HJSymmetryCertificate check_hj_symmetry(const Expr& H, const ChartPtr& Tstar, const HJSymmetryCandidate& s,
                                        const ZeroOptions& opts = {});

// Level set {H = E, levels = 0} as a generalized solution, plus commutants as symmetries.
struct GeneralizedHJCertificate {
    int count = 0;              // number of level functions including H - E
    int rank = 0;               // generic rank of their differentials
    std::vector<Check> checks;  // dimension, independence, involution_<i>_<j>, commutant_<k>
    bool certified() const { return overall(checks) != ZeroStatus::proved_nonzero; }
};
GeneralizedHJCertificate generalized_hj_check(const PoissonStructure& P, const Expr& H, const Expr& E,
                                              const std::vector<Expr>& levels, const std::vector<Expr>& commutants,
                                              const ZeroOptions& opts = {});

// Coordinates adapted to symmetries on Q: new coordinates as functions of the old ones and back.
struct AdaptedChart {
    std::vector<std::string> coords;
    std::vector<Expr> forward;           // new in terms of old
    std::vector<Expr> inverse;           // old in terms of new
    std::vector<std::string> momenta;    // names of the new momenta (default p<name>)
};
struct CyclicSymmetry {
    VectorField X0;            // on the old Q
    std::string coordinate;    // new coordinate a with phi_* X0 = d/da
    std::string constant;      // value k of the conjugate momentum
};
struct CyclicReduction {
    ChartPtr adapted;          // cotangent chart of the adapted coordinates
    ChartPtr reduced;          // cotangent chart of the remaining coordinates
    Expr H_adapted;            // H in adapted canonical coordinates
    Expr H_reduced;            // with the cyclic momenta fixed to their constants
    AdaptedChart chart;
    std::vector<CyclicSymmetry> cyclic;
    std::vector<Check> checks; // inverse, symmetry_<a>, cyclic_<a>
    // W = sum a k + W_reduced, written in the old coordinates.
    Expr recompose(const Expr& W_reduced) const;
};
// Throws not_adapted when some X0 does not push forward to its coordinate field.
CyclicReduction separate_cyclic(const Expr& H, const ChartPtr& Tstar, const AdaptedChart& chart,
                                const std::vector<CyclicSymmetry>& cyclic, const ZeroOptions& opts = {});
// residual(H, recomposed W) pulled to adapted coordinates minus residual(H_reduced, W_reduced).
Check recomposition_check(const Expr& H, const ChartPtr& Tstar, const CyclicReduction& red, const Expr& W_reduced,
                          const std::string& energy = "E", const ZeroOptions& opts = {});

}  // namespace mechsym
