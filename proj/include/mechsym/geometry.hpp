// Charts, vector fields, differential forms and tangent-bundle structures.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mechsym/eval.hpp"
#include "mechsym/expr.hpp"
#include "mechsym/linalg.hpp"

namespace mechsym {

enum class BundleRole { base, tangent, cotangent, tangent_of_tangent, tangent_of_cotangent };
const char* role_name(BundleRole r);

class Chart;
using ChartPtr = std::shared_ptr<const Chart>;

// Ordered coordinates. Derived charts list the base coordinates first, then the fiber ones.
class Chart {
public:
    static ChartPtr make(std::vector<std::string> coords, std::vector<Assumption> assumptions = {});
    // Velocity names default to v<k> for q<k>, otherwise v<name>.
    static ChartPtr tangent(const ChartPtr& base, std::vector<std::string> names = {});
    // Momentum names default to p<k> for q<k>, otherwise p<name>.
    static ChartPtr cotangent(const ChartPtr& base, std::vector<std::string> names = {});

    const std::vector<std::string>& coords() const { return coords_; }
    const std::string& coord(size_t i) const { return coords_.at(i); }
    size_t dim() const { return coords_.size(); }
    BundleRole role() const { return role_; }
    const ChartPtr& base() const { return base_; }
    size_t base_dim() const { return base_ ? base_->dim() : dim(); }
    std::vector<std::string> base_coords() const;
    std::vector<std::string> fiber_coords() const;
    size_t index(const std::string& name) const;  // throws unknown_coordinate
    bool has(const std::string& name) const;
    const std::vector<Assumption>& assumptions() const { return assumptions_; }
    Expr x(size_t i) const { return Expr::sym(coords_.at(i)); }
    Expr x(const std::string& name) const { return Expr::sym(coords_.at(index(name))); }

private:
    std::vector<std::string> coords_;
    BundleRole role_ = BundleRole::base;
    ChartPtr base_;
    std::vector<Assumption> assumptions_;
};

void require_same_chart(const ChartPtr& a, const ChartPtr& b);
ZeroOptions chart_options(const ChartPtr& c, ZeroOptions opts);  // adds the chart assumptions

struct VectorField {
    ChartPtr chart;
    std::vector<Expr> c;

    VectorField() = default;
    VectorField(ChartPtr ch, std::vector<Expr> comps);
    static VectorField zero(const ChartPtr& ch);
    static VectorField coordinate(const ChartPtr& ch, size_t i);
    const Expr& operator[](size_t i) const { return c.at(i); }
    Expr operator()(const Expr& f) const;  // X(f)
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a);
VectorField operator*(const Expr& f, const VectorField& a);
VectorField bracket(const VectorField& a, const VectorField& b);
VectorField substitute(const VectorField& X, const std::map<std::string, Expr>& b);

// k-form with coefficients on strictly increasing index tuples.
struct KForm {
    ChartPtr chart;
    int degree = 0;
    std::map<std::vector<int>, Expr> c;

    KForm() = default;
    KForm(ChartPtr ch, int k) : chart(std::move(ch)), degree(k) {}
    static KForm scalar(const ChartPtr& ch, const Expr& f);
    static KForm dx(const ChartPtr& ch, size_t i);
    static KForm one_form(const ChartPtr& ch, const std::vector<Expr>& comps);
    // Adds coef * dx^{idx[0]} ^ ... (any order, repeated indices vanish).
    void add(std::vector<int> idx, const Expr& coef);
    Expr get(std::vector<int> idx) const;  // any order, with sign
    Expr value() const { return get({}); }  // degree 0
    std::vector<Expr> components() const;   // degree 1: one entry per coordinate
    Mat matrix() const;                      // degree 2: antisymmetric Omega_ij = w(d_i, d_j)
};

KForm operator+(const KForm& a, const KForm& b);
KForm operator-(const KForm& a, const KForm& b);
KForm operator-(const KForm& a);
KForm operator*(const Expr& f, const KForm& a);
KForm d(const KForm& w);
KForm d(const ChartPtr& ch, const Expr& f);
KForm wedge(const KForm& a, const KForm& b);
KForm interior(const VectorField& X, const KForm& w);
KForm lie(const VectorField& X, const KForm& w);
VectorField lie(const VectorField& X, const VectorField& Y);
Expr lie(const VectorField& X, const Expr& f);
KForm substitute(const KForm& w, const std::map<std::string, Expr>& b);
// Pulls back along y^i = images[i](params): chart of the result is `params`.
KForm pullback(const KForm& w, const ChartPtr& params, const std::vector<Expr>& images);

// Zero checks over all components (worst verdict wins; first nonzero witness is kept).
ZeroVerdict combine(const std::vector<ZeroVerdict>& vs);
ZeroVerdict is_zero(const VectorField& X, const ZeroOptions& opts);
ZeroVerdict is_zero(const KForm& w, const ZeroOptions& opts);

// Tangent bundle constructions. `T` is a tangent chart over X's chart.
KForm lift_to(const KForm& w, const ChartPtr& T);  // pullback along the projection
VectorField tangent_lift(const VectorField& X, const ChartPtr& T);
VectorField vertical_lift(const VectorField& X, const ChartPtr& T);
VectorField liouville(const ChartPtr& T);          // v^a d/dv^a
VectorField total_field(const ChartPtr& T);        // v^a d/dq^a
VectorField second_order_field(const ChartPtr& T, const std::vector<Expr>& accelerations);
std::vector<Expr> fresh_accelerations(const ChartPtr& T, const std::string& prefix = "acc");
VectorField soldering(const VectorField& Y);       // S(Y) = dq^a(Y) d/dv^a
KForm soldering_dual(const KForm& alpha);          // S*(alpha) on 1-forms
VectorField lie_soldering(const VectorField& X, const VectorField& Y);  // (L_X S)(Y)
VectorField nijenhuis_soldering(const VectorField& A, const VectorField& B);
Expr dN(const Expr& f, const ChartPtr& T);
KForm dN(const KForm& w, const ChartPtr& T);
KForm iN(const KForm& w, const ChartPtr& T);
KForm lift_symplectic(const KForm& w, const ChartPtr& T);

// Poisson structure Pi^{ij} with {f,g} = d_i f Pi^{ij} d_j g, X_f^i = Pi^{ij} d_j f.
class PoissonStructure {
public:
    PoissonStructure() = default;
    // Inverts the symplectic matrix; throws degenerate_form when it is singular.
    static PoissonStructure from_symplectic(const KForm& w, const ZeroOptions& opts = {});
    static PoissonStructure canonical(const ChartPtr& cotangent);
    Expr bracket(const Expr& f, const Expr& g) const;
    VectorField hamiltonian_field(const Expr& f) const;
    const Mat& matrix() const { return pi_; }
    const ChartPtr& chart() const { return chart_; }

private:
    ChartPtr chart_;
    Mat pi_;
};

Expr poisson_bracket(const Expr& f, const Expr& g, const KForm& w, const ZeroOptions& opts = {});

std::string to_string(const VectorField& X);
std::string to_string(const KForm& w);

}  // namespace mechsym
