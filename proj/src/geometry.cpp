#include "mechsym/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace mechsym {

const char* role_name(BundleRole r) {
    switch (r) {
        case BundleRole::base: return "base";
        case BundleRole::tangent: return "tangent";
        case BundleRole::cotangent: return "cotangent";
        case BundleRole::tangent_of_tangent: return "tangent_of_tangent";
        case BundleRole::tangent_of_cotangent: return "tangent_of_cotangent";
    }
    return "?";
}

namespace {

// q<digits> -> <prefix><digits>, anything else -> <prefix><name>.
std::string derived_name(const std::string& c, const std::string& prefix) {
    if (c.size() > 1 && c[0] == 'q' &&
        std::all_of(c.begin() + 1, c.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
        return prefix + c.substr(1);
    return prefix + c;
}

std::vector<std::string> fiber_names(const ChartPtr& base, std::vector<std::string> names, const std::string& prefix) {
    std::set<std::string> used(base->coords().begin(), base->coords().end());
    if (names.empty()) {
        for (const auto& c : base->coords()) {
            std::string n = derived_name(c, prefix);
            while (used.count(n)) n = "d" + n;
            names.push_back(n);
            used.insert(n);
        }
        return names;
    }
    if (names.size() != base->dim()) throw Error("invalid_chart", "fiber name count does not match base dimension");
    for (const auto& n : names) {
        if (used.count(n)) throw Error("invalid_chart", "coordinate name collision: " + n);
        used.insert(n);
    }
    return names;
}

}  // namespace

ChartPtr Chart::make(std::vector<std::string> coords, std::vector<Assumption> assumptions) {
    std::set<std::string> seen;
    for (const auto& c : coords)
        if (!seen.insert(c).second) throw Error("invalid_chart", "duplicate coordinate: " + c);
    auto ch = std::make_shared<Chart>();
    ch->coords_ = std::move(coords);
    ch->assumptions_ = std::move(assumptions);
    return ch;
}

ChartPtr Chart::tangent(const ChartPtr& base, std::vector<std::string> names) {
    auto ch = std::make_shared<Chart>();
    ch->coords_ = base->coords();
    for (auto& n : fiber_names(base, std::move(names), "v")) ch->coords_.push_back(n);
    switch (base->role()) {
        case BundleRole::base: ch->role_ = BundleRole::tangent; break;
        case BundleRole::tangent: ch->role_ = BundleRole::tangent_of_tangent; break;
        case BundleRole::cotangent: ch->role_ = BundleRole::tangent_of_cotangent; break;
        default: throw Error("invalid_chart", "tangent of a second-order bundle is not supported");
    }
    ch->base_ = base;
    ch->assumptions_ = base->assumptions();
    return ch;
}

ChartPtr Chart::cotangent(const ChartPtr& base, std::vector<std::string> names) {
    if (base->role() != BundleRole::base) throw Error("invalid_chart", "cotangent bundle of a non-base chart");
    auto ch = std::make_shared<Chart>();
    ch->coords_ = base->coords();
    for (auto& n : fiber_names(base, std::move(names), "p")) ch->coords_.push_back(n);
    ch->role_ = BundleRole::cotangent;
    ch->base_ = base;
    ch->assumptions_ = base->assumptions();
    return ch;
}

std::vector<std::string> Chart::base_coords() const {
    return {coords_.begin(), coords_.begin() + static_cast<long>(base_dim())};
}

std::vector<std::string> Chart::fiber_coords() const {
    return {coords_.begin() + static_cast<long>(base_dim()), coords_.end()};
}

size_t Chart::index(const std::string& name) const {
    for (size_t i = 0; i < coords_.size(); ++i)
        if (coords_[i] == name) return i;
    throw Error("unknown_coordinate", "unknown coordinate: " + name);
}

bool Chart::has(const std::string& name) const {
    return std::find(coords_.begin(), coords_.end(), name) != coords_.end();
}

void require_same_chart(const ChartPtr& a, const ChartPtr& b) {
    if (a == b) return;
    if (!a || !b || a->coords() != b->coords()) throw Error("chart_mismatch", "objects live on different charts");
}

ZeroOptions chart_options(const ChartPtr& c, ZeroOptions opts) {
    if (c)
        for (const auto& a : c->assumptions()) opts.assumptions.push_back(a);
    return opts;
}

// ---------------------------------------------------------------- vector fields

VectorField::VectorField(ChartPtr ch, std::vector<Expr> comps) : chart(std::move(ch)), c(std::move(comps)) {
    if (c.size() != chart->dim()) throw Error("dimension_mismatch", "vector field component count does not match chart");
}

VectorField VectorField::zero(const ChartPtr& ch) { return VectorField(ch, std::vector<Expr>(ch->dim(), Expr(0))); }

VectorField VectorField::coordinate(const ChartPtr& ch, size_t i) {
    auto X = zero(ch);
    X.c.at(i) = Expr(1);
    return X;
}

Expr VectorField::operator()(const Expr& f) const {
    std::vector<Expr> ts;
    for (size_t i = 0; i < c.size(); ++i)
        if (!c[i].is_zero_literal()) ts.push_back(c[i] * differentiate(f, chart->coord(i)));
    return sum(ts);
}

VectorField operator+(const VectorField& a, const VectorField& b) {
    require_same_chart(a.chart, b.chart);
    auto r = a;
    for (size_t i = 0; i < r.c.size(); ++i) r.c[i] = a.c[i] + b.c[i];
    return r;
}

VectorField operator-(const VectorField& a, const VectorField& b) { return a + (-b); }

VectorField operator-(const VectorField& a) { return Expr(-1) * a; }

VectorField operator*(const Expr& f, const VectorField& a) {
    auto r = a;
    for (auto& x : r.c) x = f * x;
    return r;
}

VectorField bracket(const VectorField& a, const VectorField& b) {
    require_same_chart(a.chart, b.chart);
    auto r = VectorField::zero(a.chart);
    for (size_t i = 0; i < r.c.size(); ++i) r.c[i] = a(b.c[i]) - b(a.c[i]);
    return r;
}

VectorField substitute(const VectorField& X, const std::map<std::string, Expr>& b) {
    auto r = X;
    for (auto& x : r.c) x = substitute(x, b);
    return r;
}

// ---------------------------------------------------------------- forms

KForm KForm::scalar(const ChartPtr& ch, const Expr& f) {
    KForm w(ch, 0);
    w.add({}, f);
    return w;
}

KForm KForm::dx(const ChartPtr& ch, size_t i) {
    KForm w(ch, 1);
    w.add({static_cast<int>(i)}, Expr(1));
    return w;
}

KForm KForm::one_form(const ChartPtr& ch, const std::vector<Expr>& comps) {
    if (comps.size() != ch->dim()) throw Error("dimension_mismatch", "1-form component count does not match chart");
    KForm w(ch, 1);
    for (size_t i = 0; i < comps.size(); ++i) w.add({static_cast<int>(i)}, comps[i]);
    return w;
}

namespace {

// Sorts idx in place; returns the permutation sign, or 0 when an index repeats.
int sort_sign(std::vector<int>& idx) {
    int sign = 1;
    for (size_t i = 1; i < idx.size(); ++i)
        for (size_t j = i; j > 0 && idx[j - 1] > idx[j]; --j) {
            std::swap(idx[j - 1], idx[j]);
            sign = -sign;
        }
    for (size_t i = 1; i < idx.size(); ++i)
        if (idx[i] == idx[i - 1]) return 0;
    return sign;
}

}  // namespace

void KForm::add(std::vector<int> idx, const Expr& coef) {
    if (static_cast<int>(idx.size()) != degree) throw Error("degree_mismatch", "index tuple length does not match degree");
    if (coef.is_zero_literal()) return;
    int s = sort_sign(idx);
    if (!s) return;
    auto it = c.find(idx);
    Expr v = s > 0 ? coef : -coef;
    if (it == c.end()) {
        c.emplace(idx, v);
        return;
    }
    it->second = it->second + v;
    if (it->second.is_zero_literal()) c.erase(it);
}

Expr KForm::get(std::vector<int> idx) const {
    int s = sort_sign(idx);
    if (!s) return Expr(0);
    auto it = c.find(idx);
    if (it == c.end()) return Expr(0);
    return s > 0 ? it->second : -it->second;
}

std::vector<Expr> KForm::components() const {
    if (degree != 1) throw Error("degree_mismatch", "components() needs a 1-form");
    std::vector<Expr> r(chart->dim(), Expr(0));
    for (const auto& [i, v] : c) r[static_cast<size_t>(i[0])] = v;
    return r;
}

Mat KForm::matrix() const {
    if (degree != 2) throw Error("degree_mismatch", "matrix() needs a 2-form");
    size_t n = chart->dim();
    Mat m(n, Vec(n, Expr(0)));
    for (const auto& [i, v] : c) {
        m[static_cast<size_t>(i[0])][static_cast<size_t>(i[1])] = v;
        m[static_cast<size_t>(i[1])][static_cast<size_t>(i[0])] = -v;
    }
    return m;
}

KForm operator+(const KForm& a, const KForm& b) {
    require_same_chart(a.chart, b.chart);
    if (a.degree != b.degree) throw Error("degree_mismatch", "adding forms of different degree");
    KForm r = a;
    for (const auto& [i, v] : b.c) r.add(i, v);
    return r;
}

KForm operator-(const KForm& a, const KForm& b) { return a + (-b); }

KForm operator-(const KForm& a) { return Expr(-1) * a; }

KForm operator*(const Expr& f, const KForm& a) {
    KForm r(a.chart, a.degree);
    for (const auto& [i, v] : a.c) r.add(i, f * v);
    return r;
}

KForm d(const KForm& w) {
    KForm r(w.chart, w.degree + 1);
    if (w.degree + 1 > static_cast<int>(w.chart->dim())) return r;
    for (const auto& [idx, v] : w.c) {
        for (size_t j = 0; j < w.chart->dim(); ++j) {
            if (std::find(idx.begin(), idx.end(), static_cast<int>(j)) != idx.end()) continue;
            Expr dv = differentiate(v, w.chart->coord(j));
            if (dv.is_zero_literal()) continue;
            std::vector<int> n{static_cast<int>(j)};
            n.insert(n.end(), idx.begin(), idx.end());
            r.add(n, dv);
        }
    }
    return r;
}

KForm d(const ChartPtr& ch, const Expr& f) { return d(KForm::scalar(ch, f)); }

KForm wedge(const KForm& a, const KForm& b) {
    require_same_chart(a.chart, b.chart);
    KForm r(a.chart, a.degree + b.degree);
    for (const auto& [i, x] : a.c)
        for (const auto& [j, y] : b.c) {
            std::vector<int> n = i;
            n.insert(n.end(), j.begin(), j.end());
            r.add(n, x * y);
        }
    return r;
}

KForm interior(const VectorField& X, const KForm& w) {
    require_same_chart(X.chart, w.chart);
    if (w.degree == 0) return KForm(w.chart, -1);
    KForm r(w.chart, w.degree - 1);
    for (const auto& [idx, v] : w.c)
        for (size_t p = 0; p < idx.size(); ++p) {
            const Expr& xi = X.c[static_cast<size_t>(idx[p])];
            if (xi.is_zero_literal()) continue;
            std::vector<int> n = idx;
            n.erase(n.begin() + static_cast<long>(p));
            r.add(n, (p % 2 ? -xi : xi) * v);
        }
    return r;
}

KForm lie(const VectorField& X, const KForm& w) {
    if (w.degree == 0) return KForm::scalar(w.chart, X(w.value()));
    return interior(X, d(w)) + d(interior(X, w));
}

VectorField lie(const VectorField& X, const VectorField& Y) { return bracket(X, Y); }

Expr lie(const VectorField& X, const Expr& f) { return X(f); }

KForm substitute(const KForm& w, const std::map<std::string, Expr>& b) {
    KForm r(w.chart, w.degree);
    for (const auto& [i, v] : w.c) r.add(i, substitute(v, b));
    return r;
}

KForm pullback(const KForm& w, const ChartPtr& params, const std::vector<Expr>& images) {
    if (images.size() != w.chart->dim()) throw Error("dimension_mismatch", "pullback image count does not match chart");
    std::map<std::string, Expr> sub;
    for (size_t i = 0; i < images.size(); ++i) sub[w.chart->coord(i)] = images[i];
    std::vector<KForm> dy;
    for (const auto& y : images) dy.push_back(d(params, y));
    KForm r(params, w.degree);
    for (const auto& [idx, v] : w.c) {
        KForm t = KForm::scalar(params, substitute(v, sub));
        for (int i : idx) t = wedge(t, dy[static_cast<size_t>(i)]);
        r = r + t;
    }
    return r;
}

ZeroVerdict combine(const std::vector<ZeroVerdict>& vs) {
    ZeroVerdict out;
    out.tier = "normal_form";
    for (const auto& v : vs) {
        if (v.status == ZeroStatus::proved_nonzero) return v;
        if (v.status == ZeroStatus::probably_zero) out = v;
        else if (out.status == ZeroStatus::proved_zero && v.tier != "normal_form") out.tier = v.tier;
    }
    return out;
}

ZeroVerdict is_zero(const VectorField& X, const ZeroOptions& opts) {
    auto o = chart_options(X.chart, opts);
    std::vector<ZeroVerdict> vs;
    for (const auto& x : X.c) {
        vs.push_back(is_zero(x, o));
        if (vs.back().status == ZeroStatus::proved_nonzero) break;
    }
    return combine(vs);
}

ZeroVerdict is_zero(const KForm& w, const ZeroOptions& opts) {
    auto o = chart_options(w.chart, opts);
    std::vector<ZeroVerdict> vs;
    for (const auto& [i, x] : w.c) {
        vs.push_back(is_zero(x, o));
        if (vs.back().status == ZeroStatus::proved_nonzero) break;
    }
    return combine(vs);
}

// ---------------------------------------------------------------- tangent bundle

namespace {

void require_tangent_over(const ChartPtr& T, const ChartPtr& base) {
    if (!T->base() || T->role() == BundleRole::cotangent)
        throw Error("chart_mismatch", "expected a tangent chart");
    if (base) require_same_chart(T->base(), base);
}

size_t nbase(const ChartPtr& T) {
    require_tangent_over(T, nullptr);
    return T->base_dim();
}

}  // namespace

KForm lift_to(const KForm& w, const ChartPtr& T) {
    require_tangent_over(T, w.chart);
    KForm r(T, w.degree);
    for (const auto& [i, v] : w.c) r.add(i, v);
    return r;
}

Expr dN(const Expr& f, const ChartPtr& T) {
    size_t n = nbase(T);
    std::vector<Expr> ts;
    for (size_t a = 0; a < n; ++a) ts.push_back(T->x(n + a) * differentiate(f, T->coord(a)));
    return sum(ts);
}

VectorField tangent_lift(const VectorField& X, const ChartPtr& T) {
    require_tangent_over(T, X.chart);
    size_t n = T->base_dim();
    std::vector<Expr> c(2 * n);
    for (size_t a = 0; a < n; ++a) {
        c[a] = X.c[a];
        c[n + a] = dN(X.c[a], T);
    }
    return VectorField(T, c);
}

VectorField vertical_lift(const VectorField& X, const ChartPtr& T) {
    require_tangent_over(T, X.chart);
    size_t n = T->base_dim();
    std::vector<Expr> c(2 * n, Expr(0));
    for (size_t a = 0; a < n; ++a) c[n + a] = X.c[a];
    return VectorField(T, c);
}

VectorField liouville(const ChartPtr& T) {
    size_t n = nbase(T);
    std::vector<Expr> c(2 * n, Expr(0));
    for (size_t a = 0; a < n; ++a) c[n + a] = T->x(n + a);
    return VectorField(T, c);
}

VectorField total_field(const ChartPtr& T) {
    size_t n = nbase(T);
    std::vector<Expr> c(2 * n, Expr(0));
    for (size_t a = 0; a < n; ++a) c[a] = T->x(n + a);
    return VectorField(T, c);
}

VectorField second_order_field(const ChartPtr& T, const std::vector<Expr>& acc) {
    size_t n = nbase(T);
    if (acc.size() != n) throw Error("dimension_mismatch", "acceleration count does not match base dimension");
    auto D = total_field(T);
    for (size_t a = 0; a < n; ++a) D.c[n + a] = acc[a];
    return D;
}

std::vector<Expr> fresh_accelerations(const ChartPtr& T, const std::string& prefix) {
    size_t n = nbase(T);
    std::vector<Expr> r;
    for (size_t a = 0; a < n; ++a) {
        std::string nm = prefix + std::to_string(a + 1);
        while (T->has(nm)) nm = "_" + nm;
        r.push_back(Expr::sym(nm));
    }
    return r;
}

VectorField soldering(const VectorField& Y) {
    size_t n = nbase(Y.chart);
    auto r = VectorField::zero(Y.chart);
    for (size_t a = 0; a < n; ++a) r.c[n + a] = Y.c[a];
    return r;
}

KForm soldering_dual(const KForm& alpha) {
    if (alpha.degree != 1) throw Error("degree_mismatch", "S* acts on 1-forms");
    size_t n = nbase(alpha.chart);
    KForm r(alpha.chart, 1);
    for (const auto& [i, v] : alpha.c)
        if (static_cast<size_t>(i[0]) >= n) r.add({i[0] - static_cast<int>(n)}, v);
    return r;
}

VectorField lie_soldering(const VectorField& X, const VectorField& Y) {
    return bracket(X, soldering(Y)) - soldering(bracket(X, Y));
}

VectorField nijenhuis_soldering(const VectorField& A, const VectorField& B) {
    auto SA = soldering(A), SB = soldering(B);
    return bracket(SA, SB) + soldering(soldering(bracket(A, B))) - soldering(bracket(SA, B)) -
           soldering(bracket(A, SB));
}

KForm dN(const KForm& w, const ChartPtr& T) { return lie(total_field(T), lift_to(w, T)); }

KForm iN(const KForm& w, const ChartPtr& T) {
    if (w.degree == 0) return KForm(T, -1);
    return interior(total_field(T), lift_to(w, T));
}

KForm lift_symplectic(const KForm& w, const ChartPtr& T) { return dN(w, T); }

// ---------------------------------------------------------------- Poisson

PoissonStructure PoissonStructure::from_symplectic(const KForm& w, const ZeroOptions& opts) {
    if (w.degree != 2) throw Error("degree_mismatch", "symplectic form must be a 2-form");
    auto z = plain_zero_test(chart_options(w.chart, opts));
    auto inv = inverse(w.matrix(), z);
    if (!inv) throw Error("degenerate_form", "the 2-form is degenerate at a generic point");
    PoissonStructure P;
    P.chart_ = w.chart;
    size_t n = w.chart->dim();
    P.pi_.assign(n, Vec(n, Expr(0)));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) P.pi_[i][j] = -(*inv)[i][j];
    return P;
}

PoissonStructure PoissonStructure::canonical(const ChartPtr& Tstar) {
    if (Tstar->role() != BundleRole::cotangent) throw Error("chart_mismatch", "canonical structure needs a cotangent chart");
    PoissonStructure P;
    P.chart_ = Tstar;
    size_t n = Tstar->base_dim();
    P.pi_.assign(2 * n, Vec(2 * n, Expr(0)));
    for (size_t a = 0; a < n; ++a) {
        P.pi_[a][n + a] = Expr(1);
        P.pi_[n + a][a] = Expr(-1);
    }
    return P;
}

Expr PoissonStructure::bracket(const Expr& f, const Expr& g) const {
    size_t n = chart_->dim();
    std::vector<Expr> df(n), dg(n), ts;
    for (size_t i = 0; i < n; ++i) {
        df[i] = differentiate(f, chart_->coord(i));
        dg[i] = differentiate(g, chart_->coord(i));
    }
    for (size_t i = 0; i < n; ++i) {
        if (df[i].is_zero_literal()) continue;
        for (size_t j = 0; j < n; ++j)
            if (!pi_[i][j].is_zero_literal() && !dg[j].is_zero_literal()) ts.push_back(df[i] * pi_[i][j] * dg[j]);
    }
    return sum(ts);
}

VectorField PoissonStructure::hamiltonian_field(const Expr& f) const {
    size_t n = chart_->dim();
    std::vector<Expr> df(n);
    for (size_t j = 0; j < n; ++j) df[j] = differentiate(f, chart_->coord(j));
    auto X = VectorField::zero(chart_);
    for (size_t i = 0; i < n; ++i) {
        std::vector<Expr> ts;
        for (size_t j = 0; j < n; ++j)
            if (!pi_[i][j].is_zero_literal() && !df[j].is_zero_literal()) ts.push_back(pi_[i][j] * df[j]);
        X.c[i] = sum(ts);
    }
    return X;
}

Expr poisson_bracket(const Expr& f, const Expr& g, const KForm& w, const ZeroOptions& opts) {
    return PoissonStructure::from_symplectic(w, opts).bracket(f, g);
}

// ---------------------------------------------------------------- printing

namespace {

std::string paren(const Expr& e) {
    std::string s = to_string(e);
    if (e.kind() == Kind::Add) return "(" + s + ")";
    return s;
}

}  // namespace

std::string to_string(const VectorField& X) {
    std::ostringstream os;
    bool first = true;
    for (size_t i = 0; i < X.c.size(); ++i) {
        if (X.c[i].is_zero_literal()) continue;
        if (!first) os << " + ";
        first = false;
        if (!X.c[i].is_one_literal()) os << paren(X.c[i]) << "*";
        os << "d/d" << X.chart->coord(i);
    }
    return first ? "0" : os.str();
}

std::string to_string(const KForm& w) {
    if (w.degree == 0) return to_string(w.value());
    std::ostringstream os;
    bool first = true;
    for (const auto& [idx, v] : w.c) {
        if (!first) os << " + ";
        first = false;
        if (!v.is_one_literal()) os << paren(v) << "*";
        for (size_t k = 0; k < idx.size(); ++k) os << (k ? "^" : "") << "d" << w.chart->coord(static_cast<size_t>(idx[k]));
    }
    return first ? "0" : os.str();
}

}  // namespace mechsym
