#include "mechsym/expr.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <sstream>

namespace mechsym {

struct Node {
    Kind kind{};
    bool norm = false;
    Fn fn{};
    size_t hash = 0;
    uint64_t mask = 0;  // bloom mask of symbol names occurring in the subtree
    Rational num;
    std::string name;
    std::vector<Expr> args;
    std::vector<int> deriv;
};

namespace {

size_t mix(size_t h, size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

size_t hash_rational(const Rational& r) {
    size_t h = mpz_fdiv_ui(r.get_num_mpz_t(), 1000000007UL);
    h = mix(h, mpz_fdiv_ui(r.get_den_mpz_t(), 998244353UL));
    return mix(h, static_cast<size_t>(sgn(r) + 1));
}

uint64_t sym_bit(const std::string& s) { return 1ULL << (std::hash<std::string>{}(s) % 64); }

}  // namespace

const char* fn_name(Fn f) {
    switch (f) {
        case Fn::Sin: return "sin";
        case Fn::Cos: return "cos";
        case Fn::Tan: return "tan";
        case Fn::Exp: return "exp";
        case Fn::Log: return "log";
        case Fn::Sqrt: return "sqrt";
        case Fn::Asin: return "asin";
    }
    return "?";
}

struct NodeFactory {
    static Expr make(Node n) {
        size_t h = static_cast<size_t>(n.kind) * 131 + 7;
        uint64_t mask = 0;
        switch (n.kind) {
            case Kind::Num: h = mix(h, hash_rational(n.num)); n.norm = true; break;
            case Kind::Sym: h = mix(h, std::hash<std::string>{}(n.name)); mask = sym_bit(n.name); n.norm = true; break;
            default: break;
        }
        if (n.kind == Kind::Fn) h = mix(h, static_cast<size_t>(n.fn));
        if (n.kind == Kind::UFn || n.kind == Kind::Integral) h = mix(h, std::hash<std::string>{}(n.name));
        for (int d : n.deriv) h = mix(h, static_cast<size_t>(d) + 3);
        for (const auto& a : n.args) {
            h = mix(h, a.hash());
            mask |= a.node()->mask;
        }
        n.hash = h;
        n.mask = mask;
        return Expr(std::make_shared<const Node>(std::move(n)));
    }
    static Expr num(const Rational& r) {
        Node n;
        n.kind = Kind::Num;
        n.num = r;
        n.num.canonicalize();
        return make(std::move(n));
    }
    static Expr compound(Kind k, std::vector<Expr> args, bool norm) {
        Node n;
        n.kind = k;
        n.args = std::move(args);
        n.norm = norm;
        return make(std::move(n));
    }
    static Expr fn(Fn f, Expr a, bool norm) {
        Node n;
        n.kind = Kind::Fn;
        n.fn = f;
        n.args = {std::move(a)};
        n.norm = norm;
        return make(std::move(n));
    }
    static Expr ufn(const std::string& name, std::vector<Expr> args, std::vector<int> deriv, bool norm) {
        Node n;
        n.kind = Kind::UFn;
        n.name = name;
        if (deriv.empty()) deriv.assign(args.size(), 0);
        if (deriv.size() != args.size()) throw Error("arity", "derivative multi-index does not match arity of " + name);
        n.args = std::move(args);
        n.deriv = std::move(deriv);
        n.norm = norm;
        return make(std::move(n));
    }
    static Expr integral(Expr f, const std::string& var, Expr upper, bool norm) {
        Node n;
        n.kind = Kind::Integral;
        n.name = var;
        n.args = {std::move(f), std::move(upper)};
        n.norm = norm;
        return make(std::move(n));
    }
};

// ---------------------------------------------------------------- accessors

Expr::Expr() : Expr(NodeFactory::num(0)) {}
Expr::Expr(int v) : Expr(NodeFactory::num(Rational(v))) {}
Expr::Expr(long v) : Expr(NodeFactory::num(Rational(v))) {}
Expr::Expr(const Rational& r) : Expr(NodeFactory::num(r)) {}
Expr Expr::num(long n, long d) { return NodeFactory::num(Rational(n, d)); }
Expr Expr::sym(const std::string& name) {
    Node n;
    n.kind = Kind::Sym;
    n.name = name;
    return NodeFactory::make(std::move(n));
}
Expr Expr::raw_add(std::vector<Expr> t) { return NodeFactory::compound(Kind::Add, std::move(t), false); }
Expr Expr::raw_mul(std::vector<Expr> f) { return NodeFactory::compound(Kind::Mul, std::move(f), false); }
Expr Expr::raw_pow(const Expr& b, const Expr& e) { return NodeFactory::compound(Kind::Pow, {b, e}, false); }
Expr Expr::raw_fn(Fn f, const Expr& a) { return NodeFactory::fn(f, a, false); }
Expr Expr::raw_ufn(const std::string& name, std::vector<Expr> args, std::vector<int> deriv) {
    return NodeFactory::ufn(name, std::move(args), std::move(deriv), false);
}
Expr Expr::raw_integral(const Expr& f, const std::string& var, const Expr& upper) {
    return NodeFactory::integral(f, var, upper, false);
}
Expr Expr::fn(Fn f, const Expr& arg) { return normalize(raw_fn(f, arg)); }
Expr Expr::ufn(const std::string& name, std::vector<Expr> args, std::vector<int> deriv) {
    return normalize(raw_ufn(name, std::move(args), std::move(deriv)));
}
Expr Expr::integral(const Expr& f, const std::string& var, const Expr& upper) {
    return normalize(raw_integral(f, var, upper));
}

Kind Expr::kind() const { return p_->kind; }
bool Expr::is_zero_literal() const { return p_->kind == Kind::Num && sgn(p_->num) == 0; }
bool Expr::is_one_literal() const { return p_->kind == Kind::Num && p_->num == 1; }
bool Expr::is_normalized() const { return p_->norm; }
const Rational& Expr::value() const { return p_->num; }
const std::string& Expr::name() const { return p_->name; }
Fn Expr::fn_kind() const { return p_->fn; }
const std::vector<Expr>& Expr::args() const { return p_->args; }
const std::vector<int>& Expr::deriv() const { return p_->deriv; }
size_t Expr::hash() const { return p_->hash; }

bool Expr::depends_on(const std::string& s) const {
    if (!(p_->mask & sym_bit(s))) return false;
    switch (p_->kind) {
        case Kind::Num: return false;
        case Kind::Sym: return p_->name == s;
        case Kind::Integral:
            if (p_->name == s) return p_->args[1].depends_on(s);
            return p_->args[0].depends_on(s) || p_->args[1].depends_on(s);
        default:
            for (const auto& a : p_->args)
                if (a.depends_on(s)) return true;
            return false;
    }
}

int compare(const Expr& a, const Expr& b) {
    if (a.node() == b.node()) return 0;
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    switch (a.kind()) {
        case Kind::Num: return cmp(a.value(), b.value()) < 0 ? -1 : (cmp(a.value(), b.value()) > 0 ? 1 : 0);
        case Kind::Sym: return a.name().compare(b.name()) < 0 ? -1 : (a.name() == b.name() ? 0 : 1);
        case Kind::Fn:
            if (a.fn_kind() != b.fn_kind()) return a.fn_kind() < b.fn_kind() ? -1 : 1;
            break;
        case Kind::UFn:
            if (a.name() != b.name()) return a.name() < b.name() ? -1 : 1;
            if (a.deriv() != b.deriv()) return a.deriv() < b.deriv() ? -1 : 1;
            break;
        case Kind::Integral:
            if (a.name() != b.name()) return a.name() < b.name() ? -1 : 1;
            break;
        default: break;
    }
    const auto& x = a.args();
    const auto& y = b.args();
    size_t n = std::min(x.size(), y.size());
    for (size_t i = 0; i < n; ++i) {
        int c = compare(x[i], y[i]);
        if (c) return c;
    }
    if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
    return 0;
}

bool operator==(const Expr& a, const Expr& b) {
    if (a.node() == b.node()) return true;
    if (a.hash() != b.hash()) return false;
    return compare(a, b) == 0;
}

// ---------------------------------------------------------------- polynomial view

namespace {

using Mono = std::vector<std::pair<Expr, Rational>>;  // sorted by atom, nonzero exponents

int cmp_mono(const Mono& a, const Mono& b) {
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        int c = compare(a[i].first, b[i].first);
        if (c) return c;
        int e = cmp(a[i].second, b[i].second);
        if (e) return e < 0 ? -1 : 1;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return 0;
}
struct MonoLess {
    bool operator()(const Mono& a, const Mono& b) const { return cmp_mono(a, b) < 0; }
};
using Poly = std::map<Mono, Rational, MonoLess>;

Mono mono_mul(const Mono& a, const Mono& b) {
    Mono r;
    r.reserve(a.size() + b.size());
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && compare(a[i].first, b[j].first) < 0)) {
            r.push_back(a[i++]);
        } else if (i == a.size() || compare(a[i].first, b[j].first) > 0) {
            r.push_back(b[j++]);
        } else {
            Rational e = a[i].second + b[j].second;
            if (sgn(e) != 0) r.emplace_back(a[i].first, e);
            ++i;
            ++j;
        }
    }
    return r;
}

Mono mono_atom(const Expr& atom, const Rational& e) {
    if (sgn(e) == 0) return {};
    return {{atom, e}};
}

void poly_add_term(Poly& p, const Mono& m, const Rational& c) {
    if (sgn(c) == 0) return;
    auto it = p.find(m);
    if (it == p.end()) {
        p.emplace(m, c);
    } else {
        it->second += c;
        if (sgn(it->second) == 0) p.erase(it);
    }
}

Poly poly_const(const Rational& c) {
    Poly p;
    if (sgn(c) != 0) p.emplace(Mono{}, c);
    return p;
}

Poly poly_atom(const Expr& atom, const Rational& e = 1) {
    Poly p;
    p.emplace(mono_atom(atom, e), Rational(1));
    return p;
}

Poly poly_add(const Poly& a, const Poly& b) {
    Poly r = a;
    for (const auto& [m, c] : b) poly_add_term(r, m, c);
    return r;
}

Poly poly_scale(const Poly& a, const Rational& s) {
    Poly r;
    if (sgn(s) == 0) return r;
    for (const auto& [m, c] : a) r.emplace(m, c * s);
    return r;
}

Expr to_expr(const Poly& p);
Poly fixup(const Poly& p);
Poly conv(const Expr& e);

Poly poly_mul_raw(const Poly& a, const Poly& b) {
    Poly r;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) poly_add_term(r, mono_mul(ma, mb), ca * cb);
    return r;
}

Poly poly_mul(const Poly& a, const Poly& b) { return fixup(poly_mul_raw(a, b)); }

Rational rat_pow_int(const Rational& c, long n) {
    mpz_class num = c.get_num(), den = c.get_den();
    mpz_class rn, rd;
    unsigned long k = static_cast<unsigned long>(n < 0 ? -n : n);
    mpz_pow_ui(rn.get_mpz_t(), num.get_mpz_t(), k);
    mpz_pow_ui(rd.get_mpz_t(), den.get_mpz_t(), k);
    Rational r;
    if (n >= 0) {
        r = Rational(rn, rd);
    } else {
        if (rn == 0) throw Error("division_by_zero", "division by zero");
        r = Rational(rd, rn);
    }
    r.canonicalize();
    return r;
}

bool is_integer(const Rational& r) { return r.get_den() == 1; }

// Prime factorization by trial division; very large cofactors are kept whole.
std::vector<std::pair<mpz_class, long>> factorize(mpz_class n) {
    std::vector<std::pair<mpz_class, long>> out;
    if (n <= 1) return out;
    for (unsigned long p = 2; p < 100000; p += (p == 2 ? 1 : 2)) {
        mpz_class pp(p);
        if (pp * pp > n) break;
        long e = 0;
        while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
            n /= p;
            ++e;
        }
        if (e) out.emplace_back(pp, e);
    }
    if (n > 1) out.emplace_back(n, 1);
    return out;
}

// c^r for c > 0 rational, r fractional: exact coefficient times prime-power atoms.
Poly rational_pow(const Rational& c, const Rational& r) {
    Rational coeff = 1;
    Mono m;
    auto handle = [&](const mpz_class& n, long sign) {
        for (auto& [p, e] : factorize(n)) {
            Rational ex = Rational(e * sign) * r;
            mpz_class fl;
            mpz_fdiv_q(fl.get_mpz_t(), ex.get_num_mpz_t(), ex.get_den_mpz_t());
            Rational frac = ex - Rational(fl);
            coeff *= rat_pow_int(Rational(p), fl.get_si());
            if (sgn(frac) != 0) m = mono_mul(m, mono_atom(Expr(Rational(p)), frac));
        }
    };
    handle(c.get_num(), 1);
    handle(c.get_den(), -1);
    Poly out;
    out.emplace(m, coeff);
    return out;
}

Poly mono_pow(const Mono& m, const Rational& c, const Rational& r) {
    if (is_integer(r)) {
        Mono mm = m;
        for (auto& [a, e] : mm) e *= r;
        Poly p;
        p.emplace(mm, rat_pow_int(c, r.get_num().get_si()));
        return fixup(p);
    }
    Rational cc = c;
    Rational sign = 1;
    if (sgn(cc) < 0) {
        if (r.get_den() % 2 == 0) {
            Poly whole;
            whole.emplace(m, c);
            return poly_atom(to_expr(whole), r);
        }
        cc = -cc;
        if (r.get_num() % 2 != 0) sign = -1;
    }
    Mono mm = m;
    for (auto& [a, e] : mm) e *= r;
    Poly p;
    p.emplace(mm, sign);
    return poly_mul(p, rational_pow(cc, r));
}

Rational rational_gcd(const Rational& a, const Rational& b) {
    mpz_class n, d;
    mpz_gcd(n.get_mpz_t(), a.get_num_mpz_t(), b.get_num_mpz_t());
    mpz_lcm(d.get_mpz_t(), a.get_den_mpz_t(), b.get_den_mpz_t());
    Rational r(n, d);
    r.canonicalize();
    return r;
}

Poly poly_pow(const Poly& p, const Rational& r) {
    if (sgn(r) == 0) return poly_const(1);
    if (p.empty()) {
        if (sgn(r) > 0) return {};
        throw Error("division_by_zero", "division by zero");
    }
    if (p.size() == 1) return mono_pow(p.begin()->first, p.begin()->second, r);
    if (is_integer(r) && sgn(r) > 0) {
        long n = r.get_num().get_si();
        Poly result = poly_const(1), base = p;
        while (n) {
            if (n & 1) result = poly_mul(result, base);
            n >>= 1;
            if (n) base = poly_mul(base, base);
        }
        return result;
    }
    // Extract monomial content, then keep the primitive sum as an atom.
    std::map<Expr, Rational, ExprLess> mins;
    for (const auto& [m, c] : p)
        for (const auto& [a, e] : m) mins.emplace(a, Rational(0));
    for (auto& [a, mn] : mins) {
        bool first = true;
        for (const auto& [m, c] : p) {
            Rational e = 0;
            for (const auto& [b, eb] : m)
                if (b == a) e = eb;
            if (first || e < mn) mn = e;
            first = false;
        }
    }
    Mono content;
    for (const auto& [a, mn] : mins)
        if (sgn(mn) != 0) content.emplace_back(a, mn);
    Rational g = 0;
    for (const auto& [m, c] : p) g = (sgn(g) == 0) ? abs(c) : rational_gcd(g, abs(c));
    if (is_integer(r) && sgn(p.begin()->second) < 0) g = -g;
    Mono inv = content;
    for (auto& [a, e] : inv) e = -e;
    Poly prim;
    for (const auto& [m, c] : p) prim.emplace(mono_mul(m, inv), c / g);
    Expr atom = to_expr(prim);
    Poly out = mono_pow(content, g, r);
    return poly_mul(out, poly_atom(atom, r));
}

bool is_atom_fn(const Expr& a, Fn f) { return a.kind() == Kind::Fn && a.fn_kind() == f; }

// One rewrite step on a monomial; returns the replacement polynomial (to be multiplied by the
// monomial's coefficient) or nullopt if the monomial is already canonical.
std::optional<Poly> rewrite_mono(const Mono& m) {
    for (size_t i = 0; i < m.size(); ++i) {
        const auto& [a, e] = m[i];
        Mono rest = m;
        rest.erase(rest.begin() + static_cast<long>(i));
        if (a.kind() == Kind::Add && is_integer(e) && sgn(e) > 0) {
            Poly sumpoly = conv(a);
            Poly expanded = poly_const(1);
            for (long k = 0; k < e.get_num().get_si(); ++k) expanded = poly_mul_raw(expanded, sumpoly);
            Poly r;
            for (const auto& [mm, cc] : expanded) r.emplace(mono_mul(mm, rest), cc);
            return r;
        }
        if (a.kind() == Kind::Num && (is_integer(e) || e >= 1 || sgn(e) < 0)) {
            mpz_class fl;
            mpz_fdiv_q(fl.get_mpz_t(), e.get_num_mpz_t(), e.get_den_mpz_t());
            Rational frac = e - Rational(fl);
            Poly r;
            r.emplace(mono_mul(rest, mono_atom(a, frac)), rat_pow_int(a.value(), fl.get_si()));
            return r;
        }
        if (is_atom_fn(a, Fn::Sin) && is_integer(e)) {
            const Expr& u = a.args()[0];
            Expr cosu = NodeFactory::fn(Fn::Cos, u, true);
            Rational ce = 0;
            for (const auto& [b, eb] : m)
                if (b == cosu) ce = eb;
            if (e >= 2) {
                Mono base = mono_mul(rest, mono_atom(a, e - 2));
                Poly r;
                r.emplace(base, Rational(1));
                poly_add_term(r, mono_mul(base, mono_atom(cosu, 2)), Rational(-1));
                return r;
            }
            if (sgn(e) < 0 && is_integer(ce) && ce >= 2) {
                Mono rest2;
                for (const auto& [b, eb] : m)
                    if (!(b == cosu)) rest2.emplace_back(b, eb);
                Mono base = mono_mul(rest2, mono_atom(cosu, ce - 2));
                Poly r;
                r.emplace(base, Rational(1));
                poly_add_term(r, mono_mul(base, mono_atom(a, 2)), Rational(-1));
                return r;
            }
        }
    }
    return std::nullopt;
}

Poly fixup(const Poly& p) {
    std::vector<std::pair<Mono, Rational>> work(p.begin(), p.end());
    Poly result;
    while (!work.empty()) {
        auto [m, c] = std::move(work.back());
        work.pop_back();
        if (auto r = rewrite_mono(m)) {
            for (const auto& [mm, cc] : *r) work.emplace_back(mm, c * cc);
        } else {
            poly_add_term(result, m, c);
        }
    }
    return result;
}

Expr make_factor(const Expr& atom, const Rational& e) {
    if (e == 1) return atom;
    return NodeFactory::compound(Kind::Pow, {atom, Expr(e)}, true);
}

Expr to_expr(const Poly& p) {
    std::vector<Expr> ts;
    for (const auto& [m, c] : p) {
        std::vector<Expr> fs;
        if (c != 1 || m.empty()) fs.emplace_back(c);
        for (const auto& [a, e] : m) fs.push_back(make_factor(a, e));
        ts.push_back(fs.size() == 1 ? fs[0] : NodeFactory::compound(Kind::Mul, std::move(fs), true));
    }
    if (ts.empty()) return Expr(0);
    if (ts.size() == 1) return ts[0];
    return NodeFactory::compound(Kind::Add, std::move(ts), true);
}

void read_factor(const Expr& f, Mono& m, Rational& c) {
    if (f.kind() == Kind::Num) {
        c *= f.value();
    } else if (f.kind() == Kind::Pow && f.args()[1].kind() == Kind::Num) {
        m.emplace_back(f.args()[0], f.args()[1].value());
    } else {
        m.emplace_back(f, Rational(1));
    }
}

void read_term(const Expr& t, Poly& p) {
    Mono m;
    Rational c = 1;
    if (t.kind() == Kind::Mul) {
        for (const auto& f : t.args()) read_factor(f, m, c);
    } else {
        read_factor(t, m, c);
    }
    std::sort(m.begin(), m.end(), [](const auto& x, const auto& y) { return compare(x.first, y.first) < 0; });
    poly_add_term(p, m, c);
}

Poly conv(const Expr& e);

Poly apply_fn(Fn f, const Expr& u) {
    switch (f) {
        case Fn::Sin:
            if (u.is_zero_literal()) return {};
            if (u.kind() == Kind::Fn && u.fn_kind() == Fn::Asin) return conv(u.args()[0]);
            break;
        case Fn::Cos:
            if (u.is_zero_literal()) return poly_const(1);
            break;
        case Fn::Tan: {
            if (u.is_zero_literal()) return {};
            Expr s = NodeFactory::fn(Fn::Sin, u, true), c = NodeFactory::fn(Fn::Cos, u, true);
            return poly_mul(poly_atom(s), poly_atom(c, -1));
        }
        case Fn::Exp:
            if (u.is_zero_literal()) return poly_const(1);
            if (u.kind() == Kind::Fn && u.fn_kind() == Fn::Log) return conv(u.args()[0]);
            break;
        case Fn::Log:
            if (u.is_one_literal()) return {};
            if (u.kind() == Kind::Fn && u.fn_kind() == Fn::Exp) return conv(u.args()[0]);
            break;
        case Fn::Sqrt: return poly_pow(conv(u), Rational(1, 2));
        case Fn::Asin:
            if (u.is_zero_literal()) return {};
            break;
    }
    return poly_atom(NodeFactory::fn(f, u, true));
}

Poly conv(const Expr& e) {
    if (e.is_normalized()) {
        Poly p;
        if (e.kind() == Kind::Num) return poly_const(e.value());
        if (e.kind() == Kind::Add) {
            for (const auto& t : e.args()) read_term(t, p);
        } else {
            read_term(e, p);
        }
        return p;
    }
    switch (e.kind()) {
        case Kind::Num: return poly_const(e.value());
        case Kind::Sym: return poly_atom(e);
        case Kind::Add: {
            Poly p;
            for (const auto& t : e.args()) p = poly_add(p, conv(t));
            return p;
        }
        case Kind::Mul: {
            Poly p = poly_const(1);
            for (const auto& f : e.args()) p = poly_mul(p, conv(f));
            return p;
        }
        case Kind::Pow: {
            Expr ex = normalize(e.args()[1]);
            if (ex.kind() == Kind::Num) return poly_pow(conv(e.args()[0]), ex.value());
            Expr b = normalize(e.args()[0]);
            if (b.is_one_literal()) return poly_const(1);
            if (b.is_zero_literal()) return {};
            return poly_atom(NodeFactory::compound(Kind::Pow, {b, ex}, true));
        }
        case Kind::Fn: return apply_fn(e.fn_kind(), normalize(e.args()[0]));
        case Kind::UFn: {
            std::vector<Expr> as;
            for (const auto& a : e.args()) as.push_back(normalize(a));
            return poly_atom(NodeFactory::ufn(e.name(), std::move(as), e.deriv(), true));
        }
        case Kind::Integral: {
            Expr f = normalize(e.args()[0]);
            if (f.is_zero_literal()) return {};
            return poly_atom(NodeFactory::integral(f, e.name(), normalize(e.args()[1]), true));
        }
    }
    return {};
}

}  // namespace

Expr normalize(const Expr& e) {
    if (e.is_normalized()) return e;
    return to_expr(fixup(conv(e)));
}

// ---------------------------------------------------------------- arithmetic

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero_literal()) return normalize(b);
    if (b.is_zero_literal()) return normalize(a);
    return to_expr(poly_add(conv(a), conv(b)));
}
Expr operator-(const Expr& a) { return to_expr(poly_scale(conv(a), Rational(-1))); }
Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_zero_literal()) return normalize(a);
    return to_expr(poly_add(conv(a), poly_scale(conv(b), Rational(-1))));
}
Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero_literal() || b.is_zero_literal()) return Expr(0);
    if (a.is_one_literal()) return normalize(b);
    if (b.is_one_literal()) return normalize(a);
    return to_expr(poly_mul(conv(a), conv(b)));
}
Expr operator/(const Expr& a, const Expr& b) { return to_expr(poly_mul(conv(a), poly_pow(conv(b), Rational(-1)))); }
Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }
Expr pow(const Expr& b, const Rational& r) { return to_expr(poly_pow(conv(b), r)); }
Expr pow(const Expr& b, const Expr& e) { return normalize(Expr::raw_pow(b, e)); }
Expr sin(const Expr& u) { return Expr::fn(Fn::Sin, u); }
Expr cos(const Expr& u) { return Expr::fn(Fn::Cos, u); }
Expr tan(const Expr& u) { return Expr::fn(Fn::Tan, u); }
Expr exp(const Expr& u) { return Expr::fn(Fn::Exp, u); }
Expr log(const Expr& u) { return Expr::fn(Fn::Log, u); }
Expr sqrt(const Expr& u) { return Expr::fn(Fn::Sqrt, u); }
Expr asin(const Expr& u) { return Expr::fn(Fn::Asin, u); }

Expr sum(const std::vector<Expr>& ts) {
    Poly p;
    for (const auto& t : ts) p = poly_add(p, conv(t));
    return to_expr(p);
}
Expr product(const std::vector<Expr>& fs) {
    Poly p = poly_const(1);
    for (const auto& f : fs) p = poly_mul(p, conv(f));
    return to_expr(p);
}

std::vector<Term> terms(const Expr& e) {
    std::vector<Term> out;
    for (const auto& [m, c] : conv(normalize(e))) {
        Poly one;
        one.emplace(m, Rational(1));
        out.push_back({c, to_expr(one)});
    }
    return out;
}

Expr clear_denominators(const Expr& e) {
    Poly p = conv(normalize(e));
    for (int pass = 0; pass < 6 && !p.empty(); ++pass) {
        std::map<Expr, Rational, ExprLess> mins;
        for (const auto& [m, c] : p)
            for (const auto& [a, ex] : m)
                if (sgn(ex) < 0) {
                    auto it = mins.find(a);
                    if (it == mins.end() || ex < it->second) mins[a] = ex;
                }
        if (mins.empty()) break;
        Mono mult;
        for (const auto& [a, mn] : mins) mult.emplace_back(a, -mn);
        Poly r;
        for (const auto& [m, c] : p) poly_add_term(r, mono_mul(m, mult), c);
        p = fixup(r);
    }
    // drop a common rational content so the result is primitive
    return to_expr(p);
}

int degree_in(const Expr& e, const std::vector<std::string>& syms) {
    int deg = 0;
    for (const auto& [m, c] : conv(normalize(e))) {
        int d = 0;
        for (const auto& [a, ex] : m) {
            bool listed = a.kind() == Kind::Sym && std::find(syms.begin(), syms.end(), a.name()) != syms.end();
            if (listed) {
                if (!is_integer(ex) || sgn(ex) < 0) return -1;
                d += static_cast<int>(ex.get_num().get_si());
            } else {
                for (const auto& s : syms)
                    if (a.depends_on(s)) return -1;
            }
        }
        deg = std::max(deg, d);
    }
    return deg;
}

// ---------------------------------------------------------------- calculus

Expr differentiate(const Expr& e0, const std::string& x) {
    Expr e = normalize(e0);
    if (!e.depends_on(x)) return Expr(0);
    switch (e.kind()) {
        case Kind::Num: return Expr(0);
        case Kind::Sym: return Expr(1);
        case Kind::Add: {
            std::vector<Expr> ds;
            for (const auto& t : e.args()) ds.push_back(differentiate(t, x));
            return sum(ds);
        }
        case Kind::Mul: {
            std::vector<Expr> ds;
            const auto& fs = e.args();
            for (size_t i = 0; i < fs.size(); ++i) {
                Expr di = differentiate(fs[i], x);
                if (di.is_zero_literal()) continue;
                std::vector<Expr> prod{di};
                for (size_t j = 0; j < fs.size(); ++j)
                    if (j != i) prod.push_back(fs[j]);
                ds.push_back(product(prod));
            }
            return sum(ds);
        }
        case Kind::Pow: {
            const Expr& b = e.args()[0];
            const Expr& ex = e.args()[1];
            if (ex.kind() == Kind::Num)
                return product({ex, pow(b, ex.value() - 1), differentiate(b, x)});
            return e * (differentiate(ex, x) * log(b) + ex * differentiate(b, x) / b);
        }
        case Kind::Fn: {
            const Expr& u = e.args()[0];
            Expr du = differentiate(u, x);
            switch (e.fn_kind()) {
                case Fn::Sin: return cos(u) * du;
                case Fn::Cos: return -(sin(u) * du);
                case Fn::Tan: return (Expr(1) + pow(tan(u), Rational(2))) * du;
                case Fn::Exp: return e * du;
                case Fn::Log: return du / u;
                case Fn::Sqrt: return Expr::num(1, 2) * pow(u, Rational(-1, 2)) * du;
                case Fn::Asin: return pow(Expr(1) - u * u, Rational(-1, 2)) * du;
            }
            return Expr(0);
        }
        case Kind::UFn: {
            std::vector<Expr> ds;
            for (size_t i = 0; i < e.args().size(); ++i) {
                Expr da = differentiate(e.args()[i], x);
                if (da.is_zero_literal()) continue;
                std::vector<int> d = e.deriv();
                d[i] += 1;
                ds.push_back(Expr::ufn(e.name(), e.args(), d) * da);
            }
            return sum(ds);
        }
        case Kind::Integral: {
            const Expr& f = e.args()[0];
            const Expr& up = e.args()[1];
            Expr r = substitute(f, {{e.name(), up}}) * differentiate(up, x);
            if (x != e.name()) {
                Expr df = differentiate(f, x);
                if (!df.is_zero_literal()) r = r + Expr::integral(df, e.name(), up);
            }
            return r;
        }
    }
    return Expr(0);
}

namespace {

Expr subst_raw(const Expr& e, const std::map<std::string, Expr>& b, uint64_t keymask) {
    if (!(e.node()->mask & keymask)) return e;
    switch (e.kind()) {
        case Kind::Num: return e;
        case Kind::Sym: {
            auto it = b.find(e.name());
            return it == b.end() ? e : it->second;
        }
        case Kind::Add: {
            std::vector<Expr> as;
            for (const auto& a : e.args()) as.push_back(subst_raw(a, b, keymask));
            return Expr::raw_add(std::move(as));
        }
        case Kind::Mul: {
            std::vector<Expr> as;
            for (const auto& a : e.args()) as.push_back(subst_raw(a, b, keymask));
            return Expr::raw_mul(std::move(as));
        }
        case Kind::Pow: return Expr::raw_pow(subst_raw(e.args()[0], b, keymask), subst_raw(e.args()[1], b, keymask));
        case Kind::Fn: return Expr::raw_fn(e.fn_kind(), subst_raw(e.args()[0], b, keymask));
        case Kind::UFn: {
            std::vector<Expr> as;
            for (const auto& a : e.args()) as.push_back(subst_raw(a, b, keymask));
            return Expr::raw_ufn(e.name(), std::move(as), e.deriv());
        }
        case Kind::Integral: {
            Expr f = e.args()[0];
            if (b.count(e.name())) {
                auto inner = b;
                inner.erase(e.name());
                uint64_t m = 0;
                for (const auto& [k, v] : inner) m |= sym_bit(k);
                f = subst_raw(f, inner, m);
            } else {
                f = subst_raw(f, b, keymask);
            }
            return Expr::raw_integral(f, e.name(), subst_raw(e.args()[1], b, keymask));
        }
    }
    return e;
}

}  // namespace

Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings) {
    uint64_t m = 0;
    for (const auto& [k, v] : bindings) m |= sym_bit(k);
    return normalize(subst_raw(e, bindings, m));
}

Expr expand_functions(const Expr& e, const std::map<std::string, FunctionDef>& defs) {
    switch (e.kind()) {
        case Kind::Num:
        case Kind::Sym: return e;
        case Kind::UFn: {
            std::vector<Expr> as;
            for (const auto& a : e.args()) as.push_back(expand_functions(a, defs));
            auto it = defs.find(e.name());
            if (it == defs.end()) return Expr::ufn(e.name(), as, e.deriv());
            const auto& def = it->second;
            if (def.params.size() != as.size())
                throw Error("arity", "function " + e.name() + " called with wrong number of arguments");
            Expr body = expand_functions(def.body, defs);
            for (size_t i = 0; i < as.size(); ++i)
                for (int k = 0; k < e.deriv()[i]; ++k) body = differentiate(body, def.params[i]);
            std::map<std::string, Expr> b;
            for (size_t i = 0; i < as.size(); ++i) b[def.params[i]] = as[i];
            return substitute(body, b);
        }
        case Kind::Integral:
            return Expr::integral(expand_functions(e.args()[0], defs), e.name(), expand_functions(e.args()[1], defs));
        case Kind::Fn: return Expr::fn(e.fn_kind(), expand_functions(e.args()[0], defs));
        case Kind::Pow: return pow(expand_functions(e.args()[0], defs), expand_functions(e.args()[1], defs));
        case Kind::Add: {
            std::vector<Expr> as;
            for (const auto& a : e.args()) as.push_back(expand_functions(a, defs));
            return sum(as);
        }
        case Kind::Mul: {
            std::vector<Expr> as;
            for (const auto& a : e.args()) as.push_back(expand_functions(a, defs));
            return product(as);
        }
    }
    return e;
}

namespace {
void collect(const Expr& e, std::set<std::string>& syms, std::set<std::string>& fns, std::set<std::string>* bound) {
    switch (e.kind()) {
        case Kind::Num: return;
        case Kind::Sym:
            if (!bound || !bound->count(e.name())) syms.insert(e.name());
            return;
        case Kind::Integral: {
            std::set<std::string> b2 = bound ? *bound : std::set<std::string>{};
            b2.insert(e.name());
            collect(e.args()[0], syms, fns, &b2);
            collect(e.args()[1], syms, fns, bound);
            return;
        }
        case Kind::UFn: fns.insert(e.name()); [[fallthrough]];
        default:
            for (const auto& a : e.args()) collect(a, syms, fns, bound);
    }
}
}  // namespace

std::set<std::string> free_symbols(const Expr& e) {
    std::set<std::string> s, f;
    collect(e, s, f, nullptr);
    return s;
}
std::set<std::string> function_names(const Expr& e) {
    std::set<std::string> s, f;
    collect(e, s, f, nullptr);
    return f;
}

// ---------------------------------------------------------------- printing

namespace {

bool negative_term(const Expr& t) {
    if (t.kind() == Kind::Num) return sgn(t.value()) < 0;
    if (t.kind() == Kind::Mul && t.args()[0].kind() == Kind::Num) return sgn(t.args()[0].value()) < 0;
    return false;
}

void print(std::ostream& os, const Expr& e);

void print_atomic(std::ostream& os, const Expr& e) {
    bool plain = e.kind() == Kind::Sym || e.kind() == Kind::Fn || e.kind() == Kind::UFn ||
                 e.kind() == Kind::Integral ||
                 (e.kind() == Kind::Num && is_integer(e.value()) && sgn(e.value()) >= 0);
    if (plain) {
        print(os, e);
    } else {
        os << '(';
        print(os, e);
        os << ')';
    }
}

void print_mul(std::ostream& os, const Expr& e) {
    std::vector<Expr> fs = e.kind() == Kind::Mul ? e.args() : std::vector<Expr>{e};
    bool first = true;
    for (const auto& f : fs) {
        if (!first) os << '*';
        if (first && f.kind() == Kind::Num) {
            if (f.value() == -1 && fs.size() > 1) {
                os << '-';
                continue;
            }
            os << f.value().get_str();
        } else if (f.kind() == Kind::Add || f.kind() == Kind::Mul ||
                   (f.kind() == Kind::Num && (sgn(f.value()) < 0 || !is_integer(f.value())))) {
            os << '(';
            print(os, f);
            os << ')';
        } else {
            print(os, f);
        }
        first = false;
    }
}

void print(std::ostream& os, const Expr& e) {
    switch (e.kind()) {
        case Kind::Num: os << e.value().get_str(); return;
        case Kind::Sym: os << e.name(); return;
        case Kind::Add: {
            bool first = true;
            for (const auto& t : e.args()) {
                if (first) {
                    print_mul(os, t);
                } else if (negative_term(t)) {
                    os << " - ";
                    print_mul(os, normalize(-t));
                } else {
                    os << " + ";
                    print_mul(os, t);
                }
                first = false;
            }
            return;
        }
        case Kind::Mul: print_mul(os, e); return;
        case Kind::Pow: {
            print_atomic(os, e.args()[0]);
            os << '^';
            const Expr& ex = e.args()[1];
            if ((ex.kind() == Kind::Num && is_integer(ex.value()) && sgn(ex.value()) >= 0) || ex.kind() == Kind::Sym) {
                print(os, ex);
            } else {
                os << '(';
                print(os, ex);
                os << ')';
            }
            return;
        }
        case Kind::Fn:
            os << fn_name(e.fn_kind()) << '(';
            print(os, e.args()[0]);
            os << ')';
            return;
        case Kind::UFn: {
            bool d = std::any_of(e.deriv().begin(), e.deriv().end(), [](int k) { return k != 0; });
            if (d) {
                os << "D[";
                for (size_t i = 0; i < e.deriv().size(); ++i) os << (i ? "," : "") << e.deriv()[i];
                os << ']';
            }
            os << e.name() << '(';
            for (size_t i = 0; i < e.args().size(); ++i) {
                if (i) os << ", ";
                print(os, e.args()[i]);
            }
            os << ')';
            return;
        }
        case Kind::Integral:
            os << "integral(";
            print(os, e.args()[0]);
            os << ", " << e.name() << ", ";
            print(os, e.args()[1]);
            os << ')';
            return;
    }
}

}  // namespace

std::string to_string(const Expr& e) {
    std::ostringstream os;
    print(os, e);
    return os.str();
}
std::ostream& operator<<(std::ostream& os, const Expr& e) {
    print(os, e);
    return os;
}

}  // namespace mechsym
