// Immutable symbolic scalars: rational-trigonometric fragment with canonical normalization.
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mechsym {

using Rational = mpq_class;

enum class Kind : uint8_t { Num, Sym, Add, Mul, Pow, Fn, UFn, Integral };
enum class Fn : uint8_t { Sin, Cos, Tan, Exp, Log, Sqrt, Asin };

const char* fn_name(Fn f);

// Error categories surfaced by every module; `code` is a stable machine-readable tag.
struct Error : std::runtime_error {
    std::string code;
    Error(std::string c, const std::string& msg) : std::runtime_error(msg), code(std::move(c)) {}
};

struct ParseError : Error {
    size_t offset;
    ParseError(const std::string& msg, size_t off)
        : Error("syntax_error", msg + " at offset " + std::to_string(off)), offset(off) {}
};

struct Node;

class Expr {
public:
    Expr();  // literal 0
    Expr(int v);
    Expr(long v);
    Expr(const Rational& r);
    static Expr num(long n, long d = 1);
    static Expr sym(const std::string& name);
    static Expr fn(Fn f, const Expr& arg);  // normalized
    // Applied unknown function name(args), optionally differentiated by multi-index `deriv`.
    static Expr ufn(const std::string& name, std::vector<Expr> args, std::vector<int> deriv = {});
    // Antiderivative: integral from 0 to `upper` of `integrand` in bound variable `var`.
    static Expr integral(const Expr& integrand, const std::string& var, const Expr& upper);

    // Raw (unnormalized) constructors, used by the parser.
    static Expr raw_add(std::vector<Expr> terms);
    static Expr raw_mul(std::vector<Expr> factors);
    static Expr raw_pow(const Expr& b, const Expr& e);
    static Expr raw_fn(Fn f, const Expr& arg);
    static Expr raw_ufn(const std::string& name, std::vector<Expr> args, std::vector<int> deriv);
    static Expr raw_integral(const Expr& integrand, const std::string& var, const Expr& upper);

    Kind kind() const;
    bool is_num() const { return kind() == Kind::Num; }
    bool is_sym() const { return kind() == Kind::Sym; }
    bool is_zero_literal() const;
    bool is_one_literal() const;
    bool is_normalized() const;
    const Rational& value() const;               // Num
    const std::string& name() const;             // Sym, UFn, Integral (bound var)
    Fn fn_kind() const;                          // Fn
    const std::vector<Expr>& args() const;       // Add/Mul terms, Pow {b,e}, Fn {u}, UFn args, Integral {f, upper}
    const std::vector<int>& deriv() const;       // UFn
    size_t hash() const;
    bool depends_on(const std::string& s) const;
    const Node* node() const { return p_.get(); }

    friend bool operator==(const Expr& a, const Expr& b);
    friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

private:
    explicit Expr(std::shared_ptr<const Node> p) : p_(std::move(p)) {}
    std::shared_ptr<const Node> p_;
    friend struct NodeFactory;
};

// Total structural order on expressions (negative / 0 / positive).
int compare(const Expr& a, const Expr& b);
struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

Expr normalize(const Expr& e);

// Arithmetic: all results are normalized.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr& operator+=(Expr& a, const Expr& b);
Expr& operator-=(Expr& a, const Expr& b);
Expr& operator*=(Expr& a, const Expr& b);
Expr pow(const Expr& b, const Rational& r);
Expr pow(const Expr& b, const Expr& e);
Expr sin(const Expr& u);
Expr cos(const Expr& u);
Expr tan(const Expr& u);
Expr exp(const Expr& u);
Expr log(const Expr& u);
Expr sqrt(const Expr& u);
Expr asin(const Expr& u);
Expr sum(const std::vector<Expr>& terms);
Expr product(const std::vector<Expr>& factors);

Expr differentiate(const Expr& e, const std::string& x);
inline Expr diff(const Expr& e, const std::string& x) { return differentiate(e, x); }
Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings);

// Replace unknown function applications by concrete bodies: name -> (parameter names, body).
struct FunctionDef {
    std::vector<std::string> params;
    Expr body;
};
Expr expand_functions(const Expr& e, const std::map<std::string, FunctionDef>& defs);

std::set<std::string> free_symbols(const Expr& e);
std::set<std::string> function_names(const Expr& e);

// Canonical expanded view: list of (coefficient, monomial with coefficient 1).
struct Term {
    Rational coeff;
    Expr mono;
};
std::vector<Term> terms(const Expr& e);

// Multiply through by all denominators (negative-power factors); zero-ness is preserved
// wherever the denominators are nonzero.
Expr clear_denominators(const Expr& e);

// Polynomial degree of a normalized expression in the given symbols (-1 if not polynomial in them).
int degree_in(const Expr& e, const std::vector<std::string>& syms);

std::string to_string(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

struct ParseOptions {
    std::set<std::string> functions;  // declared unknown function names
};
Expr parse(const std::string& src, const ParseOptions& opts = {});

}  // namespace mechsym
