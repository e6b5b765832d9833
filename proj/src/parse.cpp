// Recursive-descent parser for the expression grammar.
//   expr   := ['+'|'-'] term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' ['-'] factor)?
//   base   := number | symbol | func '(' expr ')' | ufunc '(' expr (',' expr)* ')'
//           | 'D[' int (',' int)* ']' ufunc '(' ... ')' | 'integral(' expr ',' symbol ',' expr ')'
//           | '(' expr ')'
#include <cctype>

#include "mechsym/expr.hpp"

namespace mechsym {

namespace {

class Parser {
public:
    Parser(const std::string& s, const ParseOptions& o) : s_(s), opts_(o) {}

    Expr run() {
        Expr e = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected character '" + std::string(1, s_[i_]) + "'");
        return e;
    }

private:
    const std::string& s_;
    const ParseOptions& opts_;
    size_t i_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, i_); }
    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool peek(char c) {
        skip();
        return i_ < s_.size() && s_[i_] == c;
    }
    bool accept(char c) {
        if (peek(c)) {
            ++i_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    static Expr neg(const Expr& e) { return Expr::raw_mul({Expr(-1), e}); }

    Expr expr() {
        std::vector<Expr> ts;
        bool minus = false;
        if (accept('-')) minus = true;
        else accept('+');
        Expr t = term();
        ts.push_back(minus ? neg(t) : t);
        while (true) {
            if (accept('+')) ts.push_back(term());
            else if (accept('-')) ts.push_back(neg(term()));
            else break;
        }
        return ts.size() == 1 ? ts[0] : Expr::raw_add(ts);
    }

    Expr term() {
        std::vector<Expr> fs{factor()};
        while (true) {
            if (accept('*')) fs.push_back(factor());
            else if (accept('/')) fs.push_back(Expr::raw_pow(factor(), Expr(-1)));
            else break;
        }
        return fs.size() == 1 ? fs[0] : Expr::raw_mul(fs);
    }

    Expr factor() {
        Expr b = base();
        if (accept('^')) {
            bool minus = accept('-');
            Expr e = factor();
            return Expr::raw_pow(b, minus ? neg(e) : e);
        }
        return b;
    }

    std::string ident() {
        skip();
        size_t st = i_;
        if (i_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
            ++i_;
            while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
        }
        if (st == i_) fail("expected identifier");
        return s_.substr(st, i_ - st);
    }

    long integer() {
        skip();
        size_t st = i_;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
        if (st == i_) fail("expected integer");
        return std::stol(s_.substr(st, i_ - st));
    }

    std::vector<Expr> call_args() {
        expect('(');
        std::vector<Expr> as{expr()};
        while (accept(',')) as.push_back(expr());
        expect(')');
        return as;
    }

    Expr base() {
        skip();
        if (i_ >= s_.size()) fail("unexpected end of input");
        char c = s_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t st = i_;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            std::string digits = s_.substr(st, i_ - st);
            std::string frac;
            if (i_ < s_.size() && s_[i_] == '.') {
                ++i_;
                size_t fs = i_;
                while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
                frac = s_.substr(fs, i_ - fs);
            }
            if (digits.empty() && frac.empty()) fail("malformed number");
            mpz_class num(digits.empty() ? "0" : digits + frac);
            mpz_class den;
            mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
            Rational r(num, den);
            r.canonicalize();
            return Expr(r);
        }
        if (c == '(') {
            ++i_;
            Expr e = expr();
            expect(')');
            return e;
        }
        size_t start = i_;
        std::string id = ident();
        if (id == "D" && peek('[')) {
            ++i_;
            std::vector<int> d{static_cast<int>(integer())};
            while (accept(',')) d.push_back(static_cast<int>(integer()));
            expect(']');
            size_t fpos = i_;
            std::string f = ident();
            if (!opts_.functions.count(f)) {
                i_ = fpos;
                fail("unknown function '" + f + "'");
            }
            auto as = call_args();
            if (as.size() != d.size()) fail("derivative index count does not match arguments");
            return Expr::raw_ufn(f, as, d);
        }
        if (!peek('(')) return Expr::sym(id);
        static const std::pair<const char*, Fn> builtins[] = {{"sin", Fn::Sin},   {"cos", Fn::Cos}, {"tan", Fn::Tan},
                                                              {"exp", Fn::Exp},   {"log", Fn::Log}, {"sqrt", Fn::Sqrt},
                                                              {"asin", Fn::Asin}};
        for (const auto& [nm, f] : builtins) {
            if (id == nm) {
                expect('(');
                Expr a = expr();
                expect(')');
                return Expr::raw_fn(f, a);
            }
        }
        if (id == "integral") {
            expect('(');
            Expr f = expr();
            expect(',');
            std::string var = ident();
            expect(',');
            Expr up = expr();
            expect(')');
            return Expr::raw_integral(f, var, up);
        }
        if (opts_.functions.count(id)) return Expr::raw_ufn(id, call_args(), {});
        i_ = start;
        fail("unknown function '" + id + "'");
    }
};

}  // namespace

Expr parse(const std::string& src, const ParseOptions& opts) { return Parser(src, opts).run(); }

}  // namespace mechsym
