// Numeric evaluation of expressions and the two-tier zero test.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mechsym/expr.hpp"

namespace mechsym {

using real = long double;

// Supplies values (and partial derivatives) of unknown functions during sampling.
class FunctionSampler {
public:
    virtual ~FunctionSampler() = default;
    virtual real eval(const std::string& name, const std::vector<int>& deriv, const std::vector<real>& args) const = 0;
};

// Deterministic smooth stand-ins: F(x) = sum_k c_k exp(b_k . x), parameters derived from (seed, name).
class RandomFunctions : public FunctionSampler {
public:
    explicit RandomFunctions(uint64_t seed) : seed_(seed) {}
    real eval(const std::string& name, const std::vector<int>& deriv, const std::vector<real>& args) const override;

private:
    uint64_t seed_;
};

// Flat postfix program compiled from an expression over an ordered variable list.
class Compiled {
public:
    enum class Op : uint8_t { Const, Var, Add, Mul, PowInt, PowFrac, PowGen, Sin, Cos, Tan, Exp, Log, Sqrt, Asin, UFn, Integral };
    struct Instr {
        Op op;
        uint32_t n = 0;        // arity / variable index / sub-program index
        real c = 0;            // constant or exponent
        long ipow = 0;         // integer exponent
        bool even_den = false; // fractional exponent with even denominator
        std::string name;
        std::vector<int> deriv;
    };

    Compiled() = default;
    Compiled(const Expr& e, const std::vector<std::string>& vars, const FunctionSampler* fns = nullptr,
             real singular_eps = 1e-8L);
    // Returns nullopt when the point is outside the domain (singular denominator, log/sqrt/asin domain).
    std::optional<real> eval(const real* x) const;
    std::optional<real> eval(const std::vector<real>& x) const { return eval(x.data()); }
    size_t arity() const { return nvars_; }

private:
    std::vector<Instr> code_;
    std::vector<std::shared_ptr<Compiled>> subs_;
    size_t nvars_ = 0;
    size_t depth_ = 0;
    const FunctionSampler* fns_ = nullptr;
    real eps_ = 1e-8L;
    void emit(const Expr& e, const std::map<std::string, size_t>& idx, const std::vector<std::string>& vars);
};

enum class ZeroStatus { proved_zero, proved_nonzero, probably_zero };
const char* status_name(ZeroStatus s);

struct ZeroVerdict {
    ZeroStatus status = ZeroStatus::proved_zero;
    std::map<std::string, Rational> witness;  // present for proved_nonzero
    real witness_value = 0;
    std::string tier;  // "normal_form", "cleared_denominators", "sampling"
    bool zero() const { return status != ZeroStatus::proved_nonzero; }
    bool proved() const { return status == ZeroStatus::proved_zero; }
};

struct Assumption {
    enum Kind { nonzero, positive } kind = nonzero;
    Expr expr;
};

constexpr uint64_t kDefaultSeed = 0x6D656368ULL;

struct ZeroOptions {
    uint64_t seed = kDefaultSeed;
    int n_points = 16;
    std::vector<Assumption> assumptions;
};

ZeroVerdict is_zero(const Expr& e, const ZeroOptions& opts);
ZeroVerdict is_zero(const Expr& e, uint64_t seed = kDefaultSeed, int n_points = 16);

// Draws seeded sample points (rational, in (1/4, 7/4)) satisfying the assumptions; the box is
// widened by powers of two after repeated rejections.
class PointSampler {
public:
    PointSampler(std::vector<std::string> vars, const ZeroOptions& opts);
    // Returns false when the draw budget is exhausted.
    bool next(std::vector<real>& point, std::vector<Rational>& exact);
    const std::vector<std::string>& vars() const { return vars_; }
    const FunctionSampler& functions() const { return fns_; }

private:
    std::vector<std::string> vars_;
    std::vector<Compiled> assume_;
    std::vector<Assumption::Kind> kinds_;
    RandomFunctions fns_;
    uint64_t state_;
    long budget_;
    long fails_ = 0;
};

// Convenience: evaluate at a named point (unknown functions via RandomFunctions(seed)).
std::optional<real> evaluate(const Expr& e, const std::map<std::string, real>& point, uint64_t seed = kDefaultSeed);

}  // namespace mechsym
