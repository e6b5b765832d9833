// Shared helpers for the test suites.
#pragma once

#include <random>
#include <string>

#include "doctest.h"
#include "mechsym/eval.hpp"
#include "mechsym/expr.hpp"
#include "mechsym/geometry.hpp"

namespace mt {

using namespace mechsym;

inline Expr P(const std::string& s, std::set<std::string> fns = {}) { return normalize(parse(s, {fns})); }

inline bool zero(const Expr& e, const ZeroOptions& o = {}) { return is_zero(e, o).status == ZeroStatus::proved_zero; }
inline bool zero(const VectorField& X, const ZeroOptions& o = {}) { return is_zero(X, o).status == ZeroStatus::proved_zero; }
inline bool zero(const KForm& w, const ZeroOptions& o = {}) { return is_zero(w, o).status == ZeroStatus::proved_zero; }

inline bool same(const Expr& a, const Expr& b, const ZeroOptions& o = {}) { return zero(a - b, o); }

// Random polynomial with small integer coefficients in the given symbols.
inline Expr random_poly(std::mt19937_64& rng, const std::vector<std::string>& vars, int terms = 3, int maxdeg = 2) {
    std::uniform_int_distribution<int> coef(-3, 3), deg(0, maxdeg);
    std::uniform_int_distribution<size_t> pick(0, vars.size() - 1);
    Expr r(0);
    for (int t = 0; t < terms; ++t) {
        Expr m(coef(rng));
        int dd = deg(rng);
        for (int k = 0; k < dd; ++k) m = m * Expr::sym(vars[pick(rng)]);
        r = r + m;
    }
    return r;
}

inline VectorField random_field(std::mt19937_64& rng, const ChartPtr& ch, int terms = 2, int maxdeg = 2) {
    auto X = VectorField::zero(ch);
    for (auto& c : X.c) c = random_poly(rng, ch->coords(), terms, maxdeg);
    return X;
}

inline KForm random_form(std::mt19937_64& rng, const ChartPtr& ch, int k, int terms = 2, int maxdeg = 2) {
    KForm w(ch, k);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(ch->dim()) - 1);
    for (int t = 0; t < 3; ++t) {
        std::vector<int> idx;
        for (int j = 0; j < k; ++j) idx.push_back(pick(rng));
        w.add(idx, random_poly(rng, ch->coords(), terms, maxdeg));
    }
    return w;
}

}  // namespace mt

namespace mt {

// Runs f and returns the code of the mechsym::Error it throws ("" when nothing is thrown).
template <class F>
std::string error_code(F&& f) {
    try {
        f();
    } catch (const mechsym::Error& e) {
        return e.code;
    }
    return "";
}

}  // namespace mt
