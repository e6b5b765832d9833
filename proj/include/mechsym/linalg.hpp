// Gauss-Jordan elimination over expressions with a pluggable zero oracle.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "mechsym/eval.hpp"
#include "mechsym/expr.hpp"

namespace mechsym {

using Vec = std::vector<Expr>;
using Mat = std::vector<Vec>;
using ZeroTest = std::function<ZeroVerdict(const Expr&)>;

ZeroTest plain_zero_test(const ZeroOptions& opts);

struct SolveResult {
    bool consistent = true;
    std::vector<Expr> conditions;   // reduced right-hand sides of zero rows; all must vanish
    std::vector<int> condition_rows;
    Vec particular;                 // free unknowns set to zero
    std::vector<Vec> null_basis;    // one vector per free unknown
    std::vector<int> pivots;        // pivot column per rank row
    int rank = 0;
    bool sampled = false;           // some pivot decision rested on probably_zero
};

// Solves A x = b (A is m x n). Pivots are chosen column by column, preferring rational
// constants, then the smallest entry.
SolveResult solve_linear(const Mat& A, const Vec& b, const ZeroTest& z);
int rank(const Mat& A, const ZeroTest& z, bool* sampled = nullptr);
std::vector<Vec> null_space(const Mat& A, const ZeroTest& z);
std::vector<Vec> left_null_space(const Mat& A, const ZeroTest& z);
Mat transpose(const Mat& A);
Vec mat_vec(const Mat& A, const Vec& x);
Expr determinant(const Mat& A);  // cofactor expansion, small matrices only

}  // namespace mechsym

namespace mechsym {
// Inverse via Gauss-Jordan on [A | I]; nullopt when A is singular.
std::optional<Mat> inverse(const Mat& A, const ZeroTest& z, bool* sampled = nullptr);
}  // namespace mechsym

namespace mechsym {
// Sparse exact solve of A k = b over the rationals; rows are (column -> value) maps.
using SparseRow = std::map<int, Rational>;
std::optional<std::vector<Rational>> solve_rational(const std::vector<SparseRow>& A, const std::vector<Rational>& b,
                                                    int ncols);

// Finds constant rational k with target = sum_c k_c basis_c by matching the coefficients of
// expanded monomials; nullopt when no such combination exists.
std::optional<std::vector<Rational>> match_coefficients(const Expr& target, const std::vector<Expr>& basis);
}  // namespace mechsym

namespace mechsym {
// All monomials in `vars` of total degree <= maxdeg (1 first, then by degree).
std::vector<Expr> monomials(const std::vector<std::string>& vars, int maxdeg);
}  // namespace mechsym
