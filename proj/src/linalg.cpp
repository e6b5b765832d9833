#include "mechsym/linalg.hpp"

#include <functional>

namespace mechsym {

ZeroTest plain_zero_test(const ZeroOptions& opts) {
    return [opts](const Expr& e) { return is_zero(e, opts); };
}

namespace {

size_t size_of(const Expr& e) {
    size_t n = 1;
    for (const auto& a : e.args()) n += size_of(a);
    return n;
}

}  // namespace

SolveResult solve_linear(const Mat& A0, const Vec& b0, const ZeroTest& z) {
    SolveResult res;
    size_t m = A0.size();
    size_t n = m ? A0[0].size() : 0;
    Mat A = A0;
    Vec b = b0;
    if (b.size() < m) b.resize(m, Expr(0));
    size_t row = 0;
    for (size_t col = 0; col < n && row < m; ++col) {
        long best = -1;
        size_t best_size = 0;
        bool best_num = false;
        for (size_t r = row; r < m; ++r) {
            Expr& e = A[r][col];
            if (e.is_zero_literal()) continue;
            auto v = z(e);
            if (v.zero()) {
                if (v.status == ZeroStatus::probably_zero) res.sampled = true;
                e = Expr(0);
                continue;
            }
            bool isnum = e.is_num();
            size_t sz = size_of(e);
            if (best < 0 || (isnum && !best_num) || (isnum == best_num && sz < best_size)) {
                best = static_cast<long>(r);
                best_size = sz;
                best_num = isnum;
            }
        }
        if (best < 0) continue;
        std::swap(A[row], A[static_cast<size_t>(best)]);
        std::swap(b[row], b[static_cast<size_t>(best)]);
        Expr inv = Expr(1) / A[row][col];
        for (size_t k = 0; k < n; ++k) A[row][k] = (k == col) ? Expr(1) : A[row][k] * inv;
        b[row] = b[row] * inv;
        for (size_t r = 0; r < m; ++r) {
            if (r == row || A[r][col].is_zero_literal()) continue;
            Expr f = A[r][col];
            for (size_t k = 0; k < n; ++k) A[r][k] = (k == col) ? Expr(0) : A[r][k] - f * A[row][k];
            b[r] = b[r] - f * b[row];
        }
        res.pivots.push_back(static_cast<int>(col));
        ++row;
    }
    res.rank = static_cast<int>(row);
    for (size_t r = row; r < m; ++r) {
        res.conditions.push_back(b[r]);
        res.condition_rows.push_back(static_cast<int>(r));
        auto v = z(b[r]);
        if (!v.zero()) res.consistent = false;
        if (v.status == ZeroStatus::probably_zero) res.sampled = true;
    }
    res.particular.assign(n, Expr(0));
    std::vector<bool> is_pivot(n, false);
    for (size_t i = 0; i < res.pivots.size(); ++i) {
        res.particular[static_cast<size_t>(res.pivots[i])] = b[i];
        is_pivot[static_cast<size_t>(res.pivots[i])] = true;
    }
    for (size_t f = 0; f < n; ++f) {
        if (is_pivot[f]) continue;
        Vec v(n, Expr(0));
        v[f] = Expr(1);
        for (size_t i = 0; i < res.pivots.size(); ++i) v[static_cast<size_t>(res.pivots[i])] = -A[i][f];
        res.null_basis.push_back(v);
    }
    return res;
}

int rank(const Mat& A, const ZeroTest& z, bool* sampled) {
    auto r = solve_linear(A, Vec(A.size(), Expr(0)), z);
    if (sampled) *sampled = r.sampled;
    return r.rank;
}

std::vector<Vec> null_space(const Mat& A, const ZeroTest& z) {
    return solve_linear(A, Vec(A.size(), Expr(0)), z).null_basis;
}

Mat transpose(const Mat& A) {
    if (A.empty()) return {};
    Mat T(A[0].size(), Vec(A.size()));
    for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < A[0].size(); ++j) T[j][i] = A[i][j];
    return T;
}

std::vector<Vec> left_null_space(const Mat& A, const ZeroTest& z) { return null_space(transpose(A), z); }

Vec mat_vec(const Mat& A, const Vec& x) {
    Vec r;
    for (const auto& row : A) {
        std::vector<Expr> ts;
        for (size_t j = 0; j < row.size(); ++j) ts.push_back(row[j] * x[j]);
        r.push_back(sum(ts));
    }
    return r;
}

Expr determinant(const Mat& A) {
    size_t n = A.size();
    if (n == 0) return Expr(1);
    if (n == 1) return A[0][0];
    std::vector<Expr> ts;
    for (size_t j = 0; j < n; ++j) {
        if (A[0][j].is_zero_literal()) continue;
        Mat minor;
        for (size_t i = 1; i < n; ++i) {
            Vec r;
            for (size_t k = 0; k < n; ++k)
                if (k != j) r.push_back(A[i][k]);
            minor.push_back(r);
        }
        Expr t = A[0][j] * determinant(minor);
        ts.push_back(j % 2 ? -t : t);
    }
    return sum(ts);
}

}  // namespace mechsym

namespace mechsym {

std::optional<Mat> inverse(const Mat& A0, const ZeroTest& z, bool* sampled) {
    size_t n = A0.size();
    Mat A = A0;
    Mat B(n, Vec(n, Expr(0)));
    for (size_t i = 0; i < n; ++i) B[i][i] = Expr(1);
    bool smp = false;
    for (size_t col = 0; col < n; ++col) {
        long best = -1;
        bool best_num = false;
        for (size_t r = col; r < n; ++r) {
            Expr& e = A[r][col];
            if (e.is_zero_literal()) continue;
            auto v = z(e);
            if (v.zero()) {
                smp = smp || v.status == ZeroStatus::probably_zero;
                e = Expr(0);
                continue;
            }
            if (best < 0 || (e.is_num() && !best_num)) {
                best = static_cast<long>(r);
                best_num = e.is_num();
            }
        }
        if (best < 0) {
            if (sampled) *sampled = smp;
            return std::nullopt;
        }
        std::swap(A[col], A[static_cast<size_t>(best)]);
        std::swap(B[col], B[static_cast<size_t>(best)]);
        Expr inv = Expr(1) / A[col][col];
        for (size_t k = 0; k < n; ++k) {
            A[col][k] = k == col ? Expr(1) : A[col][k] * inv;
            B[col][k] = B[col][k] * inv;
        }
        for (size_t r = 0; r < n; ++r) {
            if (r == col || A[r][col].is_zero_literal()) continue;
            Expr f = A[r][col];
            for (size_t k = 0; k < n; ++k) {
                A[r][k] = k == col ? Expr(0) : A[r][k] - f * A[col][k];
                B[r][k] = B[r][k] - f * B[col][k];
            }
        }
    }
    if (sampled) *sampled = smp;
    return B;
}

}  // namespace mechsym

namespace mechsym {

std::optional<std::vector<Rational>> solve_rational(const std::vector<SparseRow>& A0, const std::vector<Rational>& b0,
                                                    int ncols) {
    std::vector<SparseRow> A = A0;
    std::vector<Rational> b = b0;
    for (auto& row : A) std::erase_if(row, [](const auto& kv) { return sgn(kv.second) == 0; });
    std::vector<bool> used(A.size(), false);
    std::vector<std::pair<int, size_t>> piv;  // (column, row)
    for (int col = 0; col < ncols; ++col) {
        // sparsest row with a nonzero in this column
        long best = -1;
        size_t best_sz = 0;
        for (size_t r = 0; r < A.size(); ++r) {
            if (used[r]) continue;
            auto it = A[r].find(col);
            if (it == A[r].end()) continue;
            if (best < 0 || A[r].size() < best_sz) {
                best = static_cast<long>(r);
                best_sz = A[r].size();
            }
        }
        if (best < 0) continue;
        size_t pr = static_cast<size_t>(best);
        used[pr] = true;
        Rational inv = 1 / A[pr][col];
        for (auto& [k, v] : A[pr]) v *= inv;
        b[pr] *= inv;
        for (size_t r = 0; r < A.size(); ++r) {
            if (r == pr) continue;
            auto it = A[r].find(col);
            if (it == A[r].end()) continue;
            Rational f = it->second;
            for (const auto& [k, v] : A[pr]) {
                Rational nv = A[r][k] - f * v;
                if (sgn(nv) == 0) A[r].erase(k);
                else A[r][k] = nv;
            }
            b[r] -= f * b[pr];
        }
        piv.emplace_back(col, pr);
    }
    for (size_t r = 0; r < A.size(); ++r)
        if (!used[r] && sgn(b[r]) != 0) return std::nullopt;
    std::vector<Rational> x(static_cast<size_t>(ncols), Rational(0));
    for (const auto& [col, r] : piv) x[static_cast<size_t>(col)] = b[r];
    return x;
}

std::optional<std::vector<Rational>> match_coefficients(const Expr& target, const std::vector<Expr>& basis) {
    std::map<Expr, int, ExprLess> rows;
    auto row_of = [&](const Expr& m) {
        auto it = rows.find(m);
        if (it != rows.end()) return it->second;
        int r = static_cast<int>(rows.size());
        rows.emplace(m, r);
        return r;
    };
    std::vector<SparseRow> A;
    std::vector<Rational> b;
    auto grow = [&](int r) {
        while (static_cast<int>(A.size()) <= r) {
            A.emplace_back();
            b.emplace_back(0);
        }
    };
    for (size_t c = 0; c < basis.size(); ++c)
        for (const auto& t : terms(basis[c])) {
            int r = row_of(t.mono);
            grow(r);
            A[static_cast<size_t>(r)][static_cast<int>(c)] += t.coeff;
        }
    for (const auto& t : terms(target)) {
        int r = row_of(t.mono);
        grow(r);
        b[static_cast<size_t>(r)] += t.coeff;
    }
    return solve_rational(A, b, static_cast<int>(basis.size()));
}

}  // namespace mechsym

namespace mechsym {

std::vector<Expr> monomials(const std::vector<std::string>& vars, int maxdeg) {
    std::vector<Expr> out{Expr(1)};
    std::vector<std::pair<Expr, size_t>> layer{{Expr(1), 0}};  // monomial, smallest allowed next var
    for (int d = 1; d <= maxdeg; ++d) {
        std::vector<std::pair<Expr, size_t>> next;
        for (const auto& [m, start] : layer)
            for (size_t i = start; i < vars.size(); ++i) {
                Expr nm = m * Expr::sym(vars[i]);
                out.push_back(nm);
                next.emplace_back(nm, i);
            }
        layer = std::move(next);
    }
    return out;
}

}  // namespace mechsym
