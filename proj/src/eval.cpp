#include "mechsym/eval.hpp"

#include <cmath>
#include <functional>

namespace mechsym {

namespace {

uint64_t splitmix(uint64_t& s) {
    uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

real unit(uint64_t& s) { return static_cast<real>(splitmix(s) >> 11) / static_cast<real>(1ULL << 53); }

uint64_t fnv(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
}

real to_real(const Rational& r) {
    if (r.get_num().fits_slong_p() && r.get_den().fits_slong_p())
        return static_cast<real>(r.get_num().get_si()) / static_cast<real>(r.get_den().get_si());
    return static_cast<real>(r.get_d());
}

// 10-point Gauss-Legendre nodes/weights on [-1,1].
const real kGLx[5] = {0.1488743389816312108848260L, 0.4333953941292471907992659L, 0.6794095682990244062343274L,
                      0.8650633666889845107320967L, 0.9739065285171717200779640L};
const real kGLw[5] = {0.2955242247147528701738930L, 0.2692667193099963550912269L, 0.2190863625159820439955349L,
                      0.1494513491505805931457763L, 0.0666713443086881375935688L};

}  // namespace

real RandomFunctions::eval(const std::string& name, const std::vector<int>& deriv, const std::vector<real>& args) const {
    uint64_t s = seed_ ^ fnv(name) ^ (args.size() * 0x51ed27ULL);
    real total = 0;
    for (int k = 0; k < 3; ++k) {
        real c = 0.5L + unit(s);
        real dot = 0, dfac = 1;
        for (size_t i = 0; i < args.size(); ++i) {
            real b = -0.8L + 1.6L * unit(s);
            dot += b * args[i];
            for (int j = 0; j < deriv[i]; ++j) dfac *= b;
        }
        total += c * dfac * std::exp(dot);
    }
    // a small linear part keeps first derivatives away from accidental zeros
    uint64_t s2 = s;
    for (size_t i = 0; i < args.size(); ++i) {
        real a = 0.3L + 0.4L * unit(s2);
        int order = 0;
        for (int d : deriv) order += d;
        if (order == 0) total += a * args[i];
        else if (order == 1 && deriv[i] == 1) total += a;
    }
    return total;
}

Compiled::Compiled(const Expr& e, const std::vector<std::string>& vars, const FunctionSampler* fns, real eps)
    : nvars_(vars.size()), fns_(fns), eps_(eps) {
    std::map<std::string, size_t> idx;
    for (size_t i = 0; i < vars.size(); ++i) idx[vars[i]] = i;
    emit(normalize(e), idx, vars);
}

void Compiled::emit(const Expr& e, const std::map<std::string, size_t>& idx, const std::vector<std::string>& vars) {
    auto push = [&](Instr in) { code_.push_back(std::move(in)); };
    switch (e.kind()) {
        case Kind::Num: push({Op::Const, 0, to_real(e.value())}); return;
        case Kind::Sym: {
            auto it = idx.find(e.name());
            if (it == idx.end()) throw Error("unbound_symbol", "symbol '" + e.name() + "' has no value");
            push({Op::Var, static_cast<uint32_t>(it->second)});
            return;
        }
        case Kind::Add:
        case Kind::Mul:
            for (const auto& a : e.args()) emit(a, idx, vars);
            push({e.kind() == Kind::Add ? Op::Add : Op::Mul, static_cast<uint32_t>(e.args().size())});
            return;
        case Kind::Pow: {
            emit(e.args()[0], idx, vars);
            const Expr& ex = e.args()[1];
            if (ex.kind() == Kind::Num) {
                const Rational& r = ex.value();
                if (r.get_den() == 1) {
                    Instr in{Op::PowInt};
                    in.ipow = r.get_num().get_si();
                    push(in);
                } else {
                    Instr in{Op::PowFrac, 0, to_real(r)};
                    in.even_den = r.get_den() % 2 == 0;
                    in.ipow = r.get_num().get_si();
                    push(in);
                }
            } else {
                emit(ex, idx, vars);
                push({Op::PowGen});
            }
            return;
        }
        case Kind::Fn: {
            emit(e.args()[0], idx, vars);
            static const Op ops[] = {Op::Sin, Op::Cos, Op::Tan, Op::Exp, Op::Log, Op::Sqrt, Op::Asin};
            push({ops[static_cast<int>(e.fn_kind())]});
            return;
        }
        case Kind::UFn: {
            for (const auto& a : e.args()) emit(a, idx, vars);
            Instr in{Op::UFn, static_cast<uint32_t>(e.args().size())};
            in.name = e.name();
            in.deriv = e.deriv();
            push(in);
            return;
        }
        case Kind::Integral: {
            emit(e.args()[1], idx, vars);
            std::vector<std::string> v2 = vars;
            v2.push_back(e.name());
            subs_.push_back(std::make_shared<Compiled>(e.args()[0], v2, fns_, eps_));
            push({Op::Integral, static_cast<uint32_t>(subs_.size() - 1)});
            return;
        }
    }
}

std::optional<real> Compiled::eval(const real* x) const {
    std::vector<real> st;
    st.reserve(16);
    for (const auto& in : code_) {
        switch (in.op) {
            case Op::Const: st.push_back(in.c); break;
            case Op::Var: st.push_back(x[in.n]); break;
            case Op::Add: {
                real s = 0;
                for (uint32_t k = 0; k < in.n; ++k) s += st[st.size() - in.n + k];
                st.resize(st.size() - in.n);
                st.push_back(s);
                break;
            }
            case Op::Mul: {
                real s = 1;
                for (uint32_t k = 0; k < in.n; ++k) s *= st[st.size() - in.n + k];
                st.resize(st.size() - in.n);
                st.push_back(s);
                break;
            }
            case Op::PowInt: {
                real b = st.back();
                if (in.ipow < 0 && std::fabs(b) < eps_) return std::nullopt;
                long n = in.ipow < 0 ? -in.ipow : in.ipow;
                real r = 1, p = b;
                while (n) {
                    if (n & 1) r *= p;
                    p *= p;
                    n >>= 1;
                }
                st.back() = in.ipow < 0 ? 1 / r : r;
                break;
            }
            case Op::PowFrac: {
                real b = st.back();
                if (in.c < 0 && std::fabs(b) < eps_) return std::nullopt;
                if (b < 0) {
                    if (in.even_den) return std::nullopt;
                    real m = std::pow(-b, in.c);
                    st.back() = (in.ipow % 2 != 0) ? -m : m;
                } else {
                    st.back() = std::pow(b, in.c);
                }
                break;
            }
            case Op::PowGen: {
                real e = st.back();
                st.pop_back();
                real b = st.back();
                if (b <= eps_) return std::nullopt;
                st.back() = std::pow(b, e);
                break;
            }
            case Op::Sin: st.back() = std::sin(st.back()); break;
            case Op::Cos: st.back() = std::cos(st.back()); break;
            case Op::Tan:
                if (std::fabs(std::cos(st.back())) < eps_) return std::nullopt;
                st.back() = std::tan(st.back());
                break;
            case Op::Exp: st.back() = std::exp(st.back()); break;
            case Op::Log:
                if (st.back() <= eps_) return std::nullopt;
                st.back() = std::log(st.back());
                break;
            case Op::Sqrt:
                if (st.back() < 0) return std::nullopt;
                st.back() = std::sqrt(st.back());
                break;
            case Op::Asin:
                if (std::fabs(st.back()) > 1 - eps_) return std::nullopt;
                st.back() = std::asin(st.back());
                break;
            case Op::UFn: {
                if (!fns_) throw Error("unbound_function", "no numeric definition for function '" + in.name + "'");
                std::vector<real> as(st.end() - in.n, st.end());
                st.resize(st.size() - in.n);
                st.push_back(fns_->eval(in.name, in.deriv, as));
                break;
            }
            case Op::Integral: {
                real up = st.back();
                const Compiled& sub = *subs_[in.n];
                std::vector<real> buf(x, x + nvars_);
                buf.push_back(0);
                const int panels = 8;
                real h = up / panels, total = 0;
                for (int p = 0; p < panels; ++p) {
                    real mid = h * (p + 0.5L), half = h / 2;
                    for (int k = 0; k < 5; ++k) {
                        for (int sgn_ = -1; sgn_ <= 1; sgn_ += 2) {
                            buf.back() = mid + sgn_ * half * kGLx[k];
                            auto v = sub.eval(buf.data());
                            if (!v) return std::nullopt;
                            total += kGLw[k] * half * *v;
                        }
                    }
                }
                st.back() = total;
                break;
            }
        }
    }
    real r = st.back();
    if (!std::isfinite(r)) return std::nullopt;
    return r;
}

const char* status_name(ZeroStatus s) {
    switch (s) {
        case ZeroStatus::proved_zero: return "proved_zero";
        case ZeroStatus::proved_nonzero: return "proved_nonzero";
        case ZeroStatus::probably_zero: return "probably_zero";
    }
    return "?";
}

PointSampler::PointSampler(std::vector<std::string> vars, const ZeroOptions& opts)
    : vars_(std::move(vars)), fns_(opts.seed), state_(opts.seed * 0x2545F4914F6CDD1DULL + 17),
      budget_(100L * std::max(1, opts.n_points)) {
    std::set<std::string> vs(vars_.begin(), vars_.end());
    for (const auto& a : opts.assumptions) {
        auto fs = free_symbols(a.expr);
        bool relevant = !fs.empty();
        for (const auto& s : fs)
            if (!vs.count(s)) relevant = false;
        if (!relevant) continue;
        assume_.emplace_back(a.expr, vars_, &fns_);
        kinds_.push_back(a.kind);
    }
}

bool PointSampler::next(std::vector<real>& point, std::vector<Rational>& exact) {
    while (budget_-- > 0) {
        // widen the box after repeated rejections, for assumptions that fail near the unit box
        long scale = std::min(fails_ / 50, 6L);
        point.assign(vars_.size(), 0);
        exact.assign(vars_.size(), Rational(0));
        for (size_t i = 0; i < vars_.size(); ++i) {
            uint64_t k = splitmix(state_) >> 44;  // 20 random bits
            Rational r = Rational(1, 4) + Rational(static_cast<long>(3 * k) << scale, 1L << 21);
            r.canonicalize();
            exact[i] = r;
            point[i] = to_real(r);
        }
        bool ok = true;
        for (size_t j = 0; j < assume_.size() && ok; ++j) {
            auto v = assume_[j].eval(point);
            if (!v) ok = false;
            else if (kinds_[j] == Assumption::nonzero && std::fabs(*v) < 1e-6L) ok = false;
            else if (kinds_[j] == Assumption::positive && *v <= 1e-9L) ok = false;
        }
        if (ok) {
            fails_ = 0;
            return true;
        }
        ++fails_;
    }
    return false;
}

ZeroVerdict is_zero(const Expr& e, const ZeroOptions& opts) {
    ZeroVerdict v;
    Expr n = normalize(e);
    if (n.is_zero_literal()) {
        v.tier = "normal_form";
        return v;
    }
    if (clear_denominators(n).is_zero_literal()) {
        v.tier = "cleared_denominators";
        return v;
    }
    v.tier = "sampling";
    auto fs = free_symbols(n);
    std::vector<std::string> vars(fs.begin(), fs.end());
    PointSampler sampler(vars, opts);
    std::vector<Compiled> parts;
    if (n.kind() == Kind::Add)
        for (const auto& t : n.args()) parts.emplace_back(t, vars, &sampler.functions());
    else
        parts.emplace_back(n, vars, &sampler.functions());
    int good = 0;
    std::vector<real> pt;
    std::vector<Rational> ex;
    while (good < std::max(1, opts.n_points)) {
        if (!sampler.next(pt, ex))
            throw Error("evaluation_domain_exhausted",
                        "no valid sample point found for zero test of " + to_string(n));
        real total = 0, scale = 0;
        bool ok = true;
        for (const auto& c : parts) {
            auto r = c.eval(pt);
            if (!r) {
                ok = false;
                break;
            }
            total += *r;
            scale += std::fabs(*r);
        }
        if (!ok) continue;
        ++good;
        real rel = std::fabs(total) / std::max<real>(1, scale);
        if (rel > 1e-9L) {
            v.status = ZeroStatus::proved_nonzero;
            for (size_t i = 0; i < vars.size(); ++i) v.witness[vars[i]] = ex[i];
            v.witness_value = total;
            return v;
        }
    }
    v.status = ZeroStatus::probably_zero;
    return v;
}

ZeroVerdict is_zero(const Expr& e, uint64_t seed, int n_points) {
    ZeroOptions o;
    o.seed = seed;
    o.n_points = n_points;
    return is_zero(e, o);
}

std::optional<real> evaluate(const Expr& e, const std::map<std::string, real>& point, uint64_t seed) {
    std::vector<std::string> vars;
    std::vector<real> xs;
    for (const auto& [k, v] : point) {
        vars.push_back(k);
        xs.push_back(v);
    }
    RandomFunctions fns(seed);
    Compiled c(e, vars, &fns);
    return c.eval(xs);
}

}  // namespace mechsym
