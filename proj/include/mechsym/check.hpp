// Named residual checks shared by the certificate types.
#pragma once

#include <string>
#include <vector>

#include "mechsym/eval.hpp"

namespace mechsym {

struct Check {
    std::string name;
    ZeroVerdict verdict;
    std::string residual;  // printed residual (empty when it is literally zero)
    bool mandatory = true;
    bool ok() const { return verdict.zero(); }
};

// proved_zero / probably_zero / proved_nonzero summary over mandatory checks.
inline ZeroStatus overall(const std::vector<Check>& cs) {
    ZeroStatus s = ZeroStatus::proved_zero;
    for (const auto& c : cs) {
        if (!c.mandatory) continue;
        if (c.verdict.status == ZeroStatus::proved_nonzero) return ZeroStatus::proved_nonzero;
        if (c.verdict.status == ZeroStatus::probably_zero) s = ZeroStatus::probably_zero;
    }
    return s;
}

inline const Check* find_check(const std::vector<Check>& cs, const std::string& name) {
    for (const auto& c : cs)
        if (c.name == name) return &c;
    return nullptr;
}

}  // namespace mechsym
