#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lassb {

inline constexpr const char* kVersion = "lassb 1.0.0";

// Bad or inconsistent user input (files, flags, parameter values).
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative procedure ran out of budget without meeting its tolerance.
struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A violated internal invariant; indicates a defect, not a user mistake.
struct internal_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require_input(bool ok, const std::string& msg) {
    if (!ok) throw input_error(msg);
}

inline void require_internal(bool ok, const std::string& msg) {
    if (!ok) throw internal_error(msg);
}

// Linearly interpolated sample quantile (R type 7) of an ascending vector.
inline double quantile_sorted(const std::vector<double>& v, double p) {
    if (v.empty()) throw internal_error("quantile of an empty sample");
    if (v.size() == 1) return v[0];
    const double h = p * double(v.size() - 1);
    const std::size_t lo = std::size_t(std::clamp(h, 0.0, double(v.size() - 2)));
    return v[lo] + (h - double(lo)) * (v[lo + 1] - v[lo]);
}

// FNV-1a, used to stamp output files with a digest of the run configuration.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace lassb
