#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "lassb/common.hpp"
#include "lassb/rng.hpp"

namespace lassb::sf {

inline double ln_gamma(double x) {
    if (!(x > 0) || !std::isfinite(x)) throw std::domain_error("ln_gamma: argument must be positive");
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

inline double ln_beta(double a, double b) {
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
}

inline double digamma(double x) {
    if (!(x > 0) || !std::isfinite(x)) throw std::domain_error("digamma: argument must be positive");
    double acc = 0.0;
    while (x < 8.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // asymptotic expansion; at x >= 8 the truncation sits below 1e-15 relative
    const double t = 1.0 / (x * x);
    const double tail =
        t * (1.0 / 12 -
             t * (1.0 / 120 -
                  t * (1.0 / 252 - t * (1.0 / 240 - t * (1.0 / 132 - t * (691.0 / 32760 - t / 12))))));
    return acc + std::log(x) - 0.5 / x - tail;
}

struct SeriesResult {
    double value = 0.0;
    bool converged = false;
    int terms = 0;
};

namespace detail {

inline SeriesResult hyp2f1_series(double a, double b, double c, double z) {
    double term = 1.0, sum = 1.0;
    for (int n = 0; n < 10000; ++n) {
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
        sum += term;
        if (!std::isfinite(sum)) return {sum, false, n + 1};
        if (std::abs(term) <= 1e-15 * std::abs(sum)) return {sum, true, n + 1};
    }
    return {sum, false, 10000};
}

}  // namespace detail

// Gauss series on [0,1); for z<0 the Pfaff transform
// 2F1(a,b;c;z) = (1-z)^(-a) 2F1(a,c-b;c;z/(z-1)) maps into (0,1).
// converged=false signals the caller to switch to a quadrature path.
inline SeriesResult hyp2f1(double a, double b, double c, double z) {
    if (!(c > 0) || !std::isfinite(z) || !(z < 1.0))
        throw std::domain_error("hyp2f1: need c > 0 and z < 1");
    if (z < 0.0) {
        SeriesResult r = detail::hyp2f1_series(a, c - b, c, z / (z - 1.0));
        r.value *= std::pow(1.0 - z, -a);
        return r;
    }
    return detail::hyp2f1_series(a, b, c, z);
}

inline SeriesResult hyp3f2(double a1, double a2, double a3, double b1, double b2, double z) {
    if (!(b1 > 0) || !(b2 > 0)) throw std::domain_error("hyp3f2: lower parameters must be positive");
    if (!(std::abs(z) < 1.0)) throw std::domain_error("hyp3f2: |z| >= 1, fallback required");
    double term = 1.0, sum = 1.0;
    for (int n = 0; n < 10000; ++n) {
        term *= (a1 + n) * (a2 + n) * (a3 + n) / ((b1 + n) * (b2 + n) * (n + 1.0)) * z;
        sum += term;
        if (!std::isfinite(sum)) return {sum, false, n + 1};
        if (std::abs(term) <= 1e-15 * std::abs(sum)) return {sum, true, n + 1};
    }
    return {sum, false, 10000};
}

struct GlTable {
    std::vector<double> x, w;  // nodes and weights on (0,1)
};

inline const GlTable& gl_table(int n) {
    require_input(n >= 2, "gl_table: need at least 2 nodes");
    static std::map<int, GlTable> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GlTable t;
    t.x.resize(n);
    t.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p1 = 0.0, pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double pa = 1.0;
            p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * pa) / k;
                pa = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - pa) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        t.x[i] = (1.0 - x) / 2.0;
        t.w[i] = w / 2.0;
        t.x[n - 1 - i] = (1.0 + x) / 2.0;
        t.w[n - 1 - i] = w / 2.0;
    }
    return cache.emplace(n, std::move(t)).first->second;
}

struct WeightedNode {
    double rho;
    double logw;
};

namespace detail {

// Half-integral over s in (0, 1/2] of s^(p-1) (1-s)^(q-1) f / B via the
// substitution s = 0.5 u^(1/p) with dyadic panels in u. The panel count
// grows with p so that sharply concentrated densities (large opposite
// exponent q) are still reached; log arithmetic keeps s representable at
// any depth.
inline void beta_side_panels(double p, double q, double lnB, int per_panel, bool left,
                             std::vector<WeightedNode>& out) {
    const double h = 0.5;
    const double ln2 = std::log(2.0);
    const double m = p / (p + q);
    int K = 70 + int(std::ceil(std::max(0.0, p * std::log(h / m) / ln2)));
    K = std::min(K, 2000);
    const GlTable& gl = gl_table(per_panel);
    const double lh = std::log(h);
    for (int k = 0; k < K; ++k) {
        for (int i = 0; i < per_panel; ++i) {
            const double lu = -(k + 1.0) * ln2 + std::log1p(gl.x[i]);  // u in [2^-k-1, 2^-k]
            const double ls = lh + lu / p;
            if (ls < -700.0) continue;
            const double s = std::exp(ls);
            const double logw = p * lh - std::log(p) - (k + 1.0) * ln2 + std::log(gl.w[i]) +
                                (q - 1.0) * std::log1p(-s) - lnB;
            out.push_back(left ? WeightedNode{s, logw} : WeightedNode{1.0 - s, logw});
        }
    }
}

}  // namespace detail

// Nodes with log-weights approximating integration against Beta(a,b).
// When min(a,b) > 20 the density is a localized bump: plain nodes on
// mean +/- 25 sd. Otherwise each half is handled by an endpoint-absorbing
// substitution with dyadic panels, which keeps endpoint singularities and
// deeply concentrated mass exact.
inline std::vector<WeightedNode> beta_nodes(double a, double b, int n) {
    if (!(a > 0) || !(b > 0) || !std::isfinite(a) || !std::isfinite(b))
        throw std::domain_error("beta_nodes: parameters must be positive");
    std::vector<WeightedNode> out;
    const double lb = ln_beta(a, b);

    if (std::min(a, b) > 20.0) {
        const GlTable& gl = gl_table(n);
        out.reserve(static_cast<std::size_t>(n));
        const double m = a / (a + b);
        const double sd = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
        const double lo = std::max(m - 25.0 * sd, 0.0);
        const double hi = std::min(m + 25.0 * sd, 1.0);
        for (int i = 0; i < n; ++i) {
            const double rho = lo + (hi - lo) * gl.x[i];
            if (rho <= 0.0 || rho >= 1.0) continue;
            const double logw = std::log(gl.w[i] * (hi - lo)) + (a - 1.0) * std::log(rho) +
                                (b - 1.0) * std::log1p(-rho) - lb;
            out.push_back({rho, logw});
        }
        return out;
    }

    const int per_panel = std::clamp(n / 16, 8, 32);
    detail::beta_side_panels(a, b, lb, per_panel, true, out);
    detail::beta_side_panels(b, a, lb, per_panel, false, out);
    return out;
}

template <class F>
double beta_expect(double a, double b, F&& f, int n = 256) {
    double s = 0.0;
    for (const auto& nd : beta_nodes(a, b, n)) s += std::exp(nd.logw) * f(nd.rho);
    return s;
}

// ln E[exp(g(rho))] for rho ~ Beta(a,b); a running maximum keeps very large
// or very small integrands finite.
template <class G>
double beta_log_expect(double a, double b, G&& g, int n = 256) {
    const auto nodes = beta_nodes(a, b, n);
    std::vector<double> le(nodes.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        le[i] = nodes[i].logw + g(nodes[i].rho);
        mx = std::max(mx, le[i]);
    }
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double v : le) s += std::exp(v - mx);
    return mx + std::log(s);
}

struct QuadratureSpec {
    int node_count = 256;
};

struct McSpec {
    long sample_size = 100000;
    std::uint64_t seed = 1;
};

struct McResult {
    double value;
    double std_error;
};

// E[log(A rho + B)] for rho ~ Beta with mean pi_mean and concentration phi.
inline double expect_log_linear(double A, double B, double pi_mean, double phi,
                                const QuadratureSpec& q = {}) {
    if (!(pi_mean > 0) || !(pi_mean < 1) || !(phi > 0))
        throw std::domain_error("expect_log_linear: invalid beta parameters");
    require_input(B > 0 && A + B > 0, "expect_log_linear: integrand must stay positive on (0,1)");
    require_input(q.node_count >= 16, "expect_log_linear: node_count must be >= 16");
    return beta_expect(
        phi * pi_mean, phi * (1.0 - pi_mean), [&](double r) { return std::log(A * r + B); },
        q.node_count);
}

inline McResult expect_log_linear_mc(double A, double B, double pi_mean, double phi,
                                     const McSpec& mc) {
    if (!(pi_mean > 0) || !(pi_mean < 1) || !(phi > 0))
        throw std::domain_error("expect_log_linear_mc: invalid beta parameters");
    require_input(B > 0 && A + B > 0, "expect_log_linear_mc: integrand must stay positive on (0,1)");
    require_input(mc.sample_size >= 10000, "expect_log_linear_mc: sample_size must be >= 1e4");
    Rng rng(mc.seed, 0);
    const double a = phi * pi_mean, b = phi * (1.0 - pi_mean);
    double s = 0.0, s2 = 0.0;
    for (long i = 0; i < mc.sample_size; ++i) {
        const double r = std::clamp(rng.beta(a, b), 1e-300, 1.0);
        const double v = std::log(A * r + B);
        s += v;
        s2 += v * v;
    }
    const double mean = s / double(mc.sample_size);
    const double var = std::max(0.0, s2 / double(mc.sample_size) - mean * mean);
    return {mean, std::sqrt(var / double(mc.sample_size))};
}

// Fallback selector threaded through the E-step and likelihood code.
struct FallbackSpec {
    enum class Kind { quadrature, monte_carlo } kind = Kind::quadrature;
    QuadratureSpec quad{};
    McSpec mc{};
};

}  // namespace lassb::sf
