#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "lassb/common.hpp"
#include "lassb/data.hpp"
#include "lassb/params.hpp"
#include "lassb/rng.hpp"
#include "lassb/specfun.hpp"

namespace lassb {

// Posterior expectations for every dyad, in dyad order.
struct EStepState {
    std::vector<double> rho_log_ij;     // E[log rho | X]
    std::vector<double> rho_log_ji;     // E[log(1-rho) | X]
    std::vector<double> gamma_dyad;     // E[gamma | X]
    std::vector<double> gamma_arc_ij;   // E[rho gamma | X]
    std::vector<double> gamma_arc_ji;   // gamma_dyad - gamma_arc_ij
    std::vector<double> log_gamma_dyad; // E[log gamma | X]
    std::vector<bool> fallback_used;    // per dyad: series path replaced
    long fallback_count = 0;
};

struct DyadExpectation {
    double rho_log_ij = 0, rho_log_ji = 0;
    double gamma_dyad = 0, gamma_arc_ij = 0, gamma_arc_ji = 0;
    double log_gamma_dyad = 0;
    bool fallback = false;
};

namespace detail {

// Quadrature/MC path for the gamma-layer expectations: the posterior of rho
// is Beta(a,b) and, given rho, gamma is Gamma(k, lambda(rho)) with
// lambda(rho) = rho*delta + c. Only the rho integral needs numerics.
inline void gamma_layer_fallback(double a, double b, double k, double delta, double c,
                                 const sf::FallbackSpec& fb, std::uint64_t stream,
                                 DyadExpectation& e) {
    if (fb.kind == sf::FallbackSpec::Kind::monte_carlo) {
        Rng rng(fb.mc.seed, stream);
        const long n = fb.mc.sample_size;
        double s_inv = 0, s_rho_inv = 0, s_log = 0;
        for (long i = 0; i < n; ++i) {
            const double rho = rng.beta(a, b);
            const double lam = rho * delta + c;
            s_inv += 1.0 / lam;
            s_rho_inv += rho / lam;
            s_log += std::log(lam);
        }
        e.gamma_dyad = k * s_inv / double(n);
        e.gamma_arc_ij = k * s_rho_inv / double(n);
        e.log_gamma_dyad = sf::digamma(k) - s_log / double(n);
    } else {
        const auto nodes = sf::beta_nodes(a, b, fb.quad.node_count);
        double s_inv = 0, s_rho_inv = 0, s_log = 0;
        for (const auto& nd : nodes) {
            const double w = std::exp(nd.logw);
            const double lam = nd.rho * delta + c;
            s_inv += w / lam;
            s_rho_inv += w * nd.rho / lam;
            s_log += w * std::log(lam);
        }
        e.gamma_dyad = k * s_inv;
        e.gamma_arc_ij = k * s_rho_inv;
        e.log_gamma_dyad = sf::digamma(k) - s_log;
    }
    e.gamma_arc_ji = e.gamma_dyad - e.gamma_arc_ij;
    e.fallback = true;
}

}  // namespace detail

// All five posterior expectations for one dyad with counts (x_ij, x_ji) and
// baseline rates (tau_ij, tau_ji).
inline DyadExpectation dyad_expectations(double x_ij, double x_ji, double tau_ij, double tau_ji,
                                         double nu, double pi, double phi,
                                         const sf::FallbackSpec& fb = {},
                                         std::uint64_t stream = 0) {
    const double a = x_ij + phi * pi;
    const double b = x_ji + phi * (1.0 - pi);
    const double k = x_ij + x_ji + nu;
    const double c = tau_ji + nu;
    const double z = (tau_ji - tau_ij) / c;
    const double delta = tau_ij - tau_ji;

    DyadExpectation e;
    const double dab = sf::digamma(a + b);
    e.rho_log_ij = sf::digamma(a) - dab;
    e.rho_log_ji = sf::digamma(b) - dab;

    auto f_dyad = sf::hyp2f1(1.0, a, a + b, z);
    auto f_arc = sf::hyp2f1(1.0, a + 1.0, a + b + 1.0, z);
    if (f_dyad.converged && f_arc.converged && std::isfinite(f_dyad.value) &&
        std::isfinite(f_arc.value)) {
        e.gamma_dyad = (k / c) * f_dyad.value;
        // contiguous form of E[rho (1 - z rho)^{-1}]: stable as z -> 0
        e.gamma_arc_ij = (k * a / ((a + b) * c)) * f_arc.value;
        e.gamma_arc_ji = e.gamma_dyad - e.gamma_arc_ij;
        bool have_log = false;
        if (std::abs(z) < 1.0) {
            auto f3 = sf::hyp3f2(1.0, 1.0, a + 1.0, 2.0, a + b + 1.0, z);
            if (f3.converged && std::isfinite(f3.value)) {
                e.log_gamma_dyad =
                    sf::digamma(k) - std::log(c) + (a * z / (a + b)) * f3.value;
                have_log = true;
            }
        }
        if (!have_log) {
            // E[log lambda(rho)] under Beta(a,b), valid for any z < 1
            e.log_gamma_dyad =
                sf::digamma(k) -
                sf::expect_log_linear(delta, c, a / (a + b), a + b, fb.quad);
            e.fallback = true;
        }
    } else {
        detail::gamma_layer_fallback(a, b, k, delta, c, fb, stream, e);
    }

    require_internal(std::isfinite(e.gamma_dyad) && e.gamma_dyad > 0.0 &&
                         std::isfinite(e.gamma_arc_ij) && std::isfinite(e.log_gamma_dyad) &&
                         std::isfinite(e.rho_log_ij) && std::isfinite(e.rho_log_ji),
                     "non-finite posterior expectation");
    return e;
}

inline EStepState e_step(const InteractionData& data, const ParamSet& p,
                         const sf::FallbackSpec& fb = {}) {
    validate(p);
    const std::size_t n = data.dyads.size();
    EStepState st;
    st.rho_log_ij.resize(n);
    st.rho_log_ji.resize(n);
    st.gamma_dyad.resize(n);
    st.gamma_arc_ij.resize(n);
    st.gamma_arc_ji.resize(n);
    st.log_gamma_dyad.resize(n);
    st.fallback_used.assign(n, false);

    // expectations depend only on (block pair, x_ij, x_ji): cache per pattern
    std::unordered_map<std::uint64_t, DyadExpectation> cache;
    cache.reserve(256);
    for (std::size_t d = 0; d < n; ++d) {
        const Dyad& dy = data.dyads[d];
        const double tij = tau(p, dy.r, dy.s);
        const double tji = tau(p, dy.s, dy.r);
        DyadExpectation e;
        const bool small = dy.x_ij < (1L << 24) && dy.x_ji < (1L << 24);
        const std::uint64_t key = small
                                      ? (std::uint64_t(dy.r) << 56) | (std::uint64_t(dy.s) << 48) |
                                            (std::uint64_t(dy.x_ij) << 24) | std::uint64_t(dy.x_ji)
                                      : 0;
        auto it = small ? cache.find(key) : cache.end();
        if (small && it != cache.end()) {
            e = it->second;
        } else {
            try {
                e = dyad_expectations(double(dy.x_ij), double(dy.x_ji), tij, tji,
                                      p.nu_at(dy.r, dy.s), p.pi_at(dy.r, dy.s),
                                      p.phi_at(dy.r, dy.s), fb, key);
            } catch (const internal_error& err) {
                throw internal_error(std::string(err.what()) + " (dyad " + dy.node_i + "," +
                                     dy.node_j + ")");
            }
            if (small) cache.emplace(key, e);
        }
        st.rho_log_ij[d] = e.rho_log_ij;
        st.rho_log_ji[d] = e.rho_log_ji;
        st.gamma_dyad[d] = e.gamma_dyad;
        st.gamma_arc_ij[d] = e.gamma_arc_ij;
        st.gamma_arc_ji[d] = e.gamma_arc_ji;
        st.log_gamma_dyad[d] = e.log_gamma_dyad;
        st.fallback_used[d] = e.fallback;
        if (e.fallback) ++st.fallback_count;
    }
    return st;
}

}  // namespace lassb
