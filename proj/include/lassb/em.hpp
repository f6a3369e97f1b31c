#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lassb/common.hpp"
#include "lassb/data.hpp"
#include "lassb/estep.hpp"
#include "lassb/glm_qs.hpp"
#include "lassb/optim.hpp"
#include "lassb/params.hpp"
#include "lassb/specfun.hpp"

namespace lassb {

struct FitConfig {
    double epsilon = 0.05;
    double tol = 1e-8;
    int max_iter = 1000;
    sf::FallbackSpec fallback{};
    std::uint64_t seed = 0;  // feeds the Monte Carlo fallback only
};

struct FitResult {
    ParamSet params;
    std::vector<double> loglik_trace;
    int iterations = 0;
    bool converged = false;
    long estep_fallback_count = 0;
    std::vector<std::string> diagnostics;
};

namespace detail {

// Solves b(1 + log nu - digamma(nu)) = s_mean - s_log by bisection in
// log nu on [-30, 30]. The left side decreases from +inf to 1 as nu grows,
// so a right side at or below b pushes the maximizer to the cap.
inline double solve_nu(double b, double s_log, double s_mean, bool& capped) {
    const double target = (s_mean - s_log) / b;
    auto h = [](double u) {
        const double nu = std::exp(u);
        return 1.0 + u - sf::digamma(nu);
    };
    capped = false;
    if (h(kLogCap) >= target) {  // score still positive at the cap
        capped = true;
        return std::exp(kLogCap);
    }
    double lo = -kLogCap, hi = kLogCap;
    if (h(lo) <= target) return std::exp(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) > target ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

// Dirichlet/beta portion of Q for one dyad-block: the summed E[log rho] and
// E[log(1-rho)] are sufficient.
inline double share_objective(double pi, double phi, double b, double s_li, double s_lj) {
    return -b * sf::ln_beta(phi * pi, phi * (1.0 - pi)) + phi * (pi * s_li + (1.0 - pi) * s_lj);
}

struct PairStats {
    double b = 0;       // dyad count
    double s_li = 0;    // sum E[log rho]
    double s_lj = 0;    // sum E[log(1-rho)]
    double s_log = 0;   // sum E[log gamma]
    double s_mean = 0;  // sum E[gamma]
};

inline std::vector<PairStats> pair_stats(const InteractionData& data, const EStepState& st) {
    const int S = data.blocks.S();
    std::vector<PairStats> ps(pair_count(S));
    for (std::size_t d = 0; d < data.dyads.size(); ++d) {
        const Dyad& dy = data.dyads[d];
        auto& c = ps[pair_index(dy.r, dy.s, S)];
        c.b += 1.0;
        c.s_li += st.rho_log_ij[d];
        c.s_lj += st.rho_log_ji[d];
        c.s_log += st.log_gamma_dyad[d];
        c.s_mean += st.gamma_dyad[d];
    }
    return ps;
}

}  // namespace detail

// Method-of-moments starting values. epsilon is added to every arc count so
// shares and strengths stay interior.
inline ParamSet init_params(const InteractionData& data, double epsilon = 0.05,
                            std::vector<std::string>* warnings = nullptr) {
    require_input(epsilon > 0, "epsilon must be positive");
    require_input(!data.dyads.empty(), "no dyads");
    const int S = data.blocks.S();
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };
    auto pair_label = [&](int r, int s) {
        return "(" + data.blocks.block_labels[r] + "," + data.blocks.block_labels[s] + ")";
    };

    const auto sizes = dyad_block_size_vec(data);
    for (int r = 0; r < S; ++r)
        for (int s = r; s < S; ++s) {
            const long b = sizes[pair_index(r, s, S)];
            require_input(b > 0, "empty dyad-block " + pair_label(r, s));
            if (b < 3) warn("dyad-block " + pair_label(r, s) + " has fewer than 3 dyads");
        }

    const std::size_t n = data.dyads.size();
    const int npair = pair_count(S);
    std::vector<double> mean_star(npair, 0.0);
    for (const auto& dy : data.dyads)
        mean_star[pair_index(dy.r, dy.s, S)] += double(dy.x_ij) + double(dy.x_ji) + 2 * epsilon;
    for (int q = 0; q < npair; ++q) mean_star[q] /= double(sizes[q]);

    std::vector<double> g_dyad(n), rho0(n);
    for (std::size_t d = 0; d < n; ++d) {
        const Dyad& dy = data.dyads[d];
        const double xs = double(dy.x_ij) + double(dy.x_ji) + 2 * epsilon;
        g_dyad[d] = xs / mean_star[pair_index(dy.r, dy.s, S)];
        rho0[d] = (double(dy.x_ij) + epsilon) / xs;
    }

    ParamSet p = make_default_params(S);
    p.labels = data.blocks.block_labels;

    // moment estimates per dyad-block
    std::vector<double> v_sum(npair, 0.0), pi_sum(npair, 0.0), m2_sum(npair, 0.0);
    for (std::size_t d = 0; d < n; ++d) {
        const int q = pair_index(data.dyads[d].r, data.dyads[d].s, S);
        v_sum[q] += (g_dyad[d] - 1.0) * (g_dyad[d] - 1.0);
        pi_sum[q] += rho0[d];
        m2_sum[q] += rho0[d] * (1.0 - rho0[d]);
    }
    const double cap = std::exp(kLogCap);
    for (int r = 0; r < S; ++r)
        for (int s = r; s < S; ++s) {
            const int q = pair_index(r, s, S);
            const double b = double(sizes[q]);
            const double var = v_sum[q] / b;
            double nu0 = var > 1.0 / cap ? 1.0 / var : cap;
            if (nu0 >= cap) {
                nu0 = cap;
                warn("degenerate strength variance in dyad-block " + pair_label(r, s) +
                     ": nu start capped");
            }
            p.nu[std::size_t(r) * S + s] = p.nu[std::size_t(s) * S + r] = nu0;

            const double pi0 = r == s ? 0.5 : pi_sum[q] / b;
            if (r != s) {
                p.pi[std::size_t(r) * S + s] = pi0;
                p.pi[std::size_t(s) * S + r] = 1.0 - pi0;
            }
            const double m2 = m2_sum[q] / b;
            const double denom = pi0 * (1.0 - pi0) - m2;
            double phi0 = denom > 0 ? m2 / denom : cap;
            if (!(phi0 > 0) || phi0 >= cap) {
                phi0 = cap;
                warn("degenerate share variance in dyad-block " + pair_label(r, s) +
                     ": phi start capped");
            }
            p.phi[std::size_t(r) * S + s] = p.phi[std::size_t(s) * S + r] = phi0;
        }

    // rates from the quasi-symmetry GLM with offset log of per-arc strength
    std::vector<double> offsets(2 * n);
    for (std::size_t d = 0; d < n; ++d) {
        offsets[2 * d] = std::log(rho0[d] * g_dyad[d]);
        offsets[2 * d + 1] = std::log((1.0 - rho0[d]) * g_dyad[d]);
    }
    auto irls = irls_fit(build_design(data, offsets));
    for (const auto& w : irls.warnings) warn(w);
    apply_rates(p, extract_rates(S, irls.coef));
    validate(p);
    return p;
}

inline ParamSet m_step(const InteractionData& data, const EStepState& st, const ParamSet& prev,
                       std::vector<std::string>* warnings = nullptr) {
    const int S = prev.S;
    const std::size_t n = data.dyads.size();
    require_input(st.gamma_dyad.size() == n, "state does not match data");
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };

    ParamSet next = prev;
    auto pair_label = [&](int r, int s) {
        return "(" + data.blocks.block_labels[r] + "," + data.blocks.block_labels[s] + ")";
    };

    // rates
    std::vector<double> offsets(2 * n);
    for (std::size_t d = 0; d < n; ++d) {
        offsets[2 * d] = std::log(st.gamma_arc_ij[d]);
        offsets[2 * d + 1] = std::log(st.gamma_arc_ji[d]);
    }
    auto irls = irls_fit(build_design(data, offsets));
    for (const auto& w : irls.warnings) warn(w);
    apply_rates(next, extract_rates(S, irls.coef));

    // shares and dispersions per dyad-block
    const auto ps = detail::pair_stats(data, st);
    const double cap = std::exp(kLogCap);
    for (int r = 0; r < S; ++r)
        for (int s = r; s < S; ++s) {
            const auto& c = ps[pair_index(r, s, S)];
            SimplexOptions opts;
            opts.initial_step = 0.25;
            opts.tol_f = 1e-12;
            opts.tol_x = 1e-10;
            opts.max_evals = 4000;
            if (r == s) {
                std::function<double(const std::vector<double>&)> f1 =
                    [&](const std::vector<double>& x) {
                        const double phi = std::exp(std::min(x[0], kLogCap));
                        return detail::share_objective(0.5, phi, c.b, c.s_li, c.s_lj);
                    };
                auto res = nelder_mead_max(f1, {std::log(prev.phi_at(r, r))}, opts);
                double lphi = std::min(res.x[0], kLogCap);
                if (res.x[0] >= kLogCap) warn("phi capped in dyad-block " + pair_label(r, s));
                next.phi[std::size_t(r) * S + r] = std::exp(lphi);
            } else {
                std::function<double(const std::vector<double>&)> f2 =
                    [&](const std::vector<double>& x) {
                        const double t = std::clamp(x[0], -kLogCap, kLogCap);
                        const double pi = 1.0 / (1.0 + std::exp(-t));
                        const double phi = std::exp(std::min(x[1], kLogCap));
                        return detail::share_objective(pi, phi, c.b, c.s_li, c.s_lj);
                    };
                const double pi_prev = prev.pi_at(r, s);
                auto res = nelder_mead_max(
                    f2, {std::log(pi_prev) - std::log1p(-pi_prev), std::log(prev.phi_at(r, s))},
                    opts);
                const double pi =
                    1.0 / (1.0 + std::exp(-std::clamp(res.x[0], -kLogCap, kLogCap)));
                double lphi = std::min(res.x[1], kLogCap);
                if (res.x[1] >= kLogCap) warn("phi capped in dyad-block " + pair_label(r, s));
                next.pi[std::size_t(r) * S + s] = pi;
                next.pi[std::size_t(s) * S + r] = 1.0 - pi;
                next.phi[std::size_t(r) * S + s] = next.phi[std::size_t(s) * S + r] =
                    std::exp(lphi);
            }

            bool capped = false;
            const double nu = detail::solve_nu(c.b, c.s_log, c.s_mean, capped);
            if (capped) warn("nu capped in dyad-block " + pair_label(r, s));
            next.nu[std::size_t(r) * S + s] = next.nu[std::size_t(s) * S + r] =
                std::min(nu, cap);
        }
    validate(next);
    return next;
}

// Marginal log-probability of one dyad's count pair under the model.
inline double dyad_loglik(double x_ij, double x_ji, double tau_ij, double tau_ji, double nu,
                          double pi, double phi, const sf::QuadratureSpec& quad = {}) {
    const double a = x_ij + phi * pi;
    const double b = x_ji + phi * (1.0 - pi);
    const double k = x_ij + x_ji + nu;
    const double c = tau_ji + nu;
    const double z = (tau_ji - tau_ij) / c;
    double ll = nu * std::log(nu) - sf::ln_gamma(nu) + sf::ln_gamma(k) -
                sf::ln_gamma(x_ij + 1.0) - sf::ln_gamma(x_ji + 1.0) + x_ij * std::log(tau_ij) +
                x_ji * std::log(tau_ji) - k * std::log(c);
    auto f = sf::hyp2f1(k, a, a + b, z);
    if (f.converged && std::isfinite(f.value) && f.value > 0.0) {
        ll += sf::ln_beta(a, b) - sf::ln_beta(phi * pi, phi * (1.0 - pi)) + std::log(f.value);
    } else {
        // log-space quadrature over the prior share distribution
        ll += sf::beta_log_expect(
            phi * pi, phi * (1.0 - pi),
            [&](double r) {
                return x_ij * std::log(r) + x_ji * std::log1p(-r) - k * std::log1p(-z * r);
            },
            quad.node_count);
    }
    require_internal(std::isfinite(ll), "non-finite log-likelihood term");
    return ll;
}

inline double observed_loglik(const InteractionData& data, const ParamSet& p,
                              const sf::QuadratureSpec& quad = {}) {
    validate(p);
    std::unordered_map<std::uint64_t, double> cache;
    cache.reserve(256);
    double total = 0.0;
    for (const auto& dy : data.dyads) {
        const bool small = dy.x_ij < (1L << 24) && dy.x_ji < (1L << 24);
        const std::uint64_t key = small
                                      ? (std::uint64_t(dy.r) << 56) | (std::uint64_t(dy.s) << 48) |
                                            (std::uint64_t(dy.x_ij) << 24) | std::uint64_t(dy.x_ji)
                                      : 0;
        auto it = small ? cache.find(key) : cache.end();
        double ll;
        if (small && it != cache.end()) {
            ll = it->second;
        } else {
            ll = dyad_loglik(double(dy.x_ij), double(dy.x_ji), tau(p, dy.r, dy.s),
                             tau(p, dy.s, dy.r), p.nu_at(dy.r, dy.s), p.pi_at(dy.r, dy.s),
                             p.phi_at(dy.r, dy.s), quad);
            if (small) cache.emplace(key, ll);
        }
        total += ll;
    }
    return total;
}

inline FitResult fit(const InteractionData& data, const FitConfig& cfg = {}) {
    require_input(cfg.tol > 0, "tol must be positive");
    require_input(cfg.max_iter >= 0, "max_iter must be non-negative");
    sf::FallbackSpec fb = cfg.fallback;
    fb.mc.seed = cfg.seed ^ 0x5851f42d4c957f2dULL;

    FitResult out;
    out.params = init_params(data, cfg.epsilon, &out.diagnostics);
    out.loglik_trace.push_back(observed_loglik(data, out.params, fb.quad));

    std::vector<double> v_old = to_unconstrained(out.params);
    for (int it = 1; it <= cfg.max_iter; ++it) {
        out.iterations = it;
        auto st = e_step(data, out.params, fb);
        out.estep_fallback_count += st.fallback_count;
        ParamSet next = m_step(data, st, out.params, &out.diagnostics);
        const double ll = observed_loglik(data, next, fb.quad);
        const double prev_ll = out.loglik_trace.back();
        if (ll < prev_ll - 1e-8) {
            std::ostringstream msg;
            msg << std::setprecision(17) << "non-monotone log-likelihood at iteration " << it
                << ": " << prev_ll << " -> " << ll << " (delta " << (ll - prev_ll) << ")";
            throw internal_error(msg.str());
        }
        out.loglik_trace.push_back(ll);
        out.params = next;

        auto v_new = to_unconstrained(next);
        double dpar = 0.0;
        for (std::size_t k = 0; k < v_new.size(); ++k)
            dpar = std::max(dpar, std::abs(v_new[k] - v_old[k]) / (1.0 + std::abs(v_old[k])));
        v_old = std::move(v_new);

        const double rel = std::abs(ll - prev_ll) / (1.0 + std::abs(prev_ll));
        if (rel < cfg.tol && dpar < 1e-6) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace lassb
