#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "lassb/common.hpp"
#include "lassb/data.hpp"
#include "lassb/derived.hpp"
#include "lassb/em.hpp"
#include "lassb/params.hpp"
#include "lassb/sampler.hpp"

namespace lassb {

struct BootstrapCi {
    std::string name;
    double point = 0, lower = 0, upper = 0;
};

struct BootstrapResult {
    std::vector<std::vector<double>> replicate_estimates;  // survivors x free params
    std::vector<BootstrapCi> ci;  // free parameters, then association measures
    double level = 0.95;
    int failures = 0;
};

namespace detail {

inline std::vector<std::string> measure_names(int S, const std::vector<std::string>& labels) {
    std::vector<std::string> names;
    for (int r = 0; r < S; ++r)
        for (int s = r + 1; s < S; ++s)
            for (const char* m : {"interaction_ratio", "discounted_ratio", "block_odds_ratio"})
                names.push_back(std::string(m) + "_" + labels[std::size_t(r)] + "_" +
                                labels[std::size_t(s)]);
    return names;
}

inline std::vector<double> measure_logs(const ParamSet& p) {
    const AssociationTable t = association_table(p);
    std::vector<double> v;
    for (int r = 0; r < p.S; ++r)
        for (int s = r + 1; s < p.S; ++s) {
            v.push_back(std::log(t.at(t.interaction_ratio, r, s)));
            v.push_back(std::log(t.at(t.discounted_ratio, r, s)));
            v.push_back(std::log(t.at(t.block_odds_ratio, r, s)));
        }
    return v;
}

// Basic bootstrap limits on the transformed scale: reflect the replicate
// quantiles around the point estimate.
inline std::pair<double, double> basic_limits(double point, std::vector<double>& column,
                                              double level) {
    std::sort(column.begin(), column.end());
    const double a = 1.0 - level;
    const double q_lo = quantile_sorted(column, a / 2.0);
    const double q_hi = quantile_sorted(column, 1.0 - a / 2.0);
    return {2.0 * point - q_hi, 2.0 * point - q_lo};
}

}  // namespace detail

inline BootstrapResult bootstrap_ci(const InteractionData& data, const FitResult& fitted,
                                    int B, double level, std::uint64_t seed,
                                    const FitConfig& refit_cfg = {}, int threads = 1) {
    require_input(fitted.converged, "bootstrap requires a converged fit");
    require_input(B >= 50, "at least 50 bootstrap replicates are required");
    require_input(level > 0.0 && level < 1.0, "level must lie in (0,1)");
    require_input(double(B) >= 2.0 / (1.0 - level),
                  "too few replicates to resolve the requested level");
    require_input(threads >= 1, "threads must be positive");

    struct Slot {
        bool ok = false;
        std::vector<double> est, logs;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(B));
    auto run_range = [&](int first) {
        for (int b = first; b <= B; b += threads) {
            Slot& slot = slots[std::size_t(b - 1)];
            try {
                const InteractionData sim =
                    sample_network(data, fitted.params, {seed, std::uint64_t(b)});
                FitConfig cfg = refit_cfg;
                cfg.seed = seed;
                const FitResult r = fit(sim, cfg);
                if (!r.converged) continue;
                slot.est = to_unconstrained(r.params);
                slot.logs = detail::measure_logs(r.params);
                slot.ok = true;
            } catch (const std::exception&) {
                // dropped and counted below
            }
        }
    };
    if (threads == 1) {
        run_range(1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 1; t <= threads; ++t) pool.emplace_back(run_range, t);
        for (auto& th : pool) th.join();
    }

    BootstrapResult out;
    out.level = level;
    for (const Slot& s : slots)
        if (s.ok) out.replicate_estimates.push_back(s.est);
    out.failures = B - int(out.replicate_estimates.size());
    if (out.failures * 10 > B)
        throw convergence_error(std::to_string(out.failures) + " of " + std::to_string(B) +
                                " bootstrap replicates failed to converge");

    const int S = fitted.params.S;
    const std::vector<std::string> par_names = param_names(S, fitted.params.labels);
    const std::vector<double> point = to_unconstrained(fitted.params);
    std::vector<double> column(out.replicate_estimates.size());
    for (std::size_t k = 0; k < point.size(); ++k) {
        for (std::size_t i = 0; i < out.replicate_estimates.size(); ++i)
            column[i] = out.replicate_estimates[i][k];
        auto [lo, hi] = detail::basic_limits(point[k], column, level);
        const bool logit = par_names[k].rfind("pi_", 0) == 0;
        auto natural = [&](double v) {
            return logit ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v);
        };
        out.ci.push_back({par_names[k], natural(point[k]), natural(lo), natural(hi)});
    }

    const std::vector<std::string> m_names = detail::measure_names(S, fitted.params.labels);
    if (!m_names.empty()) {
        const std::vector<double> m_point = detail::measure_logs(fitted.params);
        std::vector<std::vector<double>> m_cols(m_names.size());
        for (const Slot& s : slots)
            if (s.ok)
                for (std::size_t k = 0; k < m_names.size(); ++k) m_cols[k].push_back(s.logs[k]);
        for (std::size_t k = 0; k < m_names.size(); ++k) {
            auto [lo, hi] = detail::basic_limits(m_point[k], m_cols[k], level);
            out.ci.push_back({m_names[k], std::exp(m_point[k]), std::exp(lo), std::exp(hi)});
        }
    }
    return out;
}

}  // namespace lassb
