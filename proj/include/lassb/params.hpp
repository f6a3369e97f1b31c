#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "lassb/common.hpp"

namespace lassb {

inline constexpr double kLogCap = 30.0;  // cap for log(nu), log(phi)

// Full parameter set for S blocks. Symmetric block-pair quantities (mu, nu,
// phi) are stored as dense S*S row-major matrices with both triangles filled;
// pi is stored dense with pi(r,s) + pi(s,r) = 1 and pi(r,r) = 0.5.
struct ParamSet {
    int S = 1;
    double theta = 1.0;
    std::vector<double> alpha, beta;      // size S, first entry fixed to 1
    std::vector<double> mu, nu, pi, phi;  // size S*S
    std::vector<std::string> labels;      // optional block labels, size S or empty

    double mu_at(int r, int s) const { return mu[std::size_t(r) * S + s]; }
    double nu_at(int r, int s) const { return nu[std::size_t(r) * S + s]; }
    double pi_at(int r, int s) const { return pi[std::size_t(r) * S + s]; }
    double phi_at(int r, int s) const { return phi[std::size_t(r) * S + s]; }
};

inline int free_param_count(int S) {
    require_input(S >= 1, "block count must be positive");
    return 2 * S * S + 2 * S - 1;
}

inline ParamSet make_default_params(int S) {
    require_input(S >= 1, "block count must be positive");
    ParamSet p;
    p.S = S;
    p.alpha.assign(S, 1.0);
    p.beta.assign(S, 1.0);
    p.mu.assign(std::size_t(S) * S, 1.0);
    p.nu.assign(std::size_t(S) * S, 1.0);
    p.phi.assign(std::size_t(S) * S, 1.0);
    p.pi.assign(std::size_t(S) * S, 0.5);
    return p;
}

inline void validate(const ParamSet& p) {
    const int S = p.S;
    require_input(S >= 1, "block count must be positive");
    const std::size_t n2 = std::size_t(S) * S;
    require_input(p.alpha.size() == std::size_t(S) && p.beta.size() == std::size_t(S),
                  "alpha/beta must have one entry per block");
    require_input(p.mu.size() == n2 && p.nu.size() == n2 && p.pi.size() == n2 &&
                      p.phi.size() == n2,
                  "mu/nu/pi/phi must be S*S matrices");
    require_input(p.labels.empty() || p.labels.size() == std::size_t(S),
                  "labels must be empty or one per block");
    auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    require_input(pos(p.theta), "theta must be positive");
    require_input(p.alpha[0] == 1.0 && p.beta[0] == 1.0,
                  "first-block alpha and beta must equal 1");
    for (int r = 0; r < S; ++r) {
        require_input(pos(p.alpha[r]) && pos(p.beta[r]), "alpha/beta must be positive");
        require_input(p.mu_at(0, r) == 1.0 && p.mu_at(r, 0) == 1.0,
                      "mu for pairs involving the first block must equal 1");
    }
    for (int r = 0; r < S; ++r)
        for (int s = 0; s < S; ++s) {
            require_input(pos(p.mu_at(r, s)) && pos(p.nu_at(r, s)) && pos(p.phi_at(r, s)),
                          "mu/nu/phi must be positive");
            require_input(p.mu_at(r, s) == p.mu_at(s, r) && p.nu_at(r, s) == p.nu_at(s, r) &&
                              p.phi_at(r, s) == p.phi_at(s, r),
                          "mu/nu/phi must be symmetric");
            const double pi = p.pi_at(r, s);
            require_input(std::isfinite(pi) && pi > 0.0 && pi < 1.0,
                          "pi must lie strictly inside (0,1)");
            require_input(std::abs(pi + p.pi_at(s, r) - 1.0) <= 1e-12,
                          "pi(r,s) + pi(s,r) must equal 1");
        }
    for (int r = 0; r < S; ++r)
        require_input(p.pi_at(r, r) == 0.5, "within-block pi must equal 0.5");
}

// Baseline expected rate towards node j for the arc (i in block r) -> (j in
// block s).
inline double tau(const ParamSet& p, int r, int s) {
    return p.theta * p.alpha[r] * p.beta[s] * p.mu_at(std::min(r, s), std::max(r, s));
}

// Marginal mean count on the arc r -> s: E X_ij = tau_ij * pi_rs (E rho = pi,
// E gamma = 1).
inline double mean_interaction(const ParamSet& p, int r, int s) {
    return tau(p, r, s) * p.pi_at(r, s);
}

// Unconstrained coordinates, in order: log theta; log alpha (blocks 2..S);
// log beta (2..S); log mu over pairs 2<=r<=s<=S; log nu over all pairs r<=s;
// logit pi over pairs r<s; log phi over all pairs r<=s.
inline std::vector<double> to_unconstrained(const ParamSet& p) {
    validate(p);
    const int S = p.S;
    std::vector<double> v;
    v.reserve(free_param_count(S));
    v.push_back(std::log(p.theta));
    for (int r = 1; r < S; ++r) v.push_back(std::log(p.alpha[r]));
    for (int s = 1; s < S; ++s) v.push_back(std::log(p.beta[s]));
    for (int r = 1; r < S; ++r)
        for (int s = r; s < S; ++s) v.push_back(std::log(p.mu_at(r, s)));
    for (int r = 0; r < S; ++r)
        for (int s = r; s < S; ++s) v.push_back(std::log(p.nu_at(r, s)));
    for (int r = 0; r < S; ++r)
        for (int s = r + 1; s < S; ++s) {
            const double pi = p.pi_at(r, s);
            v.push_back(std::log(pi) - std::log1p(-pi));
        }
    for (int r = 0; r < S; ++r)
        for (int s = r; s < S; ++s) v.push_back(std::log(p.phi_at(r, s)));
    return v;
}

inline ParamSet from_unconstrained(int S, const std::vector<double>& v,
                                   const std::vector<std::string>& labels = {}) {
    require_input(int(v.size()) == free_param_count(S),
                  "unconstrained vector has wrong length for S=" + std::to_string(S));
    for (double x : v) require_input(std::isfinite(x), "non-finite unconstrained coordinate");
    ParamSet p = make_default_params(S);
    p.labels = labels;
    std::size_t k = 0;
    auto set_sym = [&](std::vector<double>& m, int r, int s, double val) {
        m[std::size_t(r) * S + s] = val;
        m[std::size_t(s) * S + r] = val;
    };
    p.theta = std::exp(v[k++]);
    for (int r = 1; r < S; ++r) p.alpha[r] = std::exp(v[k++]);
    for (int s = 1; s < S; ++s) p.beta[s] = std::exp(v[k++]);
    for (int r = 1; r < S; ++r)
        for (int s = r; s < S; ++s) set_sym(p.mu, r, s, std::exp(v[k++]));
    for (int r = 0; r < S; ++r)
        for (int s = r; s < S; ++s) set_sym(p.nu, r, s, std::exp(std::min(v[k++], kLogCap)));
    for (int r = 0; r < S; ++r)
        for (int s = r + 1; s < S; ++s) {
            const double t = std::clamp(v[k++], -kLogCap, kLogCap);
            const double pi = 1.0 / (1.0 + std::exp(-t));
            p.pi[std::size_t(r) * S + s] = pi;
            p.pi[std::size_t(s) * S + r] = 1.0 - pi;
        }
    for (int r = 0; r < S; ++r)
        for (int s = r; s < S; ++s) set_sym(p.phi, r, s, std::exp(std::min(v[k++], kLogCap)));
    validate(p);
    return p;
}

// Names of the unconstrained coordinates, aligned with to_unconstrained.
inline std::vector<std::string> param_names(int S, const std::vector<std::string>& labels = {}) {
    auto lbl = [&](int b) {
        return labels.empty() ? std::to_string(b + 1) : labels[std::size_t(b)];
    };
    std::vector<std::string> names;
    names.reserve(free_param_count(S));
    names.push_back("theta");
    for (int r = 1; r < S; ++r) names.push_back("alpha_" + lbl(r));
    for (int s = 1; s < S; ++s) names.push_back("beta_" + lbl(s));
    for (int r = 1; r < S; ++r)
        for (int s = r; s < S; ++s) names.push_back("mu_" + lbl(r) + "_" + lbl(s));
    for (int r = 0; r < S; ++r)
        for (int s = r; s < S; ++s) names.push_back("nu_" + lbl(r) + "_" + lbl(s));
    for (int r = 0; r < S; ++r)
        for (int s = r + 1; s < S; ++s) names.push_back("pi_" + lbl(r) + "_" + lbl(s));
    for (int r = 0; r < S; ++r)
        for (int s = r; s < S; ++s) names.push_back("phi_" + lbl(r) + "_" + lbl(s));
    return names;
}

inline nlohmann::json params_to_json(const ParamSet& p) {
    validate(p);
    auto mat = [&](const std::vector<double>& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < p.S; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (int s = 0; s < p.S; ++s) row.push_back(m[std::size_t(r) * p.S + s]);
            rows.push_back(row);
        }
        return rows;
    };
    nlohmann::json j;
    j["version"] = kVersion;
    j["S"] = p.S;
    j["labels"] = p.labels;
    j["theta"] = p.theta;
    j["alpha"] = p.alpha;
    j["beta"] = p.beta;
    j["mu"] = mat(p.mu);
    j["nu"] = mat(p.nu);
    j["pi"] = mat(p.pi);
    j["phi"] = mat(p.phi);
    return j;
}

inline ParamSet params_from_json(const nlohmann::json& j) {
    ParamSet p;
    try {
        p.S = j.at("S").get<int>();
        require_input(p.S >= 1, "block count must be positive");
        if (j.contains("labels")) p.labels = j.at("labels").get<std::vector<std::string>>();
        p.theta = j.at("theta").get<double>();
        p.alpha = j.at("alpha").get<std::vector<double>>();
        p.beta = j.at("beta").get<std::vector<double>>();
        auto mat = [&](const char* key) {
            auto rows = j.at(key).get<std::vector<std::vector<double>>>();
            require_input(rows.size() == std::size_t(p.S), std::string(key) + " has wrong shape");
            std::vector<double> m;
            m.reserve(std::size_t(p.S) * p.S);
            for (const auto& row : rows) {
                require_input(row.size() == std::size_t(p.S),
                              std::string(key) + " has wrong shape");
                m.insert(m.end(), row.begin(), row.end());
            }
            return m;
        };
        p.mu = mat("mu");
        p.nu = mat("nu");
        p.pi = mat("pi");
        p.phi = mat("phi");
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("malformed parameter JSON: ") + e.what());
    }
    validate(p);
    return p;
}

}  // namespace lassb
