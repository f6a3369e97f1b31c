#pragma once

#include <cmath>
#include <vector>

#include "lassb/common.hpp"
#include "lassb/data.hpp"
#include "lassb/estep.hpp"
#include "lassb/params.hpp"

namespace lassb {

// Block-pair association measures, S x S row-major like the ParamSet tables.
struct AssociationTable {
    int S = 0;
    std::vector<double> m;                  // mean interaction per arc-block
    std::vector<double> interaction_ratio;  // m_rs / m_sr
    std::vector<double> discounted_ratio;   // (alpha_r/alpha_s)(beta_s/beta_r)
    std::vector<double> block_odds_ratio;   // odds of cross-block mean arc strength
    std::vector<double> var_lambda_star;    // variance of the relative arc strength

    double at(const std::vector<double>& t, int r, int s) const { return t[std::size_t(r) * S + s]; }
};

// Var(lambda*_ij) = 1/nu + (1 + 1/nu) (1-pi) / (pi (phi+1))
inline double var_lambda_star(double nu, double pi, double phi) {
    return 1.0 / nu + (1.0 + 1.0 / nu) * (1.0 - pi) / (pi * (phi + 1.0));
}

inline AssociationTable association_table(const ParamSet& p) {
    validate(p);
    const int S = p.S;
    AssociationTable t;
    t.S = S;
    const std::size_t n = std::size_t(S) * S;
    t.m.resize(n);
    t.interaction_ratio.resize(n);
    t.discounted_ratio.resize(n);
    t.block_odds_ratio.resize(n);
    t.var_lambda_star.resize(n);
    for (int r = 0; r < S; ++r)
        for (int s = 0; s < S; ++s) {
            const std::size_t idx = std::size_t(r) * S + s;
            t.m[idx] = mean_interaction(p, r, s);
            t.interaction_ratio[idx] = (p.alpha[r] / p.alpha[s]) * (p.beta[s] / p.beta[r]) *
                                       (p.pi_at(r, s) / p.pi_at(s, r));
            t.discounted_ratio[idx] = (p.alpha[r] / p.alpha[s]) * (p.beta[s] / p.beta[r]);
            // mean arc strength per arc-block: mu_{r^s} pi_rs
            const double cross = p.mu_at(r, s) * p.pi_at(r, s) * p.mu_at(s, r) * p.pi_at(s, r);
            const double within = p.mu_at(r, r) * 0.5 * p.mu_at(s, s) * 0.5;
            t.block_odds_ratio[idx] = cross / within;
            t.var_lambda_star[idx] =
                var_lambda_star(p.nu_at(r, s), p.pi_at(r, s), p.phi_at(r, s));
        }
    return t;
}

// Per-dyad recovered quantities plus the block-pair association table.
struct DerivedMeasures {
    std::vector<double> rho_hat;         // posterior mean share, orientation i -> j
    std::vector<double> gamma_hat;       // posterior mean relative dyad strength
    std::vector<double> lambda_star_ij;  // recovered relative arc strengths
    std::vector<double> lambda_star_ji;
    AssociationTable table;
};

inline DerivedMeasures derived_measures(const InteractionData& data, const ParamSet& p,
                                        const EStepState& st) {
    require_input(st.gamma_dyad.size() == data.dyads.size(),
                  "E-step state does not match the dyad list");
    DerivedMeasures d;
    d.table = association_table(p);
    const std::size_t n = data.dyads.size();
    d.rho_hat.resize(n);
    d.gamma_hat.resize(n);
    d.lambda_star_ij.resize(n);
    d.lambda_star_ji.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Dyad& dy = data.dyads[i];
        const double phi = p.phi_at(dy.r, dy.s);
        const double pi_rs = p.pi_at(dy.r, dy.s);
        const double pi_sr = p.pi_at(dy.s, dy.r);
        d.rho_hat[i] = (double(dy.x_ij) + phi * pi_rs) / (double(dy.x_ij + dy.x_ji) + phi);
        d.gamma_hat[i] = st.gamma_dyad[i];
        d.lambda_star_ij[i] = st.gamma_arc_ij[i] / pi_rs;
        d.lambda_star_ji[i] = st.gamma_arc_ji[i] / pi_sr;
    }
    return d;
}

}  // namespace lassb
