#pragma once

#include <cstdint>

#include "lassb/common.hpp"
#include "lassb/data.hpp"
#include "lassb/params.hpp"
#include "lassb/rng.hpp"

namespace lassb {

struct SimConfig {
    std::uint64_t seed = 0;
    std::uint64_t replicate_id = 0;  // stream-splitting key
};

// Draws a network from the generative model on the dyad structure of
// `structure` (its counts are ignored). Per dyad: gamma ~ Gamma(shape nu,
// mean 1), rho ~ Beta(mean pi, concentration phi), X_ij ~ Poisson(tau_ij rho
// gamma), X_ji ~ Poisson(tau_ji (1-rho) gamma).
inline InteractionData sample_network(const InteractionData& structure, const ParamSet& p,
                                      const SimConfig& cfg) {
    validate(p);
    require_input(!structure.dyads.empty(), "empty dyad structure");
    require_input(structure.blocks.S() == p.S, "parameter block count does not match data");
    InteractionData out = structure;
    Rng rng(cfg.seed, cfg.replicate_id);
    for (auto& dy : out.dyads) {
        const double nu = p.nu_at(dy.r, dy.s);
        const double pi = p.pi_at(dy.r, dy.s);
        const double phi = p.phi_at(dy.r, dy.s);
        const double gamma = rng.gamma(nu) / nu;
        const double rho = rng.beta(phi * pi, phi * (1.0 - pi));
        dy.x_ij = rng.poisson(tau(p, dy.r, dy.s) * rho * gamma);
        dy.x_ji = rng.poisson(tau(p, dy.s, dy.r) * (1.0 - rho) * gamma);
    }
    return out;
}

}  // namespace lassb
