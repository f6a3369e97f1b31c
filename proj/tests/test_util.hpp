#pragma once

#include <string>
#include <vector>

#include "lassb/data.hpp"
#include "lassb/params.hpp"

namespace testutil {

// Dyad structure with the requested number of dyads per dyad-block, each on
// its own pair of fresh nodes.
inline lassb::InteractionData make_structure(const std::vector<std::string>& labels,
                                             const std::vector<long>& per_block) {
    using namespace lassb;
    const int S = int(labels.size());
    InteractionData data;
    data.blocks.block_labels = labels;
    int serial = 0;
    auto fresh = [&](int block) {
        std::string id = labels[std::size_t(block)] + std::to_string(serial++);
        data.blocks.node_ids.push_back(id);
        data.blocks.block_of[id] = block;
        return id;
    };
    for (int r = 0; r < S; ++r)
        for (int s = r; s < S; ++s)
            for (long k = 0; k < per_block[std::size_t(pair_index(r, s, S))]; ++k) {
                Dyad dy;
                dy.r = r;
                dy.s = s;
                dy.node_i = fresh(r);
                dy.node_j = fresh(s);
                data.dyads.push_back(dy);
            }
    return data;
}

// Published two-block estimates (marriage-network study).
inline lassb::ParamSet kolkata_params() {
    lassb::ParamSet p = lassb::make_default_params(2);
    p.labels = {"F", "M"};
    p.theta = 1.42;
    p.alpha = {1.0, 3.77};
    p.beta = {1.0, 3.80};
    p.mu = {1.0, 1.0, 1.0, 0.28};
    p.nu = {0.07, 0.10, 0.10, 0.05};
    p.pi = {0.5, 0.27, 0.73, 0.5};
    p.phi = {56940.19, 12.62, 12.62, 71.32};
    return p;
}

// Moderate dispersion and near-symmetric cross-block rates keep every
// parameter well identified at test sample sizes.
inline lassb::ParamSet recovery_truth() {
    lassb::ParamSet p = lassb::make_default_params(2);
    p.labels = {"F", "M"};
    p.theta = 2.0;
    p.alpha = {1.0, 3.77};
    p.beta = {1.0, 3.80};
    p.mu = {1.0, 1.0, 1.0, 0.28};
    p.nu = {1.5, 1.2, 1.2, 2.0};
    p.pi = {0.5, 0.27, 0.73, 0.5};
    p.phi = {8.0, 12.62, 12.62, 10.0};
    return p;
}

}  // namespace testutil
