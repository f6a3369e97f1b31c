#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lassb/common.hpp"
#include "lassb/data.hpp"
#include "lassb/params.hpp"
#include "lassb/sampler.hpp"

namespace lassb {

// Histogram layout for the goodness-of-fit statistics. Valued degrees use
// range bins (upper edges inclusive, with an implicit open top bin); binary
// degrees and |x_ij - x_ji| use exact values up to a cap.
struct GofBins {
    std::vector<long> valued_upper = {0, 1, 2, 3, 4, 8, 16};
    int binary_cap = 20;
    int diff_cap = 9;
    int triangle_cutoff_max = 6;
};

struct GofStats {
    std::vector<long> binary_out, binary_in;  // per exact degree, last bin is cap+
    std::vector<long> valued_out, valued_in;  // per valued_upper range bin
    std::vector<long> abs_diff;               // per exact difference, last bin is cap+
    std::vector<long> triangles;              // triples exceeding cutoff c = 0..C
    long nodes = 0, dyads = 0, triples = 0;
};

namespace detail {

inline std::size_t capped_bin(long value, int cap) {
    return std::size_t(std::min(value, long(cap)));
}

inline std::size_t range_bin(long value, const std::vector<long>& upper) {
    for (std::size_t i = 0; i < upper.size(); ++i)
        if (value <= upper[i]) return i;
    return upper.size();
}

inline std::string range_label(std::size_t bin, const std::vector<long>& upper) {
    if (bin == upper.size()) return std::to_string(upper.back() + 1) + "+";
    const long lo = bin == 0 ? 0 : upper[bin - 1] + 1;
    const long hi = upper[bin];
    return lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi);
}

}  // namespace detail

inline GofStats gof_stats(const InteractionData& data, const GofBins& bins = {}) {
    require_input(bins.binary_cap > 0 && bins.diff_cap > 0, "degree caps must be positive");
    require_input(!bins.valued_upper.empty() &&
                      std::is_sorted(bins.valued_upper.begin(), bins.valued_upper.end()),
                  "valued-degree bin edges must be non-empty and ascending");
    require_input(bins.triangle_cutoff_max >= 0, "triangle cutoff must be non-negative");

    const std::size_t n_nodes = data.blocks.node_ids.size();
    std::unordered_map<std::string, std::size_t> node_idx;
    node_idx.reserve(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) node_idx.emplace(data.blocks.node_ids[i], i);

    std::vector<long> bin_out(n_nodes, 0), bin_in(n_nodes, 0);
    std::vector<long> val_out(n_nodes, 0), val_in(n_nodes, 0);
    std::vector<std::vector<std::pair<std::size_t, long>>> adj(n_nodes);

    GofStats st;
    st.nodes = long(n_nodes);
    st.dyads = long(data.dyads.size());
    st.abs_diff.assign(std::size_t(bins.diff_cap) + 1, 0);
    for (const Dyad& dy : data.dyads) {
        const std::size_t i = node_idx.at(dy.node_i), j = node_idx.at(dy.node_j);
        bin_out[i] += dy.x_ij > 0;
        bin_in[j] += dy.x_ij > 0;
        bin_out[j] += dy.x_ji > 0;
        bin_in[i] += dy.x_ji > 0;
        val_out[i] += dy.x_ij;
        val_in[j] += dy.x_ij;
        val_out[j] += dy.x_ji;
        val_in[i] += dy.x_ji;
        ++st.abs_diff[detail::capped_bin(std::labs(dy.x_ij - dy.x_ji), bins.diff_cap)];
        adj[i].push_back({j, dy.x_ij + dy.x_ji});
        adj[j].push_back({i, dy.x_ij + dy.x_ji});
    }

    st.binary_out.assign(std::size_t(bins.binary_cap) + 1, 0);
    st.binary_in.assign(std::size_t(bins.binary_cap) + 1, 0);
    st.valued_out.assign(bins.valued_upper.size() + 1, 0);
    st.valued_in.assign(bins.valued_upper.size() + 1, 0);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        ++st.binary_out[detail::capped_bin(bin_out[i], bins.binary_cap)];
        ++st.binary_in[detail::capped_bin(bin_in[i], bins.binary_cap)];
        ++st.valued_out[detail::range_bin(val_out[i], bins.valued_upper)];
        ++st.valued_in[detail::range_bin(val_in[i], bins.valued_upper)];
    }

    // triples whose three dyads are all present, thresholded on dyad totals
    st.triangles.assign(std::size_t(bins.triangle_cutoff_max) + 1, 0);
    for (auto& a : adj) std::sort(a.begin(), a.end());
    for (std::size_t u = 0; u < n_nodes; ++u)
        for (const auto& [v, t_uv] : adj[u]) {
            if (v <= u) continue;
            // walk the two sorted lists for common neighbors w > v
            auto iu = adj[u].begin(), ju = adj[v].begin();
            while (iu != adj[u].end() && ju != adj[v].end()) {
                if (iu->first < ju->first) {
                    ++iu;
                } else if (ju->first < iu->first) {
                    ++ju;
                } else {
                    if (iu->first > v) {
                        ++st.triples;
                        const long m = std::min({t_uv, iu->second, ju->second});
                        for (int c = 0; c <= bins.triangle_cutoff_max; ++c)
                            st.triangles[std::size_t(c)] += m > c;
                    }
                    ++iu;
                    ++ju;
                }
            }
        }
    return st;
}

// Empirical proportion on the log-odds scale with a continuity correction
// keeping empty (and full) bins finite.
inline double log_odds(long k, long n) {
    const double p = (double(k) + 0.5) / (double(n) + 1.0);
    return std::log(p) - std::log1p(-p);
}

struct GofRow {
    std::string statistic, bin;
    double observed = 0, q025 = 0, q50 = 0, q975 = 0;
};

struct GofReport {
    std::vector<GofRow> rows;
    int replicates = 0;
};

namespace detail {

inline void flatten_gof(const GofStats& st, const GofBins& bins,
                        std::vector<std::pair<std::string, std::string>>* schema,
                        std::vector<double>& out) {
    out.clear();
    auto emit = [&](const std::string& stat, const std::string& bin, long k, long n) {
        if (schema) schema->push_back({stat, bin});
        out.push_back(log_odds(k, n));
    };
    auto capped_label = [](std::size_t i, int cap) {
        return i == std::size_t(cap) ? std::to_string(cap) + "+" : std::to_string(i);
    };
    for (std::size_t i = 0; i < st.binary_out.size(); ++i)
        emit("binary_outdegree", capped_label(i, bins.binary_cap), st.binary_out[i], st.nodes);
    for (std::size_t i = 0; i < st.binary_in.size(); ++i)
        emit("binary_indegree", capped_label(i, bins.binary_cap), st.binary_in[i], st.nodes);
    for (std::size_t i = 0; i < st.valued_out.size(); ++i)
        emit("valued_outdegree", range_label(i, bins.valued_upper), st.valued_out[i], st.nodes);
    for (std::size_t i = 0; i < st.valued_in.size(); ++i)
        emit("valued_indegree", range_label(i, bins.valued_upper), st.valued_in[i], st.nodes);
    for (std::size_t i = 0; i < st.abs_diff.size(); ++i)
        emit("abs_diff", capped_label(i, bins.diff_cap), st.abs_diff[i], st.dyads);
    for (std::size_t i = 0; i < st.triangles.size(); ++i)
        emit("triangles", std::to_string(i), st.triangles[i], st.triples);
}

}  // namespace detail

inline GofReport gof_envelope(const InteractionData& data, const ParamSet& p, int M,
                              std::uint64_t seed, const GofBins& bins = {}) {
    require_input(M >= 100, "at least 100 simulation replicates are required");
    std::vector<std::pair<std::string, std::string>> schema;
    std::vector<double> observed;
    detail::flatten_gof(gof_stats(data, bins), bins, &schema, observed);

    std::vector<std::vector<double>> sims(schema.size());
    for (auto& s : sims) s.reserve(std::size_t(M));
    std::vector<double> flat;
    for (int m = 1; m <= M; ++m) {
        const InteractionData rep = sample_network(data, p, {seed, std::uint64_t(m)});
        detail::flatten_gof(gof_stats(rep, bins), bins, nullptr, flat);
        for (std::size_t i = 0; i < flat.size(); ++i) sims[i].push_back(flat[i]);
    }

    GofReport rep;
    rep.replicates = M;
    rep.rows.resize(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        std::sort(sims[i].begin(), sims[i].end());
        GofRow& row = rep.rows[i];
        row.statistic = schema[i].first;
        row.bin = schema[i].second;
        row.observed = observed[i];
        row.q025 = quantile_sorted(sims[i], 0.025);
        row.q50 = quantile_sorted(sims[i], 0.5);
        row.q975 = quantile_sorted(sims[i], 0.975);
    }
    return rep;
}

}  // namespace lassb
