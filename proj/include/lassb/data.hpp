#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lassb/common.hpp"

namespace lassb {

struct BlockPartition {
    std::vector<std::string> node_ids;              // in first-appearance order
    std::unordered_map<std::string, int> block_of;  // node -> 0-based block index
    std::vector<std::string> block_labels;          // size S, in block-index order

    int S() const { return int(block_labels.size()); }
};

// One unordered node pair with its ordered count pair. Canonical orientation:
// node_i sits in the lower-indexed block; within equal blocks node_i is the
// lexicographically smaller id.
struct Dyad {
    std::string node_i, node_j;
    int r = 0, s = 0;  // 0-based block indices of node_i / node_j, r <= s
    long x_ij = 0, x_ji = 0;
};

// Flat index of the unordered block pair (r,s), r <= s, among all such pairs.
inline int pair_index(int r, int s, int S) {
    if (r > s) std::swap(r, s);
    return r * S - r * (r - 1) / 2 + (s - r);
}

inline int pair_count(int S) { return S * (S + 1) / 2; }

struct InteractionData {
    BlockPartition blocks;
    std::vector<Dyad> dyads;  // sorted by (r, s, node_i, node_j)
};

inline std::map<std::pair<int, int>, long> dyad_block_sizes(const InteractionData& data) {
    std::map<std::pair<int, int>, long> out;
    for (const auto& d : data.dyads) ++out[{d.r, d.s}];
    return out;
}

inline std::vector<long> dyad_block_size_vec(const InteractionData& data) {
    std::vector<long> out(pair_count(data.blocks.S()), 0);
    for (const auto& d : data.dyads) ++out[pair_index(d.r, d.s, data.blocks.S())];
    return out;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

// Returns data rows of a headered CSV, skipping blank and '#'-comment lines.
inline std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                                      const std::vector<std::string>& header) {
    std::ifstream in(path);
    require_input(bool(in), "cannot open file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool saw_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = split_csv_line(t);
        if (!saw_header) {
            require_input(fields == header, path + ": expected header '" + header[0] + "," +
                                                header[1] + (header.size() > 2 ? "," + header[2] : "") +
                                                "'");
            saw_header = true;
            continue;
        }
        require_input(fields.size() == header.size(),
                      path + ": line " + std::to_string(lineno) + ": expected " +
                          std::to_string(header.size()) + " fields");
        rows.push_back(std::move(fields));
    }
    require_input(saw_header, path + ": missing header row");
    return rows;
}

inline long parse_count(const std::string& s, const std::string& ctx) {
    require_input(!s.empty(), ctx + ": empty count");
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        throw input_error(ctx + ": count '" + s + "' is not an integer");
    }
    require_input(pos == s.size(), ctx + ": count '" + s + "' is not an integer");
    require_input(v >= 0, ctx + ": negative count '" + s + "'");
    return v;
}

}  // namespace detail

// Two-column CSV `node,block`; blocks are indexed by first appearance unless
// an explicit label ordering is supplied.
inline BlockPartition load_blocks(const std::string& path,
                                  const std::vector<std::string>& explicit_order = {}) {
    BlockPartition bp;
    std::unordered_map<std::string, int> label_to_idx;
    if (!explicit_order.empty()) {
        for (const auto& lbl : explicit_order) {
            require_input(!label_to_idx.count(lbl), "duplicate label in block ordering: " + lbl);
            label_to_idx[lbl] = int(bp.block_labels.size());
            bp.block_labels.push_back(lbl);
        }
    }
    for (const auto& row : detail::read_csv(path, {"node", "block"})) {
        const std::string& node = row[0];
        const std::string& label = row[1];
        require_input(!node.empty(), path + ": empty node id");
        require_input(!label.empty(), path + ": empty block label for node " + node);
        require_input(!bp.block_of.count(node), "conflicting block assignment for node " + node);
        auto it = label_to_idx.find(label);
        if (it == label_to_idx.end()) {
            require_input(explicit_order.empty(),
                          "block label '" + label + "' not in the explicit ordering");
            it = label_to_idx.emplace(label, int(bp.block_labels.size())).first;
            bp.block_labels.push_back(label);
        }
        bp.node_ids.push_back(node);
        bp.block_of.emplace(node, it->second);
    }
    require_input(!bp.node_ids.empty(), "no nodes");
    return bp;
}

// Three-column CSV `src,dst,count`. Duplicate (src,dst) rows are summed; a
// dyad listed in only one direction gets 0 for the other. Only dyads present
// in the file are modeled.
inline InteractionData load_edges(const std::string& path, const BlockPartition& blocks) {
    InteractionData data;
    data.blocks = blocks;
    // canonical dyad key -> ordered count pair
    std::map<std::pair<std::string, std::string>, std::pair<long, long>> acc;
    for (const auto& row : detail::read_csv(path, {"src", "dst", "count"})) {
        const std::string &src = row[0], &dst = row[1];
        const long cnt = detail::parse_count(row[2], path);
        require_input(src != dst, "self-loop on node " + src);
        auto bi = blocks.block_of.find(src);
        require_input(bi != blocks.block_of.end(), "unknown node: " + src);
        auto bj = blocks.block_of.find(dst);
        require_input(bj != blocks.block_of.end(), "unknown node: " + dst);
        const int bs = bi->second, bd = bj->second;
        const bool forward = bs < bd || (bs == bd && src < dst);
        const auto key = forward ? std::make_pair(src, dst) : std::make_pair(dst, src);
        auto& cell = acc[key];
        (forward ? cell.first : cell.second) += cnt;
    }
    data.dyads.reserve(acc.size());
    for (const auto& [key, counts] : acc) {
        Dyad d;
        d.node_i = key.first;
        d.node_j = key.second;
        d.r = blocks.block_of.at(d.node_i);
        d.s = blocks.block_of.at(d.node_j);
        d.x_ij = counts.first;
        d.x_ji = counts.second;
        data.dyads.push_back(std::move(d));
    }
    std::sort(data.dyads.begin(), data.dyads.end(), [](const Dyad& a, const Dyad& b) {
        return std::tie(a.r, a.s, a.node_i, a.node_j) < std::tie(b.r, b.s, b.node_i, b.node_j);
    });
    return data;
}

// Emits both directions of every dyad (including zero counts) so a reload
// reproduces the identical structure.
inline void write_edges(const InteractionData& data, std::ostream& os,
                        const std::string& comment_header = "") {
    if (!comment_header.empty()) os << comment_header;
    os << "src,dst,count\n";
    for (const auto& d : data.dyads) {
        os << d.node_i << ',' << d.node_j << ',' << d.x_ij << '\n';
        os << d.node_j << ',' << d.node_i << ',' << d.x_ji << '\n';
    }
}

}  // namespace lassb
