#pragma once

// Small generated datasets with known answers.

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "io.hpp"

namespace nbe::synthetic {

/// Stochastic block model with equal blocks; node labels are block ids.
inline Graph block_model(std::size_t n, std::size_t blocks, double p_in, double p_out, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> label(n);
    for (std::size_t v = 0; v < n; ++v) label[v] = static_cast<int>(v * blocks / n);
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (u(rng) < (label[i] == label[j] ? p_in : p_out)) e.emplace_back(i, j);
    Graph g = Graph::from_pairs(n, e);
    g.set_node_labels(std::move(label));
    return g;
}

/// Two communities, n = 200, p_in = 0.2, p_out = 0.01 by default.
inline Graph two_block(std::uint64_t seed, std::size_t n = 200, double p_in = 0.2, double p_out = 0.01) {
    return block_model(n, 2, p_in, p_out, seed);
}

/// Block model whose nodes carry noisy class-indicator features: the
/// feature block of the node's class is shifted by `signal`, every entry
/// gets N(0, 1) noise. Structure has to help where features are ambiguous.
inline Graph feature_block_model(std::uint64_t seed, std::size_t n = 600, std::size_t classes = 3,
                                 double p_in = 0.012, double p_out = 0.0015, std::size_t dims_per_class = 4,
                                 double signal = 0.6) {
    Graph g = block_model(n, classes, p_in, p_out, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> noise(0.0, 1.0);
    DenseMatrix x(n, classes * dims_per_class);
    const auto& y = *g.node_labels();
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t c = 0; c < x.cols; ++c)
            x(v, c) = noise(rng) + (c / dims_per_class == static_cast<std::size_t>(y[v]) ? signal : 0.0);
    g.set_node_features(std::move(x));
    return g;
}

/// Uniform random labelled tree on n nodes (random attachment order).
inline std::vector<std::pair<std::size_t, std::size_t>> random_tree(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t v = 1; v < n; ++v) {
        std::uniform_int_distribution<std::size_t> parent(0, v - 1);
        e.emplace_back(parent(rng), v);
    }
    return e;
}

/// 30 six-node graphs: 15 random trees (label 0) and 15 trees with one
/// chord closing a triangle (label 1). Trees have 5 edges and the others 6,
/// so the classes differ in n + 2|E| (16 vs 18). Node features are the
/// constant 1: one sum-aggregation layer then sees deg + 1 per node and a
/// sum readout recovers n + 2|E|, which a linear head thresholds.
inline Dataset has_triangle(std::uint64_t seed, std::size_t per_class = 15) {
    std::mt19937_64 rng(seed);
    Dataset ds;
    ds.name = "has-triangle";
    ds.num_classes = 2;
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        auto e = random_tree(6, rng);
        const int label = static_cast<int>(i % 2);
        if (label == 1) {
            Graph t = Graph::from_pairs(6, e);
            // Join two nodes at distance 2: pick a node with degree >= 2.
            auto nbrs = t.neighbor_lists();
            std::vector<std::size_t> centers;
            for (std::size_t v = 0; v < 6; ++v)
                if (nbrs[v].size() >= 2) centers.push_back(v);
            const auto c = centers[rng() % centers.size()];
            auto a = nbrs[c][rng() % nbrs[c].size()];
            auto b = a;
            while (b == a) b = nbrs[c][rng() % nbrs[c].size()];
            e.emplace_back(a, b);
        }
        Graph g = Graph::from_pairs(6, e);
        g.set_graph_label(label);
        DenseMatrix x(6, 1);
        std::fill(x.data.begin(), x.data.end(), 1.0);
        g.set_node_features(std::move(x));
        ds.graphs.push_back(std::move(g));
    }
    ds.feature_dim = 1;
    return ds;
}

/// Triangles only, with random node features and random labels. Every
/// transform coincides on these graphs.
inline Dataset triangles(std::uint64_t seed, std::size_t count = 40, std::size_t dims = 3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Dataset ds;
    ds.name = "triangles";
    ds.num_classes = 2;
    ds.feature_dim = dims;
    for (std::size_t i = 0; i < count; ++i) {
        Graph g = Graph::from_pairs(3, {{0, 1}, {1, 2}, {0, 2}});
        DenseMatrix x(3, dims);
        for (double& v : x.data) v = u(rng);
        g.set_node_features(std::move(x));
        g.set_graph_label(static_cast<int>(i % 2));
        ds.graphs.push_back(std::move(g));
    }
    return ds;
}

} // namespace nbe::synthetic
