#pragma once

// Test-only reference implementations. Nothing here calls into the code
// paths it is used to check.

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "nbe/graph.hpp"

namespace nbe::oracle {

inline constexpr int kInf = std::numeric_limits<int>::max() / 4;

/// All-pairs shortest hop distances by Floyd-Warshall on an edge list.
inline std::vector<std::vector<int>> floyd_warshall(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<std::vector<int>> d(n, std::vector<int>(n, kInf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
    for (auto [u, v] : edges) {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    return d;
}

inline std::vector<std::vector<int>> floyd_warshall(const Graph& g) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (const auto& x : g.edges()) e.emplace_back(x.u, x.v);
    return floyd_warshall(g.num_nodes(), e);
}

inline std::vector<std::vector<std::int64_t>> dense_adjacency(const Graph& g) {
    std::vector<std::vector<std::int64_t>> a(g.num_nodes(), std::vector<std::int64_t>(g.num_nodes(), 0));
    for (const auto& e : g.edges()) a[e.u][e.v] = a[e.v][e.u] = 1;
    return a;
}

/// Naive triple-loop integer product.
inline std::vector<std::vector<std::int64_t>> multiply(const std::vector<std::vector<std::int64_t>>& a,
                                                       const std::vector<std::vector<std::int64_t>>& b) {
    const std::size_t n = a.size();
    std::vector<std::vector<std::int64_t>> c(n, std::vector<std::int64_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

/// Erdos-Renyi G(n, p) graph.
inline Graph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(rng)) e.emplace_back(i, j);
    return Graph::from_pairs(n, e);
}

inline Graph path_graph(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Graph::from_pairs(n, e);
}

inline Graph cycle_graph(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return Graph::from_pairs(n, e);
}

inline Graph complete_graph(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph::from_pairs(n, e);
}

inline Graph star_graph(std::size_t leaves) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 1; i <= leaves; ++i) e.emplace_back(0, i);
    return Graph::from_pairs(leaves + 1, e);
}

/// Pairwise AUC: every (positive, negative) pair compared directly.
inline double brute_force_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1.0;
                wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return wins / pairs;
}

/// AP from the recall/precision sweep; ties ordered by input position
/// (selection of the earliest maximum).
inline double hand_sweep_ap(const std::vector<double>& s, const std::vector<int>& y) {
    std::vector<bool> used(s.size(), false);
    double positives = 0.0;
    for (int v : y) positives += v;
    double tp = 0.0, prev_recall = 0.0, ap = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r) {
        std::size_t best = s.size();
        for (std::size_t i = 0; i < s.size(); ++i)
            if (!used[i] && (best == s.size() || s[i] > s[best])) best = i;
        used[best] = true;
        tp += y[best];
        const double recall = tp / positives;
        ap += (recall - prev_recall) * (tp / static_cast<double>(r + 1));
        prev_recall = recall;
    }
    return ap;
}

} // namespace nbe::oracle
