#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "error.hpp"
#include "graph.hpp"

namespace nbe {

struct FoldSplit {
    std::size_t k = 0;
    std::vector<std::size_t> assignments; // fold of each item
    std::uint64_t seed = 0;
    bool stratified = true;

    std::vector<std::size_t> test_indices(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] == fold) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> train_indices(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] != fold) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> fold_sizes() const {
        std::vector<std::size_t> s(k, 0);
        for (auto f : assignments) ++s[f];
        return s;
    }
};

/// Shuffle inside each class, lay the classes end to end, then deal
/// positions round-robin. Every fold gets floor or ceil of each class count.
inline FoldSplit stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed,
                                  bool quiet = false) {
    const std::size_t n = labels.size();
    if (k < 2) throw ConfigError("stratified_kfold: k must be >= 2, got " + std::to_string(k));
    if (k > n) {
        throw ConfigError("stratified_kfold: k = " + std::to_string(k) + " exceeds the number of items (" +
                          std::to_string(n) + ")");
    }
    std::mt19937_64 rng(seed);
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    bool stratify = true;
    for (const auto& [c, members] : by_class)
        if (members.size() < k) stratify = false;

    std::vector<std::size_t> order;
    order.reserve(n);
    if (stratify) {
        for (auto& [c, members] : by_class) {
            std::shuffle(members.begin(), members.end(), rng);
            order.insert(order.end(), members.begin(), members.end());
        }
    } else {
        if (!quiet) std::cerr << "warning: a class has fewer than " << k << " members; using unstratified folds\n";
        order.resize(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
    }
    FoldSplit split{k, std::vector<std::size_t>(n), seed, stratify};
    for (std::size_t pos = 0; pos < n; ++pos) split.assignments[order[pos]] = pos % k;
    return split;
}

inline FoldSplit stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    return stratified_kfold(ds.labels(), k, seed);
}

/// Stratified holdout of roughly `fraction` of `items` (at least one).
/// Returns {kept, held_out}, both in ascending order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
holdout_split(const std::vector<std::size_t>& items, const std::vector<int>& labels, double fraction,
              std::uint64_t seed) {
    if (items.size() < 2) throw ConfigError("holdout_split: need at least 2 items");
    std::vector<int> sub;
    for (auto i : items) sub.push_back(labels.at(i));
    const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(1.0 / fraction)), 2, items.size());
    const auto folds = stratified_kfold(sub, k, seed, true);
    std::vector<std::size_t> kept, held;
    for (std::size_t j = 0; j < items.size(); ++j) (folds.assignments[j] == 0 ? held : kept).push_back(items[j]);
    return {kept, held};
}

/// Keeps floor(keep_fraction * |E|) edges chosen uniformly without replacement.
inline Graph corrupt_edges(const Graph& g, double keep_fraction, std::uint64_t seed) {
    if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
        throw ConfigError("corrupt_edges: keep_fraction must lie in (0, 1], got " + std::to_string(keep_fraction));
    }
    std::vector<Edge> edges = g.edges();
    const auto keep = static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(edges.size())));
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < keep; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, edges.size() - 1);
        std::swap(edges[i], edges[pick(rng)]);
    }
    edges.resize(keep);
    std::sort(edges.begin(), edges.end());
    return g.with_edges(std::move(edges));
}

struct EdgeSplit {
    std::vector<Edge> train_edges;
    std::vector<Edge> val_edges;
    std::vector<Edge> test_edges;
    std::vector<Edge> val_negatives;
    std::vector<Edge> test_negatives;
    std::uint64_t seed = 0;

    /// The graph a model is allowed to see.
    Graph train_graph(const Graph& g) const { return g.with_edges(train_edges); }
};

namespace detail {

inline std::uint64_t pair_key(std::size_t u, std::size_t v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

} // namespace detail

/// Uniform non-edges (u < v) of `g`, distinct from each other and from `exclude`.
inline std::vector<Edge> sample_non_edges(const Graph& g, std::size_t count, std::mt19937_64& rng,
                                          std::set<std::uint64_t>& exclude) {
    const std::size_t n = g.num_nodes();
    const std::size_t pairs = n * (n - 1) / 2;
    std::set<std::uint64_t> edges;
    for (const auto& e : g.edges()) edges.insert(detail::pair_key(e.u, e.v));
    std::size_t blocked = edges.size();
    for (auto key : exclude)
        if (!edges.count(key)) ++blocked;
    if (n < 2 || pairs < blocked + count) {
        throw ConfigError("sample_non_edges: graph has too few non-edges for " + std::to_string(count) + " negatives");
    }
    std::vector<Edge> out;
    std::uniform_int_distribution<std::size_t> node(0, n - 1);
    while (out.size() < count) {
        std::size_t u = node(rng), v = node(rng);
        if (u == v) continue;
        if (u > v) std::swap(u, v);
        const auto key = detail::pair_key(u, v);
        if (edges.count(key) || exclude.count(key)) continue;
        exclude.insert(key);
        out.push_back({u, v});
    }
    return out;
}

inline EdgeSplit split_edges_for_lp(const Graph& g, std::uint64_t seed, double val_frac = 0.05,
                                    double test_frac = 0.10) {
    const std::size_t m = g.num_edges();
    const auto n_val = static_cast<std::size_t>(std::floor(val_frac * static_cast<double>(m)));
    const auto n_test = static_cast<std::size_t>(std::floor(test_frac * static_cast<double>(m)));
    if (n_val == 0 || n_test == 0 || n_val + n_test >= m) {
        const double smallest = std::min(val_frac, test_frac);
        const auto need = static_cast<std::size_t>(std::ceil(1.0 / smallest - 1e-9));
        throw ConfigError("split_edges_for_lp: graph has " + std::to_string(m) + " edges; at least " +
                          std::to_string(need) + " are required");
    }
    std::vector<Edge> edges = g.edges();
    std::mt19937_64 rng(seed);
    std::shuffle(edges.begin(), edges.end(), rng);
    EdgeSplit s;
    s.seed = seed;
    s.val_edges.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.test_edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_val),
                        edges.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
    s.train_edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), edges.end());
    for (auto* v : {&s.val_edges, &s.test_edges, &s.train_edges}) std::sort(v->begin(), v->end());
    std::set<std::uint64_t> used;
    s.val_negatives = sample_non_edges(g, n_val, rng, used);
    s.test_negatives = sample_non_edges(g, n_test, rng, used);
    return s;
}

struct NodeSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// `train_per_class` labelled nodes per class, then `val_count` and the
/// rest (up to `test_count`) from what remains.
inline NodeSplit split_nodes(const std::vector<int>& labels, std::size_t train_per_class, std::size_t val_count,
                             std::size_t test_count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::map<int, std::size_t> taken;
    NodeSplit s;
    std::vector<std::size_t> rest;
    for (auto v : order) {
        if (taken[labels[v]] < train_per_class) {
            ++taken[labels[v]];
            s.train.push_back(v);
        } else {
            rest.push_back(v);
        }
    }
    if (rest.size() < val_count + 1) throw ConfigError("split_nodes: not enough nodes for validation and test");
    s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(val_count));
    const std::size_t t = std::min(test_count, rest.size() - val_count);
    s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(val_count),
                  rest.begin() + static_cast<std::ptrdiff_t>(val_count + t));
    for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
    return s;
}

} // namespace nbe
