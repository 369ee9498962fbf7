#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nbe/error.hpp"

namespace nbe {

/// Row-major dense real matrix used for node features.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool operator==(const DenseMatrix&) const = default;
};

/// Undirected edge stored with u < v.
struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;

    auto operator<=>(const Edge&) const = default;
};

/// Undirected simple graph with optional node features and labels.
///
/// Edges are kept canonical: u < v, sorted, no duplicates, no self-loops.
class Graph {
public:
    Graph() = default;

    /// Builds a graph from unordered pairs. (i, j) and (j, i) collapse to a
    /// single edge. Self-loops and out-of-range indices are rejected.
    static Graph from_pairs(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
        Graph g;
        g.n_ = n;
        g.edges_.reserve(pairs.size());
        for (auto [a, b] : pairs) {
            if (a >= n || b >= n) {
                throw IndexError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                 ") out of range for n=" + std::to_string(n));
            }
            if (a == b) throw ConfigError("self-loop on node " + std::to_string(a));
            g.edges_.push_back(Edge{std::min(a, b), std::max(a, b)});
        }
        std::sort(g.edges_.begin(), g.edges_.end());
        g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());
        return g;
    }

    static Graph from_edges(std::size_t n, const std::vector<Edge>& edges) {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        pairs.reserve(edges.size());
        for (const auto& e : edges) pairs.emplace_back(e.u, e.v);
        return from_pairs(n, pairs);
    }

    std::size_t num_nodes() const noexcept { return n_; }
    std::size_t num_edges() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    const std::optional<DenseMatrix>& node_features() const noexcept { return features_; }
    const std::optional<std::vector<int>>& node_labels() const noexcept { return node_labels_; }
    const std::optional<int>& graph_label() const noexcept { return graph_label_; }

    void set_node_features(DenseMatrix x) {
        if (x.rows != n_) {
            throw DimensionError("feature rows " + std::to_string(x.rows) + " != node count " + std::to_string(n_));
        }
        features_ = std::move(x);
    }
    void set_node_labels(std::vector<int> labels) {
        if (labels.size() != n_) {
            throw DimensionError("node label count " + std::to_string(labels.size()) + " != node count " +
                                 std::to_string(n_));
        }
        node_labels_ = std::move(labels);
    }
    void set_graph_label(int label) { graph_label_ = label; }

    /// Same nodes, features and labels with a different edge set.
    Graph with_edges(const std::vector<Edge>& edges) const {
        Graph g = from_edges(n_, edges);
        g.features_ = features_;
        g.node_labels_ = node_labels_;
        g.graph_label_ = graph_label_;
        return g;
    }

    /// Neighbor lists, sorted ascending.
    std::vector<std::vector<std::size_t>> neighbor_lists() const {
        std::vector<std::vector<std::size_t>> nbrs(n_);
        for (const auto& e : edges_) {
            nbrs[e.u].push_back(e.v);
            nbrs[e.v].push_back(e.u);
        }
        for (auto& row : nbrs) std::sort(row.begin(), row.end());
        return nbrs;
    }

private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    std::optional<DenseMatrix> features_;
    std::optional<std::vector<int>> node_labels_;
    std::optional<int> graph_label_;
};

/// Sparse symmetric 0/1 matrix with zero diagonal.
class BinaryAdjacency {
public:
    BinaryAdjacency() = default;
    explicit BinaryAdjacency(std::size_t n) : rows_(n) {}

    /// Symmetrizes the given positions. Diagonal positions are rejected.
    static BinaryAdjacency from_pairs(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
        BinaryAdjacency a(n);
        for (auto [i, j] : pairs) {
            if (i >= n || j >= n) throw IndexError("adjacency entry out of range");
            if (i == j) throw ConfigError("adjacency diagonal entry at " + std::to_string(i));
            a.rows_[i].push_back(j);
            a.rows_[j].push_back(i);
        }
        a.canonicalize();
        return a;
    }

    /// Takes ownership of per-row column lists. Each row is sorted and
    /// deduplicated; symmetry and the zero diagonal are verified.
    static BinaryAdjacency from_rows(std::vector<std::vector<std::size_t>> rows) {
        BinaryAdjacency a;
        a.rows_ = std::move(rows);
        a.canonicalize();
        const std::size_t n = a.rows_.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j : a.rows_[i]) {
                if (j >= n) throw IndexError("adjacency column out of range");
                if (j == i) throw ConfigError("adjacency diagonal entry at " + std::to_string(i));
                if (!a.contains(j, i)) throw ConfigError("adjacency rows are not symmetric");
            }
        }
        return a;
    }

    std::size_t size() const noexcept { return rows_.size(); }

    std::size_t nnz() const noexcept {
        std::size_t total = 0;
        for (const auto& r : rows_) total += r.size();
        return total;
    }

    const std::vector<std::size_t>& row(std::size_t i) const { return rows_.at(i); }

    bool contains(std::size_t i, std::size_t j) const {
        const auto& r = rows_.at(i);
        return std::binary_search(r.begin(), r.end(), j);
    }

    /// All (row, col) positions, row-major sorted.
    std::vector<std::pair<std::size_t, std::size_t>> entries() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        out.reserve(nnz());
        for (std::size_t i = 0; i < rows_.size(); ++i)
            for (std::size_t j : rows_[i]) out.emplace_back(i, j);
        return out;
    }

    /// Entry-set union.
    BinaryAdjacency operator|(const BinaryAdjacency& other) const {
        if (other.size() != size()) throw DimensionError("adjacency union of mismatched sizes");
        BinaryAdjacency out(size());
        for (std::size_t i = 0; i < size(); ++i) {
            std::set_union(rows_[i].begin(), rows_[i].end(), other.rows_[i].begin(), other.rows_[i].end(),
                           std::back_inserter(out.rows_[i]));
        }
        return out;
    }

    bool operator==(const BinaryAdjacency&) const = default;

private:
    void canonicalize() {
        for (auto& r : rows_) {
            std::sort(r.begin(), r.end());
            r.erase(std::unique(r.begin(), r.end()), r.end());
        }
    }

    std::vector<std::vector<std::size_t>> rows_;
};

/// Collection of graphs for graph-level classification.
struct Dataset {
    std::string name;
    std::vector<Graph> graphs;
    int num_classes = 0;
    std::size_t feature_dim = 0;

    std::vector<int> labels() const {
        std::vector<int> out;
        out.reserve(graphs.size());
        for (const auto& g : graphs) out.push_back(g.graph_label().value_or(-1));
        return out;
    }
};

/// Standard adjacency (the first neighborhood).
inline BinaryAdjacency adjacency(const Graph& g) { return BinaryAdjacency::from_rows(g.neighbor_lists()); }

/// Hop distance; std::nullopt marks an unreachable node.
using Distance = std::optional<std::size_t>;

/// Breadth-first hop distances from `source`, optionally truncated so that
/// nodes further than `max_depth` are reported unreachable.
inline std::vector<Distance> bfs_distances(const std::vector<std::vector<std::size_t>>& nbrs, std::size_t source,
                                           std::size_t max_depth = std::numeric_limits<std::size_t>::max()) {
    if (source >= nbrs.size()) {
        throw IndexError("bfs source " + std::to_string(source) + " >= n=" + std::to_string(nbrs.size()));
    }
    std::vector<Distance> dist(nbrs.size());
    std::deque<std::size_t> frontier{source};
    dist[source] = 0;
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop_front();
        if (*dist[u] == max_depth) continue;
        for (std::size_t v : nbrs[u]) {
            if (!dist[v]) {
                dist[v] = *dist[u] + 1;
                frontier.push_back(v);
            }
        }
    }
    return dist;
}

inline std::vector<Distance> bfs_distances(const Graph& g, std::size_t source) {
    if (source >= g.num_nodes()) {
        throw IndexError("bfs source " + std::to_string(source) + " >= n=" + std::to_string(g.num_nodes()));
    }
    return bfs_distances(g.neighbor_lists(), source);
}

} // namespace nbe
