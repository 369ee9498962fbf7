#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "models.hpp"

namespace nbe {

struct MiEstimate {
    double value = 0.0; ///< nats
    std::size_t bins = 0;
    std::size_t sample_count = 0;
};

namespace detail {

/// Equal-frequency bin per sample: rank r goes to floor(r * bins / n), and
/// tied values all take the bin of their first rank.
inline std::vector<std::size_t> quantile_bins(std::span<const double> x, std::size_t bins) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<std::size_t> bin(n);
    std::size_t first = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (r == 0 || x[idx[r]] != x[idx[r - 1]]) first = r;
        bin[idx[r]] = first * bins / n;
    }
    return bin;
}

} // namespace detail

/// Plug-in MI from a bins x bins histogram of quantile-binned samples.
inline MiEstimate binned_mi(std::span<const double> x, std::span<const double> y, std::size_t bins = 8) {
    if (bins < 2) throw ConfigError("binned_mi: bins must be >= 2, got " + std::to_string(bins));
    if (x.size() != y.size()) throw DimensionError("binned_mi: x and y lengths differ");
    const std::size_t n = x.size();
    if (n < 4 * bins) {
        throw ConfigError("binned_mi: " + std::to_string(n) + " samples; at least " + std::to_string(4 * bins) +
                          " needed for " + std::to_string(bins) + " bins");
    }
    const auto bx = detail::quantile_bins(x, bins);
    const auto by = detail::quantile_bins(y, bins);
    std::vector<double> joint(bins * bins, 0.0), px(bins, 0.0), py(bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        joint[bx[i] * bins + by[i]] += 1.0;
        px[bx[i]] += 1.0;
        py[by[i]] += 1.0;
    }
    const double total = static_cast<double>(n);
    std::vector<double> terms;
    for (std::size_t i = 0; i < bins; ++i)
        for (std::size_t j = 0; j < bins; ++j) {
            const double c = joint[i * bins + j];
            if (c == 0.0) continue;
            terms.push_back(c / total * std::log(c * total / (px[i] * py[j])));
        }
    // Summing in sorted order makes the result independent of which
    // variable is x.
    std::sort(terms.begin(), terms.end());
    double mi = 0.0;
    for (double t : terms) mi += t;
    mi = std::clamp(mi, 0.0, std::log(static_cast<double>(bins)));
    return {mi, bins, n};
}

enum class ProbeMode { D1, D1D2 };

inline std::string_view to_string(ProbeMode m) { return m == ProbeMode::D1 ? "d1" : "d1d2"; }

inline ProbeMode parse_probe_mode(std::string_view s) {
    if (s == "d1") return ProbeMode::D1;
    if (s == "d1d2") return ProbeMode::D1D2;
    throw ConfigError("unknown probe mode '" + std::string(s) + "'; valid: d1, d1d2");
}

struct ProbeLayer {
    std::size_t layer = 0;
    ProbeMode mode = ProbeMode::D1;
    double mean_mi = 0.0;
    std::size_t coordinates = 0;
    std::size_t samples = 0;
};

struct ProbeOptions {
    std::size_t bins = 8;
    std::size_t coordinates = 16; ///< coordinate pairs sampled per layer
    std::uint64_t seed = 0;
};

/// For each layer k >= 1, pairs a node's layer-k coordinate with the mean
/// of a layer-(k-1) coordinate over its neighbors (distance 1, or 1 and 2).
/// Nodes without neighbors are skipped. Coordinate pairs are drawn once
/// per layer from `opts.seed`, so both modes see the same pairs.
inline std::vector<ProbeLayer> neighborhood_mi_probe(const Dataset& ds, const GraphClassifier& model, ProbeMode mode,
                                                     const ProbeOptions& opts = {}) {
    const std::size_t layers = model.layers.size();
    if (layers == 0) throw ConfigError("mi probe: model has no layers");
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs(layers + 1);
    std::mt19937_64 rng(opts.seed);
    for (std::size_t k = 1; k <= layers; ++k) {
        const std::size_t dk = model.config.hidden_dim;
        const std::size_t dprev = k == 1 ? model.config.input_dim : model.config.hidden_dim;
        for (std::size_t c = 0; c < opts.coordinates; ++c) {
            std::uniform_int_distribution<std::size_t> a(0, dk - 1), b(0, dprev - 1);
            const std::size_t ca = a(rng);
            pairs[k].emplace_back(ca, b(rng));
        }
    }
    // sx[k][c], sy[k][c]: samples for coordinate pair c of layer k, across all graphs.
    std::vector<std::vector<std::vector<double>>> sx(layers + 1), sy(layers + 1);
    for (std::size_t k = 1; k <= layers; ++k) {
        sx[k].assign(opts.coordinates, {});
        sy[k].assign(opts.coordinates, {});
    }
    NoGradGuard no_grad;
    bool any = false;
    for (const auto& g : ds.graphs) {
        std::vector<Graph> one{g};
        std::vector<SparseMatrix> ops{graph_operator(model.config, g)};
        auto batch = make_batch(one, ops, {0}, model.config.input_dim);
        const auto reps = node_representations(model, batch.features, batch.op);
        const auto nbr = mode == ProbeMode::D1 ? adjacency(g) : enlarge(g);
        for (std::size_t v = 0; v < g.num_nodes(); ++v) {
            const auto& row = nbr.row(v);
            if (row.empty()) continue;
            any = true;
            for (std::size_t k = 1; k <= layers; ++k) {
                const auto& cur = reps[k];
                const auto& prev = reps[k - 1];
                for (std::size_t c = 0; c < opts.coordinates; ++c) {
                    const auto [ca, cb] = pairs[k][c];
                    double m = 0.0;
                    for (auto u : row) m += prev.at(u, cb);
                    sx[k][c].push_back(cur.at(v, ca));
                    sy[k][c].push_back(m / static_cast<double>(row.size()));
                }
            }
        }
    }
    if (!any) throw ConfigError("mi probe: every node has an empty neighborhood");
    std::vector<ProbeLayer> out;
    for (std::size_t k = 1; k <= layers; ++k) {
        double total = 0.0;
        for (std::size_t c = 0; c < opts.coordinates; ++c) total += binned_mi(sx[k][c], sy[k][c], opts.bins).value;
        out.push_back({k, mode, total / static_cast<double>(opts.coordinates), opts.coordinates, sx[k][0].size()});
    }
    return out;
}

/// CSV: layer,mode,mean_mi,coordinates,samples.
inline std::string probe_csv(const std::vector<ProbeLayer>& rows) {
    std::ostringstream out;
    out << "layer,mode,mean_mi,coordinates,samples\n";
    for (const auto& r : rows) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", r.mean_mi);
        out << r.layer << ',' << to_string(r.mode) << ',' << buf << ',' << r.coordinates << ',' << r.samples << '\n';
    }
    return out.str();
}

} // namespace nbe
