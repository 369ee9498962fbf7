#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <tuple>
#include <vector>

#include "checkpoint.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "optim.hpp"
#include "report.hpp"
#include "splits.hpp"

namespace nbe {

struct TrainOptions {
    std::size_t epochs = 350;
    std::size_t patience = 50;  ///< 0 disables early stopping
    double lr = 0.01;
    double weight_decay = 0.0;
    std::size_t lr_decay_step = 50; ///< 0 disables step decay
    double lr_decay_rate = 0.5;
    std::size_t batch_size = 32;
    bool fixed_epochs = false; ///< report the last epoch instead of the best-validation one
    std::size_t threads = 0;   ///< 0 = one per hardware thread, 1 = sequential
};

/// Runs fn(0..count-1) on up to `threads` workers. Results must be written
/// to per-index slots; the first exception is rethrown after joining.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard lock(mu);
                    if (next >= count || error) return;
                    i = next++;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace detail {

/// Best-so-far tracker: higher metric wins, lower loss breaks ties.
struct Selection {
    double metric = -std::numeric_limits<double>::infinity();
    double loss = std::numeric_limits<double>::infinity();
    std::size_t epoch = 0;

    bool offer(double m, double l, std::size_t e) {
        if (m > metric || (m == metric && l < loss)) {
            metric = m;
            loss = l;
            epoch = e;
            return true;
        }
        return false;
    }
};

inline double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline std::vector<int> argmax_rows(const Tensor& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c)
            if (logits.at(r, c) > logits.at(r, best)) best = c;
        out[r] = static_cast<int>(best);
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Graph classification

struct GraphClassificationSetup {
    ClassifierConfig model; ///< input_dim and num_classes are taken from the dataset
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    double val_fraction = 0.1;
    TrainOptions train;
};

struct GraphFoldResult {
    double test_accuracy = 0.0;
    double val_accuracy = 0.0;
    double train_accuracy = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
};

/// Accuracy and mean cross-entropy of `m` on `idx` in eval mode.
inline std::pair<double, double> evaluate_graphs(const GraphClassifier& m, const std::vector<Graph>& graphs,
                                                 const std::vector<SparseMatrix>& ops,
                                                 const std::vector<std::size_t>& idx) {
    if (idx.empty()) return {0.0, 0.0};
    NoGradGuard no_grad;
    std::mt19937_64 unused(0);
    std::size_t hit = 0;
    double loss = 0.0;
    constexpr std::size_t chunk = 256;
    for (std::size_t s = 0; s < idx.size(); s += chunk) {
        std::vector<std::size_t> part(idx.begin() + static_cast<std::ptrdiff_t>(s),
                                      idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), s + chunk)));
        auto batch = make_batch(graphs, ops, part, m.config.input_dim);
        auto logits = classifier_forward(m, batch, unused, false);
        loss += softmax_cross_entropy(logits, batch.labels).item() * static_cast<double>(part.size());
        const auto pred = detail::argmax_rows(logits);
        for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == batch.labels[i];
    }
    return {static_cast<double>(hit) / static_cast<double>(idx.size()), loss / static_cast<double>(idx.size())};
}

/// Trains a fresh classifier on `train_idx`, selecting the epoch by
/// validation accuracy (ties: lower validation loss). Returns the model at
/// that epoch when `keep_best` is set.
inline GraphFoldResult train_graph_classifier(GraphClassifier& model, const std::vector<Graph>& graphs,
                                              const std::vector<SparseMatrix>& ops,
                                              const std::vector<std::size_t>& train_idx,
                                              const std::vector<std::size_t>& val_idx,
                                              const std::vector<std::size_t>& test_idx, const TrainOptions& opt,
                                              std::mt19937_64& rng, bool keep_best = false) {
    Adam adam(model.parameters(), {.lr = opt.lr, .weight_decay = opt.weight_decay});
    detail::Selection best;
    GraphFoldResult result;
    std::vector<ParameterRecord> best_params;
    std::vector<std::size_t> order = train_idx;
    auto record = [&](std::size_t epoch) {
        const auto [val_acc, val_loss] = evaluate_graphs(model, graphs, ops, val_idx);
        const bool last = epoch == opt.epochs;
        const bool improved = best.offer(val_acc, val_loss, epoch);
        if (opt.fixed_epochs ? last : improved) {
            result.test_accuracy = evaluate_graphs(model, graphs, ops, test_idx).first;
            result.val_accuracy = val_acc;
            result.best_epoch = epoch;
            if (keep_best) best_params = snapshot(model.parameters());
        }
    };
    record(0);
    for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t s = 0; s < order.size(); s += opt.batch_size) {
            std::vector<std::size_t> part(
                order.begin() + static_cast<std::ptrdiff_t>(s),
                order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), s + opt.batch_size)));
            auto batch = make_batch(graphs, ops, part, model.config.input_dim);
            auto loss = softmax_cross_entropy(classifier_forward(model, batch, rng, true), batch.labels);
            backward(loss);
            adam.step();
        }
        if (opt.lr_decay_step > 0 && epoch % opt.lr_decay_step == 0) adam.options().lr *= opt.lr_decay_rate;
        result.epochs_run = epoch;
        record(epoch);
        if (!opt.fixed_epochs && opt.patience > 0 && epoch - best.epoch >= opt.patience) break;
    }
    if (keep_best && !best_params.empty()) {
        auto params = model.parameters();
        restore(best_params, params);
    }
    result.train_accuracy = evaluate_graphs(model, graphs, ops, train_idx).first;
    return result;
}

inline ClassifierConfig resolve_classifier(ClassifierConfig cfg, const Dataset& ds) {
    cfg.input_dim = ds.feature_dim;
    cfg.num_classes = std::max(ds.num_classes, 2);
    return cfg;
}

inline std::vector<SparseMatrix> graph_operators(const ClassifierConfig& cfg, const Dataset& ds) {
    std::vector<SparseMatrix> ops;
    ops.reserve(ds.graphs.size());
    for (const auto& g : ds.graphs) ops.push_back(graph_operator(cfg, g));
    return ops;
}

/// k-fold cross-validation. Fold f uses seed + f for its inner split,
/// initialization, shuffling and dropout.
inline RunReport run_graph_classification(const Dataset& ds, const GraphClassificationSetup& setup) {
    const auto start = std::chrono::steady_clock::now();
    const auto cfg = resolve_classifier(setup.model, ds);
    const auto labels = ds.labels();
    const auto folds = stratified_kfold(labels, setup.folds, setup.seed);
    const auto ops = graph_operators(cfg, ds);
    std::vector<GraphFoldResult> results(setup.folds);
    parallel_for(setup.folds, setup.train.threads, [&](std::size_t f) {
        const std::uint64_t fold_seed = setup.seed + f;
        auto [train, val] = holdout_split(folds.train_indices(f), labels, setup.val_fraction, fold_seed);
        std::mt19937_64 rng(fold_seed);
        auto model = make_classifier(cfg, rng);
        results[f] = train_graph_classifier(model, ds.graphs, ops, train, val, folds.test_indices(f), setup.train, rng);
    });
    RunReport r;
    r.task = "graph-classification";
    r.dataset = ds.name;
    r.model = std::string(to_string(cfg.kind));
    r.transform = std::string(to_string(cfg.transform));
    r.seed = setup.seed;
    ReportGroup g{"all", {}, {{"accuracy", {}}, {"best_epoch", {}}}};
    for (std::size_t f = 0; f < setup.folds; ++f) {
        g.rows.push_back("fold" + std::to_string(f));
        g.metrics[0].values.push_back(results[f].test_accuracy);
        g.metrics[1].values.push_back(static_cast<double>(results[f].best_epoch));
    }
    r.groups.push_back(std::move(g));
    r.wall_clock_seconds = detail::elapsed_seconds(start);
    return r;
}

// ---------------------------------------------------------------------------
// Link prediction

struct LinkPredictionSetup {
    AutoencoderConfig model; ///< input_dim is taken from the graph
    TransformId transform = TransformId::A1;
    DegreeSource degree_source = DegreeSource::Operand;
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    double val_fraction = 0.05;
    double test_fraction = 0.10;
    bool dense_reconstruction = false;
    TrainOptions train{.epochs = 200, .patience = 50, .lr = 0.01, .lr_decay_step = 0};
};

struct LinkResult {
    double test_auc = 0.0;
    double test_ap = 0.0;
    double val_auc = 0.0;
    std::size_t best_epoch = 0;
};

/// Node features, or the identity when the graph has none.
inline Tensor feature_tensor(const Graph& g) {
    if (g.node_features()) {
        const auto& f = *g.node_features();
        return Tensor::from({f.rows, f.cols}, f.data);
    }
    auto x = Tensor::zeros({g.num_nodes(), g.num_nodes()});
    for (std::size_t i = 0; i < g.num_nodes(); ++i) x.mutable_values()[i * g.num_nodes() + i] = 1.0;
    return x;
}

/// The propagation matrix a link-prediction model sees: built from the
/// training edges only.
inline NormalizedAdjacency link_prediction_operator(const Graph& g, const EdgeSplit& split, TransformId transform,
                                                    DegreeSource degrees = DegreeSource::Operand) {
    return build_transform(transform, split.train_graph(g), degrees);
}

namespace detail {

inline std::vector<std::pair<std::size_t, std::size_t>> as_pairs(const std::vector<Edge>& e) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(e.size());
    for (const auto& x : e) out.emplace_back(x.u, x.v);
    return out;
}

inline std::pair<double, double> score_edges(const Tensor& z, const std::vector<Edge>& pos,
                                             const std::vector<Edge>& neg) {
    auto pairs = as_pairs(pos);
    auto negp = as_pairs(neg);
    pairs.insert(pairs.end(), negp.begin(), negp.end());
    auto logits = decode_edges(z, pairs);
    std::vector<double> s(logits.values().begin(), logits.values().end());
    std::vector<int> y(pairs.size(), 0);
    std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(pos.size()), 1);
    return {roc_auc(s, y), average_precision(s, y)};
}

} // namespace detail

inline LinkResult link_prediction_run(const Graph& g, const LinkPredictionSetup& setup, std::uint64_t seed) {
    const auto split = split_edges_for_lp(g, seed, setup.val_fraction, setup.test_fraction);
    const Graph train_graph = split.train_graph(g);
    const auto a_hat = link_prediction_operator(g, split, setup.transform, setup.degree_source);
    const Tensor x = feature_tensor(g);
    const std::size_t n = g.num_nodes();
    if (setup.dense_reconstruction && n > 1000) {
        throw ConfigError("dense_reconstruction is limited to graphs with at most 1000 nodes (got " +
                          std::to_string(n) + ")");
    }
    std::mt19937_64 rng(seed);
    auto cfg = setup.model;
    cfg.input_dim = x.cols();
    auto model = make_autoencoder(cfg, rng);
    Adam adam(model.parameters(), {.lr = setup.train.lr, .weight_decay = setup.train.weight_decay});

    // Fixed pieces of the dense objective.
    std::vector<std::pair<std::size_t, std::size_t>> dense_pairs;
    Tensor dense_targets;
    double dense_pos_weight = 1.0;
    if (setup.dense_reconstruction) {
        const auto a = adjacency(train_graph);
        std::vector<double> t;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                dense_pairs.emplace_back(i, j);
                t.push_back(a.contains(i, j) ? 1.0 : 0.0);
            }
        const double pos = static_cast<double>(train_graph.num_edges());
        dense_pos_weight = (static_cast<double>(t.size()) - pos) / std::max(pos, 1.0);
        const std::size_t count = t.size();
        dense_targets = Tensor::from({count}, std::move(t));
    }

    detail::Selection best;
    LinkResult result;
    auto record = [&](std::size_t epoch) {
        NoGradGuard no_grad;
        const auto enc = vgae_forward(model, x, a_hat, false, rng);
        const double val_auc = detail::score_edges(enc.mu, split.val_edges, split.val_negatives).first;
        const bool last = epoch == setup.train.epochs;
        const bool improved = best.offer(val_auc, 0.0, epoch);
        if (setup.train.fixed_epochs ? last : improved) {
            std::tie(result.test_auc, result.test_ap) =
                detail::score_edges(enc.mu, split.test_edges, split.test_negatives);
            result.val_auc = val_auc;
            result.best_epoch = epoch;
        }
    };
    record(0);
    const auto positives = detail::as_pairs(split.train_edges);
    for (std::size_t epoch = 1; epoch <= setup.train.epochs; ++epoch) {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        Tensor targets;
        double pos_weight = 1.0;
        if (setup.dense_reconstruction) {
            pairs = dense_pairs;
            targets = dense_targets;
            pos_weight = dense_pos_weight;
        } else {
            std::set<std::uint64_t> seen;
            const auto neg = detail::as_pairs(sample_non_edges(train_graph, positives.size(), rng, seen));
            pairs = positives;
            pairs.insert(pairs.end(), neg.begin(), neg.end());
            std::vector<double> t(pairs.size(), 0.0);
            std::fill(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(positives.size()), 1.0);
            const std::size_t count = t.size();
            targets = Tensor::from({count}, std::move(t));
        }
        const auto enc = vgae_forward(model, x, a_hat, cfg.variational, rng);
        const auto logits = decode_edges(enc.z, pairs);
        Tensor loss = cfg.variational
                          ? vgae_loss(logits, targets, enc.mu, enc.logsigma, n, pos_weight)
                          : binary_cross_entropy_with_logits(clamp(logits, -kEdgeLogitClamp, kEdgeLogitClamp),
                                                             targets, pos_weight);
        backward(loss);
        adam.step();
        record(epoch);
        if (!setup.train.fixed_epochs && setup.train.patience > 0 && epoch - best.epoch >= setup.train.patience) break;
    }
    return result;
}

/// Repeats link prediction `runs` times; run r uses seed + r for its edge
/// split, initialization and negative sampling.
inline RunReport run_link_prediction(const Graph& g, const LinkPredictionSetup& setup,
                                     const std::string& dataset = "graph") {
    const auto start = std::chrono::steady_clock::now();
    if (setup.runs == 0) throw ConfigError("runs must be >= 1");
    std::vector<LinkResult> results(setup.runs);
    parallel_for(setup.runs, setup.train.threads,
                 [&](std::size_t r) { results[r] = link_prediction_run(g, setup, setup.seed + r); });
    RunReport rep;
    rep.task = "link-prediction";
    rep.dataset = dataset;
    rep.model = setup.model.variational ? "vgae" : "gae";
    rep.transform = std::string(to_string(setup.transform));
    rep.seed = setup.seed;
    ReportGroup grp{"all", {}, {{"auc", {}}, {"ap", {}}, {"best_epoch", {}}}};
    for (std::size_t r = 0; r < setup.runs; ++r) {
        grp.rows.push_back("run" + std::to_string(r));
        grp.metrics[0].values.push_back(results[r].test_auc);
        grp.metrics[1].values.push_back(results[r].test_ap);
        grp.metrics[2].values.push_back(static_cast<double>(results[r].best_epoch));
    }
    rep.groups.push_back(std::move(grp));
    rep.wall_clock_seconds = detail::elapsed_seconds(start);
    return rep;
}

// ---------------------------------------------------------------------------
// Node classification on corrupted graphs

struct NodeClassificationSetup {
    std::size_t hidden_dim = 16;
    double dropout = 0.5;
    TransformId transform = TransformId::A1;
    DegreeSource degree_source = DegreeSource::Operand;
    std::uint64_t seed = 0;
    std::size_t runs = 3;
    std::vector<double> keep_fractions{0.25, 0.5, 0.75, 1.0};
    std::size_t train_per_class = 20;
    std::size_t val_count = 500;
    std::size_t test_count = 1000;
    TrainOptions train{.epochs = 200, .patience = 50, .lr = 0.01, .weight_decay = 5e-4, .lr_decay_step = 0};
};

/// Trains on the labelled nodes of `g` (already corrupted, if at all) and
/// returns test accuracy at the best-validation epoch.
inline double node_classification_run(const Graph& g, const NodeSplit& split, const NodeClassificationSetup& setup,
                                      std::uint64_t seed) {
    if (!g.node_labels() || !g.node_features()) throw ConfigError("node classification needs node labels and features");
    const auto& y = *g.node_labels();
    const int classes = *std::max_element(y.begin(), y.end()) + 1;
    const auto a_hat = build_transform(setup.transform, g, setup.degree_source);
    const Tensor x = feature_tensor(g);
    std::mt19937_64 rng(seed);
    auto model = make_node_classifier(x.cols(), setup.hidden_dim, static_cast<std::size_t>(classes), setup.dropout, rng);
    Adam adam(model.parameters(), {.lr = setup.train.lr, .weight_decay = setup.train.weight_decay});
    auto labels_of = [&](const std::vector<std::size_t>& idx) {
        std::vector<int> out;
        for (auto i : idx) out.push_back(y[i]);
        return out;
    };
    const auto y_train = labels_of(split.train), y_val = labels_of(split.val), y_test = labels_of(split.test);
    detail::Selection best;
    double test_acc = 0.0;
    auto record = [&](std::size_t epoch) {
        NoGradGuard no_grad;
        const auto logits = node_forward(model, x, a_hat, rng, false);
        const auto val_logits = gather_rows(logits, split.val);
        const double val_acc = accuracy(detail::argmax_rows(val_logits), y_val);
        const double val_loss = softmax_cross_entropy(val_logits, y_val).item();
        const bool improved = best.offer(val_acc, val_loss, epoch);
        if (setup.train.fixed_epochs ? epoch == setup.train.epochs : improved)
            test_acc = accuracy(detail::argmax_rows(gather_rows(logits, split.test)), y_test);
    };
    record(0);
    for (std::size_t epoch = 1; epoch <= setup.train.epochs; ++epoch) {
        auto logits = node_forward(model, x, a_hat, rng, true);
        backward(softmax_cross_entropy(gather_rows(logits, split.train), y_train));
        adam.step();
        record(epoch);
        if (!setup.train.fixed_epochs && setup.train.patience > 0 && epoch - best.epoch >= setup.train.patience) break;
    }
    return test_acc;
}

/// One group per keep fraction, one row per run. The node split is fixed
/// by `seed`; run r corrupts with seed + r and computes the transform on
/// the corrupted graph.
inline RunReport run_missing_edges(const Graph& g, const NodeClassificationSetup& setup,
                                   const std::string& dataset = "graph") {
    const auto start = std::chrono::steady_clock::now();
    if (!g.node_labels()) throw ConfigError("missing-edges needs node labels");
    if (setup.runs == 0) throw ConfigError("runs must be >= 1");
    const auto split = split_nodes(*g.node_labels(), setup.train_per_class, setup.val_count, setup.test_count,
                                   setup.seed);
    const std::size_t kf = setup.keep_fractions.size();
    std::vector<double> acc(kf * setup.runs);
    parallel_for(acc.size(), setup.train.threads, [&](std::size_t t) {
        const std::size_t k = t / setup.runs, r = t % setup.runs;
        const Graph corrupted = corrupt_edges(g, setup.keep_fractions[k], setup.seed + r);
        acc[t] = node_classification_run(corrupted, split, setup, setup.seed + r);
    });
    RunReport rep;
    rep.task = "missing-edges";
    rep.dataset = dataset;
    rep.model = "gcn";
    rep.transform = std::string(to_string(setup.transform));
    rep.seed = setup.seed;
    for (std::size_t k = 0; k < kf; ++k) {
        char label[32];
        std::snprintf(label, sizeof label, "keep=%g", setup.keep_fractions[k]);
        ReportGroup grp{label, {}, {{"accuracy", {}}}};
        for (std::size_t r = 0; r < setup.runs; ++r) {
            grp.rows.push_back("run" + std::to_string(r));
            grp.metrics[0].values.push_back(acc[k * setup.runs + r]);
        }
        rep.groups.push_back(std::move(grp));
    }
    rep.wall_clock_seconds = detail::elapsed_seconds(start);
    return rep;
}

} // namespace nbe
