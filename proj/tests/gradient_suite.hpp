#pragma once

// Every layer/loss composite under finite differences, for the acceptance
// run. Worst relative error over all checks.

#include <functional>
#include <random>

#include "nbe/gradcheck.hpp"
#include "nbe/models.hpp"
#include "oracles.hpp"

namespace gradsuite {

using namespace nbe;

struct Result {
    double worst = 0.0;
    std::size_t checks = 0;
    std::size_t remeasured = 0; ///< checks whose eps = 1e-4 stencil crossed a ReLU kink
};

constexpr double kTolerance = 1e-4;

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = u(rng);
    return Tensor::from(std::move(shape), std::move(v));
}

// A random point can sit within 1e-4 of a ReLU kink, where a central
// difference straddles two linear pieces. Such checks are measured again
// with a narrower stencil and counted; a wrong gradient fails both.
inline void check(Result& r, const std::function<Tensor()>& f, Tensor& x) {
    double err = finite_difference_check(f, x, 1e-4);
    if (err >= kTolerance) {
        err = finite_difference_check(f, x, 1e-6);
        ++r.remeasured;
    }
    r.worst = std::max(r.worst, err);
    ++r.checks;
}

inline Result run(std::uint64_t seeds = 20) {
    Result r;
    const auto g = Graph::from_pairs(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 3}});
    const auto c6 = oracle::cycle_graph(6);
    std::vector<Graph> graphs;
    {
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 3; ++i) {
            auto h = oracle::random_graph(5, 0.5, rng);
            DenseMatrix x(5, 3);
            for (double& v : x.data) v = u(rng);
            h.set_node_features(std::move(x));
            h.set_graph_label(i % 2);
            graphs.push_back(h);
        }
    }
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        std::mt19937_64 rng(seed);
        // Losses on raw inputs.
        auto logits = random_tensor({5, 3}, rng, -2, 2);
        check(r, [&] { return softmax_cross_entropy(logits, {0, 2, 1, 1, 0}); }, logits);
        auto raw = random_tensor({8}, rng, -3, 3);
        auto bits = Tensor::from({8}, {1, 0, 0, 1, 1, 0, 1, 0});
        check(r, [&] { return binary_cross_entropy_with_logits(raw, bits, 1.7); }, raw);

        // Each layer under each loss and transform.
        auto x = random_tensor({5, 3}, rng);
        for (auto id : kAllTransforms) {
            auto a_hat = build_transform(id, g);
            auto nbrs = std::make_shared<const SparseMatrix>(neighbor_sum_operator(id, g));
            GcnLayer gcn{random_tensor({3, 4}, rng), Activation::Relu};
            auto gin = make_gin_layer(3, 4, 3, true, rng, "g");
            gin.epsilon.mutable_values()[0] = 0.2;
            // Zero biases can leave an output exactly on the ReLU kink.
            std::uniform_real_distribution<double> jitter(0.05, 0.3);
            for (Tensor* b : {&gin.mlp_in.bias, &gin.mlp_out.bias})
                for (double& v : b->mutable_values()) v = jitter(rng);
            auto targets = Tensor::from({5}, {1, 0, 1, 0, 0});
            const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 1}, {0, 4}, {2, 3}, {1, 1}, {4, 2}};
            std::function<Tensor()> gcn_ce = [&] { return softmax_cross_entropy(gcn_forward(gcn, x, a_hat), {0, 1, 3, 2, 0}); };
            std::function<Tensor()> gcn_bce = [&] {
                return binary_cross_entropy_with_logits(decode_edges(gcn_forward(gcn, x, a_hat), pairs), targets, 2.0);
            };
            std::function<Tensor()> gin_ce = [&] { return softmax_cross_entropy(gin_forward(gin, x, nbrs), {0, 1, 2, 1, 0}); };
            std::function<Tensor()> gin_bce = [&] {
                return binary_cross_entropy_with_logits(decode_edges(gin_forward(gin, x, nbrs), pairs), targets, 1.0);
            };
            for (auto* fn : {&gcn_ce, &gcn_bce}) {
                check(r, *fn, gcn.weight);
                check(r, *fn, x);
            }
            for (auto* fn : {&gin_ce, &gin_bce})
                for (Tensor* p : {&gin.epsilon, &gin.mlp_in.weight, &gin.mlp_in.bias, &gin.mlp_out.weight, &gin.mlp_out.bias})
                    check(r, *fn, *p);
        }

        // Variational autoencoder objective with fixed noise.
        {
            auto a_hat = build_transform(TransformId::A1PlusA2, c6);
            auto m = make_autoencoder({.input_dim = 3, .hidden_dim = 4, .latent_dim = 2}, rng);
            auto xa = random_tensor({6, 3}, rng);
            auto targets = Tensor::from({4}, {1, 1, 0, 0});
            auto f = [&] {
                std::mt19937_64 noise(99);
                auto out = vgae_forward(m, xa, a_hat, true, noise);
                return vgae_loss(decode_edges(out.z, {{0, 1}, {2, 3}, {0, 3}, {1, 4}}), targets, out.mu, out.logsigma, 6);
            };
            for (auto p : m.parameters()) check(r, f, p);
        }

        // Whole graph classifiers.
        for (auto kind : {ModelKind::Gcn, ModelKind::Gin0, ModelKind::GinEps}) {
            ClassifierConfig cfg{.kind = kind, .input_dim = 3, .hidden_dim = 4, .num_layers = 2, .num_classes = 2,
                                 .readout = seed % 2 ? Readout::Mean : Readout::Sum, .jumping = seed % 3 != 0,
                                 .transform = TransformId::A1PlusA2};
            auto model = make_classifier(cfg, rng);
            std::uniform_real_distribution<double> jitter(0.05, 0.3);
            for (auto p : model.parameters())
                if (p.rank() == 1)
                    for (double& v : p.mutable_values()) v = jitter(rng);
            std::vector<SparseMatrix> ops;
            for (const auto& h : graphs) ops.push_back(graph_operator(cfg, h));
            auto batch = make_batch(graphs, ops, {0, 1, 2}, 3);
            auto f = [&] {
                std::mt19937_64 unused(0);
                return softmax_cross_entropy(classifier_forward(model, batch, unused, false), batch.labels);
            };
            for (auto p : model.parameters()) check(r, f, p);
        }

        // Two-layer node classifier, eval mode.
        {
            auto a_hat = build_transform(TransformId::ASquaredPlus2I, g);
            auto m = make_node_classifier(3, 4, 3, 0.5, rng);
            auto f = [&] {
                std::mt19937_64 unused(0);
                return softmax_cross_entropy(node_forward(m, x, a_hat, unused, false), {0, 1, 2, 2, 1});
            };
            for (auto p : m.parameters()) check(r, f, p);
        }
    }
    return r;
}

} // namespace gradsuite
