#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "nbe/error.hpp"
#include "nbe/graph.hpp"
#include "nbe/losses.hpp"
#include "nbe/ops.hpp"
#include "nbe/optim.hpp"
#include "nbe/sparse.hpp"
#include "nbe/tensor.hpp"
#include "nbe/transforms.hpp"

namespace nbe {

enum class Activation { Identity, Relu };

inline Tensor activate(const Tensor& x, Activation a) { return a == Activation::Relu ? relu(x) : x; }

/// Affine map x W + b.
struct Linear {
    Tensor weight;
    Tensor bias;

    Tensor operator()(const Tensor& x) const { return add(matmul(x, weight), bias); }
};

inline Linear make_linear(std::size_t in, std::size_t out, std::mt19937_64& rng, const std::string& name) {
    Linear l{glorot_uniform(in, out, rng, name + ".w"), Tensor::zeros({out})};
    l.bias.set_requires_grad().set_name(name + ".b");
    return l;
}

/// Graph convolution H' = act(A_hat H W).
struct GcnLayer {
    Tensor weight;
    Activation activation = Activation::Relu;
};

inline GcnLayer make_gcn_layer(std::size_t in, std::size_t out, Activation act, std::mt19937_64& rng,
                               const std::string& name) {
    return {glorot_uniform(in, out, rng, name + ".w"), act};
}

inline Tensor gcn_forward(const GcnLayer& layer, const Tensor& h, std::shared_ptr<const SparseMatrix> a_hat) {
    if (a_hat->rows() != h.rows() || a_hat->cols() != h.rows()) {
        throw DimensionError("gcn_forward: operator of size " + std::to_string(a_hat->rows()) + " for features " +
                             shape_string(h.shape()));
    }
    return activate(spmm(std::move(a_hat), matmul(h, layer.weight)), layer.activation);
}

inline Tensor gcn_forward(const GcnLayer& layer, const Tensor& h, const NormalizedAdjacency& a_hat) {
    return gcn_forward(layer, h, a_hat.shared());
}

/// Sum-aggregation layer: act(MLP((1 + eps) h_v + sum over neighbors h_u)),
/// MLP = Linear -> ReLU -> Linear. eps is fixed at 0 unless learnable.
struct GinLayer {
    Tensor epsilon = Tensor::from({1, 1}, {0.0});
    bool learn_epsilon = false;
    Linear mlp_in;
    Linear mlp_out;
    Activation activation = Activation::Relu;
};

inline GinLayer make_gin_layer(std::size_t in, std::size_t hidden, std::size_t out, bool learn_eps,
                               std::mt19937_64& rng, const std::string& name) {
    GinLayer g;
    g.learn_epsilon = learn_eps;
    if (learn_eps) g.epsilon.set_requires_grad().set_name(name + ".eps");
    g.mlp_in = make_linear(in, hidden, rng, name + ".mlp0");
    g.mlp_out = make_linear(hidden, out, rng, name + ".mlp1");
    return g;
}

/// `neighbors` supplies the sum over the neighbor set (A1 or A1 + A2, or any
/// other aggregation operator).
inline Tensor gin_forward(const GinLayer& layer, const Tensor& h, std::shared_ptr<const SparseMatrix> neighbors) {
    if (neighbors->rows() != h.rows() || neighbors->cols() != h.rows()) {
        throw DimensionError("gin_forward: operator of size " + std::to_string(neighbors->rows()) + " for features " +
                             shape_string(h.shape()));
    }
    Tensor self = h;
    if (layer.learn_epsilon) {
        self = add(h, scale_by(h, layer.epsilon));
    } else if (layer.epsilon.item() != 0.0) {
        self = scale(h, 1.0 + layer.epsilon.item());
    }
    Tensor z = add(self, spmm(std::move(neighbors), h));
    return activate(layer.mlp_out(relu(layer.mlp_in(z))), layer.activation);
}

inline Tensor gin_forward(const GinLayer& layer, const Tensor& h, const BinaryAdjacency& a) {
    return gin_forward(layer, h, std::make_shared<const SparseMatrix>(detail::to_sparse(a)));
}

// ---------------------------------------------------------------------------
// Graph classification

enum class ModelKind { Gcn, Gin0, GinEps, Vgae, Gae };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
    case ModelKind::Gcn: return "gcn";
    case ModelKind::Gin0: return "gin-0";
    case ModelKind::GinEps: return "gin-eps";
    case ModelKind::Vgae: return "vgae";
    case ModelKind::Gae: return "gae";
    }
    return "?";
}

inline ModelKind parse_model(std::string_view s) {
    for (auto k : {ModelKind::Gcn, ModelKind::Gin0, ModelKind::GinEps, ModelKind::Vgae, ModelKind::Gae})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown model '" + std::string(s) + "'; valid: gcn, gin-0, gin-eps, vgae, gae");
}

inline bool is_gin(ModelKind k) { return k == ModelKind::Gin0 || k == ModelKind::GinEps; }

enum class Readout { Sum, Mean };

inline Readout parse_readout(std::string_view s) {
    if (s == "sum") return Readout::Sum;
    if (s == "mean") return Readout::Mean;
    throw ConfigError("unknown readout '" + std::string(s) + "'; valid: sum, mean");
}
inline std::string_view to_string(Readout r) { return r == Readout::Sum ? "sum" : "mean"; }

/// How a sum-aggregation layer sees the transform: as a binary neighbor set
/// (default) or as the normalized propagation matrix.
enum class GinInjection { NeighborSet, Normalized };

inline GinInjection parse_gin_injection(std::string_view s) {
    if (s == "neighbor-set") return GinInjection::NeighborSet;
    if (s == "normalized") return GinInjection::Normalized;
    throw ConfigError("unknown gin injection '" + std::string(s) + "'; valid: neighbor-set, normalized");
}
inline std::string_view to_string(GinInjection g) {
    return g == GinInjection::NeighborSet ? "neighbor-set" : "normalized";
}

struct ClassifierConfig {
    ModelKind kind = ModelKind::Gin0;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 64;
    std::size_t num_layers = 5;
    int num_classes = 2;
    Readout readout = Readout::Sum;
    bool jumping = true;
    double dropout = 0.0;
    TransformId transform = TransformId::A1;
    DegreeSource degree_source = DegreeSource::Operand;
    GinInjection gin_injection = GinInjection::NeighborSet;
};

/// Stack of GCN or GIN layers, a readout, and an affine head. With jumping
/// enabled, the input features and every layer output each get a head and
/// the per-level scores are summed.
struct GraphClassifier {
    ClassifierConfig config;
    std::vector<std::variant<GcnLayer, GinLayer>> layers;
    std::vector<Linear> heads;

    std::vector<Tensor> parameters() const {
        std::vector<Tensor> out;
        for (const auto& l : layers) {
            if (const auto* g = std::get_if<GcnLayer>(&l)) {
                out.push_back(g->weight);
            } else {
                const auto& gin = std::get<GinLayer>(l);
                if (gin.learn_epsilon) out.push_back(gin.epsilon);
                for (const auto* lin : {&gin.mlp_in, &gin.mlp_out}) {
                    out.push_back(lin->weight);
                    out.push_back(lin->bias);
                }
            }
        }
        for (const auto& h : heads) {
            out.push_back(h.weight);
            out.push_back(h.bias);
        }
        return out;
    }
};

inline GraphClassifier make_classifier(const ClassifierConfig& cfg, std::mt19937_64& rng) {
    if (cfg.kind == ModelKind::Vgae || cfg.kind == ModelKind::Gae) {
        throw ConfigError("model '" + std::string(to_string(cfg.kind)) + "' is not a graph classifier");
    }
    if (cfg.num_layers == 0) throw ConfigError("classifier needs at least one layer");
    if (cfg.input_dim == 0) throw ConfigError("classifier needs node features (input_dim = 0)");
    GraphClassifier m;
    m.config = cfg;
    std::size_t in = cfg.input_dim;
    for (std::size_t k = 0; k < cfg.num_layers; ++k) {
        const std::string name = "layer" + std::to_string(k);
        if (cfg.kind == ModelKind::Gcn) {
            m.layers.emplace_back(make_gcn_layer(in, cfg.hidden_dim, Activation::Relu, rng, name));
        } else {
            m.layers.emplace_back(make_gin_layer(in, cfg.hidden_dim, cfg.hidden_dim, cfg.kind == ModelKind::GinEps,
                                                 rng, name));
        }
        in = cfg.hidden_dim;
    }
    const auto nc = static_cast<std::size_t>(cfg.num_classes);
    if (cfg.jumping) {
        m.heads.push_back(make_linear(cfg.input_dim, nc, rng, "head0"));
        for (std::size_t k = 0; k < cfg.num_layers; ++k)
            m.heads.push_back(make_linear(cfg.hidden_dim, nc, rng, "head" + std::to_string(k + 1)));
    } else {
        m.heads.push_back(make_linear(cfg.hidden_dim, nc, rng, "head"));
    }
    return m;
}

/// Propagation operator a classifier applies to one graph.
inline SparseMatrix graph_operator(const ClassifierConfig& cfg, const Graph& g) {
    if (is_gin(cfg.kind) && cfg.gin_injection == GinInjection::NeighborSet) {
        return neighbor_sum_operator(cfg.transform, g);
    }
    return build_transform(cfg.transform, g, cfg.degree_source).matrix();
}

/// Several graphs packed into one block-diagonal problem.
struct GraphBatch {
    Tensor features;
    std::shared_ptr<const SparseMatrix> op;
    std::vector<std::size_t> segment; ///< graph index per node row
    std::size_t num_graphs = 0;
    std::vector<int> labels;
};

/// Packs `graphs[indices]` using precomputed per-graph operators.
inline GraphBatch make_batch(const std::vector<Graph>& graphs, const std::vector<SparseMatrix>& ops,
                             const std::vector<std::size_t>& indices, std::size_t feature_dim) {
    GraphBatch b;
    b.num_graphs = indices.size();
    std::vector<const SparseMatrix*> blocks;
    std::size_t total = 0;
    for (std::size_t gi : indices) total += graphs.at(gi).num_nodes();
    std::vector<double> x;
    x.reserve(total * feature_dim);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const Graph& g = graphs[indices[k]];
        const auto& f = g.node_features();
        if (!f || f->cols != feature_dim) {
            throw DimensionError("graph " + std::to_string(indices[k]) + " feature width " +
                                 std::to_string(f ? f->cols : 0) + " != model input " + std::to_string(feature_dim));
        }
        x.insert(x.end(), f->data.begin(), f->data.end());
        b.segment.insert(b.segment.end(), g.num_nodes(), k);
        blocks.push_back(&ops.at(indices[k]));
        b.labels.push_back(g.graph_label().value_or(-1));
    }
    b.features = Tensor::from({total, feature_dim}, std::move(x));
    b.op = std::make_shared<const SparseMatrix>(SparseMatrix::block_diagonal(blocks));
    return b;
}

inline Tensor readout(const Tensor& h, const GraphBatch& b, Readout r) {
    return r == Readout::Sum ? segment_sum(h, b.segment, b.num_graphs) : segment_mean(h, b.segment, b.num_graphs);
}

/// Node representations after each layer (index 0 is the input).
inline std::vector<Tensor> node_representations(const GraphClassifier& m, const Tensor& x,
                                                const std::shared_ptr<const SparseMatrix>& op) {
    std::vector<Tensor> reps{x};
    for (const auto& layer : m.layers) {
        const Tensor& h = reps.back();
        if (const auto* g = std::get_if<GcnLayer>(&layer)) {
            reps.push_back(gcn_forward(*g, h, op));
        } else {
            reps.push_back(gin_forward(std::get<GinLayer>(layer), h, op));
        }
    }
    return reps;
}

/// Logits [num_graphs x num_classes].
inline Tensor classifier_forward(const GraphClassifier& m, const GraphBatch& b, std::mt19937_64& rng, bool training) {
    const auto reps = node_representations(m, b.features, b.op);
    const double p = m.config.dropout;
    if (!m.config.jumping) return m.heads.front()(dropout(readout(reps.back(), b, m.config.readout), p, rng, training));
    Tensor score = m.heads[0](dropout(readout(reps[0], b, m.config.readout), p, rng, training));
    for (std::size_t k = 1; k < reps.size(); ++k) {
        score = add(score, m.heads[k](dropout(readout(reps[k], b, m.config.readout), p, rng, training)));
    }
    return score;
}

/// Eval-mode logits [1 x num_classes] for a single graph under `transform`.
inline Tensor classify_graph(const GraphClassifier& m, const Graph& g, TransformId transform) {
    ClassifierConfig cfg = m.config;
    cfg.transform = transform;
    std::vector<Graph> one{g};
    std::vector<SparseMatrix> ops{graph_operator(cfg, g)};
    auto batch = make_batch(one, ops, {0}, cfg.input_dim);
    NoGradGuard no_grad;
    std::mt19937_64 unused(0);
    return classifier_forward(m, batch, unused, false);
}

// ---------------------------------------------------------------------------
// Graph autoencoder for link prediction

struct AutoencoderConfig {
    bool variational = true;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 32;
    std::size_t latent_dim = 16;
};

/// Two-layer GCN encoder: a shared ReLU layer, then linear layers for the
/// mean and (variational only) the log standard deviation.
struct GraphAutoencoder {
    AutoencoderConfig config;
    GcnLayer hidden;
    GcnLayer mu;
    std::optional<GcnLayer> logsigma;

    std::vector<Tensor> parameters() const {
        std::vector<Tensor> out{hidden.weight, mu.weight};
        if (logsigma) out.push_back(logsigma->weight);
        return out;
    }
};

inline GraphAutoencoder make_autoencoder(const AutoencoderConfig& cfg, std::mt19937_64& rng) {
    if (cfg.input_dim == 0 || cfg.latent_dim == 0) throw ConfigError("autoencoder dims must be positive");
    GraphAutoencoder m;
    m.config = cfg;
    m.hidden = make_gcn_layer(cfg.input_dim, cfg.hidden_dim, Activation::Relu, rng, "enc.hidden");
    m.mu = make_gcn_layer(cfg.hidden_dim, cfg.latent_dim, Activation::Identity, rng, "enc.mu");
    if (cfg.variational) {
        m.logsigma = make_gcn_layer(cfg.hidden_dim, cfg.latent_dim, Activation::Identity, rng, "enc.logsigma");
    }
    return m;
}

struct EncoderOutput {
    Tensor z;
    Tensor mu;
    Tensor logsigma; ///< zeros for the deterministic autoencoder
};

inline constexpr double kLogSigmaMin = -10.0;
inline constexpr double kLogSigmaMax = 10.0;
inline constexpr double kEdgeLogitClamp = 15.0;

/// Encodes nodes. With `sample`, z = mu + exp(logsigma) * noise; otherwise z = mu.
inline EncoderOutput vgae_forward(const GraphAutoencoder& m, const Tensor& x, const NormalizedAdjacency& a_hat,
                                  bool sample, std::mt19937_64& rng) {
    if (x.rank() != 2 || x.cols() != m.config.input_dim) {
        throw DimensionError("autoencoder input " + shape_string(x.shape()) + " != input_dim " +
                             std::to_string(m.config.input_dim));
    }
    Tensor h = gcn_forward(m.hidden, x, a_hat);
    Tensor mu = gcn_forward(m.mu, h, a_hat);
    if (!m.logsigma) return {mu, mu, Tensor::zeros(mu.shape())};
    Tensor logsigma = clamp(gcn_forward(*m.logsigma, h, a_hat), kLogSigmaMin, kLogSigmaMax);
    if (!sample) return {mu, mu, logsigma};
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> noise(mu.numel());
    for (double& v : noise) v = normal(rng);
    Tensor z = add(mu, elementwise_mul(exp(logsigma), Tensor::from(mu.shape(), std::move(noise))));
    return {z, mu, logsigma};
}

/// Inner-product decoder logits <z_i, z_j>.
inline Tensor decode_edges(const Tensor& z, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    return rows_dot(z, pairs);
}

/// KL(q || N(0, I)) summed over latent dims, averaged over nodes:
/// mean_i sum_d 0.5 (mu^2 + sigma^2 - 1 - 2 log sigma).
inline Tensor gaussian_kl(const Tensor& mu, const Tensor& logsigma) {
    Tensor sigma2 = exp(scale(logsigma, 2.0));
    Tensor terms = sub(add(elementwise_mul(mu, mu), sigma2), add_scalar(scale(logsigma, 2.0), 1.0));
    return scale(sum(terms), 0.5 / static_cast<double>(mu.rows()));
}

/// Reconstruction BCE over the sampled pairs plus KL / n.
inline Tensor vgae_loss(const Tensor& logits, const Tensor& targets, const Tensor& mu, const Tensor& logsigma,
                        std::size_t n, double pos_weight = 1.0) {
    Tensor recon = binary_cross_entropy_with_logits(clamp(logits, -kEdgeLogitClamp, kEdgeLogitClamp), targets,
                                                    pos_weight);
    return add(recon, scale(gaussian_kl(mu, logsigma), 1.0 / static_cast<double>(n)));
}

// ---------------------------------------------------------------------------
// Node classification

/// Two GCN layers with dropout on both inputs; logits per node.
struct NodeClassifier {
    GcnLayer hidden;
    GcnLayer out;
    double dropout = 0.5;

    std::vector<Tensor> parameters() const { return {hidden.weight, out.weight}; }
};

inline NodeClassifier make_node_classifier(std::size_t in, std::size_t hidden, std::size_t classes, double dropout,
                                           std::mt19937_64& rng) {
    return {make_gcn_layer(in, hidden, Activation::Relu, rng, "node.hidden"),
            make_gcn_layer(hidden, classes, Activation::Identity, rng, "node.out"), dropout};
}

inline Tensor node_forward(const NodeClassifier& m, const Tensor& x, const NormalizedAdjacency& a_hat,
                           std::mt19937_64& rng, bool training) {
    Tensor h = gcn_forward(m.hidden, dropout(x, m.dropout, rng, training), a_hat);
    return gcn_forward(m.out, dropout(h, m.dropout, rng, training), a_hat);
}

} // namespace nbe
