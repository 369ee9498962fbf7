#pragma once

// Glue between experiment configs, datasets and the harness, plus the
// transform and compare tools behind the command-line verbs.

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "mi.hpp"
#include "synthetic.hpp"

namespace nbe {

// ---------------------------------------------------------------------------
// Datasets

inline Dataset load_graph_dataset(const ExperimentConfig& c) {
    const auto& source = c.str("source");
    const auto& name = c.str("dataset");
    const auto seed = static_cast<std::uint64_t>(c.integer("seed"));
    Dataset ds;
    if (source == "tu") {
        ds = load_tu_dataset(c.path("path"), name);
    } else if (source == "synthetic") {
        if (name == "has-triangle") {
            ds = synthetic::has_triangle(seed);
        } else if (name == "triangles") {
            ds = synthetic::triangles(seed);
        } else {
            c.fail("dataset", "unknown synthetic graph-level dataset '" + name + "'; valid: has-triangle, triangles");
        }
    } else {
        c.fail("source", "graph-level tasks need source tu or synthetic, got '" + source + "'");
    }
    if (ds.feature_dim == 0) add_degree_features(ds, c.count("max_degree"));
    return ds;
}

inline Graph load_single_graph(const ExperimentConfig& c, bool need_labels) {
    const auto& source = c.str("source");
    const auto& name = c.str("dataset");
    const auto seed = static_cast<std::uint64_t>(c.integer("seed"));
    if (source == "citation") return load_citation_graph(c.path("path"), name);
    if (source == "edge-list") {
        if (need_labels) c.fail("source", "edge lists carry no node labels");
        return load_edge_list(c.path("path"));
    }
    if (source == "synthetic") {
        if (name == "two-block") return synthetic::two_block(seed);
        if (name == "feature-block") return synthetic::feature_block_model(seed);
        c.fail("dataset", "unknown synthetic graph '" + name + "'; valid: two-block, feature-block");
    }
    c.fail("source", "node-level tasks need source citation, edge-list or synthetic, got '" + source + "'");
}

// ---------------------------------------------------------------------------
// Config -> harness setups

inline TrainOptions train_options(const ExperimentConfig& c, std::size_t threads) {
    TrainOptions t;
    t.epochs = c.count("epochs");
    t.patience = c.count("patience");
    t.fixed_epochs = c.flag("fixed_epochs");
    t.lr = c.real("lr");
    t.weight_decay = c.real("weight_decay");
    t.lr_decay_step = c.count("lr_decay_step");
    t.lr_decay_rate = c.real("lr_decay_rate");
    if (c.has("batch_size")) t.batch_size = c.count("batch_size");
    if (t.batch_size == 0) c.fail("batch_size", "must be positive");
    t.threads = threads;
    return t;
}

inline ModelKind config_model(const ExperimentConfig& c) {
    try {
        return parse_model(c.str("model"));
    } catch (const ConfigError& e) {
        c.fail("model", e.what());
    }
}

inline TransformId config_transform(const ExperimentConfig& c) {
    try {
        return parse_transform(c.str("transform"));
    } catch (const ConfigError& e) {
        c.fail("transform", e.what());
    }
}

inline GraphClassificationSetup graph_setup(const ExperimentConfig& c, std::size_t threads) {
    GraphClassificationSetup s;
    s.model.kind = config_model(c);
    if (!is_gin(s.model.kind) && s.model.kind != ModelKind::Gcn)
        c.fail("model", "graph classification needs gcn, gin-0 or gin-eps");
    s.model.hidden_dim = c.count("hidden_dim");
    if (c.str("num_layers") == "auto") {
        s.model.num_layers = s.model.kind == ModelKind::Gcn ? 2 : 5;
    } else {
        s.model.num_layers = c.count("num_layers");
        if (s.model.num_layers == 0) c.fail("num_layers", "must be positive");
    }
    s.model.dropout = c.real("dropout");
    s.model.jumping = c.flag("jumping");
    try {
        s.model.readout = parse_readout(c.str("readout"));
    } catch (const ConfigError& e) {
        c.fail("readout", e.what());
    }
    try {
        s.model.gin_injection = parse_gin_injection(c.str("gin_injection"));
    } catch (const ConfigError& e) {
        c.fail("gin_injection", e.what());
    }
    try {
        s.model.degree_source = parse_degree_source(c.str("degree_source"));
    } catch (const ConfigError& e) {
        c.fail("degree_source", e.what());
    }
    if (c.has("transform")) s.model.transform = config_transform(c);
    if (c.has("folds")) s.folds = c.count("folds");
    s.seed = static_cast<std::uint64_t>(c.integer("seed"));
    s.val_fraction = c.real("val_fraction");
    if (!(s.val_fraction > 0.0 && s.val_fraction < 1.0)) c.fail("val_fraction", "must lie in (0, 1)");
    s.train = train_options(c, threads);
    return s;
}

inline LinkPredictionSetup link_setup(const ExperimentConfig& c, std::size_t threads) {
    LinkPredictionSetup s;
    const auto kind = config_model(c);
    if (kind != ModelKind::Vgae && kind != ModelKind::Gae) c.fail("model", "link prediction needs vgae or gae");
    s.model.variational = kind == ModelKind::Vgae;
    s.model.hidden_dim = c.count("hidden_dim");
    s.model.latent_dim = c.count("latent_dim");
    if (c.has("transform")) s.transform = config_transform(c);
    try {
        s.degree_source = parse_degree_source(c.str("degree_source"));
    } catch (const ConfigError& e) {
        c.fail("degree_source", e.what());
    }
    s.seed = static_cast<std::uint64_t>(c.integer("seed"));
    s.runs = c.count("runs");
    s.val_fraction = c.real("val_fraction");
    s.test_fraction = c.real("test_fraction");
    s.dense_reconstruction = c.flag("dense_reconstruction");
    s.train = train_options(c, threads);
    return s;
}

inline NodeClassificationSetup node_setup(const ExperimentConfig& c, std::size_t threads) {
    NodeClassificationSetup s;
    if (config_model(c) != ModelKind::Gcn) c.fail("model", "missing-edges runs the gcn backbone");
    s.hidden_dim = c.count("hidden_dim");
    s.dropout = c.real("dropout");
    s.transform = config_transform(c);
    try {
        s.degree_source = parse_degree_source(c.str("degree_source"));
    } catch (const ConfigError& e) {
        c.fail("degree_source", e.what());
    }
    s.seed = static_cast<std::uint64_t>(c.integer("seed"));
    s.runs = c.count("runs");
    s.keep_fractions = c.reals("keep_fractions");
    for (double k : s.keep_fractions)
        if (!(k > 0.0) || k > 1.0) c.fail("keep_fractions", "entries must lie in (0, 1]");
    s.train_per_class = c.count("train_per_class");
    s.val_count = c.count("val_count");
    s.test_count = c.count("test_count");
    s.train = train_options(c, threads);
    return s;
}

// ---------------------------------------------------------------------------
// Running

struct ExperimentResult {
    RunReport report;
    std::string csv; ///< what `run` writes as the CSV file
};

namespace detail {

inline RunReport transform_ablation(const ExperimentConfig& c, std::size_t threads) {
    const auto kind = config_model(c);
    RunReport out;
    out.task = "transform-ablation";
    out.model = std::string(to_string(kind));
    out.transform = "all";
    out.seed = static_cast<std::uint64_t>(c.integer("seed"));
    const bool link = kind == ModelKind::Vgae || kind == ModelKind::Gae;
    if (link) {
        const Graph g = load_single_graph(c, false);
        out.dataset = c.str("dataset");
        for (auto id : kAllTransforms) {
            auto s = link_setup(c, threads);
            s.transform = id;
            auto r = run_link_prediction(g, s, out.dataset);
            r.groups[0].label = std::string(to_string(id));
            out.groups.push_back(r.groups[0]);
            out.wall_clock_seconds += r.wall_clock_seconds;
        }
    } else {
        const Dataset ds = load_graph_dataset(c);
        out.dataset = ds.name.empty() ? c.str("dataset") : ds.name;
        for (auto id : kAllTransforms) {
            auto s = graph_setup(c, threads);
            s.model.transform = id;
            auto r = run_graph_classification(ds, s);
            r.groups[0].label = std::string(to_string(id));
            out.groups.push_back(r.groups[0]);
            out.wall_clock_seconds += r.wall_clock_seconds;
        }
    }
    return out;
}

inline ExperimentResult mi_probe(const ExperimentConfig& c, std::size_t threads) {
    const auto start = std::chrono::steady_clock::now();
    const Dataset ds = load_graph_dataset(c);
    const auto s = graph_setup(c, threads);
    const auto cfg = resolve_classifier(s.model, ds);
    const auto labels = ds.labels();
    std::vector<std::size_t> all(ds.graphs.size());
    std::iota(all.begin(), all.end(), 0);
    auto [train, val] = holdout_split(all, labels, s.val_fraction, s.seed);
    std::mt19937_64 rng(s.seed);
    auto model = make_classifier(cfg, rng);
    const auto ops = graph_operators(cfg, ds);
    train_graph_classifier(model, ds.graphs, ops, train, val, {}, s.train, rng, true);
    ProbeOptions po{c.count("bins"), c.count("mi_coordinates"), s.seed};
    std::vector<ProbeLayer> rows;
    ExperimentResult res;
    res.report.task = "mi-probe";
    res.report.dataset = ds.name.empty() ? c.str("dataset") : ds.name;
    res.report.model = std::string(to_string(cfg.kind));
    res.report.transform = std::string(to_string(cfg.transform));
    res.report.seed = s.seed;
    for (auto mode : {ProbeMode::D1, ProbeMode::D1D2}) {
        const auto layer_rows = neighborhood_mi_probe(ds, model, mode, po);
        ReportGroup g{std::string(to_string(mode)), {}, {{"mean_mi", {}}}};
        for (const auto& r : layer_rows) {
            g.rows.push_back("layer" + std::to_string(r.layer));
            g.metrics[0].values.push_back(r.mean_mi);
        }
        res.report.groups.push_back(std::move(g));
        rows.insert(rows.end(), layer_rows.begin(), layer_rows.end());
    }
    res.csv = probe_csv(rows);
    res.report.wall_clock_seconds = elapsed_seconds(start);
    return res;
}

} // namespace detail

/// Executes the experiment a config describes. `threads` = 1 forces
/// sequential folds/runs; results do not depend on it.
inline ExperimentResult run_experiment(const ExperimentConfig& c, std::size_t threads = 0) {
    const auto& task = c.task();
    const auto kind = config_model(c);
    const bool autoencoder = kind == ModelKind::Vgae || kind == ModelKind::Gae;
    if (autoencoder && task != "link-prediction" && task != "transform-ablation")
        c.fail("model", "vgae and gae are only valid for link-prediction");
    ExperimentResult res;
    if (task == "graph-classification") {
        res.report = run_graph_classification(load_graph_dataset(c), graph_setup(c, threads));
    } else if (task == "link-prediction") {
        res.report = run_link_prediction(load_single_graph(c, false), link_setup(c, threads), c.str("dataset"));
    } else if (task == "missing-edges") {
        res.report = run_missing_edges(load_single_graph(c, true), node_setup(c, threads), c.str("dataset"));
    } else if (task == "transform-ablation") {
        res.report = detail::transform_ablation(c, threads);
    } else {
        res = detail::mi_probe(c, threads);
    }
    res.report.config = c.resolved();
    res.report.fingerprint = c.fingerprint();
    if (res.csv.empty()) res.csv = to_csv(res.report);
    return res;
}

// ---------------------------------------------------------------------------
// transform verb

/// Sparse-triplet text: `i j value` per line, row-major order, values in
/// shortest round-trip form.
inline void write_triplets(std::ostream& out, const SparseMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto cols = m.row_cols(i);
        const auto vals = m.row_values(i);
        for (std::size_t e = 0; e < cols.size(); ++e) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", vals[e]);
            out << i << ' ' << cols[e] << ' ' << buf << '\n';
        }
    }
}

/// The matrix a transform id stands for: the neighborhood operand (binary
/// or integer, no self loops), or with `normalized` the propagation matrix.
inline SparseMatrix transform_matrix(const Graph& g, TransformId id, bool normalized,
                                     DegreeSource degrees = DegreeSource::Operand) {
    if (normalized) return build_transform(id, g, degrees).matrix();
    return transform_operand(id, g).matrix;
}

// ---------------------------------------------------------------------------
// compare verb

struct Comparison {
    std::vector<std::string> names;
    std::vector<const RunReport*> reports;
    std::string csv;
    std::string text;
};

/// Side-by-side means with deltas against the first report.
inline Comparison compare_reports(const std::vector<RunReport>& reports, const std::vector<std::string>& names) {
    if (reports.size() < 2) throw ConfigError("compare needs at least two reports");
    const auto& base = reports.front();
    for (std::size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].task != base.task) {
            throw ConfigError("cannot compare task '" + reports[i].task + "' (" + names[i] + ") with '" + base.task +
                              "' (" + names[0] + ")");
        }
        if (reports[i].dataset != base.dataset) {
            throw ConfigError("cannot compare dataset '" + reports[i].dataset + "' (" + names[i] + ") with '" +
                              base.dataset + "' (" + names[0] + ")");
        }
    }
    Comparison cmp;
    cmp.names = names;
    std::ostringstream csv, text;
    csv << "group,metric";
    for (const auto& n : names) csv << ',' << n << "_mean," << n << "_std";
    for (std::size_t i = 1; i < names.size(); ++i) csv << ",delta_" << names[i];
    csv << '\n';
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s %-10s", "group", "metric");
    text << buf;
    for (const auto& n : names) {
        std::snprintf(buf, sizeof buf, " %20s", n.c_str());
        text << buf;
    }
    for (std::size_t i = 1; i < names.size(); ++i) {
        std::snprintf(buf, sizeof buf, " %14s", ("d(" + names[i] + ")").c_str());
        text << buf;
    }
    text << '\n';
    for (const auto& g : base.groups) {
        for (const auto& m : g.metrics) {
            std::vector<const MetricSeries*> series;
            for (std::size_t i = 0; i < reports.size(); ++i) {
                try {
                    series.push_back(&reports[i].group(g.label).metric(m.name));
                } catch (const ConfigError&) {
                    throw ConfigError(names[i] + " has no '" + m.name + "' in group '" + g.label + "'");
                }
            }
            csv << g.label << ',' << m.name;
            std::snprintf(buf, sizeof buf, "%-12s %-10s", g.label.c_str(), m.name.c_str());
            text << buf;
            for (const auto* s : series) {
                csv << ',' << format_value(s->mean()) << ',' << format_value(s->stddev());
                std::snprintf(buf, sizeof buf, " %20s", format_summary(*s).c_str());
                text << buf;
            }
            for (std::size_t i = 1; i < series.size(); ++i) {
                const double d = series[i]->mean() - series[0]->mean();
                csv << ',' << format_value(d);
                std::snprintf(buf, sizeof buf, " %+14.4f", d);
                text << buf;
            }
            csv << '\n';
            text << '\n';
        }
    }
    cmp.csv = csv.str();
    cmp.text = text.str();
    return cmp;
}

} // namespace nbe
