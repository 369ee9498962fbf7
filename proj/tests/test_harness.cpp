#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "nbe/harness.hpp"
#include "nbe/synthetic.hpp"
#include "oracles.hpp"

using namespace nbe;

namespace {

GraphClassificationSetup small_setup(ModelKind kind, TransformId t, std::uint64_t seed) {
    GraphClassificationSetup s;
    s.model = {.kind = kind, .hidden_dim = 8, .num_layers = 2, .transform = t};
    s.folds = 5;
    s.seed = seed;
    s.train.epochs = 15;
    s.train.threads = 1;
    return s;
}

} // namespace

TEST(ParallelForTest, CoversEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelForTest, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(8, 3,
                              [](std::size_t i) {
                                  if (i == 5) throw ConfigError("boom");
                              }),
                 ConfigError);
}

TEST(GraphClassificationTest, TransformsCoincideOnTriangles) {
    const auto ds = synthetic::triangles(1);
    for (auto kind : {ModelKind::Gcn, ModelKind::Gin0}) {
        const auto a = run_graph_classification(ds, small_setup(kind, TransformId::A1, 3));
        const auto b = run_graph_classification(ds, small_setup(kind, TransformId::A1PlusA2, 3));
        EXPECT_EQ(a.groups[0].metrics[0].values, b.groups[0].metrics[0].values);
        EXPECT_EQ(to_csv(a), to_csv(b));
    }
}

TEST(GraphClassificationTest, DeterministicAcrossThreadCounts) {
    const auto ds = synthetic::has_triangle(2);
    auto s = small_setup(ModelKind::GinEps, TransformId::A1PlusA2, 5);
    const auto a = run_graph_classification(ds, s);
    s.train.threads = 3;
    const auto b = run_graph_classification(ds, s);
    EXPECT_EQ(to_csv(a), to_csv(b));
}

TEST(GraphClassificationTest, HasTriangleSeparated) {
    const auto ds = synthetic::has_triangle(0);
    GraphClassificationSetup s;
    s.model = {.kind = ModelKind::Gin0, .hidden_dim = 16, .num_layers = 2, .jumping = false, .dropout = 0.0};
    s.train.epochs = 200;
    s.train.threads = 1;
    const auto r = run_graph_classification(ds, s);
    for (double acc : r.groups[0].metric("accuracy").values) EXPECT_EQ(acc, 1.0);
}

TEST(GraphClassificationTest, ReportStatisticsRecompute) {
    const auto r = run_graph_classification(synthetic::has_triangle(4), small_setup(ModelKind::Gcn, TransformId::A1, 1));
    const auto& m = r.groups[0].metric("accuracy");
    ASSERT_EQ(m.values.size(), 5u);
    double sum = 0.0;
    for (double v : m.values) sum += v;
    const double mean = sum / 5.0;
    double var = 0.0;
    for (double v : m.values) var += (v - mean) * (v - mean);
    EXPECT_EQ(m.mean(), mean);
    EXPECT_EQ(m.stddev(), std::sqrt(var / 5.0));
    const auto back = report_from_json(to_json(r));
    EXPECT_EQ(back.groups[0].metric("accuracy").mean(), m.mean());
    EXPECT_EQ(to_csv(back), to_csv(r));
}

TEST(GraphClassificationTest, FixedEpochReporting) {
    auto s = small_setup(ModelKind::Gin0, TransformId::A1, 2);
    s.train.fixed_epochs = true;
    const auto r = run_graph_classification(synthetic::has_triangle(1), s);
    for (double e : r.groups[0].metric("best_epoch").values) EXPECT_EQ(e, 15.0);
}

TEST(LinkPredictionTest, OperatorSeesTrainingEdgesOnly) {
    std::mt19937_64 rng(1);
    auto g = oracle::random_graph(40, 0.15, rng);
    const auto split = split_edges_for_lp(g, 7);
    for (auto id : kAllTransforms) {
        const auto a_hat = link_prediction_operator(g, split, id);
        EXPECT_EQ(a_hat.matrix(), build_transform(id, Graph::from_edges(40, split.train_edges)).matrix());
    }
    const auto a1 = link_prediction_operator(g, split, TransformId::A1);
    for (auto* held : {&split.val_edges, &split.test_edges})
        for (const auto& e : *held) {
            EXPECT_EQ(a1.at(e.u, e.v), 0.0);
            EXPECT_EQ(a1.at(e.v, e.u), 0.0);
        }
}

TEST(LinkPredictionTest, UntrainedIsChance) {
    std::mt19937_64 rng(2);
    auto g = oracle::random_graph(300, 0.05, rng);
    LinkPredictionSetup s;
    s.model.latent_dim = 1;
    s.train.epochs = 0;
    s.train.threads = 1;
    const auto r = run_link_prediction(g, s);
    EXPECT_NEAR(r.groups[0].metric("auc").values[0], 0.5, 0.1);
}

TEST(LinkPredictionTest, DeterministicAndLearns) {
    const auto g = synthetic::two_block(1);
    LinkPredictionSetup s;
    s.train.epochs = 40;
    s.train.threads = 1;
    s.runs = 2;
    const auto a = run_link_prediction(g, s, "two-block");
    const auto b = run_link_prediction(g, s, "two-block");
    EXPECT_EQ(a.groups[0].metric("auc").values, b.groups[0].metric("auc").values);
    EXPECT_EQ(a.groups[0].metric("ap").values, b.groups[0].metric("ap").values);
    EXPECT_GT(a.groups[0].metric("auc").mean(), 0.65);
}

TEST(LinkPredictionTest, GaeAndDenseReconstruction) {
    const auto g = synthetic::two_block(2, 80, 0.3, 0.02);
    LinkPredictionSetup s;
    s.model.variational = false;
    s.dense_reconstruction = true;
    s.train.epochs = 30;
    s.train.threads = 1;
    const auto r = run_link_prediction(g, s);
    EXPECT_EQ(r.model, "gae");
    EXPECT_GT(r.groups[0].metric("auc").values[0], 0.6);
}

TEST(LinkPredictionTest, DenseLimit) {
    LinkPredictionSetup s;
    s.dense_reconstruction = true;
    std::mt19937_64 rng(3);
    auto g = oracle::random_graph(1001, 0.002, rng);
    EXPECT_THROW(link_prediction_run(g, s, 0), ConfigError);
}

TEST(MissingEdgesTest, GroupsAndFullGraphRun) {
    const auto g = synthetic::feature_block_model(1, 300);
    NodeClassificationSetup s;
    s.runs = 2;
    s.val_count = 60;
    s.test_count = 150;
    s.train.epochs = 30;
    s.train.threads = 1;
    const auto r = run_missing_edges(g, s, "fsbm");
    ASSERT_EQ(r.groups.size(), 4u);
    EXPECT_EQ(r.groups[0].label, "keep=0.25");
    EXPECT_EQ(r.groups[3].label, "keep=1");
    // keep = 1 leaves the graph untouched.
    const auto split = split_nodes(*g.node_labels(), 20, 60, 150, 0);
    EXPECT_EQ(r.groups[3].metric("accuracy").values[1], node_classification_run(g, split, s, 1));
    for (const auto& grp : r.groups)
        for (double a : grp.metric("accuracy").values) EXPECT_GT(a, 1.0 / 3.0);
}

TEST(MissingEdgesTest, NeedsLabels) {
    NodeClassificationSetup s;
    EXPECT_THROW(run_missing_edges(oracle::cycle_graph(5), s), ConfigError);
}
