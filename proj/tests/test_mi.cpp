#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nbe/mi.hpp"
#include "nbe/synthetic.hpp"
#include "oracles.hpp"

using namespace nbe;

namespace {

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

} // namespace

TEST(BinnedMiTest, SelfInformationIsLogBins) {
    std::mt19937_64 rng(1);
    auto x = uniform(1000, rng);
    const auto e = binned_mi(x, x, 8);
    EXPECT_NEAR(e.value, std::log(8.0), 0.05 * std::log(8.0));
    EXPECT_EQ(e.bins, 8u);
    EXPECT_EQ(e.sample_count, 1000u);
}

TEST(BinnedMiTest, IndependentIsSmall) {
    std::mt19937_64 rng(2);
    auto x = uniform(1000, rng), y = uniform(1000, rng);
    EXPECT_LT(binned_mi(x, y, 8).value, 0.05);
}

TEST(BinnedMiTest, ConstantIsZero) {
    std::mt19937_64 rng(3);
    auto x = uniform(100, rng);
    std::vector<double> y(100, 2.5);
    EXPECT_EQ(binned_mi(x, y, 8).value, 0.0);
    EXPECT_EQ(binned_mi(y, x, 8).value, 0.0);
}

TEST(BinnedMiTest, Errors) {
    std::vector<double> x(31, 0.0);
    EXPECT_THROW(binned_mi(x, x, 8), ConfigError);
    try {
        binned_mi(x, x, 8);
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("32"), std::string::npos);
    }
    std::vector<double> y(40, 0.0);
    EXPECT_THROW(binned_mi(y, y, 1), ConfigError);
    EXPECT_THROW(binned_mi(y, std::vector<double>(39, 0.0), 2), DimensionError);
}

TEST(BinnedMiTest, BoundsSymmetryAndMonotoneInvariance) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t bins = 2 + rng() % 10;
        const std::size_t n = 4 * bins + rng() % 300;
        const double coupling = static_cast<double>(rng() % 5) / 2.0;
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = std::round(noise(rng) * 4.0) / 4.0; // ties
            y[i] = coupling * x[i] + noise(rng);
        }
        const double v = binned_mi(x, y, bins).value;
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, std::log(static_cast<double>(bins)));
        EXPECT_EQ(v, binned_mi(y, x, bins).value);
        std::vector<double> ex(n), ax(n);
        for (std::size_t i = 0; i < n; ++i) {
            ex[i] = std::exp(x[i]);
            ax[i] = 5.0 * x[i] + 1.0;
        }
        EXPECT_EQ(binned_mi(ex, y, bins).value, v);
        EXPECT_EQ(binned_mi(ax, y, bins).value, v);
    }
}

TEST(BinnedMiTest, MatchesDirectHistogram) {
    // Distinct values: bins are rank * bins / n, computed here independently.
    std::mt19937_64 rng(5);
    auto x = uniform(200, rng), y = uniform(200, rng);
    for (std::size_t i = 0; i < 200; ++i) y[i] = 0.5 * y[i] + x[i];
    auto rank_bins = [](const std::vector<double>& v) {
        std::vector<std::size_t> b(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::size_t r = 0;
            for (double w : v) r += w < v[i];
            b[i] = r * 5 / v.size();
        }
        return b;
    };
    const auto bx = rank_bins(x), by = rank_bins(y);
    double joint[5][5] = {};
    for (std::size_t i = 0; i < 200; ++i) joint[bx[i]][by[i]] += 1.0 / 200.0;
    double mi = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            if (joint[i][j] > 0) mi += joint[i][j] * std::log(joint[i][j] / (0.2 * 0.2));
    EXPECT_NEAR(binned_mi(x, y, 5).value, mi, 1e-12);
}

TEST(ProbeTest, ZeroFeaturesGiveZero) {
    std::mt19937_64 rng(6);
    Dataset ds;
    ds.num_classes = 2;
    ds.feature_dim = 3;
    for (int i = 0; i < 20; ++i) {
        auto g = oracle::random_graph(6, 0.5, rng);
        g.set_node_features(DenseMatrix(6, 3));
        g.set_graph_label(i % 2);
        ds.graphs.push_back(g);
    }
    auto model = make_classifier({.kind = ModelKind::Gin0, .input_dim = 3, .hidden_dim = 8, .num_layers = 3}, rng);
    for (auto mode : {ProbeMode::D1, ProbeMode::D1D2})
        for (const auto& row : neighborhood_mi_probe(ds, model, mode, {.bins = 4, .coordinates = 4}))
            EXPECT_EQ(row.mean_mi, 0.0);
}

TEST(ProbeTest, DiameterOneGraphsModesAgree) {
    std::mt19937_64 rng(7);
    auto ds = synthetic::triangles(3, 30);
    auto model = make_classifier({.kind = ModelKind::Gcn, .input_dim = 3, .hidden_dim = 8, .num_layers = 2}, rng);
    const auto a = neighborhood_mi_probe(ds, model, ProbeMode::D1, {.bins = 4, .coordinates = 6, .seed = 2});
    const auto b = neighborhood_mi_probe(ds, model, ProbeMode::D1D2, {.bins = 4, .coordinates = 6, .seed = 2});
    ASSERT_EQ(a.size(), 2u);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].mean_mi, b[k].mean_mi);
        EXPECT_EQ(a[k].samples, 90u);
    }
}

TEST(ProbeTest, FiniteAndBounded) {
    std::mt19937_64 rng(8);
    auto ds = synthetic::has_triangle(1);
    for (auto& g : ds.graphs) {
        DenseMatrix x(6, 2);
        for (double& v : x.data) v = std::uniform_real_distribution<double>(0, 1)(rng);
        g.set_node_features(x);
    }
    ds.feature_dim = 2;
    auto model = make_classifier({.kind = ModelKind::GinEps, .input_dim = 2, .hidden_dim = 8, .num_layers = 3}, rng);
    for (auto mode : {ProbeMode::D1, ProbeMode::D1D2}) {
        const auto rows = neighborhood_mi_probe(ds, model, mode);
        ASSERT_EQ(rows.size(), 3u);
        for (const auto& r : rows) {
            EXPECT_TRUE(std::isfinite(r.mean_mi));
            EXPECT_GE(r.mean_mi, 0.0);
            EXPECT_LE(r.mean_mi, std::log(8.0));
        }
    }
    const auto csv = probe_csv(neighborhood_mi_probe(ds, model, ProbeMode::D1));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "layer,mode,mean_mi,coordinates,samples");
}

TEST(ProbeTest, AllEmptyNeighborhoodsIsError) {
    std::mt19937_64 rng(9);
    Dataset ds;
    ds.feature_dim = 1;
    for (int i = 0; i < 3; ++i) {
        auto g = Graph::from_pairs(4, {});
        g.set_node_features(DenseMatrix(4, 1));
        g.set_graph_label(0);
        ds.graphs.push_back(g);
    }
    auto model = make_classifier({.kind = ModelKind::Gcn, .input_dim = 1, .hidden_dim = 4, .num_layers = 1}, rng);
    EXPECT_THROW(neighborhood_mi_probe(ds, model, ProbeMode::D1), ConfigError);
}
