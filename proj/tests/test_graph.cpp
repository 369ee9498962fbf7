#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "nbe/graph.hpp"
#include "nbe/io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace nbe;

namespace {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

Pairs edge_pairs(const Graph& g) {
    Pairs out;
    for (const auto& e : g.edges()) out.emplace_back(e.u, e.v);
    return out;
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("nbe_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    void write(const std::string& name, const std::string& text) const { std::ofstream(path_ / name) << text; }

private:
    fs::path path_;
};

} // namespace

TEST(GraphTest, FromPairsCanonicalizes) {
    auto g = Graph::from_pairs(3, {{1, 0}, {0, 1}, {2, 1}});
    EXPECT_EQ(g.num_edges(), 2u);
    EXPECT_EQ(edge_pairs(g), (Pairs{{0, 1}, {1, 2}}));
}

TEST(GraphTest, RejectsSelfLoopsAndOutOfRange) {
    EXPECT_THROW(Graph::from_pairs(3, {{1, 1}}), ConfigError);
    EXPECT_THROW(Graph::from_pairs(3, {{0, 3}}), IndexError);
}

TEST(GraphTest, FeatureRowsMustMatchNodeCount) {
    auto g = Graph::from_pairs(3, {});
    EXPECT_THROW(g.set_node_features(DenseMatrix(2, 4)), DimensionError);
    EXPECT_NO_THROW(g.set_node_features(DenseMatrix(3, 4)));
}

TEST(AdjacencyTest, Triangle) {
    auto a = adjacency(oracle::complete_graph(3));
    EXPECT_EQ(a.nnz(), 6u);
    for (auto [i, j] : a.entries()) EXPECT_NE(i, j);
}

TEST(AdjacencyTest, EmptyGraph) { EXPECT_EQ(adjacency(Graph::from_pairs(4, {})).nnz(), 0u); }

TEST(AdjacencyTest, Path3) {
    EXPECT_EQ(adjacency(oracle::path_graph(3)).entries(), (Pairs{{0, 1}, {1, 0}, {1, 2}, {2, 1}}));
}

TEST(AdjacencyTest, FromRowsRejectsAsymmetry) {
    EXPECT_THROW(BinaryAdjacency::from_rows({{1}, {}}), ConfigError);
    EXPECT_THROW(BinaryAdjacency::from_rows({{0}}), ConfigError);
}

TEST(BfsTest, Path3) {
    auto d = bfs_distances(oracle::path_graph(3), 0);
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(*d[0], 0u);
    EXPECT_EQ(*d[1], 1u);
    EXPECT_EQ(*d[2], 2u);
}

TEST(BfsTest, DisconnectedIsUnreachable) {
    auto d = bfs_distances(Graph::from_pairs(2, {}), 0);
    EXPECT_EQ(*d[0], 0u);
    EXPECT_FALSE(d[1].has_value());
}

TEST(BfsTest, Cycle5MatchesFloydWarshall) {
    auto g = oracle::cycle_graph(5);
    auto fw = oracle::floyd_warshall(g);
    for (std::size_t s = 0; s < 5; ++s) {
        auto d = bfs_distances(g, s);
        std::vector<std::size_t> got;
        for (std::size_t v = 0; v < 5; ++v) {
            EXPECT_EQ(static_cast<int>(*d[v]), fw[s][v]);
            got.push_back(*d[v]);
        }
        std::sort(got.begin(), got.end());
        EXPECT_EQ(got, (std::vector<std::size_t>{0, 1, 1, 2, 2}));
    }
}

TEST(BfsTest, SourceOutOfRange) { EXPECT_THROW(bfs_distances(oracle::path_graph(3), 3), IndexError); }

TEST(BfsTest, PropertyEdgesChangeDistanceByAtMostOne) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto g = oracle::random_graph(2 + trial % 12, 0.25, rng);
        auto fw = oracle::floyd_warshall(g);
        for (std::size_t s = 0; s < g.num_nodes(); ++s) {
            auto d = bfs_distances(g, s);
            for (std::size_t v = 0; v < g.num_nodes(); ++v) {
                if (fw[s][v] == oracle::kInf) {
                    EXPECT_FALSE(d[v].has_value());
                } else {
                    EXPECT_EQ(static_cast<int>(d[v].value()), fw[s][v]);
                }
            }
            for (const auto& e : g.edges()) {
                ASSERT_EQ(d[e.u].has_value(), d[e.v].has_value());
                if (d[e.u]) {
                    const auto a = static_cast<long>(*d[e.u]), b = static_cast<long>(*d[e.v]);
                    EXPECT_LE(std::labs(a - b), 1);
                }
            }
        }
    }
}

TEST(EdgeListTest, BasicPairs) {
    std::istringstream in("0 1\n1 2\n");
    auto g = read_edge_list(in);
    EXPECT_EQ(g.num_nodes(), 3u);
    EXPECT_EQ(edge_pairs(g), (Pairs{{0, 1}, {1, 2}}));
}

TEST(EdgeListTest, SelfLoopDroppedWithHeader) {
    std::istringstream in("n=3\n2 2\n");
    auto g = read_edge_list(in);
    EXPECT_EQ(g.num_nodes(), 3u);
    EXPECT_EQ(g.num_edges(), 0u);
}

TEST(EdgeListTest, DuplicatesMerged) {
    std::istringstream in("0 1\n1 0\n");
    EXPECT_EQ(edge_pairs(read_edge_list(in)), (Pairs{{0, 1}}));
}

TEST(EdgeListTest, EmptyWithoutHeaderFails) {
    std::istringstream in("\n");
    try {
        read_edge_list(in);
        FAIL() << "expected LoadError";
    } catch (const LoadError& e) {
        EXPECT_NE(std::string(e.what()).find("cannot infer node count"), std::string::npos);
    }
}

TEST(EdgeListTest, NegativeIndexIsParseErrorWithLine) {
    std::istringstream in("0 1\n-1 2\n");
    try {
        read_edge_list(in, "edges.txt");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(EdgeListTest, RoundTripProperty) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto g = oracle::random_graph(1 + trial % 15, 0.3, rng);
        std::stringstream buf;
        write_edge_list(buf, g);
        auto back = read_edge_list(buf);
        EXPECT_EQ(back.num_nodes(), g.num_nodes());
        EXPECT_EQ(back.edges(), g.edges());
    }
}

TEST(TuLoaderTest, SingleGraphReindexed) {
    TempDir dir;
    dir.write("T_A.txt", "1, 2\n2, 3\n");
    dir.write("T_graph_indicator.txt", "1\n1\n1\n");
    dir.write("T_graph_labels.txt", "1\n");
    auto ds = load_tu_dataset(dir.path(), "T");
    ASSERT_EQ(ds.graphs.size(), 1u);
    EXPECT_EQ(ds.graphs[0].num_nodes(), 3u);
    EXPECT_EQ(edge_pairs(ds.graphs[0]), (Pairs{{0, 1}, {1, 2}}));
    EXPECT_EQ(ds.num_classes, 1);
    EXPECT_EQ(ds.feature_dim, 0u);
}

TEST(TuLoaderTest, SymmetricEntriesDeduplicated) {
    TempDir dir;
    dir.write("T_A.txt", "1, 2\n2, 1\n");
    dir.write("T_graph_indicator.txt", "1\n1\n");
    dir.write("T_graph_labels.txt", "-1\n");
    auto ds = load_tu_dataset(dir.path(), "T");
    EXPECT_EQ(edge_pairs(ds.graphs[0]), (Pairs{{0, 1}}));
}

TEST(TuLoaderTest, LabelsRemappedAndFeaturesConcatenated) {
    TempDir dir;
    // Two graphs: nodes 1-2 in graph 1, nodes 3-5 in graph 2.
    dir.write("T_A.txt", "1,2\n2,1\n3,4\n4,5\n5,4\n4,3\n");
    dir.write("T_graph_indicator.txt", "1\n1\n2\n2\n2\n");
    dir.write("T_graph_labels.txt", "1\n-1\n");
    dir.write("T_node_labels.txt", "3\n0\n0\n5\n3\n");
    dir.write("T_node_attributes.txt", "0.5, 1.5\n1,2\n3,4\n5,6\n7,8\n");
    auto ds = load_tu_dataset(dir.path(), "T");
    ASSERT_EQ(ds.graphs.size(), 2u);
    EXPECT_EQ(ds.num_classes, 2);
    EXPECT_EQ(*ds.graphs[0].graph_label(), 1); // raw 1 -> 1, raw -1 -> 0
    EXPECT_EQ(*ds.graphs[1].graph_label(), 0);
    EXPECT_EQ(ds.feature_dim, 3u + 2u); // distinct node labels {0,3,5} then 2 attributes
    const auto& x = *ds.graphs[1].node_features();
    ASSERT_EQ(x.rows, 3u);
    // node 5 (local 2) has label 3 -> one-hot column 1, attributes (7, 8)
    EXPECT_EQ(x(2, 0), 0.0);
    EXPECT_EQ(x(2, 1), 1.0);
    EXPECT_EQ(x(2, 2), 0.0);
    EXPECT_EQ(x(2, 3), 7.0);
    EXPECT_EQ(x(2, 4), 8.0);
    EXPECT_EQ(edge_pairs(ds.graphs[1]), (Pairs{{0, 1}, {1, 2}}));
    // Node count conservation against the indicator file.
    EXPECT_EQ(ds.graphs[0].num_nodes() + ds.graphs[1].num_nodes(), 5u);
}

TEST(TuLoaderTest, MissingMandatoryFileNamed) {
    TempDir dir;
    dir.write("T_A.txt", "1, 2\n");
    dir.write("T_graph_indicator.txt", "1\n1\n");
    try {
        load_tu_dataset(dir.path(), "T");
        FAIL() << "expected LoadError";
    } catch (const LoadError& e) {
        EXPECT_NE(std::string(e.what()).find("T_graph_labels.txt"), std::string::npos);
    }
}

TEST(TuLoaderTest, OutOfRangeNodeReportsLine) {
    TempDir dir;
    dir.write("T_A.txt", "1, 2\n2, 9\n");
    dir.write("T_graph_indicator.txt", "1\n1\n");
    dir.write("T_graph_labels.txt", "0\n");
    try {
        load_tu_dataset(dir.path(), "T");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(TuLoaderTest, NonIntegerLabelIsParseError) {
    TempDir dir;
    dir.write("T_A.txt", "1, 2\n");
    dir.write("T_graph_indicator.txt", "1\n1\n");
    dir.write("T_graph_labels.txt", "x\n");
    EXPECT_THROW(load_tu_dataset(dir.path(), "T"), ParseError);
}

TEST(TuLoaderTest, LoadedAdjacencyIsSymmetricWithZeroDiagonal) {
    TempDir dir;
    dir.write("T_A.txt", "1,2\n2,3\n3,1\n4,5\n");
    dir.write("T_graph_indicator.txt", "1\n1\n1\n2\n2\n");
    dir.write("T_graph_labels.txt", "0\n1\n");
    for (const auto& g : load_tu_dataset(dir.path(), "T").graphs) {
        auto a = adjacency(g);
        for (auto [i, j] : a.entries()) {
            EXPECT_NE(i, j);
            EXPECT_TRUE(a.contains(j, i));
        }
    }
}

TEST(DegreeFeaturesTest, OneHotCapped) {
    Dataset ds;
    ds.graphs.push_back(oracle::star_graph(4));
    add_degree_features(ds, 2);
    EXPECT_EQ(ds.feature_dim, 3u);
    const auto& x = *ds.graphs[0].node_features();
    EXPECT_EQ(x(0, 2), 1.0); // degree 4 capped into last column
    EXPECT_EQ(x(1, 1), 1.0);
}

TEST(CitationLoaderTest, ReadsContentAndCites) {
    TempDir dir;
    dir.write("c.content", "10 1 0 A\n20 0 1 B\n30 1 1 A\n");
    dir.write("c.cites", "10 20\n20 30\n99 10\n");
    auto g = load_citation_graph(dir.path(), "c");
    EXPECT_EQ(g.num_nodes(), 3u);
    EXPECT_EQ(edge_pairs(g), (Pairs{{0, 1}, {1, 2}}));
    EXPECT_EQ(*g.node_labels(), (std::vector<int>{0, 1, 0}));
    EXPECT_EQ(g.node_features()->cols, 2u);
}
