#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nbe/error.hpp"
#include "nbe/graph.hpp"

namespace nbe {

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; };
    while (i < line.size()) {
        while (i < line.size() && is_sep(line[i])) ++i;
        const std::size_t start = i;
        while (i < line.size() && !is_sep(line[i])) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

inline long long parse_int(std::string_view tok, const std::string& file, std::size_t line) {
    long long v = 0;
    const auto* first = tok.data();
    if (!tok.empty() && tok.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw ParseError(file, line, "expected integer, got '" + std::string(tok) + "'");
    }
    return v;
}

inline double parse_real(std::string_view tok, const std::string& file, std::size_t line) {
    // from_chars for double is unavailable on some toolchains; strtod is exact enough here.
    const std::string s(tok);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ParseError(file, line, "expected real number, got '" + s + "'");
    }
    return v;
}

/// Reads non-blank lines, keeping their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    std::vector<std::pair<std::size_t, std::string>> out;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
        out.emplace_back(no, line);
    }
    return out;
}

inline std::vector<long long> read_int_column(const std::filesystem::path& path) {
    std::vector<long long> out;
    for (const auto& [no, line] : read_lines(path)) {
        auto f = split_fields(line);
        if (f.size() != 1) throw ParseError(path.string(), no, "expected exactly one integer per line");
        out.push_back(parse_int(f[0], path.string(), no));
    }
    return out;
}

} // namespace detail

/// Loads a dataset in the TU benchmark multi-file text format.
///
/// Node labels become one-hot features; continuous attributes are appended
/// after the one-hot block. Graph labels are remapped to 0..C-1 in ascending
/// order of the raw values.
inline Dataset load_tu_dataset(const std::filesystem::path& dir, const std::string& name) {
    namespace fs = std::filesystem;
    auto file = [&](const char* suffix) { return dir / (name + suffix); };
    for (const char* mandatory : {"_A.txt", "_graph_indicator.txt", "_graph_labels.txt"}) {
        if (!fs::exists(file(mandatory))) throw LoadError("missing TU file " + file(mandatory).string());
    }

    const auto indicator = detail::read_int_column(file("_graph_indicator.txt"));
    const std::size_t total_nodes = indicator.size();

    // Graph ids in ascending order; nodes keep their file order within a graph.
    std::map<long long, std::size_t> graph_index;
    for (long long gid : indicator) graph_index.emplace(gid, 0);
    std::size_t next = 0;
    for (auto& [gid, idx] : graph_index) idx = next++;
    const std::size_t num_graphs = graph_index.size();

    std::vector<std::size_t> node_graph(total_nodes), node_local(total_nodes);
    std::vector<std::size_t> graph_sizes(num_graphs, 0);
    for (std::size_t v = 0; v < total_nodes; ++v) {
        const std::size_t g = graph_index.at(indicator[v]);
        node_graph[v] = g;
        node_local[v] = graph_sizes[g]++;
    }

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> graph_pairs(num_graphs);
    {
        const auto path = file("_A.txt");
        for (const auto& [no, line] : detail::read_lines(path)) {
            auto f = detail::split_fields(line);
            if (f.size() != 2) throw ParseError(path.string(), no, "expected two node indices");
            const long long a = detail::parse_int(f[0], path.string(), no);
            const long long b = detail::parse_int(f[1], path.string(), no);
            if (a < 1 || b < 1 || static_cast<std::size_t>(a) > total_nodes ||
                static_cast<std::size_t>(b) > total_nodes) {
                throw ParseError(path.string(), no,
                                 "node index out of range [1, " + std::to_string(total_nodes) + "]");
            }
            const std::size_t u = static_cast<std::size_t>(a - 1), v = static_cast<std::size_t>(b - 1);
            if (node_graph[u] != node_graph[v]) throw ParseError(path.string(), no, "edge joins two graphs");
            if (u == v) continue;
            graph_pairs[node_graph[u]].emplace_back(node_local[u], node_local[v]);
        }
    }

    const auto raw_labels = detail::read_int_column(file("_graph_labels.txt"));
    if (raw_labels.size() != num_graphs) {
        throw ParseError(file("_graph_labels.txt").string(), raw_labels.size(),
                         "expected " + std::to_string(num_graphs) + " graph labels, found " +
                             std::to_string(raw_labels.size()));
    }
    std::map<long long, int> label_map;
    for (long long l : raw_labels) label_map.emplace(l, 0);
    int next_label = 0;
    for (auto& [raw, idx] : label_map) idx = next_label++;

    std::vector<long long> node_labels;
    std::map<long long, std::size_t> node_label_map;
    if (fs::exists(file("_node_labels.txt"))) {
        node_labels = detail::read_int_column(file("_node_labels.txt"));
        if (node_labels.size() != total_nodes) {
            throw ParseError(file("_node_labels.txt").string(), node_labels.size(), "node label count mismatch");
        }
        for (long long l : node_labels) node_label_map.emplace(l, 0);
        std::size_t k = 0;
        for (auto& [raw, idx] : node_label_map) idx = k++;
    }

    std::vector<std::vector<double>> attributes;
    if (fs::exists(file("_node_attributes.txt"))) {
        const auto path = file("_node_attributes.txt");
        for (const auto& [no, line] : detail::read_lines(path)) {
            std::vector<double> row;
            for (auto tok : detail::split_fields(line)) row.push_back(detail::parse_real(tok, path.string(), no));
            if (!attributes.empty() && row.size() != attributes.front().size()) {
                throw ParseError(path.string(), no, "inconsistent attribute width");
            }
            attributes.push_back(std::move(row));
        }
        if (attributes.size() != total_nodes) {
            throw ParseError(path.string(), attributes.size(), "node attribute count mismatch");
        }
    }

    const std::size_t onehot = node_label_map.size();
    const std::size_t attr_dim = attributes.empty() ? 0 : attributes.front().size();

    Dataset ds;
    ds.name = name;
    ds.num_classes = next_label;
    ds.feature_dim = onehot + attr_dim;
    ds.graphs.reserve(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        ds.graphs.push_back(Graph::from_pairs(graph_sizes[g], graph_pairs[g]));
    }
    if (ds.feature_dim > 0 || onehot > 0) {
        std::vector<DenseMatrix> feats;
        std::vector<std::vector<int>> labels(num_graphs);
        feats.reserve(num_graphs);
        for (std::size_t g = 0; g < num_graphs; ++g) feats.emplace_back(graph_sizes[g], ds.feature_dim);
        for (std::size_t v = 0; v < total_nodes; ++v) {
            auto& x = feats[node_graph[v]];
            const std::size_t r = node_local[v];
            if (onehot > 0) {
                x(r, node_label_map.at(node_labels[v])) = 1.0;
                labels[node_graph[v]].push_back(static_cast<int>(node_labels[v]));
            }
            for (std::size_t c = 0; c < attr_dim; ++c) x(r, onehot + c) = attributes[v][c];
        }
        for (std::size_t g = 0; g < num_graphs; ++g) {
            ds.graphs[g].set_node_features(std::move(feats[g]));
            if (onehot > 0) ds.graphs[g].set_node_labels(std::move(labels[g]));
        }
    }
    for (std::size_t g = 0; g < num_graphs; ++g) ds.graphs[g].set_graph_label(label_map.at(raw_labels[g]));
    return ds;
}

/// Reads a whitespace-separated 0-based edge list with an optional
/// `n=<count>` header. Self-loops are dropped and duplicates merged.
inline Graph read_edge_list(std::istream& in, const std::string& source = "<stream>") {
    std::optional<std::size_t> header_n;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t max_index = 0;
    bool any = false;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::string_view view(line);
        view.remove_prefix(first);
        if (view.starts_with("n=")) {
            if (any || header_n) throw ParseError(source, no, "header must be the first line");
            const long long n = detail::parse_int(detail::split_fields(view.substr(2)).at(0), source, no);
            if (n < 0) throw ParseError(source, no, "negative node count");
            header_n = static_cast<std::size_t>(n);
            continue;
        }
        auto f = detail::split_fields(view);
        if (f.size() != 2) throw ParseError(source, no, "expected 'i j'");
        const long long a = detail::parse_int(f[0], source, no);
        const long long b = detail::parse_int(f[1], source, no);
        if (a < 0 || b < 0) throw ParseError(source, no, "negative node index");
        const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
        if (header_n && (ua >= *header_n || ub >= *header_n)) {
            throw ParseError(source, no, "node index exceeds header n=" + std::to_string(*header_n));
        }
        max_index = std::max({max_index, ua, ub});
        any = true;
        if (ua != ub) pairs.emplace_back(ua, ub);
    }
    if (!header_n && !any) throw LoadError(source + ": cannot infer node count");
    const std::size_t n = header_n ? *header_n : max_index + 1;
    return Graph::from_pairs(n, pairs);
}

inline Graph load_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    return read_edge_list(in, path.string());
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
    out << "n=" << g.num_nodes() << '\n';
    for (const auto& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

inline void save_edge_list(const std::filesystem::path& path, const Graph& g) {
    std::ofstream out(path);
    if (!out) throw LoadError("cannot write " + path.string());
    write_edge_list(out, g);
}

/// Loads a citation graph in the raw Planetoid layout: `<name>.content`
/// (id, features..., class string) and `<name>.cites` (id pairs). Citations
/// that reference unknown ids are skipped.
inline Graph load_citation_graph(const std::filesystem::path& dir, const std::string& name) {
    const auto content = dir / (name + ".content");
    const auto cites = dir / (name + ".cites");
    if (!std::filesystem::exists(content)) throw LoadError("missing citation file " + content.string());
    if (!std::filesystem::exists(cites)) throw LoadError("missing citation file " + cites.string());

    std::map<std::string, std::size_t> ids;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> classes;
    for (const auto& [no, line] : detail::read_lines(content)) {
        std::istringstream ss(line);
        std::vector<std::string> tok;
        for (std::string t; ss >> t;) tok.push_back(t);
        if (tok.size() < 2) throw ParseError(content.string(), no, "expected id, features and class");
        std::vector<double> row;
        for (std::size_t i = 1; i + 1 < tok.size(); ++i) row.push_back(detail::parse_real(tok[i], content.string(), no));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(content.string(), no, "inconsistent feature width");
        }
        if (!ids.emplace(tok.front(), rows.size()).second) throw ParseError(content.string(), no, "duplicate id");
        rows.push_back(std::move(row));
        classes.push_back(tok.back());
    }
    std::map<std::string, int> class_map;
    for (const auto& c : classes) class_map.emplace(c, 0);
    int k = 0;
    for (auto& [c, idx] : class_map) idx = k++;

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& [no, line] : detail::read_lines(cites)) {
        std::istringstream ss(line);
        std::string a, b;
        if (!(ss >> a >> b)) throw ParseError(cites.string(), no, "expected two ids");
        auto ia = ids.find(a), ib = ids.find(b);
        if (ia == ids.end() || ib == ids.end() || ia->second == ib->second) continue;
        pairs.emplace_back(ia->second, ib->second);
    }
    Graph g = Graph::from_pairs(rows.size(), pairs);
    DenseMatrix x(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < x.cols; ++c) x(r, c) = rows[r][c];
    g.set_node_features(std::move(x));
    std::vector<int> labels;
    for (const auto& c : classes) labels.push_back(class_map.at(c));
    g.set_node_labels(std::move(labels));
    return g;
}

/// Replaces missing node features with one-hot degree encodings, capping
/// degrees at `max_degree` (the last column collects all larger degrees).
inline void add_degree_features(Dataset& ds, std::size_t max_degree) {
    if (ds.feature_dim > 0) return;
    ds.feature_dim = max_degree + 1;
    for (auto& g : ds.graphs) {
        DenseMatrix x(g.num_nodes(), max_degree + 1);
        std::vector<std::size_t> deg(g.num_nodes(), 0);
        for (const auto& e : g.edges()) {
            ++deg[e.u];
            ++deg[e.v];
        }
        for (std::size_t v = 0; v < g.num_nodes(); ++v) x(v, std::min(deg[v], max_degree)) = 1.0;
        g.set_node_features(std::move(x));
    }
}

} // namespace nbe
