// nbe: transform graphs, run experiment configs, compare reports.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "nbe/experiments.hpp"

namespace fs = std::filesystem;
using namespace nbe;

namespace {

int do_transform(const std::string& input, const std::string& id, const std::string& output, bool normalized,
                 const std::string& degrees) {
    const Graph g = load_edge_list(input);
    const auto m = transform_matrix(g, parse_transform(id), normalized, parse_degree_source(degrees));
    if (output == "-") {
        write_triplets(std::cout, m);
        return 0;
    }
    std::ofstream out(output);
    if (!out) throw LoadError("cannot write " + output);
    write_triplets(out, m);
    if (!out) throw LoadError("write failed for " + output);
    return 0;
}

int do_run(const std::string& config_path, std::optional<long long> seed, bool single_thread,
           const std::string& out_dir) {
    auto cfg = ExperimentConfig::load(config_path);
    if (seed) cfg.set("seed", std::to_string(*seed));
    const auto result = run_experiment(cfg, single_thread ? 1 : 0);
    fs::create_directories(out_dir);
    const auto stem = fs::path(config_path).stem().string();
    const auto csv_path = fs::path(out_dir) / (stem + ".csv");
    const auto json_path = fs::path(out_dir) / (stem + ".json");
    write_text(csv_path, result.csv);
    write_text(json_path, to_json(result.report).dump(2) + "\n");
    std::cout << summary_table(result.report);
    std::cout << "fingerprint " << result.report.fingerprint << "\n";
    std::cout << "wrote " << csv_path.string() << " and " << json_path.string() << "\n";
    return 0;
}

int do_compare(const std::vector<std::string>& paths, const std::string& csv_out) {
    std::vector<RunReport> reports;
    std::vector<std::string> names;
    for (const auto& p : paths) {
        reports.push_back(load_report(p));
        std::string name = fs::path(p).stem().string();
        // Same stem in two directories: fall back to the full path.
        if (std::find(names.begin(), names.end(), name) != names.end()) name = p;
        names.push_back(name);
    }
    const auto cmp = compare_reports(reports, names);
    std::cout << cmp.text;
    if (!csv_out.empty()) write_text(csv_out, cmp.csv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"neighborhood-enlarged GNN experiments"};
    app.require_subcommand(1);

    auto* tr = app.add_subcommand("transform", "write a transformed adjacency as sorted 'i j value' triplets");
    std::string input, id, output = "-", degrees = "operand";
    bool normalized = false;
    tr->add_option("input", input, "edge-list file")->required();
    tr->add_option("transform", id, "a1 | a1+a2 | a^2 | a^2+2i")->required();
    tr->add_option("output", output, "output file, '-' for stdout");
    tr->add_flag("--normalized", normalized, "write the normalized propagation matrix");
    tr->add_option("--degree-source", degrees, "operand | a1 (with --normalized)");

    auto* run = app.add_subcommand("run", "execute an experiment config");
    std::string config_path, out_dir = "results";
    std::optional<long long> seed;
    bool single_thread = false;
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_flag("--single-thread", single_thread, "run folds and repeats sequentially");
    run->add_option("--out-dir", out_dir, "report directory");

    auto* cmp = app.add_subcommand("compare", "side-by-side table of two or more reports");
    std::vector<std::string> reports;
    std::string csv_out;
    cmp->add_option("reports", reports, "JSON reports; deltas are against the first")->required()->expected(2, -1);
    cmp->add_option("--csv", csv_out, "also write the table as CSV");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*tr) return do_transform(input, id, output, normalized, degrees);
        if (*run) return do_run(config_path, seed, single_thread, out_dir);
        return do_compare(reports, csv_out);
    } catch (const std::exception& e) {
        std::cerr << "nbe: " << e.what() << "\n";
        return 1;
    }
}
