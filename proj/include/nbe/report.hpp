#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "metrics.hpp"

namespace nbe {

/// One metric over repeated runs (folds or seeds).
struct MetricSeries {
    std::string name;
    std::vector<double> values;

    double mean() const { return mean_of(values); }
    double stddev() const { return std_of(values); }
};

/// A block of rows sharing a setting, e.g. one keep fraction. Every series
/// has one value per row.
struct ReportGroup {
    std::string label;
    std::vector<std::string> rows;
    std::vector<MetricSeries> metrics;

    const MetricSeries& metric(const std::string& name) const {
        for (const auto& m : metrics)
            if (m.name == name) return m;
        throw ConfigError("report group '" + label + "' has no metric '" + name + "'");
    }
};

struct RunReport {
    std::string task;
    std::string dataset;
    std::string model;
    std::string transform;
    std::uint64_t seed = 0;
    std::vector<ReportGroup> groups;
    std::map<std::string, std::string> config; ///< resolved configuration
    std::string fingerprint;
    double wall_clock_seconds = 0.0;

    const ReportGroup& group(const std::string& label) const {
        for (const auto& g : groups)
            if (g.label == label) return g;
        throw ConfigError("report has no group '" + label + "'");
    }
};

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

} // namespace detail

/// Exact decimal for per-run values, fixed 4 decimals for the summary.
inline std::string format_value(double v) { return detail::fmt("%.17g", v); }
inline std::string format_summary(const MetricSeries& m) {
    return detail::fmt("%.4f", m.mean()) + "±" + detail::fmt("%.4f", m.stddev());
}

/// CSV: `group,row,<metric>...`, one line per run then a `summary` line
/// per group holding mean±std. Wall clock is left out so reruns compare
/// byte for byte.
inline std::string to_csv(const RunReport& r) {
    std::ostringstream out;
    out << "group,row";
    if (!r.groups.empty())
        for (const auto& m : r.groups.front().metrics) out << ',' << m.name;
    out << '\n';
    for (const auto& g : r.groups) {
        for (std::size_t i = 0; i < g.rows.size(); ++i) {
            out << g.label << ',' << g.rows[i];
            for (const auto& m : g.metrics) out << ',' << format_value(m.values.at(i));
            out << '\n';
        }
        out << g.label << ",summary";
        for (const auto& m : g.metrics) out << ',' << format_summary(m);
        out << '\n';
    }
    return out.str();
}

inline nlohmann::json to_json(const RunReport& r) {
    nlohmann::json j;
    j["task"] = r.task;
    j["dataset"] = r.dataset;
    j["model"] = r.model;
    j["transform"] = r.transform;
    j["seed"] = r.seed;
    j["fingerprint"] = r.fingerprint;
    j["wall_clock_seconds"] = r.wall_clock_seconds;
    j["config"] = r.config;
    j["groups"] = nlohmann::json::array();
    for (const auto& g : r.groups) {
        nlohmann::json jg;
        jg["label"] = g.label;
        jg["rows"] = g.rows;
        jg["metrics"] = nlohmann::json::array();
        for (const auto& m : g.metrics)
            jg["metrics"].push_back({{"name", m.name}, {"values", m.values}, {"mean", m.mean()}, {"std", m.stddev()}});
        j["groups"].push_back(jg);
    }
    return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
    try {
        RunReport r;
        r.task = j.at("task");
        r.dataset = j.at("dataset");
        r.model = j.at("model");
        r.transform = j.at("transform");
        r.seed = j.at("seed");
        r.fingerprint = j.at("fingerprint");
        r.wall_clock_seconds = j.at("wall_clock_seconds");
        r.config = j.at("config").get<std::map<std::string, std::string>>();
        for (const auto& jg : j.at("groups")) {
            ReportGroup g;
            g.label = jg.at("label");
            g.rows = jg.at("rows").get<std::vector<std::string>>();
            for (const auto& jm : jg.at("metrics"))
                g.metrics.push_back({jm.at("name"), jm.at("values").get<std::vector<double>>()});
            r.groups.push_back(std::move(g));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("<report>", 0, std::string("malformed report: ") + e.what());
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write " + path.string());
    out << text;
}

inline RunReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open report " + path.string());
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), 0, e.what());
    } catch (const ParseError& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

/// Plain-text table: one line per group and metric with mean±std.
inline std::string summary_table(const RunReport& r) {
    std::ostringstream out;
    out << r.task << "  dataset=" << r.dataset << "  model=" << r.model << "  transform=" << r.transform
        << "  seed=" << r.seed << '\n';
    for (const auto& g : r.groups)
        for (const auto& m : g.metrics) {
            char line[160];
            std::snprintf(line, sizeof line, "  %-14s %-10s %s  (n=%zu)\n", g.label.c_str(), m.name.c_str(),
                          format_summary(m).c_str(), m.values.size());
            out << line;
        }
    return out.str();
}

} // namespace nbe
