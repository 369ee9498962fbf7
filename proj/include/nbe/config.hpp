#pragma once

// Flat experiment configuration: `key = value` lines, `#` starts a comment.
// Every key is checked against a table; unknown keys and keys that do not
// apply to the chosen task are errors.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace nbe {

inline const std::vector<std::string>& known_tasks() {
    static const std::vector<std::string> tasks{"graph-classification", "link-prediction", "missing-edges",
                                                "transform-ablation", "mi-probe"};
    return tasks;
}

namespace detail {

struct KeySpec {
    const char* name;
    const char* tasks; ///< space-separated task ids, or "*"
    /// Default per task: "task:value" entries separated by '|', with "*" as
    /// the fallback. Empty means the key is required when it applies.
    const char* defaults;
    const char* help;
};

// clang-format off
inline const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> keys{
        {"task", "*", "", "experiment family"},
        {"dataset", "*", "", "dataset name (TU name, citation name, or synthetic generator)"},
        {"source", "*", "*:synthetic", "tu | citation | edge-list | synthetic"},
        {"path", "*", "*:", "dataset directory or edge-list file; relative to the config file"},
        {"model", "*", "graph-classification:gin-0|link-prediction:vgae|missing-edges:gcn|transform-ablation:gin-0|mi-probe:gcn", "gcn | gin-0 | gin-eps | vgae | gae"},
        {"transform", "graph-classification link-prediction missing-edges mi-probe", "*:a1", "a1 | a1+a2 | a^2 | a^2+2i"},
        {"degree_source", "*", "*:operand", "operand | a1"},
        {"gin_injection", "graph-classification transform-ablation mi-probe", "*:neighbor-set", "neighbor-set | normalized"},
        {"seed", "*", "*:0", "master seed"},
        {"epochs", "*", "graph-classification:350|transform-ablation:350|*:200", "training epochs"},
        {"patience", "*", "*:50", "early-stopping patience in epochs (0 = off)"},
        {"fixed_epochs", "*", "*:false", "report the last epoch instead of the best-validation one"},
        {"lr", "*", "*:0.01", "Adam learning rate"},
        {"weight_decay", "*", "missing-edges:5e-4|*:0", "L2 penalty added to gradients"},
        {"lr_decay_step", "*", "graph-classification:50|transform-ablation:50|mi-probe:50|*:0", "halve-every period in epochs (0 = off)"},
        {"lr_decay_rate", "*", "*:0.5", "step decay factor"},
        {"batch_size", "graph-classification transform-ablation mi-probe", "*:32", "graphs per minibatch"},
        {"hidden_dim", "*", "graph-classification:64|transform-ablation:64|mi-probe:64|missing-edges:16|*:32", "hidden width"},
        {"num_layers", "graph-classification transform-ablation mi-probe", "*:auto", "message-passing layers; auto = 2 for gcn, 5 for gin"},
        {"latent_dim", "link-prediction transform-ablation", "*:16", "autoencoder latent width"},
        {"dropout", "graph-classification missing-edges transform-ablation mi-probe", "missing-edges:0.5|*:0", "dropout rate"},
        {"readout", "graph-classification transform-ablation mi-probe", "*:sum", "sum | mean"},
        {"jumping", "graph-classification transform-ablation mi-probe", "*:true", "score every layer's readout"},
        {"folds", "graph-classification transform-ablation", "*:10", "cross-validation folds"},
        {"val_fraction", "graph-classification link-prediction transform-ablation mi-probe", "link-prediction:0.05|*:0.1", "validation share"},
        {"test_fraction", "link-prediction transform-ablation", "*:0.1", "held-out test edge share"},
        {"runs", "link-prediction missing-edges transform-ablation", "missing-edges:3|*:1", "repeats with seeds seed, seed+1, ..."},
        {"dense_reconstruction", "link-prediction transform-ablation", "*:false", "reconstruct every node pair (n <= 1000)"},
        {"keep_fractions", "missing-edges", "*:0.25,0.5,0.75,1", "edge keep fractions"},
        {"train_per_class", "missing-edges", "*:20", "labelled nodes per class"},
        {"val_count", "missing-edges", "*:500", "validation nodes"},
        {"test_count", "missing-edges", "*:1000", "test nodes"},
        {"max_degree", "graph-classification transform-ablation mi-probe", "*:10", "degree one-hot cap for featureless datasets"},
        {"bins", "mi-probe", "*:8", "equal-frequency bins"},
        {"mi_coordinates", "mi-probe", "*:16", "coordinate pairs per layer"},
    };
    return keys;
}
// clang-format on

inline bool applies(const KeySpec& k, const std::string& task) {
    if (std::string(k.tasks) == "*") return true;
    std::istringstream in(k.tasks);
    std::string t;
    while (in >> t)
        if (t == task) return true;
    return false;
}

inline std::optional<std::string> default_for(const KeySpec& k, const std::string& task) {
    const std::string d = k.defaults;
    if (d.empty()) return std::nullopt;
    std::optional<std::string> fallback;
    std::size_t start = 0;
    while (start <= d.size()) {
        const auto end = std::min(d.find('|', start), d.size());
        const std::string entry = d.substr(start, end - start);
        const auto colon = entry.find(':');
        const std::string who = entry.substr(0, colon), value = entry.substr(colon + 1);
        if (who == task) return value;
        if (who == "*") fallback = value;
        start = end + 1;
    }
    return fallback;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace detail

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

class ExperimentConfig {
public:
    /// Parses `key = value` text. `source` names the input in messages.
    static ExperimentConfig parse(std::istream& in, const std::string& source = "<config>") {
        std::map<std::string, std::string> raw;
        std::map<std::string, std::size_t> where;
        std::string line;
        std::size_t no = 0;
        while (std::getline(in, line)) {
            ++no;
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ParseError(source, no, "expected 'key = value'");
            const auto key = detail::trim(line.substr(0, eq));
            const auto value = detail::trim(line.substr(eq + 1));
            if (key.empty()) throw ParseError(source, no, "empty key");
            if (raw.count(key)) throw ParseError(source, no, "duplicate key '" + key + "'");
            raw[key] = value;
            where[key] = no;
        }
        ExperimentConfig c;
        c.source_ = source;
        c.raw_ = raw;
        c.lines_ = where;
        c.resolve();
        return c;
    }

    static ExperimentConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw LoadError("cannot open config " + path.string());
        auto c = parse(in, path.string());
        c.base_dir_ = path.parent_path();
        return c;
    }

    static ExperimentConfig from_map(const std::map<std::string, std::string>& kv) {
        std::ostringstream text;
        for (const auto& [k, v] : kv) text << k << " = " << v << '\n';
        std::istringstream in(text.str());
        return parse(in);
    }

    /// Replaces a value (e.g. a command-line seed) and re-validates.
    void set(const std::string& key, const std::string& value) {
        raw_[key] = value;
        lines_.erase(key);
        resolve();
    }

    const std::map<std::string, std::string>& resolved() const noexcept { return values_; }
    const std::string& task() const { return values_.at("task"); }
    const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    const std::string& str(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("field '" + key + "' does not apply to task '" + task() + "'");
        return it->second;
    }

    long long integer(const std::string& key) const {
        const auto& s = str(key);
        long long v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size()) fail(key, "expected an integer, got '" + s + "'");
        return v;
    }

    std::size_t count(const std::string& key) const {
        const auto v = integer(key);
        if (v < 0) fail(key, "must be non-negative");
        return static_cast<std::size_t>(v);
    }

    double real(const std::string& key) const {
        const auto& s = str(key);
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) fail(key, "expected a number, got '" + s + "'");
        return v;
    }

    bool flag(const std::string& key) const {
        const auto& s = str(key);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        fail(key, "expected true or false, got '" + s + "'");
    }

    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        std::string item;
        std::istringstream in(str(key));
        while (std::getline(in, item, ',')) {
            item = detail::trim(item);
            char* end = nullptr;
            const double v = std::strtod(item.c_str(), &end);
            if (item.empty() || end != item.c_str() + item.size()) fail(key, "bad list entry '" + item + "'");
            out.push_back(v);
        }
        if (out.empty()) fail(key, "empty list");
        return out;
    }

    /// Path value resolved against the config file's directory.
    std::filesystem::path path(const std::string& key) const {
        std::filesystem::path p = str(key);
        if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
        return p;
    }

    /// Sorted `key=value` lines of the resolved configuration.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
        return out;
    }

    std::string fingerprint() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
        return buf;
    }

    /// Human-readable key reference.
    static std::string documentation() {
        std::ostringstream out;
        for (const auto& k : detail::key_table())
            out << k.name << "  [" << k.tasks << "]  " << k.help << "  (defaults: " << k.defaults << ")\n";
        return out.str();
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        std::string loc = source_;
        if (auto it = lines_.find(key); it != lines_.end()) loc += ":" + std::to_string(it->second);
        throw ConfigError(loc + ": field '" + key + "': " + what);
    }

private:
    void resolve() {
        if (!raw_.count("task")) throw ConfigError(source_ + ": missing required field 'task'");
        const std::string task = raw_.at("task");
        if (std::find(known_tasks().begin(), known_tasks().end(), task) == known_tasks().end()) {
            std::string valid;
            for (const auto& t : known_tasks()) valid += (valid.empty() ? "" : ", ") + t;
            throw ConfigError(source_ + ": field 'task': unknown task '" + task + "'; valid: " + valid);
        }
        std::set<std::string> known;
        std::map<std::string, std::string> values;
        for (const auto& k : detail::key_table()) {
            known.insert(k.name);
            if (!detail::applies(k, task)) continue;
            if (auto it = raw_.find(k.name); it != raw_.end()) {
                values[k.name] = it->second;
            } else if (auto d = detail::default_for(k, task)) {
                values[k.name] = *d;
            } else {
                throw ConfigError(source_ + ": missing required field '" + std::string(k.name) + "'");
            }
        }
        for (const auto& [key, value] : raw_) {
            if (!known.count(key)) {
                values_.clear();
                std::string loc = source_;
                if (auto it = lines_.find(key); it != lines_.end()) loc += ":" + std::to_string(it->second);
                throw ConfigError(loc + ": unknown field '" + key + "'");
            }
            if (!values.count(key)) {
                std::string loc = source_;
                if (auto it = lines_.find(key); it != lines_.end()) loc += ":" + std::to_string(it->second);
                throw ConfigError(loc + ": field '" + key + "' does not apply to task '" + task + "'");
            }
        }
        static const std::map<std::string, std::vector<std::string>> choices{
            {"source", {"tu", "citation", "edge-list", "synthetic"}},
            {"model", {"gcn", "gin-0", "gin-eps", "vgae", "gae"}},
            {"transform", {"a1", "a1+a2", "a^2", "a^2+2i"}},
            {"degree_source", {"operand", "a1"}},
            {"gin_injection", {"neighbor-set", "normalized"}},
            {"readout", {"sum", "mean"}},
        };
        for (const auto& [key, valid] : choices) {
            auto it = values.find(key);
            if (it == values.end() || std::find(valid.begin(), valid.end(), it->second) != valid.end()) continue;
            std::string loc = source_;
            if (auto l = lines_.find(key); l != lines_.end()) loc += ":" + std::to_string(l->second);
            std::string list;
            for (const auto& v : valid) list += (list.empty() ? "" : ", ") + v;
            throw ConfigError(loc + ": field '" + key + "': invalid value '" + it->second + "'; valid: " + list);
        }
        values_ = std::move(values);
    }

    std::string source_;
    std::filesystem::path base_dir_;
    std::map<std::string, std::string> raw_;
    std::map<std::string, std::size_t> lines_;
    std::map<std::string, std::string> values_;
};

} // namespace nbe
