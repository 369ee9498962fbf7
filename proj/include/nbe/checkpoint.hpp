#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ios>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "nbe/error.hpp"
#include "nbe/tensor.hpp"

// Parameter checkpoints, text container:
//
//   nbe-params 1
//   <record count>
//   <name> <rank> <dim_0> ... <dim_{rank-1}> <value_0> ... <value_{numel-1}>
//
// Values are written as C99 hex floats so the round trip is bit-exact.
// Names must be non-empty and contain no whitespace.

namespace nbe {

struct ParameterRecord {
    std::string name;
    Shape shape;
    std::vector<double> values;

    bool operator==(const ParameterRecord&) const = default;
};

inline void write_checkpoint(std::ostream& out, const std::vector<ParameterRecord>& records) {
    out << "nbe-params 1\n" << records.size() << '\n';
    for (const auto& r : records) {
        if (r.name.empty() || r.name.find_first_of(" \t\r\n") != std::string::npos) {
            throw ConfigError("checkpoint names must be non-empty without whitespace: '" + r.name + "'");
        }
        if (shape_numel(r.shape) != r.values.size()) throw DimensionError("checkpoint record '" + r.name + "' size");
        out << r.name << ' ' << r.shape.size();
        for (auto d : r.shape) out << ' ' << d;
        out << std::hexfloat;
        for (double v : r.values) out << ' ' << v;
        out << std::defaultfloat << '\n';
    }
}

inline std::vector<ParameterRecord> read_checkpoint(std::istream& in) {
    std::string magic;
    int version = 0;
    std::size_t count = 0;
    if (!(in >> magic >> version >> count) || magic != "nbe-params" || version != 1) {
        throw LoadError("not an nbe-params v1 checkpoint");
    }
    std::vector<ParameterRecord> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        ParameterRecord r;
        std::size_t rank = 0;
        if (!(in >> r.name >> rank)) throw LoadError("truncated checkpoint at record " + std::to_string(k));
        r.shape.resize(rank);
        for (auto& d : r.shape)
            if (!(in >> d)) throw LoadError("truncated shape in record '" + r.name + "'");
        r.values.resize(shape_numel(r.shape));
        for (double& v : r.values) {
            // operator>> does not parse hex floats portably; strtod does.
            std::string tok;
            if (!(in >> tok)) throw LoadError("truncated values in record '" + r.name + "'");
            char* end = nullptr;
            v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size()) throw LoadError("bad value '" + tok + "' in record '" + r.name + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<ParameterRecord> snapshot(const std::vector<Tensor>& params) {
    std::vector<ParameterRecord> out;
    for (const auto& p : params) out.push_back({p.name(), p.shape(), {p.values().begin(), p.values().end()}});
    return out;
}

/// Copies values into matching tensors by position; names and shapes must agree.
inline void restore(const std::vector<ParameterRecord>& records, std::vector<Tensor>& params) {
    if (records.size() != params.size()) throw DimensionError("checkpoint has a different parameter count");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (records[k].name != params[k].name() || records[k].shape != params[k].shape()) {
            throw DimensionError("checkpoint record '" + records[k].name + "' does not match parameter '" +
                                 params[k].name() + "'");
        }
        std::copy(records[k].values.begin(), records[k].values.end(), params[k].mutable_values().begin());
    }
}

} // namespace nbe
