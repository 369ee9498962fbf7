#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "error.hpp"

namespace nbe {

inline double accuracy(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size()) {
        throw DimensionError("accuracy: " + std::to_string(preds.size()) + " predictions for " +
                             std::to_string(labels.size()) + " labels");
    }
    if (preds.empty()) throw DimensionError("accuracy: empty input");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i];
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

namespace detail {

inline void check_binary(std::span<const double> scores, std::span<const int> labels, const char* who) {
    if (scores.size() != labels.size()) throw DimensionError(std::string(who) + ": scores/labels length mismatch");
    for (int l : labels)
        if (l != 0 && l != 1) throw ConfigError(std::string(who) + ": labels must be 0 or 1");
}

} // namespace detail

/// Mann-Whitney AUC with ties worth one half. The count is kept as an
/// integer (doubled) so equal inputs give bit-identical results.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    detail::check_binary(scores, labels, "roc_auc");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    std::uint64_t pos = 0, neg = 0, twice_wins = 0;
    // Walk groups of tied scores in ascending order.
    std::uint64_t neg_below = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        std::uint64_t gp = 0, gn = 0;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            (labels[idx[j]] ? gp : gn) += 1;
            ++j;
        }
        twice_wins += gp * (2 * neg_below + gn);
        neg_below += gn;
        pos += gp;
        neg += gn;
        i = j;
    }
    if (pos == 0 || neg == 0) throw ConfigError("roc_auc: both classes must be present");
    return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

/// AP = sum_k (recall_k - recall_{k-1}) * precision_k over the descending
/// score sweep. Ties keep input order (stable sort).
inline double average_precision(std::span<const double> scores, std::span<const int> labels) {
    detail::check_binary(scores, labels, "average_precision");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    double positives = 0.0;
    for (int l : labels) positives += l;
    if (positives == 0.0) throw ConfigError("average_precision: no positive labels");
    double tp = 0.0, prev_recall = 0.0, ap = 0.0;
    for (std::size_t r = 0; r < idx.size(); ++r) {
        tp += labels[idx[r]];
        const double recall = tp / positives;
        ap += (recall - prev_recall) * (tp / static_cast<double>(r + 1));
        prev_recall = recall;
    }
    return ap;
}

inline double mean_of(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Population standard deviation.
inline double std_of(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace nbe
