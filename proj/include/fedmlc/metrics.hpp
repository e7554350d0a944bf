#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedmlc/matrix.hpp"

namespace fedmlc {

// Per-label confusion counts plus macro/micro precision, recall, and F1.
// Zero-denominator metrics are defined as 0. For Top-K reports, label_subset
// lists the selected label ids and per-label counts cover only those.
struct MetricsReport {
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
    std::vector<std::size_t> tp, fp, fn;         // per evaluated label
    std::vector<std::size_t> label_subset;       // empty = all labels
    std::size_t n_samples = 0;
};

// entry = 1 iff prob >= threshold.
Matrix threshold_predictions(const Matrix& probs, double threshold = 0.5);

MetricsReport compute_report(const Matrix& y_true, const Matrix& y_pred);

// Metrics over the K labels with the highest training-set frequency (ties by
// lower label id).
MetricsReport topk_report(const Matrix& y_true, const Matrix& y_pred,
                          const std::vector<std::size_t>& train_label_frequencies,
                          std::size_t k);

// Flat "key value" lines, one metric per line, 4-decimal values.
std::string report_to_kv(const MetricsReport& report, const std::string& prefix = "");

}  // namespace fedmlc
