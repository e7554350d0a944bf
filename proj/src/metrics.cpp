#include "fedmlc/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "fedmlc/errors.hpp"

namespace fedmlc {

Matrix threshold_predictions(const Matrix& probs, double threshold) {
    if (threshold < 0.0 || threshold > 1.0) {
        throw ConfigError("threshold_predictions: threshold must lie in [0, 1], got " +
                          std::to_string(threshold));
    }
    Matrix pred(probs.rows, probs.cols);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        pred.data[i] = probs.data[i] >= threshold ? 1.0 : 0.0;
    }
    return pred;
}

namespace {

double safe_div(double num, double denom) { return denom == 0.0 ? 0.0 : num / denom; }

double f1_of(double p, double r) { return safe_div(2.0 * p * r, p + r); }

MetricsReport report_over_columns(const Matrix& y_true, const Matrix& y_pred,
                                  const std::vector<std::size_t>& columns) {
    MetricsReport rep;
    rep.n_samples = y_true.rows;
    rep.tp.assign(columns.size(), 0);
    rep.fp.assign(columns.size(), 0);
    rep.fn.assign(columns.size(), 0);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const std::size_t j = columns[c];
        for (std::size_t i = 0; i < y_true.rows; ++i) {
            const bool truth = y_true.at(i, j) != 0.0;
            const bool pred = y_pred.at(i, j) != 0.0;
            if (pred && truth) ++rep.tp[c];
            else if (pred && !truth) ++rep.fp[c];
            else if (!pred && truth) ++rep.fn[c];
        }
    }
    double macro_p = 0.0, macro_r = 0.0, macro_f = 0.0;
    std::size_t pool_tp = 0, pool_fp = 0, pool_fn = 0;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const double p = safe_div(static_cast<double>(rep.tp[c]),
                                  static_cast<double>(rep.tp[c] + rep.fp[c]));
        const double r = safe_div(static_cast<double>(rep.tp[c]),
                                  static_cast<double>(rep.tp[c] + rep.fn[c]));
        macro_p += p;
        macro_r += r;
        macro_f += f1_of(p, r);
        pool_tp += rep.tp[c];
        pool_fp += rep.fp[c];
        pool_fn += rep.fn[c];
    }
    const double n_labels = static_cast<double>(columns.size());
    rep.macro_precision = safe_div(macro_p, n_labels);
    rep.macro_recall = safe_div(macro_r, n_labels);
    rep.macro_f1 = safe_div(macro_f, n_labels);
    rep.micro_precision = safe_div(static_cast<double>(pool_tp),
                                   static_cast<double>(pool_tp + pool_fp));
    rep.micro_recall = safe_div(static_cast<double>(pool_tp),
                                static_cast<double>(pool_tp + pool_fn));
    rep.micro_f1 = f1_of(rep.micro_precision, rep.micro_recall);
    return rep;
}

}  // namespace

MetricsReport compute_report(const Matrix& y_true, const Matrix& y_pred) {
    require_same_shape(y_true, y_pred, "compute_report");
    std::vector<std::size_t> all(y_true.cols);
    std::iota(all.begin(), all.end(), 0);
    return report_over_columns(y_true, y_pred, all);
}

MetricsReport topk_report(const Matrix& y_true, const Matrix& y_pred,
                          const std::vector<std::size_t>& train_label_frequencies,
                          std::size_t k) {
    require_same_shape(y_true, y_pred, "topk_report");
    if (train_label_frequencies.size() != y_true.cols) {
        throw DimensionError("topk_report: " + std::to_string(train_label_frequencies.size()) +
                             " frequencies vs " + std::to_string(y_true.cols) + " labels");
    }
    if (k > y_true.cols) {
        throw ConfigError("topk_report: K=" + std::to_string(k) + " exceeds " +
                          std::to_string(y_true.cols) + " labels");
    }
    std::vector<std::size_t> order(y_true.cols);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (train_label_frequencies[a] != train_label_frequencies[b]) {
            return train_label_frequencies[a] > train_label_frequencies[b];
        }
        return a < b;
    });
    std::vector<std::size_t> selected(order.begin(),
                                      order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(selected.begin(), selected.end());
    MetricsReport rep = report_over_columns(y_true, y_pred, selected);
    rep.label_subset = std::move(selected);
    return rep;
}

std::string report_to_kv(const MetricsReport& report, const std::string& prefix) {
    auto line = [&](const char* key, double value) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%s%s %.4f\n", prefix.c_str(), key, value);
        return std::string(buf);
    };
    std::string out;
    out += line("macro_precision", report.macro_precision);
    out += line("macro_recall", report.macro_recall);
    out += line("macro_f1", report.macro_f1);
    out += line("micro_precision", report.micro_precision);
    out += line("micro_recall", report.micro_recall);
    out += line("micro_f1", report.micro_f1);
    return out;
}

}  // namespace fedmlc
