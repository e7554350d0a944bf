#include "fedmlc/train.hpp"

#include <cmath>

#include "fedmlc/dataset.hpp"

namespace fedmlc {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (lr_max < 0.0 || lr_min < 0.0 || lr_min > lr_max) {
        throw ConfigError("train: learning rates must satisfy 0 <= lr_min <= lr_max");
    }
    if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
    loss.validate();
    if (eval_threshold < 0.0 || eval_threshold > 1.0) {
        throw ConfigError("train: eval_threshold must lie in [0, 1]");
    }
    if (schedule_total != 0 && schedule_offset + epochs > schedule_total) {
        throw ConfigError("train: schedule_offset + epochs exceeds schedule_total");
    }
}

std::vector<EpochLog> train_model(ModelParams& model, const Matrix& x_train,
                                  const Matrix& y_train, const Matrix* x_val,
                                  const Matrix* y_val, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (x_train.rows != y_train.rows) {
        throw DimensionError("train: " + std::to_string(x_train.rows) + " inputs vs " +
                             std::to_string(y_train.rows) + " target rows");
    }
    if (x_train.cols != model.spec.input_dim || y_train.cols != model.spec.output_dim) {
        throw DimensionError("train: data is " + x_train.shape_str() + "/" +
                             y_train.shape_str() + " but model is " +
                             std::to_string(model.spec.input_dim) + "->" +
                             std::to_string(model.spec.output_dim));
    }
    const std::size_t n = x_train.rows;
    if (cfg.epochs > 0 && n == 0) throw DataError("train: empty training set");

    const std::size_t schedule_total = cfg.effective_schedule_total();
    std::vector<EpochLog> logs;
    logs.reserve(cfg.epochs);

    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        const std::size_t global_epoch = cfg.schedule_offset + e;
        const double lr = cosine_lr(global_epoch, schedule_total, cfg.lr_max, cfg.lr_min);
        RngStream rng(mix_seed(cfg.seed, global_epoch, 0x65706f6368ULL));  // "epoch"
        const std::vector<std::size_t> perm = rng.permutation(n);

        // batch boundaries; a trailing single row joins the previous batch
        std::vector<std::size_t> starts;
        for (std::size_t s = 0; s < n; s += cfg.batch_size) starts.push_back(s);
        if (starts.size() > 1 && n - starts.back() == 1) starts.pop_back();

        double loss_sum = 0.0;
        for (std::size_t b = 0; b < starts.size(); ++b) {
            const std::size_t lo = starts[b];
            const std::size_t hi = b + 1 < starts.size() ? starts[b + 1] : n;
            std::vector<std::size_t> batch_idx(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                                               perm.begin() + static_cast<std::ptrdiff_t>(hi));
            const Matrix xb = gather_rows(x_train, batch_idx);
            const Matrix yb = gather_rows(y_train, batch_idx);

            ForwardCache cache;
            const Matrix probs = forward_train(model, xb, rng, cache);
            const double batch_loss = hybrid_loss(probs, yb, cfg.loss);
            if (!std::isfinite(batch_loss)) {
                throw DivergenceError("train: non-finite loss in epoch " +
                                      std::to_string(global_epoch) + ", batch " +
                                      std::to_string(b));
            }
            loss_sum += batch_loss;
            const Matrix grad = hybrid_loss_grad(probs, yb, cfg.loss);
            backward(model, cache, grad);
            for (std::size_t p = 0; p < model.params.size(); ++p) {
                adamw_step(model.params[p], model.grads[p], model.opt[p], lr,
                           cfg.weight_decay);
            }
        }

        EpochLog log;
        log.epoch = global_epoch;
        log.lr = lr;
        log.mean_train_loss = loss_sum / static_cast<double>(starts.size());
        if (x_val != nullptr && y_val != nullptr) {
            auto [report, val_loss] =
                evaluate_model(model, *x_val, *y_val, cfg.eval_threshold, cfg.loss);
            log.has_val = true;
            log.val_report = std::move(report);
            log.val_loss = val_loss;
        }
        if (on_epoch) on_epoch(log);
        logs.push_back(std::move(log));
    }
    return logs;
}

std::pair<MetricsReport, double> evaluate_model(const ModelParams& model, const Matrix& x,
                                                const Matrix& y, double threshold,
                                                const HybridLossConfig& loss_cfg) {
    if (x.rows != y.rows) {
        throw DimensionError("evaluate: " + std::to_string(x.rows) + " inputs vs " +
                             std::to_string(y.rows) + " target rows");
    }
    const Matrix probs = forward_eval(model, x);
    const double loss = hybrid_loss(probs, y, loss_cfg);
    const Matrix pred = threshold_predictions(probs, threshold);
    return {compute_report(y, pred), loss};
}

}  // namespace fedmlc
