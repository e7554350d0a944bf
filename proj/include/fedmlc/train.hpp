#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "fedmlc/loss.hpp"
#include "fedmlc/metrics.hpp"
#include "fedmlc/models.hpp"

namespace fedmlc {

// Centralized training loop, also each federated client's local trainer.
// schedule_offset / schedule_total let a client run its cosine schedule over
// the whole federation budget: epoch e of this call sits at global index
// schedule_offset + e out of schedule_total (0 = use `epochs`).
struct TrainConfig {
    double lr_max = 1e-3;
    double lr_min = 0.0;
    double weight_decay = 1e-5;
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    HybridLossConfig loss;
    std::uint64_t seed = 0;
    std::size_t schedule_offset = 0;
    std::size_t schedule_total = 0;
    double eval_threshold = 0.5;

    void validate() const;
    std::size_t effective_schedule_total() const {
        return schedule_total == 0 ? epochs : schedule_total;
    }
};

struct EpochLog {
    std::size_t epoch = 0;  // global schedule index
    double mean_train_loss = 0.0;
    double lr = 0.0;
    bool has_val = false;
    MetricsReport val_report;
    double val_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Per epoch: seeded shuffle, mini-batch loop of forward → hybrid loss →
// backward → AdamW with the epoch's cosine lr. The shuffle/dropout stream for
// epoch e is derived from (cfg.seed, schedule_offset + e), so training in
// chunks reproduces an uninterrupted run bitwise. A trailing batch of one row
// is merged into the previous batch. Throws DivergenceError on a non-finite
// batch loss, naming the batch. on_epoch, when set, streams each log record
// as the epoch finishes.
std::vector<EpochLog> train_model(ModelParams& model, const Matrix& x_train,
                                  const Matrix& y_train, const Matrix* x_val,
                                  const Matrix* y_val, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch = nullptr);

// Eval-mode forward, threshold at `threshold`, compute_report, plus the mean
// hybrid loss. Never mutates the model.
std::pair<MetricsReport, double> evaluate_model(const ModelParams& model, const Matrix& x,
                                                const Matrix& y, double threshold,
                                                const HybridLossConfig& loss_cfg);

}  // namespace fedmlc
