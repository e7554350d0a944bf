#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "fedmlc/models.hpp"
#include "fedmlc/train.hpp"

namespace fedmlc {

// Federation contract. seed drives client sampling and per-client training
// streams; model_seed initializes the global model.
struct FedConfig {
    std::size_t n_clients = 20;
    std::size_t rounds = 100;
    double fraction_fit = 1.0;
    double fraction_evaluate = 0.5;
    std::size_t min_available_clients = 10;
    std::size_t min_fit_clients = 10;
    std::size_t min_evaluate_clients = 5;
    std::size_t local_epochs = 1;
    TrainConfig train;
    std::uint64_t seed = 0;
    std::uint64_t model_seed = 0;
    bool reset_optimizer_each_round = false;
    bool parallel_clients = true;
    bool evaluate_on_local = false;  // default: clients score the shared validation split
    bool wire_loopback = false;      // frame every exchange through the wire codec
    bool shared_client_seed = false; // all clients draw client 0's training stream

    void validate() const;
};

struct EvalAggregate {
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
    double loss = 0.0;
};

struct RoundRecord {
    std::size_t round = 0;  // 1-based
    std::vector<std::size_t> fit_clients;
    double weighted_train_loss = 0.0;
    std::vector<std::size_t> eval_clients;
    EvalAggregate eval;
    std::uint64_t checksum = 0;  // over the post-aggregation global state
};

// k = max(minimum, round(fraction·n_clients)) distinct ids drawn uniformly
// without replacement, deterministic in (seed, round). Returned sorted.
std::vector<std::size_t> sample_clients(std::size_t round, std::size_t n_clients,
                                        double fraction, std::size_t minimum,
                                        std::uint64_t seed);

// θ = Σᵢ nᵢθᵢ / Σᵢ nᵢ elementwise. Updates are reduced in a canonical
// content order, so the result is exactly permutation-invariant; a set of
// identical updates returns that update unchanged.
std::vector<double> federated_average(
    const std::vector<std::pair<std::vector<double>, std::uint64_t>>& updates);

// Sample-count-weighted mean of scalar metrics.
double aggregate_weighted_metrics(
    const std::vector<std::pair<double, std::uint64_t>>& entries);

// Training data seen by the federation: the pooled standardized training
// matrix with per-client row-index partitions, plus the shared validation
// split the evaluation clients score.
struct FedData {
    Matrix x_train;
    Matrix y_train;
    std::vector<std::vector<std::size_t>> partitions;
    Matrix x_val;
    Matrix y_val;
};

struct FedResult {
    ModelParams model;
    std::vector<RoundRecord> records;
};

using RoundCallback = std::function<void(const RoundRecord&)>;

// Per round: sample fit clients, broadcast the global state, run each
// client's local trainer with its persistent optimizer state, aggregate by
// sample-count-weighted averaging, then sample evaluation clients and
// aggregate their metrics. Deterministic in fed_cfg seeds regardless of
// client execution order. on_round, when set, streams each record as the
// round completes.
FedResult run_federated(const FedConfig& cfg, const ModelSpec& spec, const FedData& data,
                        const RoundCallback& on_round = nullptr);

// The training seed a client derives from the federation seed. The per-epoch
// stream inside train_model is keyed on (this, cumulative local epoch), so a
// single client's chunked training replays a centralized run exactly.
std::uint64_t client_train_seed(std::uint64_t fed_seed, std::size_t client_id);

}  // namespace fedmlc
