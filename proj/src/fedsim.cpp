#include "fedmlc/fedsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>

#include "fedmlc/dataset.hpp"
#include "fedmlc/wire.hpp"

namespace fedmlc {

namespace {

constexpr std::uint64_t kSaltClient = 0x636c69656e74ULL;  // "client"
constexpr std::uint64_t kSaltFit = 0x666974ULL;           // "fit"
constexpr std::uint64_t kSaltEval = 0x6576616cULL;        // "eval"

}  // namespace

void FedConfig::validate() const {
    if (n_clients < 1) throw ConfigError("fed: n_clients must be >= 1");
    if (fraction_fit <= 0.0 || fraction_fit > 1.0 || fraction_evaluate <= 0.0 ||
        fraction_evaluate > 1.0) {
        throw ConfigError("fed: sampling fractions must lie in (0, 1]");
    }
    if (min_available_clients > n_clients || min_fit_clients > n_clients ||
        min_evaluate_clients > n_clients) {
        throw ConfigError("fed: minimum client thresholds cannot exceed n_clients");
    }
    if (local_epochs < 1) throw ConfigError("fed: local_epochs must be >= 1");
    TrainConfig probe = train;
    probe.epochs = local_epochs;
    probe.schedule_offset = 0;
    probe.schedule_total = rounds == 0 ? local_epochs : rounds * local_epochs;
    probe.validate();
}

std::vector<std::size_t> sample_clients(std::size_t round, std::size_t n_clients,
                                        double fraction, std::size_t minimum,
                                        std::uint64_t seed) {
    if (minimum > n_clients) {
        throw ConfigError("sample_clients: minimum " + std::to_string(minimum) +
                          " exceeds " + std::to_string(n_clients) + " clients");
    }
    if (fraction <= 0.0 || fraction > 1.0) {
        throw ConfigError("sample_clients: fraction must lie in (0, 1]");
    }
    const auto by_fraction = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(n_clients)));
    const std::size_t k = std::min(std::max(minimum, by_fraction), n_clients);
    RngStream rng(mix_seed(seed, round, 0x73616d706cULL));  // "sampl"
    std::vector<std::size_t> ids = rng.permutation(n_clients);
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<double> federated_average(
    const std::vector<std::pair<std::vector<double>, std::uint64_t>>& updates) {
    if (updates.empty()) throw ConfigError("federated_average: empty update list");
    const std::size_t dim = updates.front().first.size();
    for (const auto& [theta, n] : updates) {
        if (theta.size() != dim) {
            throw DimensionError("federated_average: update length " +
                                 std::to_string(theta.size()) + " vs " +
                                 std::to_string(dim));
        }
        if (n < 1) throw ConfigError("federated_average: sample counts must be >= 1");
    }

    // A set of identical parameter vectors averages to itself for any weights.
    bool all_equal = true;
    for (std::size_t i = 1; i < updates.size() && all_equal; ++i) {
        all_equal = updates[i].first == updates.front().first;
    }
    if (all_equal) return updates.front().first;

    // Reduce in a canonical order (bit-pattern lexicographic) so the sum is
    // exactly permutation-invariant.
    std::vector<std::size_t> order(updates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto content_less = [&](std::size_t a, std::size_t b) {
        const auto& ta = updates[a].first;
        const auto& tb = updates[b].first;
        for (std::size_t j = 0; j < dim; ++j) {
            const auto ba = std::bit_cast<std::uint64_t>(ta[j]);
            const auto bb = std::bit_cast<std::uint64_t>(tb[j]);
            if (ba != bb) return ba < bb;
        }
        return updates[a].second < updates[b].second;
    };
    std::sort(order.begin(), order.end(), content_less);

    std::uint64_t total = 0;
    for (const auto& [theta, n] : updates) total += n;
    const double inv_total = 1.0 / static_cast<double>(total);
    std::vector<double> out(dim, 0.0);
    for (std::size_t idx : order) {
        const auto& [theta, n] = updates[idx];
        const double w = static_cast<double>(n) * inv_total;
        for (std::size_t j = 0; j < dim; ++j) out[j] += w * theta[j];
    }
    return out;
}

double aggregate_weighted_metrics(
    const std::vector<std::pair<double, std::uint64_t>>& entries) {
    if (entries.empty()) throw ConfigError("aggregate_weighted_metrics: empty list");
    double num = 0.0;
    std::uint64_t denom = 0;
    for (const auto& [value, n] : entries) {
        if (n < 1) throw ConfigError("aggregate_weighted_metrics: counts must be >= 1");
        num += value * static_cast<double>(n);
        denom += n;
    }
    return num / static_cast<double>(denom);
}

namespace {

struct ClientState {
    ModelParams model;
    Matrix x;
    Matrix y;
    std::uint64_t train_seed = 0;
    std::size_t cumulative_epochs = 0;
};

struct FitOutcome {
    std::vector<double> state;
    std::uint64_t n_samples = 0;
    double loss = 0.0;
};

struct EvalOutcome {
    std::uint64_t n_samples = 0;
    std::array<double, 7> values{};  // six metrics then loss
};

std::vector<double> loopback_state(wire::MsgType type, std::uint32_t round,
                                   const std::vector<double>& flat,
                                   const std::vector<std::vector<std::uint32_t>>& shapes) {
    wire::Message msg;
    msg.type = type;
    msg.round = round;
    msg.tensors = wire::tensors_from_flat(flat, shapes);
    return wire::flat_from_tensors(wire::decode(wire::encode(msg)).tensors);
}

void reset_optimizer(ModelParams& model) {
    for (std::size_t p = 0; p < model.opt.size(); ++p) {
        model.opt[p] = AdamWState::like(model.params[p]);
    }
}

}  // namespace

FedResult run_federated(const FedConfig& cfg, const ModelSpec& spec, const FedData& data,
                        const RoundCallback& on_round) {
    cfg.validate();
    spec.validate();
    if (cfg.n_clients < cfg.min_available_clients) {
        throw ConfigError("fed: only " + std::to_string(cfg.n_clients) +
                          " clients available, min_available_clients is " +
                          std::to_string(cfg.min_available_clients));
    }
    if (data.partitions.size() != cfg.n_clients) {
        throw DimensionError("fed: " + std::to_string(data.partitions.size()) +
                             " partitions for " + std::to_string(cfg.n_clients) +
                             " clients");
    }
    for (const auto& part : data.partitions) {
        if (part.empty()) throw DataError("fed: a client partition is empty");
    }

    FedResult result;
    result.model = build_model(spec, cfg.model_seed);
    const auto shapes = state_tensor_shapes(result.model);
    const std::size_t schedule_total =
        cfg.rounds == 0 ? cfg.local_epochs : cfg.rounds * cfg.local_epochs;

    std::vector<ClientState> clients;
    clients.reserve(cfg.n_clients);
    for (std::size_t c = 0; c < cfg.n_clients; ++c) {
        ClientState st;
        st.model = build_model(spec, cfg.model_seed);
        st.x = gather_rows(data.x_train, data.partitions[c]);
        st.y = gather_rows(data.y_train, data.partitions[c]);
        st.train_seed = mix_seed(cfg.seed, cfg.shared_client_seed ? 0 : c, kSaltClient);
        clients.push_back(std::move(st));
    }

    for (std::size_t round = 1; round <= cfg.rounds; ++round) {
        const auto fit_ids = sample_clients(round, cfg.n_clients, cfg.fraction_fit,
                                            cfg.min_fit_clients, mix_seed(cfg.seed, kSaltFit));

        std::vector<double> broadcast = flatten_state(result.model);
        if (cfg.wire_loopback) {
            broadcast = loopback_state(wire::MsgType::global_model,
                                       static_cast<std::uint32_t>(round), broadcast, shapes);
        }

        std::vector<FitOutcome> fits(fit_ids.size());
        std::vector<std::exception_ptr> fit_errors(fit_ids.size());
        const auto n_fit = static_cast<std::int64_t>(fit_ids.size());
#pragma omp parallel for if (cfg.parallel_clients) schedule(dynamic)
        for (std::int64_t i = 0; i < n_fit; ++i) {
            try {
                ClientState& client = clients[fit_ids[static_cast<std::size_t>(i)]];
                unflatten_state(client.model, broadcast);
                if (cfg.reset_optimizer_each_round) reset_optimizer(client.model);
                TrainConfig tc = cfg.train;
                tc.epochs = cfg.local_epochs;
                tc.seed = client.train_seed;
                tc.schedule_offset = client.cumulative_epochs;
                tc.schedule_total = schedule_total;
                const auto logs = train_model(client.model, client.x, client.y, nullptr,
                                              nullptr, tc);
                client.cumulative_epochs += cfg.local_epochs;
                double loss = 0.0;
                for (const auto& log : logs) loss += log.mean_train_loss;
                loss /= static_cast<double>(logs.size());

                FitOutcome out;
                out.state = flatten_state(client.model);
                out.n_samples = client.x.rows;
                out.loss = loss;
                if (cfg.wire_loopback) {
                    wire::Message msg;
                    msg.type = wire::MsgType::fit_result;
                    msg.round = static_cast<std::uint32_t>(round);
                    msg.tensors = wire::tensors_from_flat(out.state, shapes);
                    msg.n_samples = out.n_samples;
                    msg.train_loss = out.loss;
                    const wire::Message echoed = wire::decode(wire::encode(msg));
                    out.state = wire::flat_from_tensors(echoed.tensors);
                    out.n_samples = echoed.n_samples;
                    out.loss = echoed.train_loss;
                }
                fits[static_cast<std::size_t>(i)] = std::move(out);
            } catch (...) {
                fit_errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        for (const auto& err : fit_errors) {
            if (err) std::rethrow_exception(err);
        }

        // fit_ids are sorted, so the reduction consumes results in id order
        std::vector<std::pair<std::vector<double>, std::uint64_t>> updates;
        std::vector<std::pair<double, std::uint64_t>> losses;
        updates.reserve(fits.size());
        for (FitOutcome& out : fits) {
            losses.emplace_back(out.loss, out.n_samples);
            updates.emplace_back(std::move(out.state), out.n_samples);
        }
        const std::vector<double> averaged = federated_average(updates);
        unflatten_state(result.model, averaged);

        RoundRecord record;
        record.round = round;
        record.fit_clients = fit_ids;
        record.weighted_train_loss = aggregate_weighted_metrics(losses);

        const auto eval_ids =
            sample_clients(round, cfg.n_clients, cfg.fraction_evaluate,
                           cfg.min_evaluate_clients, mix_seed(cfg.seed, kSaltEval));
        record.eval_clients = eval_ids;

        std::vector<double> eval_state = averaged;
        if (cfg.wire_loopback) {
            eval_state = loopback_state(wire::MsgType::eval_request,
                                        static_cast<std::uint32_t>(round), eval_state,
                                        shapes);
        }

        std::vector<EvalOutcome> evals(eval_ids.size());
        std::vector<std::exception_ptr> eval_errors(eval_ids.size());
        const auto n_eval = static_cast<std::int64_t>(eval_ids.size());
#pragma omp parallel for if (cfg.parallel_clients) schedule(dynamic)
        for (std::int64_t i = 0; i < n_eval; ++i) {
            try {
                const ClientState& client = clients[eval_ids[static_cast<std::size_t>(i)]];
                ModelParams scorer = result.model;
                unflatten_state(scorer, eval_state);
                const Matrix& ex = cfg.evaluate_on_local ? client.x : data.x_val;
                const Matrix& ey = cfg.evaluate_on_local ? client.y : data.y_val;
                const auto [report, loss] = evaluate_model(
                    scorer, ex, ey, cfg.train.eval_threshold, cfg.train.loss);
                EvalOutcome out;
                out.n_samples = ex.rows;
                out.values = {report.macro_precision, report.macro_recall, report.macro_f1,
                              report.micro_precision, report.micro_recall, report.micro_f1,
                              loss};
                if (cfg.wire_loopback) {
                    wire::Message msg;
                    msg.type = wire::MsgType::eval_result;
                    msg.round = static_cast<std::uint32_t>(round);
                    msg.n_samples = out.n_samples;
                    for (int m = 0; m < 6; ++m) {
                        msg.metrics[static_cast<std::size_t>(m)] =
                            out.values[static_cast<std::size_t>(m)];
                    }
                    const wire::Message echoed = wire::decode(wire::encode(msg));
                    out.n_samples = echoed.n_samples;
                    for (int m = 0; m < 6; ++m) {
                        out.values[static_cast<std::size_t>(m)] =
                            echoed.metrics[static_cast<std::size_t>(m)];
                    }
                }
                evals[static_cast<std::size_t>(i)] = out;
            } catch (...) {
                eval_errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        for (const auto& err : eval_errors) {
            if (err) std::rethrow_exception(err);
        }

        auto weighted = [&](int slot) {
            std::vector<std::pair<double, std::uint64_t>> entries;
            entries.reserve(evals.size());
            for (const EvalOutcome& out : evals) {
                entries.emplace_back(out.values[static_cast<std::size_t>(slot)],
                                     out.n_samples);
            }
            return aggregate_weighted_metrics(entries);
        };
        record.eval.macro_precision = weighted(0);
        record.eval.macro_recall = weighted(1);
        record.eval.macro_f1 = weighted(2);
        record.eval.micro_precision = weighted(3);
        record.eval.micro_recall = weighted(4);
        record.eval.micro_f1 = weighted(5);
        record.eval.loss = weighted(6);
        record.checksum = state_checksum(flatten_state(result.model));
        if (on_round) on_round(record);
        result.records.push_back(std::move(record));
    }
    return result;
}

std::uint64_t client_train_seed(std::uint64_t fed_seed, std::size_t client_id) {
    return mix_seed(fed_seed, client_id, kSaltClient);
}

}  // namespace fedmlc
