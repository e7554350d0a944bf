#include "fedmlc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fedmlc/dataset.hpp"
#include "fedmlc/fedsim.hpp"
#include "fedmlc/metrics.hpp"
#include "fedmlc/models.hpp"
#include "fedmlc/synthgen.hpp"
#include "fedmlc/train.hpp"

namespace fedmlc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSaltModel = 0x6d6f64656cULL;
constexpr std::uint64_t kSaltTrain = 0x747261696eULL;
constexpr std::uint64_t kSaltFed = 0x666564ULL;
constexpr std::uint64_t kSaltPartition = 0x70617274ULL;

struct GlobalFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> config;
    bool quiet = false;
};

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << text;
    if (!out) throw DataError("failed writing file: " + path.string());
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key \"") + key + "\": " + e.what());
    }
}

// ----------------------------------------------------------- config types

SynthConfig parse_synth_config(const json& j) {
    SynthConfig cfg;
    cfg.n_samples = get_or<std::size_t>(j, "n_samples", cfg.n_samples);
    cfg.dim = get_or<std::size_t>(j, "dim", cfg.dim);
    cfg.n_labels = get_or<std::size_t>(j, "n_labels", cfg.n_labels);
    cfg.freq_exponent = get_or<double>(j, "freq_exponent", cfg.freq_exponent);
    cfg.mean_cardinality = get_or<double>(j, "mean_cardinality", cfg.mean_cardinality);
    cfg.noise_sigma = get_or<double>(j, "noise_sigma", cfg.noise_sigma);
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.validate();
    return cfg;
}

json synth_config_to_json(const SynthConfig& cfg) {
    return json{{"n_samples", cfg.n_samples},
                {"dim", cfg.dim},
                {"n_labels", cfg.n_labels},
                {"freq_exponent", cfg.freq_exponent},
                {"mean_cardinality", cfg.mean_cardinality},
                {"noise_sigma", cfg.noise_sigma},
                {"seed", cfg.seed}};
}

HybridLossConfig parse_loss_config(const json& j) {
    HybridLossConfig cfg;
    cfg.alpha = get_or<double>(j, "alpha", cfg.alpha);
    cfg.gamma = get_or<double>(j, "gamma", cfg.gamma);
    cfg.lambda_bce = get_or<double>(j, "lambda_bce", cfg.lambda_bce);
    cfg.clip_eps = get_or<double>(j, "clip_eps", cfg.clip_eps);
    cfg.validate();
    return cfg;
}

TrainConfig parse_train_config(const json& j) {
    TrainConfig cfg;
    cfg.lr_max = get_or<double>(j, "lr_max", cfg.lr_max);
    cfg.lr_min = get_or<double>(j, "lr_min", cfg.lr_min);
    cfg.weight_decay = get_or<double>(j, "weight_decay", cfg.weight_decay);
    cfg.epochs = get_or<std::size_t>(j, "epochs", cfg.epochs);
    cfg.batch_size = get_or<std::size_t>(j, "batch_size", cfg.batch_size);
    if (j.contains("loss")) cfg.loss = parse_loss_config(j.at("loss"));
    cfg.validate();
    return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
    return json{{"lr_max", cfg.lr_max},
                {"lr_min", cfg.lr_min},
                {"weight_decay", cfg.weight_decay},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"loss",
                 {{"alpha", cfg.loss.alpha},
                  {"gamma", cfg.loss.gamma},
                  {"lambda_bce", cfg.loss.lambda_bce},
                  {"clip_eps", cfg.loss.clip_eps}}}};
}

struct ExperimentConfig {
    bool federated_mode = false;
    std::string dataset_path;          // exactly one of these two
    std::optional<SynthConfig> synth;
    ModelFamily family = ModelFamily::mlp;
    std::vector<std::size_t> hidden;  // empty: family default
    std::size_t res_blocks = 2;
    double dropout_p = 0.1;
    TrainConfig train;
    FedConfig fed;
    std::array<double, 3> ratios{0.70, 0.15, 0.15};
    std::size_t min_label_count = 200;
    std::uint64_t seed = 1;
    std::size_t n_repeats = 1;
    double eval_threshold = 0.5;
    std::vector<std::size_t> topk;
    std::string output_dir;
};

ExperimentConfig parse_experiment_config(const json& j) {
    ExperimentConfig cfg;
    const std::string mode = get_or<std::string>(j, "mode", "centralized");
    if (mode == "federated") {
        cfg.federated_mode = true;
    } else if (mode != "centralized") {
        throw ConfigError("config: mode must be \"centralized\" or \"federated\", got \"" +
                          mode + "\"");
    }
    const bool has_dataset = j.contains("dataset");
    const bool has_synth = j.contains("synth");
    if (has_dataset == has_synth) {
        throw ConfigError("config: exactly one of \"dataset\" and \"synth\" is required");
    }
    if (has_dataset) cfg.dataset_path = j.at("dataset").get<std::string>();
    if (has_synth) cfg.synth = parse_synth_config(j.at("synth"));

    if (j.contains("model")) {
        const json& m = j.at("model");
        cfg.family = family_from_name(get_or<std::string>(m, "family", "mlp"));
        cfg.hidden = get_or<std::vector<std::size_t>>(m, "hidden", {});
        cfg.res_blocks = get_or<std::size_t>(m, "res_blocks", cfg.res_blocks);
        cfg.dropout_p = get_or<double>(m, "dropout_p", cfg.dropout_p);
    }
    if (j.contains("train")) cfg.train = parse_train_config(j.at("train"));

    if (cfg.federated_mode != j.contains("federated")) {
        throw ConfigError(cfg.federated_mode
                              ? "config: federated mode needs a \"federated\" section"
                              : "config: \"federated\" section present in centralized mode");
    }
    if (cfg.federated_mode) {
        const json& f = j.at("federated");
        cfg.fed.n_clients = get_or<std::size_t>(f, "n_clients", cfg.fed.n_clients);
        cfg.fed.rounds = get_or<std::size_t>(f, "rounds", cfg.fed.rounds);
        cfg.fed.fraction_fit = get_or<double>(f, "fraction_fit", cfg.fed.fraction_fit);
        cfg.fed.fraction_evaluate =
            get_or<double>(f, "fraction_evaluate", cfg.fed.fraction_evaluate);
        cfg.fed.min_available_clients =
            get_or<std::size_t>(f, "min_available_clients", cfg.fed.min_available_clients);
        cfg.fed.min_fit_clients =
            get_or<std::size_t>(f, "min_fit_clients", cfg.fed.min_fit_clients);
        cfg.fed.min_evaluate_clients =
            get_or<std::size_t>(f, "min_evaluate_clients", cfg.fed.min_evaluate_clients);
        cfg.fed.local_epochs = get_or<std::size_t>(f, "local_epochs", cfg.fed.local_epochs);
        cfg.fed.reset_optimizer_each_round =
            get_or<bool>(f, "reset_optimizer_each_round", cfg.fed.reset_optimizer_each_round);
        cfg.fed.parallel_clients =
            get_or<bool>(f, "parallel_clients", cfg.fed.parallel_clients);
        cfg.fed.evaluate_on_local =
            get_or<bool>(f, "evaluate_on_local", cfg.fed.evaluate_on_local);
        cfg.fed.wire_loopback = get_or<bool>(f, "wire_loopback", cfg.fed.wire_loopback);
    }

    if (j.contains("split")) {
        const json& s = j.at("split");
        const auto ratios = get_or<std::vector<double>>(
            s, "ratios", {cfg.ratios[0], cfg.ratios[1], cfg.ratios[2]});
        if (ratios.size() != 3) throw ConfigError("config: split.ratios needs 3 entries");
        std::copy(ratios.begin(), ratios.end(), cfg.ratios.begin());
        cfg.min_label_count = get_or<std::size_t>(s, "min_label_count", cfg.min_label_count);
    }
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.n_repeats = get_or<std::size_t>(j, "n_repeats", cfg.n_repeats);
    if (cfg.n_repeats < 1) throw ConfigError("config: n_repeats must be >= 1");
    cfg.eval_threshold = get_or<double>(j, "eval_threshold", cfg.eval_threshold);
    cfg.topk = get_or<std::vector<std::size_t>>(j, "topk", {});
    cfg.output_dir = get_or<std::string>(j, "output_dir", "");
    return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["mode"] = cfg.federated_mode ? "federated" : "centralized";
    if (cfg.synth.has_value()) {
        j["synth"] = synth_config_to_json(*cfg.synth);
    } else {
        j["dataset"] = cfg.dataset_path;
    }
    j["model"] = {{"family", family_name(cfg.family)},
                  {"hidden", cfg.hidden},
                  {"res_blocks", cfg.res_blocks},
                  {"dropout_p", cfg.dropout_p}};
    j["train"] = train_config_to_json(cfg.train);
    if (cfg.federated_mode) {
        j["federated"] = {{"n_clients", cfg.fed.n_clients},
                          {"rounds", cfg.fed.rounds},
                          {"fraction_fit", cfg.fed.fraction_fit},
                          {"fraction_evaluate", cfg.fed.fraction_evaluate},
                          {"min_available_clients", cfg.fed.min_available_clients},
                          {"min_fit_clients", cfg.fed.min_fit_clients},
                          {"min_evaluate_clients", cfg.fed.min_evaluate_clients},
                          {"local_epochs", cfg.fed.local_epochs},
                          {"reset_optimizer_each_round", cfg.fed.reset_optimizer_each_round},
                          {"parallel_clients", cfg.fed.parallel_clients},
                          {"evaluate_on_local", cfg.fed.evaluate_on_local},
                          {"wire_loopback", cfg.fed.wire_loopback}};
    }
    j["split"] = {{"ratios", {cfg.ratios[0], cfg.ratios[1], cfg.ratios[2]}},
                  {"min_label_count", cfg.min_label_count}};
    j["seed"] = cfg.seed;
    j["n_repeats"] = cfg.n_repeats;
    j["eval_threshold"] = cfg.eval_threshold;
    j["topk"] = cfg.topk;
    j["output_dir"] = cfg.output_dir;
    return j;
}

ModelSpec resolve_model_spec(const ExperimentConfig& cfg, std::size_t input_dim,
                             std::size_t output_dim) {
    ModelSpec spec;
    switch (cfg.family) {
        case ModelFamily::mlp: spec = ModelSpec::make_mlp(input_dim, output_dim); break;
        case ModelFamily::deep_mlp:
            spec = ModelSpec::make_deep_mlp(input_dim, output_dim);
            break;
        case ModelFamily::deep_res_mlp:
            spec = ModelSpec::make_deep_res_mlp(input_dim, output_dim);
            break;
    }
    if (!cfg.hidden.empty()) spec.hidden = cfg.hidden;
    spec.res_blocks = cfg.res_blocks;
    spec.dropout_p = cfg.dropout_p;
    spec.validate();
    return spec;
}

// ------------------------------------------------------------ report I/O

json report_to_json(const MetricsReport& rep) {
    return json{{"macro_precision", rep.macro_precision},
                {"macro_recall", rep.macro_recall},
                {"macro_f1", rep.macro_f1},
                {"micro_precision", rep.micro_precision},
                {"micro_recall", rep.micro_recall},
                {"micro_f1", rep.micro_f1},
                {"n_samples", rep.n_samples}};
}

std::vector<std::size_t> train_frequencies(const Matrix& y_train) {
    std::vector<std::size_t> freq(y_train.cols, 0);
    for (std::size_t i = 0; i < y_train.rows; ++i) {
        for (std::size_t j = 0; j < y_train.cols; ++j) {
            if (y_train.at(i, j) != 0.0) ++freq[j];
        }
    }
    return freq;
}

struct RepeatOutcome {
    MetricsReport test_report;
    double test_loss = 0.0;
    std::vector<std::pair<std::size_t, MetricsReport>> topk;
};

json repeat_to_json(const RepeatOutcome& out, std::uint64_t split_seed) {
    json j;
    j["split_seed"] = split_seed;
    j["test"] = report_to_json(out.test_report);
    j["test"]["loss"] = out.test_loss;
    json tk = json::object();
    for (const auto& [k, rep] : out.topk) tk[std::to_string(k)] = report_to_json(rep);
    j["topk"] = tk;
    return j;
}

json aggregate_repeats(const std::vector<RepeatOutcome>& outs) {
    auto stat = [&](auto getter) {
        double mean = 0.0;
        for (const auto& o : outs) mean += getter(o);
        mean /= static_cast<double>(outs.size());
        double var = 0.0;
        for (const auto& o : outs) {
            const double d = getter(o) - mean;
            var += d * d;
        }
        var /= static_cast<double>(outs.size());  // population std over the repeats
        return json{{"mean", mean}, {"std", std::sqrt(var)}};
    };
    json j;
    j["macro_precision"] = stat([](const auto& o) { return o.test_report.macro_precision; });
    j["macro_recall"] = stat([](const auto& o) { return o.test_report.macro_recall; });
    j["macro_f1"] = stat([](const auto& o) { return o.test_report.macro_f1; });
    j["micro_precision"] = stat([](const auto& o) { return o.test_report.micro_precision; });
    j["micro_recall"] = stat([](const auto& o) { return o.test_report.micro_recall; });
    j["micro_f1"] = stat([](const auto& o) { return o.test_report.micro_f1; });
    j["loss"] = stat([](const auto& o) { return o.test_loss; });
    return j;
}

std::string human_report(const ExperimentConfig& cfg, const std::vector<RepeatOutcome>& outs,
                         const json& aggregate) {
    std::string text;
    text += std::string("mode ") + (cfg.federated_mode ? "federated" : "centralized") + "\n";
    text += "repeats " + std::to_string(outs.size()) + "\n";
    if (outs.size() == 1) {
        text += report_to_kv(outs.front().test_report);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "test_loss %.6f\n", outs.front().test_loss);
        text += buf;
        for (const auto& [k, rep] : outs.front().topk) {
            text += report_to_kv(rep, "top" + std::to_string(k) + "_");
        }
    } else {
        for (const auto& key : {"macro_precision", "macro_recall", "macro_f1",
                                "micro_precision", "micro_recall", "micro_f1"}) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%s %.4f ± %.4f\n", key,
                          aggregate.at(key).at("mean").get<double>(),
                          aggregate.at(key).at("std").get<double>());
            text += buf;
        }
    }
    return text;
}

// ----------------------------------------------------------- cmd: synth

int cmd_synth(const GlobalFlags& flags, const std::string& out_path) {
    SynthConfig cfg;
    if (flags.config.has_value()) cfg = parse_synth_config(load_json_file(*flags.config));
    if (flags.seed.has_value()) cfg.seed = *flags.seed;
    cfg.validate();
    const EmbeddingDataset ds = generate(cfg);
    save_dataset(ds, out_path);
    if (!flags.quiet) {
        std::vector<std::size_t> support = label_support(ds);
        std::sort(support.begin(), support.end());
        auto quantile = [&](double q) {
            return support[static_cast<std::size_t>(q * static_cast<double>(support.size() - 1))];
        };
        std::cout << "wrote " << out_path << ": " << ds.size() << " samples, dim "
                  << ds.dim() << ", " << ds.vocab.size() << " labels\n"
                  << "label support min/p25/median/p75/max: " << support.front() << "/"
                  << quantile(0.25) << "/" << quantile(0.5) << "/" << quantile(0.75) << "/"
                  << support.back() << "\n";
    }
    return 0;
}

// --------------------------------------------------------- cmd: prepare

int cmd_prepare(const GlobalFlags& flags, const std::string& in_path,
                const std::string& out_dir, std::size_t min_count,
                const std::vector<double>& ratio_args) {
    std::array<double, 3> ratios{0.70, 0.15, 0.15};
    if (!ratio_args.empty()) {
        if (ratio_args.size() != 3) throw ConfigError("--ratios needs exactly 3 values");
        std::copy(ratio_args.begin(), ratio_args.end(), ratios.begin());
    }
    const std::uint64_t seed = flags.seed.value_or(1);
    const EmbeddingDataset raw = load_dataset(in_path);
    const EmbeddingDataset ds = filter_rare_labels(raw, min_count);
    const SplitIndices split = stratified_split(ds, ratios, seed);
    const LabelVocabulary vocab = build_vocabulary(ds, split.train);
    const StandardizerParams stdz = fit_standardizer(gather_rows(ds.x, split.train));

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    save_dataset(ds, (dir / "filtered.femb").string());

    json splits;
    splits["train"] = split.train;
    splits["val"] = split.val;
    splits["test"] = split.test;
    splits["seed"] = seed;
    splits["ratios"] = {ratios[0], ratios[1], ratios[2]};
    write_text_file(dir / "splits.json", splits.dump(2) + "\n");

    json sj;
    sj["mean"] = stdz.mean;
    sj["std"] = stdz.std_dev;
    write_text_file(dir / "standardizer.json", sj.dump(2) + "\n");

    // vocabulary with training-split support, for Top-K frequency ranking
    std::vector<std::size_t> support(vocab.size(), 0);
    for (std::size_t i : split.train) {
        for (std::uint32_t id : ds.labels[i]) {
            const auto pos = vocab.find(ds.vocab.codes[id]);
            if (pos.has_value()) ++support[*pos];
        }
    }
    std::string vocab_text;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        vocab_text += vocab.codes[i] + "\t" + std::to_string(support[i]) + "\n";
    }
    write_text_file(dir / "vocab.tsv", vocab_text);

    if (!flags.quiet) {
        std::cout << "filtered " << raw.size() << " -> " << ds.size() << " samples, "
                  << raw.vocab.size() << " -> " << ds.vocab.size() << " labels (min support "
                  << min_count << ")\n"
                  << "splits train/val/test: " << split.train.size() << "/"
                  << split.val.size() << "/" << split.test.size() << "\n"
                  << "artifacts in " << out_dir << "\n";
    }
    return 0;
}

// ------------------------------------------------------------ cmd: train

struct PreparedSplit {
    Matrix x_train, y_train, x_val, y_val, x_test, y_test;
    std::vector<std::size_t> train_freq;
    std::size_t n_labels = 0;
};

PreparedSplit prepare_split(const EmbeddingDataset& ds, const ExperimentConfig& cfg,
                            std::uint64_t split_seed, bool quiet) {
    const SplitIndices split = stratified_split(ds, cfg.ratios, split_seed);
    const LabelVocabulary vocab = build_vocabulary(ds, split.train);
    if (vocab.size() == 0) throw DataError("train: empty training vocabulary");
    const StandardizerParams stdz = fit_standardizer(gather_rows(ds.x, split.train));

    PreparedSplit out;
    out.n_labels = vocab.size();
    out.x_train = apply_standardizer(gather_rows(ds.x, split.train), stdz);
    out.x_val = apply_standardizer(gather_rows(ds.x, split.val), stdz);
    out.x_test = apply_standardizer(gather_rows(ds.x, split.test), stdz);
    const BinarizeResult ytr = binarize_rows(ds, split.train, vocab);
    const BinarizeResult yva = binarize_rows(ds, split.val, vocab);
    const BinarizeResult yte = binarize_rows(ds, split.test, vocab);
    if (!quiet && yva.unknown_count + yte.unknown_count > 0) {
        std::cout << "note: dropped " << yva.unknown_count + yte.unknown_count
                  << " label occurrences outside the training vocabulary\n";
    }
    out.y_train = ytr.y;
    out.y_val = yva.y;
    out.y_test = yte.y;
    out.train_freq = train_frequencies(out.y_train);
    return out;
}

json epoch_log_to_json(const EpochLog& log) {
    json j;
    j["epoch"] = log.epoch;
    j["loss"] = log.mean_train_loss;
    j["lr"] = log.lr;
    if (log.has_val) {
        j["val_loss"] = log.val_loss;
        j["val_macro_f1"] = log.val_report.macro_f1;
        j["val_micro_f1"] = log.val_report.micro_f1;
    }
    return j;
}

json round_record_to_json(const RoundRecord& rec) {
    char checksum[24];
    std::snprintf(checksum, sizeof(checksum), "%016llx",
                  static_cast<unsigned long long>(rec.checksum));
    json j;
    j["round"] = rec.round;
    j["fit_clients"] = rec.fit_clients;
    j["train_loss"] = rec.weighted_train_loss;
    j["eval_clients"] = rec.eval_clients;
    j["val_macro_f1"] = rec.eval.macro_f1;
    j["val_micro_f1"] = rec.eval.micro_f1;
    j["val_loss"] = rec.eval.loss;
    j["checksum"] = checksum;
    return j;
}

int cmd_train(const GlobalFlags& flags, std::optional<std::size_t> repeats_flag) {
    if (!flags.config.has_value()) throw ConfigError("train: --config is required");
    ExperimentConfig cfg = parse_experiment_config(load_json_file(*flags.config));
    if (flags.seed.has_value()) cfg.seed = *flags.seed;
    if (flags.out.has_value()) cfg.output_dir = *flags.out;
    if (repeats_flag.has_value()) cfg.n_repeats = *repeats_flag;
    if (cfg.n_repeats < 1) throw ConfigError("train: --repeats must be >= 1");
    if (cfg.output_dir.empty()) throw ConfigError("train: output_dir (or --out) is required");

    EmbeddingDataset ds;
    if (cfg.synth.has_value()) {
        ds = generate(*cfg.synth);
    } else {
        cfg.dataset_path = fs::absolute(cfg.dataset_path).string();
        ds = load_dataset(cfg.dataset_path);
    }
    ds = filter_rare_labels(ds, cfg.min_label_count);

    fs::create_directories(cfg.output_dir);
    cfg.output_dir = fs::absolute(cfg.output_dir).string();
    const fs::path dir(cfg.output_dir);
    write_text_file(dir / "config.json", experiment_config_to_json(cfg).dump(2) + "\n");

    std::vector<RepeatOutcome> outcomes;
    json repeats_json = json::array();
    for (std::size_t rep = 0; rep < cfg.n_repeats; ++rep) {
        const std::uint64_t split_seed = cfg.seed + rep;
        const PreparedSplit data = prepare_split(ds, cfg, split_seed, flags.quiet);
        const ModelSpec spec = resolve_model_spec(cfg, ds.dim(), data.n_labels);

        ModelParams model = build_model(spec, mix_seed(split_seed, kSaltModel));
        if (cfg.federated_mode) {
            FedConfig fed = cfg.fed;
            fed.train = cfg.train;
            fed.train.eval_threshold = cfg.eval_threshold;
            fed.seed = mix_seed(split_seed, kSaltFed);
            fed.model_seed = mix_seed(split_seed, kSaltModel);
            FedData fd;
            fd.x_train = data.x_train;
            fd.y_train = data.y_train;
            std::vector<std::size_t> positions(data.x_train.rows);
            for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
            fd.partitions = partition_clients(positions, fed.n_clients,
                                              mix_seed(split_seed, kSaltPartition));
            fd.x_val = data.x_val;
            fd.y_val = data.y_val;
            const fs::path log_path = dir / ("rounds_r" + std::to_string(rep) + ".jsonl");
            std::ofstream log_out(log_path, std::ios::trunc);
            if (!log_out) throw DataError("cannot write file: " + log_path.string());
            FedResult res = run_federated(fed, spec, fd, [&](const RoundRecord& rec) {
                log_out << round_record_to_json(rec).dump() << "\n" << std::flush;
            });
            model = std::move(res.model);
        } else {
            TrainConfig tc = cfg.train;
            tc.seed = mix_seed(split_seed, kSaltTrain);
            tc.eval_threshold = cfg.eval_threshold;
            const fs::path log_path = dir / ("epochs_r" + std::to_string(rep) + ".jsonl");
            std::ofstream log_out(log_path, std::ios::trunc);
            if (!log_out) throw DataError("cannot write file: " + log_path.string());
            train_model(model, data.x_train, data.y_train, &data.x_val, &data.y_val, tc,
                        [&](const EpochLog& log) {
                            log_out << epoch_log_to_json(log).dump() << "\n" << std::flush;
                        });
        }

        RepeatOutcome out;
        auto [report, loss] =
            evaluate_model(model, data.x_test, data.y_test, cfg.eval_threshold, cfg.train.loss);
        out.test_report = std::move(report);
        out.test_loss = loss;
        const Matrix probs = forward_eval(model, data.x_test);
        const Matrix pred = threshold_predictions(probs, cfg.eval_threshold);
        for (std::size_t k : cfg.topk) {
            if (k > data.n_labels) {
                throw ConfigError("train: topk " + std::to_string(k) + " exceeds " +
                                  std::to_string(data.n_labels) + " labels");
            }
            out.topk.emplace_back(k, topk_report(data.y_test, pred, data.train_freq, k));
        }
        repeats_json.push_back(repeat_to_json(out, split_seed));
        outcomes.push_back(std::move(out));

        if (rep + 1 == cfg.n_repeats) {
            save_checkpoint_file(model, (dir / "model.ckpt").string());
        }
    }

    json report;
    report["mode"] = cfg.federated_mode ? "federated" : "centralized";
    report["n_repeats"] = cfg.n_repeats;
    report["threshold"] = cfg.eval_threshold;
    report["repeats"] = repeats_json;
    report["aggregate"] = aggregate_repeats(outcomes);
    write_text_file(dir / "report.json", report.dump(2) + "\n");
    const std::string human = human_report(cfg, outcomes, report["aggregate"]);
    write_text_file(dir / "report.txt", human);
    if (!flags.quiet) {
        std::cout << "run directory: " << cfg.output_dir << "\n" << human;
    }
    return 0;
}

// ------------------------------------------------------------- cmd: eval

int cmd_eval(const GlobalFlags& flags, const std::string& checkpoint_path,
             const std::string& dataset_path, const std::string& standardizer_path,
             const std::string& vocab_path, const std::vector<std::size_t>& topk,
             double threshold) {
    const ModelParams model = load_checkpoint_file(checkpoint_path);
    const EmbeddingDataset ds = load_dataset(dataset_path);

    const json sj = load_json_file(standardizer_path);
    StandardizerParams stdz;
    stdz.mean = get_or<std::vector<double>>(sj, "mean", {});
    stdz.std_dev = get_or<std::vector<double>>(sj, "std", {});
    if (stdz.mean.empty() || stdz.mean.size() != stdz.std_dev.size()) {
        throw ConfigError("eval: standardizer file needs equal-length mean/std arrays");
    }

    LabelVocabulary vocab;
    std::vector<std::size_t> support;
    {
        std::ifstream in(vocab_path);
        if (!in) throw DataError("cannot open vocabulary file: " + vocab_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const std::size_t tab = line.find('\t');
            if (tab == std::string::npos) {
                vocab.codes.push_back(line);
                support.push_back(0);
            } else {
                vocab.codes.push_back(line.substr(0, tab));
                support.push_back(static_cast<std::size_t>(std::stoull(line.substr(tab + 1))));
            }
        }
        vocab.validate();
    }

    if (ds.dim() != model.spec.input_dim) {
        throw DimensionError("eval: dataset dim " + std::to_string(ds.dim()) +
                             " vs checkpoint input_dim " +
                             std::to_string(model.spec.input_dim));
    }
    if (vocab.size() != model.spec.output_dim) {
        throw DimensionError("eval: vocabulary size " + std::to_string(vocab.size()) +
                             " vs checkpoint output_dim " +
                             std::to_string(model.spec.output_dim));
    }
    if (stdz.mean.size() != ds.dim()) {
        throw DimensionError("eval: standardizer dim " + std::to_string(stdz.mean.size()) +
                             " vs dataset dim " + std::to_string(ds.dim()));
    }

    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const Matrix x = apply_standardizer(ds.x, stdz);
    const BinarizeResult by = binarize_rows(ds, all, vocab);
    if (!flags.quiet && by.unknown_count > 0) {
        std::cout << "note: dropped " << by.unknown_count
                  << " label occurrences outside the vocabulary\n";
    }

    const Matrix probs = forward_eval(model, x);
    const Matrix pred = threshold_predictions(probs, threshold);
    const MetricsReport rep = compute_report(by.y, pred);

    std::string text = report_to_kv(rep);
    json out_json;
    out_json["metrics"] = report_to_json(rep);
    out_json["topk"] = json::object();
    for (std::size_t k : topk) {
        if (k > vocab.size()) {
            throw ConfigError("eval: topk " + std::to_string(k) + " exceeds " +
                              std::to_string(vocab.size()) + " labels");
        }
        const MetricsReport tk = topk_report(by.y, pred, support, k);
        text += report_to_kv(tk, "top" + std::to_string(k) + "_");
        out_json["topk"][std::to_string(k)] = report_to_json(tk);
    }
    std::cout << text;
    if (flags.out.has_value()) {
        fs::create_directories(*flags.out);
        write_text_file(fs::path(*flags.out) / "report.txt", text);
        write_text_file(fs::path(*flags.out) / "report.json", out_json.dump(2) + "\n");
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"federated multi-label classifier on precomputed embeddings"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    std::uint64_t seed_value = 0;
    std::string out_value, config_value;
    auto* seed_opt = app.add_option("--seed", seed_value, "seed override");
    auto* out_opt = app.add_option("--out", out_value, "output path/directory");
    auto* config_opt = app.add_option("--config", config_value, "config file (JSON)");
    app.add_flag("--quiet", flags.quiet, "suppress informational output");

    auto* synth = app.add_subcommand("synth", "generate a synthetic embedding dataset");
    auto* prepare = app.add_subcommand("prepare", "filter, split, and fit preprocessing");
    std::string prep_in;
    std::size_t prep_min_count = 200;
    std::vector<double> prep_ratios;
    prepare->add_option("--in", prep_in, "input dataset (FEMB or text)")->required();
    prepare->add_option("--min-count", prep_min_count, "minimum samples per label");
    prepare->add_option("--ratios", prep_ratios, "train/val/test ratios")->expected(3);

    auto* train = app.add_subcommand("train", "run a training experiment");
    std::size_t repeats_value = 0;
    auto* repeats_opt =
        train->add_option("--repeats", repeats_value, "number of stratified re-splits");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string eval_ckpt, eval_ds, eval_std, eval_vocab;
    std::vector<std::size_t> eval_topk;
    double eval_threshold = 0.5;
    eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    eval->add_option("--dataset", eval_ds, "dataset file")->required();
    eval->add_option("--standardizer", eval_std, "standardizer JSON")->required();
    eval->add_option("--vocab", eval_vocab, "vocabulary file")->required();
    eval->add_option("--topk", eval_topk, "Top-K block(s) to report");
    eval->add_option("--threshold", eval_threshold, "decision threshold");

    std::vector<std::string> argv_like = args;
    std::reverse(argv_like.begin(), argv_like.end());
    try {
        app.parse(argv_like);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (seed_opt->count() > 0) flags.seed = seed_value;
    if (out_opt->count() > 0) flags.out = out_value;
    if (config_opt->count() > 0) flags.config = config_value;

    try {
        if (synth->parsed()) {
            if (!flags.out.has_value()) throw ConfigError("synth: --out is required");
            return cmd_synth(flags, *flags.out);
        }
        if (prepare->parsed()) {
            if (!flags.out.has_value()) throw ConfigError("prepare: --out is required");
            return cmd_prepare(flags, prep_in, *flags.out, prep_min_count, prep_ratios);
        }
        if (train->parsed()) {
            std::optional<std::size_t> repeats;
            if (repeats_opt->count() > 0) repeats = repeats_value;
            return cmd_train(flags, repeats);
        }
        if (eval->parsed()) {
            return cmd_eval(flags, eval_ckpt, eval_ds, eval_std, eval_vocab, eval_topk,
                            eval_threshold);
        }
        std::cerr << "error: no subcommand given\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 4;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace fedmlc::cli
