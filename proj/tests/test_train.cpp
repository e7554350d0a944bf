#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "fedmlc/dataset.hpp"
#include "fedmlc/synthgen.hpp"
#include "fedmlc/train.hpp"

using namespace fedmlc;

namespace {

struct Prepared {
    Matrix x;
    Matrix y;
};

Prepared standardized_synth(const SynthConfig& cfg) {
    const EmbeddingDataset ds = generate(cfg);
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    LabelVocabulary vocab = build_vocabulary(ds, all);
    const StandardizerParams stdz = fit_standardizer(ds.x);
    return {apply_standardizer(ds.x, stdz), binarize_rows(ds, all, vocab).y};
}

// 1-in, 1-out network that thresholds its input: relu kills negatives, the
// output affine pushes the survivors far past the sigmoid knee.
ModelParams oracle_model() {
    ModelSpec spec{ModelFamily::mlp, 1, 1, {1}, 2, 0.0};
    ModelParams m = build_model(spec, 1);
    m.params[0].data[0] = 1000.0;  // W1
    m.params[1].data[0] = 0.0;     // b1
    m.params[2].data[0] = 1000.0;  // W2
    m.params[3].data[0] = -500.0;  // b2
    return m;
}

}  // namespace

TEST_CASE("zero epochs change nothing") {
    const SynthConfig cfg{.n_samples = 40, .dim = 6, .n_labels = 4, .seed = 2};
    const Prepared data = standardized_synth(cfg);
    ModelParams model = build_model(ModelSpec{ModelFamily::mlp, 6, 4, {8}, 2, 0.1}, 3);
    const std::vector<double> before = flatten_state(model);
    TrainConfig tc;
    tc.epochs = 0;
    const auto logs = train_model(model, data.x, data.y, nullptr, nullptr, tc);
    CHECK(logs.empty());
    CHECK(flatten_state(model) == before);
}

TEST_CASE("training is bitwise deterministic in the seeds") {
    const SynthConfig cfg{.n_samples = 60, .dim = 6, .n_labels = 4, .seed = 5};
    const Prepared data = standardized_synth(cfg);
    const ModelSpec spec{ModelFamily::deep_mlp, 6, 4, {8, 8, 8}, 2, 0.1};
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 16;
    tc.seed = 11;

    ModelParams a = build_model(spec, 7);
    ModelParams b = build_model(spec, 7);
    const auto la = train_model(a, data.x, data.y, nullptr, nullptr, tc);
    const auto lb = train_model(b, data.x, data.y, nullptr, nullptr, tc);
    CHECK(flatten_state(a) == flatten_state(b));
    REQUIRE(la.size() == lb.size());
    for (std::size_t e = 0; e < la.size(); ++e) {
        CHECK(la[e].mean_train_loss == lb[e].mean_train_loss);
    }
}

TEST_CASE("loss trends down on an easy synthetic problem") {
    SynthConfig cfg;
    cfg.n_samples = 2000;
    cfg.dim = 64;
    cfg.n_labels = 16;
    cfg.noise_sigma = 0.05;
    cfg.seed = 8;
    const Prepared data = standardized_synth(cfg);
    ModelParams model = build_model(ModelSpec{ModelFamily::mlp, 64, 16, {64}, 2, 0.1}, 9);
    TrainConfig tc;
    tc.epochs = 10;
    tc.seed = 10;
    const auto logs = train_model(model, data.x, data.y, nullptr, nullptr, tc);
    REQUIRE(logs.size() == 10);
    CHECK(logs[9].mean_train_loss < logs[0].mean_train_loss);
}

TEST_CASE("per-epoch lr equals the cosine schedule exactly") {
    const SynthConfig cfg{.n_samples = 30, .dim = 4, .n_labels = 3, .seed = 4};
    const Prepared data = standardized_synth(cfg);
    ModelParams model = build_model(ModelSpec{ModelFamily::mlp, 4, 3, {4}, 2, 0.1}, 5);
    TrainConfig tc;
    tc.epochs = 5;
    tc.lr_max = 3e-3;
    const auto logs = train_model(model, data.x, data.y, nullptr, nullptr, tc);
    for (std::size_t e = 0; e < 5; ++e) {
        CHECK(logs[e].epoch == e);
        CHECK(logs[e].lr == cosine_lr(e, 5, 3e-3, 0.0));
    }
}

TEST_CASE("chunked training with schedule offsets replays one uninterrupted run") {
    const SynthConfig cfg{.n_samples = 50, .dim = 6, .n_labels = 4, .seed = 12};
    const Prepared data = standardized_synth(cfg);
    const ModelSpec spec{ModelFamily::mlp, 6, 4, {8}, 2, 0.1};
    TrainConfig full;
    full.epochs = 6;
    full.seed = 77;
    ModelParams a = build_model(spec, 13);
    train_model(a, data.x, data.y, nullptr, nullptr, full);

    ModelParams b = build_model(spec, 13);
    for (std::size_t chunk = 0; chunk < 3; ++chunk) {
        TrainConfig part = full;
        part.epochs = 2;
        part.schedule_offset = chunk * 2;
        part.schedule_total = 6;
        train_model(b, data.x, data.y, nullptr, nullptr, part);
    }
    CHECK(flatten_state(a) == flatten_state(b));
}

TEST_CASE("evaluation is pure and never mutates the model") {
    const SynthConfig cfg{.n_samples = 80, .dim = 6, .n_labels = 4, .seed = 20};
    const Prepared data = standardized_synth(cfg);
    ModelParams model =
        build_model(ModelSpec{ModelFamily::deep_mlp, 6, 4, {8, 8, 8}, 2, 0.1}, 21);
    const std::vector<double> before = flatten_state(model);
    const auto [r1, l1] = evaluate_model(model, data.x, data.y, 0.5, HybridLossConfig{});
    const auto [r2, l2] = evaluate_model(model, data.x, data.y, 0.5, HybridLossConfig{});
    CHECK(flatten_state(model) == before);
    CHECK(l1 == l2);
    CHECK(r1.micro_f1 == r2.micro_f1);
    CHECK(r1.macro_f1 == r2.macro_f1);
}

TEST_CASE("a model that reproduces the targets scores F1 = 1 at loss near the clamp floor") {
    const ModelParams model = oracle_model();
    Matrix x(2, 1);
    x.data = {1.0, -1.0};
    Matrix y(2, 1);
    y.data = {1.0, 0.0};
    const auto [report, loss] = evaluate_model(model, x, y, 0.5, HybridLossConfig{});
    CHECK(report.micro_f1 == 1.0);
    CHECK(report.macro_f1 == 1.0);
    CHECK(loss < 1e-5);
}

TEST_CASE("an untrained model on balanced random data sits strictly inside (0,1)") {
    RngStream rng(30);
    Matrix x(64, 8);
    for (double& v : x.data) v = rng.gaussian();
    Matrix y(64, 4);
    for (double& v : y.data) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const ModelParams model = build_model(ModelSpec{ModelFamily::mlp, 8, 4, {16}, 2, 0.1}, 31);
    const auto [report, loss] = evaluate_model(model, x, y, 0.5, HybridLossConfig{});
    CHECK(report.micro_f1 > 0.0);
    CHECK(report.micro_f1 < 1.0);
}

TEST_CASE("full-batch training tolerates row order up to float reassociation") {
    const SynthConfig cfg{.n_samples = 32, .dim = 5, .n_labels = 3, .seed = 40};
    const Prepared data = standardized_synth(cfg);
    // dropout 0: masks are positional, so a row permutation would otherwise
    // change which mask lands on which sample
    const ModelSpec spec{ModelFamily::mlp, 5, 3, {6}, 2, 0.0};
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 32;  // full batch
    tc.seed = 41;

    ModelParams a = build_model(spec, 42);
    train_model(a, data.x, data.y, nullptr, nullptr, tc);

    RngStream perm_rng(43);
    const std::vector<std::size_t> perm = perm_rng.permutation(32);
    const Matrix xp = gather_rows(data.x, perm);
    const Matrix yp = gather_rows(data.y, perm);
    ModelParams b = build_model(spec, 42);
    train_model(b, xp, yp, nullptr, nullptr, tc);

    const std::vector<double> fa = flatten_state(a);
    const std::vector<double> fb = flatten_state(b);
    REQUIRE(fa.size() == fb.size());
    for (std::size_t i = 0; i < fa.size(); ++i) {
        CHECK(fa[i] == doctest::Approx(fb[i]).epsilon(1e-9));
    }
}

TEST_CASE("a trailing singleton batch is merged into the previous batch") {
    const SynthConfig cfg{.n_samples = 33, .dim = 4, .n_labels = 3, .seed = 50};
    const Prepared data = standardized_synth(cfg);
    // 33 rows at batch 16 would leave a trailing batch of 1, which batch-norm
    // cannot take; the merge makes deep_mlp trainable at this size
    ModelParams model =
        build_model(ModelSpec{ModelFamily::deep_mlp, 4, 3, {4, 4, 4}, 2, 0.1}, 51);
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 16;
    const auto logs = train_model(model, data.x, data.y, nullptr, nullptr, tc);
    CHECK(logs.size() == 1);
}

TEST_CASE("non-finite loss raises a divergence error naming the batch") {
    const SynthConfig cfg{.n_samples = 20, .dim = 4, .n_labels = 3, .seed = 60};
    const Prepared data = standardized_synth(cfg);
    ModelParams model = build_model(ModelSpec{ModelFamily::mlp, 4, 3, {4}, 2, 0.1}, 61);
    // poison the output affine: a NaN in the first layer would be absorbed by
    // relu (NaN > 0 is false), never reaching the loss
    model.params[2].data[0] = std::numeric_limits<double>::quiet_NaN();
    TrainConfig tc;
    tc.epochs = 1;
    CHECK_THROWS_WITH_AS(train_model(model, data.x, data.y, nullptr, nullptr, tc),
                         "train: non-finite loss in epoch 0, batch 0", DivergenceError);
}

TEST_CASE("dimension mismatches are rejected up front") {
    ModelParams model = build_model(ModelSpec::make_mlp(4, 3), 1);
    TrainConfig tc;
    CHECK_THROWS_AS(train_model(model, Matrix(8, 5, 0.0), Matrix(8, 3, 0.0), nullptr,
                                nullptr, tc),
                    DimensionError);
    CHECK_THROWS_AS(evaluate_model(model, Matrix(8, 4, 0.0), Matrix(7, 3, 0.0), 0.5,
                                   HybridLossConfig{}),
                    DimensionError);
}
