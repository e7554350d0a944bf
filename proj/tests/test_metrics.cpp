#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedmlc/metrics.hpp"
#include "fedmlc/rng.hpp"

using namespace fedmlc;

namespace {

// Brute-force oracle: enumerate every cell, pool counts, apply the metric
// definitions directly. Kept independent of compute_report's internals.
MetricsReport brute_force(const Matrix& y_true, const Matrix& y_pred) {
    const std::size_t c = y_true.cols;
    std::vector<std::size_t> tp(c, 0), fp(c, 0), fn(c, 0);
    for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t i = 0; i < y_true.rows; ++i) {
            const bool t = y_true.at(i, j) != 0.0;
            const bool p = y_pred.at(i, j) != 0.0;
            if (t && p) ++tp[j];
            if (!t && p) ++fp[j];
            if (t && !p) ++fn[j];
        }
    }
    MetricsReport r;
    r.n_samples = y_true.rows;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    double mp = 0, mr = 0, mf = 0;
    std::size_t ptp = 0, pfp = 0, pfn = 0;
    for (std::size_t j = 0; j < c; ++j) {
        const double p = tp[j] + fp[j] == 0
                             ? 0.0
                             : static_cast<double>(tp[j]) / static_cast<double>(tp[j] + fp[j]);
        const double rr = tp[j] + fn[j] == 0
                              ? 0.0
                              : static_cast<double>(tp[j]) / static_cast<double>(tp[j] + fn[j]);
        mp += p;
        mr += rr;
        mf += (p + rr == 0.0) ? 0.0 : 2.0 * p * rr / (p + rr);
        ptp += tp[j];
        pfp += fp[j];
        pfn += fn[j];
    }
    r.macro_precision = c == 0 ? 0.0 : mp / static_cast<double>(c);
    r.macro_recall = c == 0 ? 0.0 : mr / static_cast<double>(c);
    r.macro_f1 = c == 0 ? 0.0 : mf / static_cast<double>(c);
    r.micro_precision =
        ptp + pfp == 0 ? 0.0 : static_cast<double>(ptp) / static_cast<double>(ptp + pfp);
    r.micro_recall =
        ptp + pfn == 0 ? 0.0 : static_cast<double>(ptp) / static_cast<double>(ptp + pfn);
    r.micro_f1 = (r.micro_precision + r.micro_recall == 0.0)
                     ? 0.0
                     : 2.0 * r.micro_precision * r.micro_recall /
                           (r.micro_precision + r.micro_recall);
    return r;
}

Matrix random_binary(std::size_t n, std::size_t c, double density, RngStream& rng) {
    Matrix m(n, c);
    for (double& v : m.data) v = rng.bernoulli(density) ? 1.0 : 0.0;
    return m;
}

}  // namespace

TEST_CASE("threshold examples") {
    Matrix probs(1, 3);
    probs.data = {0.5, 0.0, 0.9};
    CHECK(threshold_predictions(probs, 0.5).data == std::vector<double>{1.0, 0.0, 1.0});
    CHECK(threshold_predictions(Matrix(2, 2, 0.0), 0.5).data ==
          std::vector<double>{0.0, 0.0, 0.0, 0.0});
    CHECK(threshold_predictions(probs, 0.0).data == std::vector<double>{1.0, 1.0, 1.0});
    CHECK_THROWS_AS(threshold_predictions(probs, 1.5), ConfigError);
}

TEST_CASE("worked 2x3 confusion example") {
    Matrix y(2, 3), p(2, 3);
    y.data = {1, 0, 1, 0, 1, 0};
    p.data = {1, 1, 0, 0, 1, 0};
    const MetricsReport r = compute_report(y, p);
    CHECK(r.micro_precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.micro_recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.micro_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(std::fabs(r.macro_f1 - 0.5556) < 1e-4);
}

TEST_CASE("perfect and all-zero predictions") {
    RngStream rng(5);
    const Matrix y = random_binary(6, 5, 0.4, rng);
    const MetricsReport perfect = compute_report(y, y);
    CHECK(perfect.macro_precision == 1.0);
    CHECK(perfect.macro_recall == 1.0);
    CHECK(perfect.macro_f1 == 1.0);
    CHECK(perfect.micro_precision == 1.0);
    CHECK(perfect.micro_recall == 1.0);
    CHECK(perfect.micro_f1 == 1.0);

    Matrix y2(2, 2);
    y2.data = {1, 0, 1, 1};
    const MetricsReport zeros = compute_report(y2, Matrix(2, 2, 0.0));
    CHECK(zeros.micro_recall == 0.0);
    CHECK(zeros.micro_precision == 0.0);  // 0/0 convention
    CHECK(zeros.micro_f1 == 0.0);
}

TEST_CASE("compute_report equals brute force on 1000 random instances") {
    RngStream rng(314);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(20);
        const std::size_t c = 1 + rng.below(15);
        const Matrix y = random_binary(n, c, 0.3, rng);
        const Matrix p = random_binary(n, c, 0.3, rng);
        const MetricsReport a = compute_report(y, p);
        const MetricsReport b = brute_force(y, p);
        REQUIRE(a.tp == b.tp);
        REQUIRE(a.fp == b.fp);
        REQUIRE(a.fn == b.fn);
        REQUIRE(a.macro_precision == b.macro_precision);
        REQUIRE(a.macro_recall == b.macro_recall);
        REQUIRE(a.macro_f1 == b.macro_f1);
        REQUIRE(a.micro_precision == b.micro_precision);
        REQUIRE(a.micro_recall == b.micro_recall);
        REQUIRE(a.micro_f1 == b.micro_f1);
    }
}

TEST_CASE("metrics are invariant under sample permutation, macro under label permutation") {
    RngStream rng(999);
    const std::size_t n = 12, c = 7;
    const Matrix y = random_binary(n, c, 0.35, rng);
    const Matrix p = random_binary(n, c, 0.35, rng);
    const MetricsReport base = compute_report(y, p);

    const auto sample_perm = rng.permutation(n);
    Matrix ys(n, c), ps(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            ys.at(i, j) = y.at(sample_perm[i], j);
            ps.at(i, j) = p.at(sample_perm[i], j);
        }
    }
    const MetricsReport permuted = compute_report(ys, ps);
    CHECK(permuted.micro_f1 == base.micro_f1);
    CHECK(permuted.macro_f1 == base.macro_f1);

    const auto label_perm = rng.permutation(c);
    Matrix yl(n, c), pl(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            yl.at(i, j) = y.at(i, label_perm[j]);
            pl.at(i, j) = p.at(i, label_perm[j]);
        }
    }
    const MetricsReport relabeled = compute_report(yl, pl);
    CHECK(relabeled.macro_precision == doctest::Approx(base.macro_precision).epsilon(1e-14));
    CHECK(relabeled.macro_recall == doctest::Approx(base.macro_recall).epsilon(1e-14));
    CHECK(relabeled.macro_f1 == doctest::Approx(base.macro_f1).epsilon(1e-14));
}

TEST_CASE("all metrics live in [0,1] and micro-F1 is the harmonic mean") {
    RngStream rng(2718);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix y = random_binary(8, 6, 0.3, rng);
        const Matrix p = random_binary(8, 6, 0.3, rng);
        const MetricsReport r = compute_report(y, p);
        for (double v : {r.macro_precision, r.macro_recall, r.macro_f1, r.micro_precision,
                         r.micro_recall, r.micro_f1}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        const double pr = r.micro_precision + r.micro_recall;
        const double expected = pr == 0.0 ? 0.0 : 2.0 * r.micro_precision * r.micro_recall / pr;
        CHECK(r.micro_f1 == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("topk selects by training frequency with low-id tie-break") {
    Matrix y(1, 3, 0.0), p(1, 3, 0.0);
    const MetricsReport r = topk_report(y, p, {5, 3, 1}, 2);
    CHECK(r.label_subset == std::vector<std::size_t>{0, 1});

    const MetricsReport tie = topk_report(y, p, {3, 3, 3}, 2);
    CHECK(tie.label_subset == std::vector<std::size_t>{0, 1});
}

TEST_CASE("topk on the worked example restricted to labels 0 and 1") {
    Matrix y(2, 3), p(2, 3);
    y.data = {1, 0, 1, 0, 1, 0};
    p.data = {1, 1, 0, 0, 1, 0};
    // TP=2, FP=1, FN=0 over the subset
    const MetricsReport r = topk_report(y, p, {9, 8, 1}, 2);
    CHECK(r.micro_precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.micro_recall == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.micro_f1 == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("topk with K=C matches the full micro block") {
    RngStream rng(11);
    const Matrix y = random_binary(9, 5, 0.4, rng);
    const Matrix p = random_binary(9, 5, 0.4, rng);
    std::vector<std::size_t> freq{4, 9, 1, 7, 2};
    const MetricsReport full = compute_report(y, p);
    const MetricsReport tk = topk_report(y, p, freq, 5);
    CHECK(tk.micro_precision == full.micro_precision);
    CHECK(tk.micro_recall == full.micro_recall);
    CHECK(tk.micro_f1 == full.micro_f1);

    CHECK_THROWS_AS(topk_report(y, p, freq, 6), ConfigError);
}
