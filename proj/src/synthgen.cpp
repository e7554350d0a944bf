#include "fedmlc/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "fedmlc/rng.hpp"

namespace fedmlc {

void SynthConfig::validate() const {
    if (n_samples < 1) throw ConfigError("synth: n_samples must be >= 1");
    if (dim < 1) throw ConfigError("synth: dim must be >= 1");
    if (n_labels < 1) throw ConfigError("synth: n_labels must be >= 1");
    if (freq_exponent < 0.0) throw ConfigError("synth: freq_exponent must be >= 0");
    if (mean_cardinality < 1.0) throw ConfigError("synth: mean_cardinality must be >= 1");
    if (noise_sigma < 0.0) throw ConfigError("synth: noise_sigma must be >= 0");
}

namespace {

std::string padded(std::size_t value, std::size_t max_value, char prefix) {
    std::size_t width = 1;
    for (std::size_t v = max_value; v >= 10; v /= 10) ++width;
    std::string s = std::to_string(value);
    return prefix + std::string(width - s.size(), '0') + s;
}

}  // namespace

EmbeddingDataset generate(const SynthConfig& cfg) {
    cfg.validate();
    RngStream rng(mix_seed(cfg.seed, 0x73796e7468ULL));  // "synth"

    // Unit-norm Gaussian prototype per label.
    Matrix prototypes(cfg.n_labels, cfg.dim);
    for (std::size_t l = 0; l < cfg.n_labels; ++l) {
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < cfg.dim; ++j) {
            const double v = rng.gaussian();
            prototypes.at(l, j) = v;
            norm_sq += v * v;
        }
        const double inv_norm = 1.0 / std::sqrt(norm_sq);
        for (std::size_t j = 0; j < cfg.dim; ++j) prototypes.at(l, j) *= inv_norm;
    }

    std::vector<double> weight(cfg.n_labels);
    for (std::size_t l = 0; l < cfg.n_labels; ++l) {
        weight[l] = std::pow(static_cast<double>(l + 1), -cfg.freq_exponent);
    }

    EmbeddingDataset ds;
    ds.vocab.codes.reserve(cfg.n_labels);
    for (std::size_t l = 0; l < cfg.n_labels; ++l) {
        ds.vocab.codes.push_back(padded(l, cfg.n_labels - 1, 'L'));
    }
    ds.x = Matrix(cfg.n_samples, cfg.dim);
    ds.sample_ids.reserve(cfg.n_samples);
    ds.labels.resize(cfg.n_samples);

    std::vector<bool> chosen(cfg.n_labels);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        ds.sample_ids.push_back(padded(i, cfg.n_samples - 1, 's'));
        // shifted Poisson: always >= 1 and the mean stays exactly
        // mean_cardinality, so mean_cardinality = 1 pins one label per sample
        std::size_t k = 1 + static_cast<std::size_t>(rng.poisson(cfg.mean_cardinality - 1.0));
        k = std::min(k, cfg.n_labels);

        // Weighted draw without replacement.
        std::fill(chosen.begin(), chosen.end(), false);
        double total = 0.0;
        for (double w : weight) total += w;
        auto& labels = ds.labels[i];
        for (std::size_t pick = 0; pick < k; ++pick) {
            const double u = rng.uniform() * total;
            double cum = 0.0;
            std::size_t sel = cfg.n_labels - 1;
            for (std::size_t l = 0; l < cfg.n_labels; ++l) {
                if (chosen[l]) continue;
                cum += weight[l];
                if (u < cum) {
                    sel = l;
                    break;
                }
            }
            while (chosen[sel]) --sel;  // guard against cum rounding at the tail
            chosen[sel] = true;
            total -= weight[sel];
            labels.push_back(static_cast<std::uint32_t>(sel));
        }
        std::sort(labels.begin(), labels.end());

        const double inv_k = 1.0 / static_cast<double>(k);
        double* row = ds.x.row(i);
        for (std::uint32_t l : labels) {
            const double* proto = prototypes.row(l);
            for (std::size_t j = 0; j < cfg.dim; ++j) row[j] += proto[j];
        }
        for (std::size_t j = 0; j < cfg.dim; ++j) {
            double v = row[j] * inv_k;
            if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * rng.gaussian();
            row[j] = static_cast<double>(static_cast<float>(v));
        }
    }
    return ds;
}

}  // namespace fedmlc
