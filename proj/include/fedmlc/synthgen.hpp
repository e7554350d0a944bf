#pragma once

#include <cstdint>

#include "fedmlc/dataset.hpp"

namespace fedmlc {

// Synthetic embedding datasets with a controllable long-tail label profile.
// Each label owns a unit-norm Gaussian prototype; a sample's embedding is the
// mean of its labels' prototypes plus isotropic noise, so classifiers can
// provably separate the classes at low noise.
struct SynthConfig {
    std::size_t n_samples = 1000;
    std::size_t dim = 64;
    std::size_t n_labels = 16;
    double freq_exponent = 1.0;     // label ℓ drawn with weight (ℓ+1)^-freq_exponent
    double mean_cardinality = 2.0;  // labels per sample ~ max(1, Poisson(this))
    double noise_sigma = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
};

// Pure function of cfg; embeddings are rounded to f32 precision so in-memory
// datasets match their on-disk round trip bitwise.
EmbeddingDataset generate(const SynthConfig& cfg);

}  // namespace fedmlc
