#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedmlc/matrix.hpp"

namespace fedmlc {

// Sorted, duplicate-free list of label code strings; a label id is its
// position in the list.
struct LabelVocabulary {
    std::vector<std::string> codes;

    std::size_t size() const { return codes.size(); }
    std::optional<std::size_t> find(const std::string& code) const;
    void validate() const;
};

// Fixed-dimension embedding matrix with per-sample label-id sets. Label id
// lists are strictly increasing and reference the attached vocabulary.
struct EmbeddingDataset {
    std::vector<std::string> sample_ids;
    Matrix x;  // n × dim
    std::vector<std::vector<std::uint32_t>> labels;
    LabelVocabulary vocab;

    std::size_t size() const { return sample_ids.size(); }
    std::size_t dim() const { return x.cols; }
    void validate() const;
};

// ------------------------------------------------------------------ codec

// Binary store: magic "FEMB", u16 version=1, u32 n_samples, u32 dim,
// u32 vocab_size; vocabulary then sample ids as u16-length-prefixed UTF-8;
// X as n×dim little-endian f32 row-major; per-sample u32 label count followed
// by u32 label ids. Embeddings therefore round-trip at 32-bit precision.
std::vector<std::uint8_t> encode_dataset(const EmbeddingDataset& ds);
EmbeddingDataset decode_dataset(const std::vector<std::uint8_t>& data);

void save_dataset(const EmbeddingDataset& ds, const std::string& path);

// Reads the binary store; falls back to the text import format when the file
// does not start with the FEMB magic.
EmbeddingDataset load_dataset(const std::string& path);

// One record per line, tab-delimited: sample id, comma-separated embedding
// values, semicolon-separated label codes (may be empty). Values are rounded
// to f32 precision to match the binary store.
EmbeddingDataset load_dataset_text(const std::string& path);

// --------------------------------------------------------- standardization

struct StandardizerParams {
    std::vector<double> mean;
    std::vector<double> std_dev;  // floored at 1e-8
};

// Per-feature mean and population standard deviation (÷n). Fit on the
// training rows only; validation and test are transformed with these.
StandardizerParams fit_standardizer(const Matrix& x_train);
Matrix apply_standardizer(const Matrix& x, const StandardizerParams& params);

// ------------------------------------------------------------- vocabulary

// Sorted unique codes appearing in the given training samples.
LabelVocabulary build_vocabulary(const EmbeddingDataset& ds,
                                 const std::vector<std::size_t>& train_indices);

// Multi-hot rows for the selected samples under `vocab`. Codes absent from
// the vocabulary are dropped and counted in unknown_count rather than failing.
struct BinarizeResult {
    Matrix y;  // |indices| × |vocab|
    std::size_t unknown_count = 0;
};

BinarizeResult binarize_rows(const EmbeddingDataset& ds,
                             const std::vector<std::size_t>& indices,
                             const LabelVocabulary& vocab);

// ---------------------------------------------------------------- filters

// Drops labels supported by fewer than min_count samples, then drops samples
// left without any label, and re-indexes. Idempotent at fixed min_count.
EmbeddingDataset filter_rare_labels(const EmbeddingDataset& ds,
                                    std::size_t min_count = 200);

std::vector<std::size_t> label_support(const EmbeddingDataset& ds);

// ------------------------------------------------------------------ splits

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

// Iterative stratification over the multi-label matrix: labels are processed
// rarest first, each sample goes to the split with the largest remaining
// per-label quota among splits with free capacity, remaining ties broken by
// the seeded rng. Split sizes match the ratios exactly up to rounding.
SplitIndices stratified_split(const EmbeddingDataset& ds,
                              const std::array<double, 3>& ratios, std::uint64_t seed);

// Seeded shuffle followed by near-equal contiguous slicing; client sizes
// differ by at most one.
std::vector<std::vector<std::size_t>> partition_clients(
    const std::vector<std::size_t>& train_indices, std::size_t n_clients,
    std::uint64_t seed);

// ----------------------------------------------------------------- helpers

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& indices);

}  // namespace fedmlc
