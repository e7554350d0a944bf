#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedmlc/layers.hpp"
#include "fedmlc/matrix.hpp"
#include "fedmlc/rng.hpp"

namespace fedmlc {

enum class ModelFamily : std::uint8_t { mlp = 0, deep_mlp = 1, deep_res_mlp = 2 };

std::string family_name(ModelFamily f);
ModelFamily family_from_name(const std::string& name);

// Architecture description. hidden holds one width for mlp, three widths for
// deep_mlp, and the single block width for deep_res_mlp (block count is
// res_blocks).
struct ModelSpec {
    ModelFamily family = ModelFamily::mlp;
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t res_blocks = 2;  // deep_res_mlp only
    double dropout_p = 0.1;

    void validate() const;

    static ModelSpec make_mlp(std::size_t in, std::size_t out);           // hidden 896
    static ModelSpec make_deep_mlp(std::size_t in, std::size_t out);      // 1024/544/512
    static ModelSpec make_deep_res_mlp(std::size_t in, std::size_t out);  // width 1024, 2 blocks
};

enum class OpKind : std::uint8_t {
    affine,
    batchnorm,
    relu_act,
    sigmoid_act,
    dropout_op,
    res_save,  // remember the activation entering a residual block
    res_add,   // add the remembered activation back in
};

struct LayerOp {
    OpKind kind;
    int param_index = -1;  // affine: W (bias at +1); batchnorm: scale (shift at +1)
    int stats_index = -1;  // batchnorm running-stats slot
};

// One model instance: op list, parameter tensors in build order, matching
// gradient buffers and optimizer state, and batch-norm running stats.
struct ModelParams {
    ModelSpec spec;
    std::vector<LayerOp> ops;
    std::vector<Matrix> params;
    std::vector<Matrix> grads;
    std::vector<AdamWState> opt;
    std::vector<BatchNormRunningStats> bn_stats;

    std::size_t scalar_count() const;
};

// Deterministic in seed: Kaiming-uniform for affines feeding ReLU, Xavier for
// the output layer, zero biases, unit batch-norm scale. Initial values are
// rounded to 32-bit float precision so a freshly built model survives the
// 32-bit checkpoint codec bitwise.
ModelParams build_model(const ModelSpec& spec, std::uint64_t seed);

// Closed-form scalar count (biases and batch-norm scale/shift included,
// running stats excluded). Must equal the total allocated by build_model.
std::size_t count_parameters(const ModelSpec& spec);

struct ForwardCache {
    bool valid = false;
    std::vector<Matrix> acts;  // acts[0] = input, acts[k+1] = output of op k
    std::vector<Matrix> dropout_masks;
    std::vector<BatchNormCache> bn_caches;
};

// Train-mode forward: records the cache for backward, consumes rng for
// dropout masks, folds batch statistics into running stats.
Matrix forward_train(ModelParams& model, const Matrix& x, RngStream& rng,
                     ForwardCache& cache);

// Eval-mode forward: pure function of (params, x); dropout is the identity
// and batch-norm uses running stats.
Matrix forward_eval(const ModelParams& model, const Matrix& x);

// Populates model.grads from the loss gradient w.r.t. the output
// probabilities; returns the gradient w.r.t. the input. Consumes the cache.
Matrix backward(ModelParams& model, ForwardCache& cache, const Matrix& loss_grad);

// ------------------------------------------------------------- checkpoint

// Byte layout: magic "FTCK", u16 version=1, u8 family, u32 input_dim,
// u32 output_dim, u8 hidden count then u32 sizes (deep_res_mlp stores
// {width, block_count}), u64 scalar count, parameters as little-endian f32 in
// build order, then batch-norm running stats (mean, var per layer) likewise.
std::vector<std::uint8_t> save_checkpoint(const ModelParams& model);
ModelParams load_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint_file(const ModelParams& model, const std::string& path);
ModelParams load_checkpoint_file(const std::string& path);

// ------------------------------------------------- flat state for fedavg

// Trainable parameters followed by batch-norm running stats, in build order.
// This is the unit of exchange between federated clients and the server.
std::vector<double> flatten_state(const ModelParams& model);
void unflatten_state(ModelParams& model, const std::vector<double>& flat);

// Shapes of the tensors making up flatten_state, for the wire codec.
std::vector<std::vector<std::uint32_t>> state_tensor_shapes(const ModelParams& model);

std::uint64_t state_checksum(const std::vector<double>& flat);

}  // namespace fedmlc
