#include "fedmlc/models.hpp"

#include <cmath>
#include <fstream>

#include "bytes.hpp"

namespace fedmlc {

std::string family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::mlp: return "mlp";
        case ModelFamily::deep_mlp: return "deep_mlp";
        case ModelFamily::deep_res_mlp: return "deep_res_mlp";
    }
    throw ConfigError("unknown model family value");
}

ModelFamily family_from_name(const std::string& name) {
    if (name == "mlp") return ModelFamily::mlp;
    if (name == "deep_mlp") return ModelFamily::deep_mlp;
    if (name == "deep_res_mlp") return ModelFamily::deep_res_mlp;
    throw ConfigError("unknown model family \"" + name + "\"");
}

void ModelSpec::validate() const {
    if (input_dim < 1) throw ConfigError("model spec: input_dim must be >= 1");
    if (output_dim < 1) throw ConfigError("model spec: output_dim must be >= 1");
    if (hidden.empty()) throw ConfigError("model spec: hidden sizes must be non-empty");
    for (std::size_t h : hidden) {
        if (h < 1) throw ConfigError("model spec: hidden sizes must be >= 1");
    }
    if (dropout_p < 0.0 || dropout_p >= 1.0) {
        throw ConfigError("model spec: dropout_p must lie in [0, 1)");
    }
    switch (family) {
        case ModelFamily::mlp:
            if (hidden.size() != 1) {
                throw ConfigError("mlp expects exactly 1 hidden size, got " +
                                  std::to_string(hidden.size()));
            }
            break;
        case ModelFamily::deep_mlp:
            if (hidden.size() != 3) {
                throw ConfigError("deep_mlp expects exactly 3 hidden sizes, got " +
                                  std::to_string(hidden.size()));
            }
            break;
        case ModelFamily::deep_res_mlp:
            if (hidden.size() != 1) {
                throw ConfigError("deep_res_mlp expects exactly 1 width, got " +
                                  std::to_string(hidden.size()));
            }
            if (res_blocks < 1) {
                throw ConfigError("deep_res_mlp expects at least 1 residual block");
            }
            break;
    }
}

ModelSpec ModelSpec::make_mlp(std::size_t in, std::size_t out) {
    return ModelSpec{ModelFamily::mlp, in, out, {896}, 2, 0.1};
}

ModelSpec ModelSpec::make_deep_mlp(std::size_t in, std::size_t out) {
    return ModelSpec{ModelFamily::deep_mlp, in, out, {1024, 544, 512}, 2, 0.1};
}

ModelSpec ModelSpec::make_deep_res_mlp(std::size_t in, std::size_t out) {
    return ModelSpec{ModelFamily::deep_res_mlp, in, out, {1024}, 2, 0.1};
}

std::size_t ModelParams::scalar_count() const {
    std::size_t total = 0;
    for (const Matrix& p : params) total += p.size();
    return total;
}

// ----------------------------------------------------------- op assembly

namespace {

struct Builder {
    ModelParams model;

    void add_param(Matrix m) {
        model.grads.emplace_back(m.rows, m.cols);
        model.opt.push_back(AdamWState::like(m));
        model.params.push_back(std::move(m));
    }

    void affine_layer(std::size_t in, std::size_t out) {
        LayerOp op{OpKind::affine, static_cast<int>(model.params.size()), -1};
        add_param(Matrix(in, out));
        add_param(Matrix(1, out));
        model.ops.push_back(op);
    }

    void batchnorm_layer(std::size_t width) {
        LayerOp op{OpKind::batchnorm, static_cast<int>(model.params.size()),
                   static_cast<int>(model.bn_stats.size())};
        add_param(Matrix(1, width, 1.0));  // scale
        add_param(Matrix(1, width, 0.0));  // shift
        BatchNormRunningStats stats;
        stats.mean.assign(width, 0.0);
        stats.var.assign(width, 1.0);
        model.bn_stats.push_back(std::move(stats));
        model.ops.push_back(op);
    }

    void simple(OpKind kind) { model.ops.push_back(LayerOp{kind, -1, -1}); }
};

Builder assemble(const ModelSpec& spec) {
    spec.validate();
    Builder b;
    b.model.spec = spec;
    const std::size_t d = spec.input_dim;
    const std::size_t c = spec.output_dim;
    switch (spec.family) {
        case ModelFamily::mlp: {
            b.affine_layer(d, spec.hidden[0]);
            b.simple(OpKind::relu_act);
            b.simple(OpKind::dropout_op);
            b.affine_layer(spec.hidden[0], c);
            b.simple(OpKind::sigmoid_act);
            break;
        }
        case ModelFamily::deep_mlp: {
            std::size_t prev = d;
            for (std::size_t h : spec.hidden) {
                b.affine_layer(prev, h);
                b.batchnorm_layer(h);
                b.simple(OpKind::relu_act);
                b.simple(OpKind::dropout_op);
                prev = h;
            }
            b.affine_layer(prev, c);
            b.simple(OpKind::sigmoid_act);
            break;
        }
        case ModelFamily::deep_res_mlp: {
            const std::size_t w = spec.hidden[0];
            b.affine_layer(d, w);
            b.batchnorm_layer(w);
            b.simple(OpKind::relu_act);
            b.simple(OpKind::dropout_op);
            for (std::size_t blk = 0; blk < spec.res_blocks; ++blk) {
                b.simple(OpKind::res_save);
                b.affine_layer(w, w);
                b.batchnorm_layer(w);
                b.simple(OpKind::dropout_op);
                b.simple(OpKind::res_add);
                b.simple(OpKind::relu_act);
            }
            b.affine_layer(w, c);
            b.simple(OpKind::sigmoid_act);
            break;
        }
    }
    return b;
}

int last_affine_param_index(const ModelParams& model) {
    int last = -1;
    for (const LayerOp& op : model.ops) {
        if (op.kind == OpKind::affine) last = op.param_index;
    }
    return last;
}

double round_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

ModelParams build_model(const ModelSpec& spec, std::uint64_t seed) {
    ModelParams model = assemble(spec).model;
    RngStream rng(mix_seed(seed, 0x6d6f64656cULL));  // "model"
    const int output_w = last_affine_param_index(model);
    for (const LayerOp& op : model.ops) {
        if (op.kind != OpKind::affine) continue;
        Matrix& w = model.params[static_cast<std::size_t>(op.param_index)];
        const double fan_in = static_cast<double>(w.rows);
        const double fan_out = static_cast<double>(w.cols);
        // Kaiming uniform for ReLU-feeding layers, Xavier uniform for the
        // sigmoid output layer; biases stay zero.
        const double bound = op.param_index == output_w
                                 ? std::sqrt(6.0 / (fan_in + fan_out))
                                 : std::sqrt(6.0 / fan_in);
        for (double& v : w.data) v = round_f32(rng.uniform(-bound, bound));
    }
    return model;
}

std::size_t count_parameters(const ModelSpec& spec) {
    spec.validate();
    const std::size_t d = spec.input_dim;
    const std::size_t c = spec.output_dim;
    switch (spec.family) {
        case ModelFamily::mlp: {
            const std::size_t h = spec.hidden[0];
            return (d + 1) * h + (h + 1) * c;
        }
        case ModelFamily::deep_mlp: {
            std::size_t total = 0;
            std::size_t prev = d;
            for (std::size_t h : spec.hidden) {
                total += (prev + 1) * h + 2 * h;
                prev = h;
            }
            return total + (prev + 1) * c;
        }
        case ModelFamily::deep_res_mlp: {
            const std::size_t w = spec.hidden[0];
            std::size_t total = (d + 1) * w + 2 * w;
            total += spec.res_blocks * ((w + 1) * w + 2 * w);
            return total + (w + 1) * c;
        }
    }
    throw ConfigError("unknown model family value");
}

// ----------------------------------------------------------------- forward

namespace {

Matrix run_forward(const ModelParams& model, ModelParams* mutable_model, const Matrix& x,
                   Mode mode, RngStream* rng, ForwardCache* cache) {
    if (x.cols != model.spec.input_dim) {
        throw DimensionError("forward: input has " + std::to_string(x.cols) +
                             " columns, model expects " +
                             std::to_string(model.spec.input_dim));
    }
    if (cache != nullptr) {
        cache->valid = false;
        cache->acts.clear();
        cache->dropout_masks.clear();
        cache->bn_caches.clear();
        cache->acts.push_back(x);
    }
    std::vector<Matrix> res_stack;
    Matrix act = x;
    for (const LayerOp& op : model.ops) {
        switch (op.kind) {
            case OpKind::affine: {
                const Matrix& w = model.params[static_cast<std::size_t>(op.param_index)];
                const Matrix& b = model.params[static_cast<std::size_t>(op.param_index) + 1];
                act = affine(act, w, b);
                break;
            }
            case OpKind::batchnorm: {
                const Matrix& scale = model.params[static_cast<std::size_t>(op.param_index)];
                const Matrix& shift =
                    model.params[static_cast<std::size_t>(op.param_index) + 1];
                BatchNormCache bn_cache;
                if (mode == Mode::train) {
                    BatchNormRunningStats& stats =
                        mutable_model->bn_stats[static_cast<std::size_t>(op.stats_index)];
                    act = batchnorm(act, scale, shift, stats, Mode::train, &bn_cache);
                    if (cache != nullptr) cache->bn_caches.push_back(std::move(bn_cache));
                } else {
                    // Eval never touches the running stats; cast away only to
                    // reuse the signature.
                    auto& stats = const_cast<BatchNormRunningStats&>(
                        model.bn_stats[static_cast<std::size_t>(op.stats_index)]);
                    act = batchnorm(act, scale, shift, stats, Mode::eval, nullptr);
                }
                break;
            }
            case OpKind::relu_act:
                act = activation(act, Activation::relu);
                break;
            case OpKind::sigmoid_act:
                act = activation(act, Activation::sigmoid);
                break;
            case OpKind::dropout_op: {
                if (mode == Mode::train && model.spec.dropout_p > 0.0) {
                    DropoutResult r = dropout(act, model.spec.dropout_p, Mode::train, *rng);
                    act = std::move(r.out);
                    if (cache != nullptr) cache->dropout_masks.push_back(std::move(r.mask));
                }
                // eval and p = 0: identity
                break;
            }
            case OpKind::res_save:
                res_stack.push_back(act);
                break;
            case OpKind::res_add: {
                const Matrix& saved = res_stack.back();
                require_same_shape(act, saved, "res_add");
                for (std::size_t i = 0; i < act.size(); ++i) act.data[i] += saved.data[i];
                res_stack.pop_back();
                break;
            }
        }
        if (cache != nullptr) cache->acts.push_back(act);
    }
    if (cache != nullptr) cache->valid = true;
    return act;
}

}  // namespace

Matrix forward_train(ModelParams& model, const Matrix& x, RngStream& rng,
                     ForwardCache& cache) {
    return run_forward(model, &model, x, Mode::train, &rng, &cache);
}

Matrix forward_eval(const ModelParams& model, const Matrix& x) {
    return run_forward(model, nullptr, x, Mode::eval, nullptr, nullptr);
}

Matrix backward(ModelParams& model, ForwardCache& cache, const Matrix& loss_grad) {
    if (!cache.valid || cache.acts.size() != model.ops.size() + 1) {
        throw ConfigError("backward: missing or stale forward cache");
    }
    require_same_shape(loss_grad, cache.acts.back(), "backward: loss gradient");
    for (std::size_t p = 0; p < model.grads.size(); ++p) {
        model.grads[p] = Matrix(model.params[p].rows, model.params[p].cols);
    }
    std::vector<Matrix> skip_grads;
    std::size_t dropout_i = cache.dropout_masks.size();
    std::size_t bn_i = cache.bn_caches.size();
    Matrix g = loss_grad;
    for (std::size_t k = model.ops.size(); k-- > 0;) {
        const LayerOp& op = model.ops[k];
        const Matrix& in = cache.acts[k];
        const Matrix& out = cache.acts[k + 1];
        switch (op.kind) {
            case OpKind::affine: {
                const Matrix& w = model.params[static_cast<std::size_t>(op.param_index)];
                AffineGrads ag = affine_backward(in, w, g);
                model.grads[static_cast<std::size_t>(op.param_index)] = std::move(ag.dw);
                model.grads[static_cast<std::size_t>(op.param_index) + 1] = std::move(ag.db);
                g = std::move(ag.dx);
                break;
            }
            case OpKind::batchnorm: {
                const Matrix& scale = model.params[static_cast<std::size_t>(op.param_index)];
                BatchNormGrads bg =
                    batchnorm_backward(cache.bn_caches[--bn_i], scale, g);
                model.grads[static_cast<std::size_t>(op.param_index)] = std::move(bg.dscale);
                model.grads[static_cast<std::size_t>(op.param_index) + 1] =
                    std::move(bg.dshift);
                g = std::move(bg.dx);
                break;
            }
            case OpKind::relu_act:
                g = activation_backward(out, Activation::relu, g);
                break;
            case OpKind::sigmoid_act:
                g = activation_backward(out, Activation::sigmoid, g);
                break;
            case OpKind::dropout_op:
                if (model.spec.dropout_p > 0.0) {
                    g = dropout_backward(cache.dropout_masks[--dropout_i], g);
                }
                break;
            case OpKind::res_add:
                // gradient flows unchanged into the block and onto the skip path
                skip_grads.push_back(g);
                break;
            case OpKind::res_save: {
                const Matrix& skip = skip_grads.back();
                require_same_shape(g, skip, "res_save backward");
                for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += skip.data[i];
                skip_grads.pop_back();
                break;
            }
        }
    }
    cache.valid = false;
    return g;
}

// --------------------------------------------------------------- checkpoint

namespace {

constexpr char kCheckpointMagic[4] = {'F', 'T', 'C', 'K'};
constexpr std::uint16_t kCheckpointVersion = 1;

}  // namespace

std::vector<std::uint8_t> save_checkpoint(const ModelParams& model) {
    bytes::Writer w;
    w.raw(kCheckpointMagic, 4);
    w.u16le(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(model.spec.family));
    w.u32le(static_cast<std::uint32_t>(model.spec.input_dim));
    w.u32le(static_cast<std::uint32_t>(model.spec.output_dim));
    std::vector<std::uint32_t> sizes;
    for (std::size_t h : model.spec.hidden) sizes.push_back(static_cast<std::uint32_t>(h));
    if (model.spec.family == ModelFamily::deep_res_mlp) {
        sizes.push_back(static_cast<std::uint32_t>(model.spec.res_blocks));
    }
    w.u8(static_cast<std::uint8_t>(sizes.size()));
    for (std::uint32_t s : sizes) w.u32le(s);
    w.u64le(model.scalar_count());
    for (const Matrix& p : model.params) {
        for (double v : p.data) w.f32le(static_cast<float>(v));
    }
    for (const BatchNormRunningStats& stats : model.bn_stats) {
        for (double v : stats.mean) w.f32le(static_cast<float>(v));
        for (double v : stats.var) w.f32le(static_cast<float>(v));
    }
    return w.buf;
}

ModelParams load_checkpoint(const std::vector<std::uint8_t>& data) {
    bytes::Reader r(data.data(), data.size());
    r.need(4, "magic");
    char magic[4];
    for (char& ch : magic) ch = static_cast<char>(r.u8());
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw FormatError("checkpoint: bad magic", 0);
    }
    const std::uint16_t version = r.u16le();
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version), 4);
    }
    const std::uint8_t family_byte = r.u8();
    if (family_byte > 2) {
        throw FormatError("checkpoint: unknown family byte " + std::to_string(family_byte),
                          6);
    }
    ModelSpec spec;
    spec.family = static_cast<ModelFamily>(family_byte);
    spec.input_dim = r.u32le();
    spec.output_dim = r.u32le();
    const std::uint8_t n_sizes = r.u8();
    std::vector<std::uint32_t> sizes(n_sizes);
    for (auto& s : sizes) s = r.u32le();
    constexpr std::uint32_t kMaxDim = 1u << 20;
    if (spec.input_dim > kMaxDim || spec.output_dim > kMaxDim) {
        throw FormatError("checkpoint: implausible model dimension", r.offset());
    }
    for (std::uint32_t s : sizes) {
        if (s > kMaxDim) throw FormatError("checkpoint: implausible layer size", r.offset());
    }
    if (spec.family == ModelFamily::deep_res_mlp) {
        if (sizes.size() != 2) {
            throw FormatError("checkpoint: deep_res_mlp expects {width, blocks} sizes",
                              r.offset());
        }
        spec.hidden = {sizes[0]};
        spec.res_blocks = sizes[1];
    } else {
        spec.hidden.assign(sizes.begin(), sizes.end());
    }
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: invalid spec: ") + e.what(), r.offset());
    }
    const std::uint64_t declared = r.u64le();
    const std::size_t expected = count_parameters(spec);
    if (declared != expected) {
        throw FormatError("checkpoint: declared scalar count " + std::to_string(declared) +
                              " but spec implies " + std::to_string(expected),
                          r.offset() - 8);
    }
    if (declared > r.remaining() / 4) {
        throw CorruptionError("checkpoint: parameter block exceeds payload", r.offset());
    }
    ModelParams model = assemble(spec).model;
    for (Matrix& p : model.params) {
        for (double& v : p.data) v = static_cast<double>(r.f32le());
    }
    for (BatchNormRunningStats& stats : model.bn_stats) {
        for (double& v : stats.mean) v = static_cast<double>(r.f32le());
        for (double& v : stats.var) v = static_cast<double>(r.f32le());
    }
    if (r.remaining() != 0) {
        throw FormatError("checkpoint: " + std::to_string(r.remaining()) +
                              " trailing bytes after payload",
                          r.offset());
    }
    return model;
}

void save_checkpoint_file(const ModelParams& model, const std::string& path) {
    const std::vector<std::uint8_t> data = save_checkpoint(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open checkpoint file for writing: " + path);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("failed writing checkpoint file: " + path);
}

ModelParams load_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint file: " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return load_checkpoint(data);
}

// ------------------------------------------------------------- flat state

std::vector<double> flatten_state(const ModelParams& model) {
    std::vector<double> flat;
    flat.reserve(model.scalar_count());
    for (const Matrix& p : model.params) {
        flat.insert(flat.end(), p.data.begin(), p.data.end());
    }
    for (const BatchNormRunningStats& stats : model.bn_stats) {
        flat.insert(flat.end(), stats.mean.begin(), stats.mean.end());
        flat.insert(flat.end(), stats.var.begin(), stats.var.end());
    }
    return flat;
}

void unflatten_state(ModelParams& model, const std::vector<double>& flat) {
    std::size_t expected = model.scalar_count();
    for (const BatchNormRunningStats& stats : model.bn_stats) {
        expected += stats.mean.size() + stats.var.size();
    }
    if (flat.size() != expected) {
        throw DimensionError("unflatten_state: got " + std::to_string(flat.size()) +
                             " scalars, model holds " + std::to_string(expected));
    }
    std::size_t pos = 0;
    for (Matrix& p : model.params) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos + p.size()),
                  p.data.begin());
        pos += p.size();
    }
    for (BatchNormRunningStats& stats : model.bn_stats) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos + stats.mean.size()),
                  stats.mean.begin());
        pos += stats.mean.size();
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos + stats.var.size()),
                  stats.var.begin());
        pos += stats.var.size();
    }
}

std::vector<std::vector<std::uint32_t>> state_tensor_shapes(const ModelParams& model) {
    std::vector<std::vector<std::uint32_t>> shapes;
    for (const Matrix& p : model.params) {
        shapes.push_back({static_cast<std::uint32_t>(p.rows),
                          static_cast<std::uint32_t>(p.cols)});
    }
    for (const BatchNormRunningStats& stats : model.bn_stats) {
        shapes.push_back({static_cast<std::uint32_t>(stats.mean.size())});
        shapes.push_back({static_cast<std::uint32_t>(stats.var.size())});
    }
    return shapes;
}

std::uint64_t state_checksum(const std::vector<double>& flat) {
    // FNV-1a over the little-endian byte image.
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : flat) {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace fedmlc
