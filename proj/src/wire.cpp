#include "fedmlc/wire.hpp"

#include "bytes.hpp"

namespace fedmlc::wire {

namespace {

void encode_payload(bytes::Writer& w, const Message& msg) {
    w.u32le(msg.round);
    if (msg.tensors.size() > UINT16_MAX) {
        throw ConfigError("wire: too many tensors: " + std::to_string(msg.tensors.size()));
    }
    w.u16le(static_cast<std::uint16_t>(msg.tensors.size()));
    for (const Tensor& t : msg.tensors) {
        if (t.dims.empty() || t.dims.size() > UINT8_MAX) {
            throw ConfigError("wire: tensor rank must lie in [1, 255]");
        }
        if (t.data.size() != t.element_count()) {
            throw ConfigError("wire: tensor data length " + std::to_string(t.data.size()) +
                              " does not match dims product " +
                              std::to_string(t.element_count()));
        }
        w.u8(static_cast<std::uint8_t>(t.dims.size()));
        for (std::uint32_t d : t.dims) w.u32le(d);
        for (float v : t.data) w.f32le(v);
    }
    switch (msg.type) {
        case MsgType::fit_result:
            w.u64le(msg.n_samples);
            w.f64le(msg.train_loss);
            break;
        case MsgType::eval_result:
            w.u64le(msg.n_samples);
            for (double m : msg.metrics) w.f64le(m);
            break;
        case MsgType::global_model:
        case MsgType::eval_request:
            break;
    }
}

}  // namespace

std::vector<std::uint8_t> encode(const Message& msg) {
    bytes::Writer payload;
    encode_payload(payload, msg);
    bytes::Writer frame;
    frame.u32be(static_cast<std::uint32_t>(payload.buf.size()));
    frame.u8(static_cast<std::uint8_t>(msg.type));
    frame.raw(payload.buf.data(), payload.buf.size());
    return frame.buf;
}

Message decode(const std::vector<std::uint8_t>& data) {
    bytes::Reader r(data.data(), data.size());
    const std::uint32_t declared = r.u32be();
    const std::uint8_t type_byte = r.u8();
    if (type_byte < 0x01 || type_byte > 0x04) {
        throw FormatError("wire: unknown message type " + std::to_string(type_byte), 4);
    }
    if (r.remaining() != declared) {
        throw FormatError("wire: frame declares " + std::to_string(declared) +
                              " payload bytes but " + std::to_string(r.remaining()) +
                              " are present",
                          0);
    }
    Message msg;
    msg.type = static_cast<MsgType>(type_byte);
    msg.round = r.u32le();
    const std::uint16_t n_tensors = r.u16le();
    msg.tensors.resize(n_tensors);
    for (Tensor& t : msg.tensors) {
        const std::uint8_t rank = r.u8();
        if (rank == 0) throw FormatError("wire: tensor rank must be >= 1", r.offset() - 1);
        t.dims.resize(rank);
        std::size_t count = 1;
        bool overflow = false;
        for (auto& d : t.dims) {
            d = r.u32le();
            overflow |= __builtin_mul_overflow(count, static_cast<std::size_t>(d), &count);
        }
        if (overflow || count > r.remaining() / 4) {
            throw CorruptionError("wire: tensor data exceeds remaining payload", r.offset());
        }
        r.need(count * 4, "tensor data");
        t.data.resize(count);
        for (float& v : t.data) v = r.f32le();
    }
    switch (msg.type) {
        case MsgType::fit_result:
            msg.n_samples = r.u64le();
            msg.train_loss = r.f64le();
            break;
        case MsgType::eval_result:
            msg.n_samples = r.u64le();
            for (double& m : msg.metrics) m = r.f64le();
            break;
        case MsgType::global_model:
        case MsgType::eval_request:
            break;
    }
    if (r.remaining() != 0) {
        throw FormatError("wire: " + std::to_string(r.remaining()) +
                              " unparsed bytes inside payload",
                          r.offset());
    }
    return msg;
}

std::vector<Tensor> tensors_from_flat(const std::vector<double>& flat,
                                      const std::vector<std::vector<std::uint32_t>>& shapes) {
    std::vector<Tensor> tensors;
    tensors.reserve(shapes.size());
    std::size_t pos = 0;
    for (const auto& shape : shapes) {
        Tensor t;
        t.dims = shape;
        const std::size_t count = t.element_count();
        if (pos + count > flat.size()) {
            throw DimensionError("tensors_from_flat: shapes need more scalars than given");
        }
        t.data.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            t.data[i] = static_cast<float>(flat[pos + i]);
        }
        pos += count;
        tensors.push_back(std::move(t));
    }
    if (pos != flat.size()) {
        throw DimensionError("tensors_from_flat: " + std::to_string(flat.size() - pos) +
                             " scalars left over");
    }
    return tensors;
}

std::vector<double> flat_from_tensors(const std::vector<Tensor>& tensors) {
    std::vector<double> flat;
    for (const Tensor& t : tensors) {
        for (float v : t.data) flat.push_back(static_cast<double>(v));
    }
    return flat;
}

}  // namespace fedmlc::wire
