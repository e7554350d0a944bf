#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace fedmlc::wire {

// Federation message schema, used by the in-process loopback transport and by
// any external socket transport.
//
// frame   = u32 big-endian payload length, u8 message type, payload
// payload = u32 round, u16 tensor count,
//           per tensor: u8 rank, rank × u32 dims, little-endian f32 data
// FIT_RESULT appends u64 n_samples and f64 train loss; EVAL_RESULT appends
// u64 n_samples and six f64 metrics in the order macroP, macroR, macroF1,
// microP, microR, microF1. Payload integers are little-endian; only the frame
// length prefix is big-endian.
enum class MsgType : std::uint8_t {
    global_model = 0x01,
    fit_result = 0x02,
    eval_request = 0x03,
    eval_result = 0x04,
};

struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;  // product of dims entries

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::uint32_t d : dims) n *= d;
        return n;
    }
};

struct Message {
    MsgType type = MsgType::global_model;
    std::uint32_t round = 0;
    std::vector<Tensor> tensors;
    std::uint64_t n_samples = 0;                // fit_result, eval_result
    double train_loss = 0.0;                    // fit_result
    std::array<double, 6> metrics{};            // eval_result
};

std::vector<std::uint8_t> encode(const Message& msg);

// Decodes one complete frame; the buffer must contain exactly one frame.
Message decode(const std::vector<std::uint8_t>& frame);

// -------------------------------------------------- tensor <-> flat state

std::vector<Tensor> tensors_from_flat(const std::vector<double>& flat,
                                      const std::vector<std::vector<std::uint32_t>>& shapes);

std::vector<double> flat_from_tensors(const std::vector<Tensor>& tensors);

}  // namespace fedmlc::wire
