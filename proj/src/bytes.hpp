#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "fedmlc/errors.hpp"

// Little-endian byte packing helpers shared by the dataset, checkpoint, and
// wire codecs. Readers bounds-check every access: running off the end is a
// CorruptionError, semantic mismatches are FormatErrors raised by callers.

namespace fedmlc::bytes {

class Writer {
public:
    std::vector<std::uint8_t> buf;

    void u8(std::uint8_t v) { buf.push_back(v); }

    void u16le(std::uint16_t v) {
        buf.push_back(static_cast<std::uint8_t>(v & 0xff));
        buf.push_back(static_cast<std::uint8_t>(v >> 8));
    }

    void u32le(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void u64le(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void u32be(std::uint32_t v) {
        for (int i = 3; i >= 0; --i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void f32le(float v) { u32le(std::bit_cast<std::uint32_t>(v)); }
    void f64le(double v) { u64le(std::bit_cast<std::uint64_t>(v)); }

    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }

    void str16(const std::string& s) {
        if (s.size() > UINT16_MAX) {
            throw ConfigError("string too long for u16 length prefix: " +
                              std::to_string(s.size()));
        }
        u16le(static_cast<std::uint16_t>(s.size()));
        raw(s.data(), s.size());
    }
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return size_ - pos_; }

    std::uint8_t u8() {
        need(1, "u8");
        return data_[pos_++];
    }

    std::uint16_t u16le() {
        need(2, "u16");
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_]) |
                          static_cast<std::uint16_t>(data_[pos_ + 1]) << 8;
        pos_ += 2;
        return v;
    }

    std::uint32_t u32le() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 4;
        return v;
    }

    std::uint64_t u64le() {
        need(8, "u64");
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 8;
        return v;
    }

    std::uint32_t u32be() {
        need(4, "u32be");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 4;
        return v;
    }

    float f32le() { return std::bit_cast<float>(u32le()); }
    double f64le() { return std::bit_cast<double>(u64le()); }

    std::string str16() {
        const std::uint16_t len = u16le();
        need(len, "string body");
        std::string s(reinterpret_cast<const char*>(data_ + pos_), len);
        pos_ += len;
        return s;
    }

    void need(std::size_t n, const char* what) const {
        if (size_ - pos_ < n) {
            throw CorruptionError(std::string("payload truncated while reading ") + what,
                                  pos_);
        }
    }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace fedmlc::bytes
