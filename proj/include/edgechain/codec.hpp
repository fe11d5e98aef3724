#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "edgechain/bytes.hpp"

namespace edgechain {

/// Raised by Reader on truncated or malformed input.
struct CodecError : std::runtime_error {
    explicit CodecError(const std::string& what) : std::runtime_error(what) {}
};

/// Canonical binary encoding: fixed field order, big-endian integers,
/// u32-length-prefixed byte sequences. This is the form that gets hashed,
/// so writers must be byte-deterministic.
class Writer {
public:
    void u8(uint8_t v) { out_.push_back(v); }

    void u32(uint32_t v) {
        out_.push_back(static_cast<uint8_t>(v >> 24));
        out_.push_back(static_cast<uint8_t>(v >> 16));
        out_.push_back(static_cast<uint8_t>(v >> 8));
        out_.push_back(static_cast<uint8_t>(v));
    }

    void u64(uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8)
            out_.push_back(static_cast<uint8_t>(v >> shift));
    }

    void f64(double v) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }

    /// Fixed-width raw bytes, no length prefix.
    void raw(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }

    void hash(const Hash& h) { raw(ByteView(h.bytes.data(), h.bytes.size())); }

    void bytes(ByteView data) {
        u32(static_cast<uint32_t>(data.size()));
        raw(data);
    }

    void str(const std::string& s) {
        bytes(ByteView(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
    }

    const Bytes& data() const { return out_; }
    Bytes take() { return std::move(out_); }
    size_t size() const { return out_.size(); }

private:
    Bytes out_;
};

class Reader {
public:
    explicit Reader(ByteView data) : data_(data) {}

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
        return v;
    }

    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    Hash hash() {
        need(32);
        Hash h;
        std::memcpy(h.bytes.data(), data_.data() + pos_, 32);
        pos_ += 32;
        return h;
    }

    Bytes bytes() {
        uint32_t n = u32();
        need(n);
        Bytes b(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return b;
    }

    std::string str() {
        Bytes b = bytes();
        return std::string(b.begin(), b.end());
    }

    bool done() const { return pos_ == data_.size(); }
    size_t remaining() const { return data_.size() - pos_; }

    void expect_done() const {
        if (!done()) throw CodecError("trailing bytes after decode");
    }

private:
    void need(size_t n) const {
        if (pos_ + n > data_.size()) throw CodecError("truncated input");
    }

    ByteView data_;
    size_t pos_ = 0;
};

}  // namespace edgechain
