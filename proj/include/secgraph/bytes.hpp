#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace secgraph {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;
using Digest32 = std::array<uint8_t, 32>;

struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string& what) : std::runtime_error(what) {}
};

inline ByteSpan as_span(const Bytes& b) { return {b.data(), b.size()}; }
inline ByteSpan as_span(const Digest32& d) { return {d.data(), d.size()}; }
inline ByteSpan as_span(const std::string& s) {
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(ByteSpan s) { return Bytes(s.begin(), s.end()); }
inline Bytes to_bytes(const std::string& s) { return to_bytes(as_span(s)); }

// Byte strings double as map keys; std::string gives us hashing for free.
inline std::string key_of(ByteSpan s) {
    return std::string(reinterpret_cast<const char*>(s.data()), s.size());
}
inline std::string key_of(const Bytes& b) { return key_of(as_span(b)); }
inline std::string key_of(const Digest32& d) { return key_of(as_span(d)); }

inline void put_u16(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
}
inline void put_u32(Bytes& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
inline void put_u64(Bytes& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
inline void put_bytes(Bytes& out, ByteSpan s) { out.insert(out.end(), s.begin(), s.end()); }
inline void put_lv(Bytes& out, ByteSpan s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    put_bytes(out, s);
}

// Sequential decoder; every read is bounds-checked so malformed input
// surfaces as DecodeError instead of UB.
class ByteReader {
public:
    explicit ByteReader(ByteSpan data) : data_(data) {}

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    Bytes bytes(size_t n) {
        need(n);
        Bytes out(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }
    Digest32 digest32() {
        need(32);
        Digest32 d;
        std::memcpy(d.data(), data_.data() + pos_, 32);
        pos_ += 32;
        return d;
    }
    Bytes lv() {
        uint32_t n = u32();
        if (n > remaining()) throw DecodeError("length prefix exceeds buffer");
        return bytes(n);
    }
    size_t remaining() const { return data_.size() - pos_; }
    void expect_end() const {
        if (pos_ != data_.size()) throw DecodeError("trailing bytes");
    }

private:
    void need(size_t n) const {
        if (data_.size() - pos_ < n) throw DecodeError("unexpected end of input");
    }
    ByteSpan data_;
    size_t pos_ = 0;
};

inline std::string hex(ByteSpan s) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(s.size() * 2);
    for (uint8_t b : s) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

}  // namespace secgraph
