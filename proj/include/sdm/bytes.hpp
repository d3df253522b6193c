#ifndef SDM_BYTES_HPP
#define SDM_BYTES_HPP

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "sdm/errors.hpp"

namespace sdm {

using Bytes = std::vector<std::byte>;
using ByteSpan = std::span<const std::byte>;

/// Little-endian append-only encoder for collective payloads and the
/// on-disk binary formats.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<std::byte>(v)); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::byte*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }

    /// Length-prefixed byte string.
    void bytes(ByteSpan b) {
        u64(b.size());
        buf_.insert(buf_.end(), b.begin(), b.end());
    }

    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }

    std::size_t size() const { return buf_.size(); }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

/// Bounds-checked little-endian decoder. Underruns throw IoError; callers
/// that parse persistent files translate that into their own corrupt-file
/// error.
class ByteReader {
public:
    explicit ByteReader(ByteSpan b) : p_(b.data()), n_(b.size()) {}
    ByteReader(const void* p, std::size_t n)
        : p_(static_cast<const std::byte*>(p)), n_(n) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(p_[off_++]);
    }

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return v;
    }

    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }

    void raw(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, p_ + off_, n);
        off_ += n;
    }

    Bytes bytes() {
        std::uint64_t n = u64();
        need(n);
        Bytes out(p_ + off_, p_ + off_ + n);
        off_ += n;
        return out;
    }

    std::string str() {
        std::uint64_t n = u64();
        need(n);
        std::string out(reinterpret_cast<const char*>(p_ + off_), n);
        off_ += n;
        return out;
    }

    std::size_t remaining() const { return n_ - off_; }
    bool at_end() const { return off_ == n_; }

private:
    void need(std::size_t n) const {
        if (n_ - off_ < n)
            throw IoError("truncated buffer: need " + std::to_string(n) + " bytes, have " +
                          std::to_string(n_ - off_));
    }

    const std::byte* p_;
    std::size_t n_;
    std::size_t off_ = 0;
};

// Typed packing between value vectors and raw little-endian buffers.

Bytes pack_f64(std::span<const double> v);
Bytes pack_i32(std::span<const std::int32_t> v);
std::vector<double> unpack_f64(ByteSpan b);
std::vector<std::int32_t> unpack_i32(ByteSpan b);

} // namespace sdm

#endif
