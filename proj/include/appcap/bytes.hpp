#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace appcap {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline std::uint16_t load_be16(ByteView b, std::size_t off) {
    return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}

inline std::uint32_t load_be24(ByteView b, std::size_t off) {
    return (std::uint32_t{b[off]} << 16) | (std::uint32_t{b[off + 1]} << 8) | b[off + 2];
}

inline std::uint32_t load_be32(ByteView b, std::size_t off) {
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
           (std::uint32_t{b[off + 2]} << 8) | b[off + 3];
}

inline std::uint32_t load_le32(ByteView b, std::size_t off) {
    return (std::uint32_t{b[off + 3]} << 24) | (std::uint32_t{b[off + 2]} << 16) |
           (std::uint32_t{b[off + 1]} << 8) | b[off];
}

// Append-only big-endian writer used by the frame encoder and fixture builders.
class ByteWriter {
public:
    ByteWriter& u8(std::uint8_t v) {
        buf_.push_back(v);
        return *this;
    }
    ByteWriter& be16(std::uint16_t v) {
        buf_.push_back(static_cast<std::uint8_t>(v >> 8));
        buf_.push_back(static_cast<std::uint8_t>(v));
        return *this;
    }
    ByteWriter& be24(std::uint32_t v) {
        buf_.push_back(static_cast<std::uint8_t>(v >> 16));
        buf_.push_back(static_cast<std::uint8_t>(v >> 8));
        buf_.push_back(static_cast<std::uint8_t>(v));
        return *this;
    }
    ByteWriter& be32(std::uint32_t v) {
        be16(static_cast<std::uint16_t>(v >> 16));
        return be16(static_cast<std::uint16_t>(v));
    }
    ByteWriter& le16(std::uint16_t v) {
        buf_.push_back(static_cast<std::uint8_t>(v));
        buf_.push_back(static_cast<std::uint8_t>(v >> 8));
        return *this;
    }
    ByteWriter& le32(std::uint32_t v) {
        le16(static_cast<std::uint16_t>(v));
        return le16(static_cast<std::uint16_t>(v >> 16));
    }
    ByteWriter& bytes(ByteView v) {
        buf_.insert(buf_.end(), v.begin(), v.end());
        return *this;
    }
    ByteWriter& text(std::string_view s) {
        buf_.insert(buf_.end(), s.begin(), s.end());
        return *this;
    }

    // Patch a big-endian length field written earlier.
    void patch_be16(std::size_t off, std::uint16_t v) {
        buf_[off] = static_cast<std::uint8_t>(v >> 8);
        buf_[off + 1] = static_cast<std::uint8_t>(v);
    }
    void patch_be24(std::size_t off, std::uint32_t v) {
        buf_[off] = static_cast<std::uint8_t>(v >> 16);
        buf_[off + 1] = static_cast<std::uint8_t>(v >> 8);
        buf_[off + 2] = static_cast<std::uint8_t>(v);
    }

    std::size_t size() const { return buf_.size(); }
    const Bytes& view() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

std::string to_hex(ByteView bytes);

// Case-insensitive; returns false on odd length or a non-hex digit.
bool from_hex(std::string_view hex, Bytes& out);

}  // namespace appcap
