#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "appcap/bytes.hpp"

// Classic PCAP reading and link/network/transport decoding.
namespace appcap::ingest {

inline constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
inline constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
inline constexpr std::uint32_t kMagicPcapng = 0x0a0d0d0a;

inline constexpr std::uint32_t kLinkEthernet = 1;
inline constexpr std::uint32_t kLinkLinuxSll = 113;
inline constexpr std::uint32_t kLinkLinuxSll2 = 276;

inline constexpr std::size_t kGlobalHeaderLen = 24;
inline constexpr std::size_t kRecordHeaderLen = 16;

enum class ByteOrder { little, big };
enum class TsResolution { microsecond, nanosecond };

enum class IngestErrc {
    unknown_magic,
    truncated_header,
    truncated_frame,
    unsupported_link_type,
};

std::string_view to_string(IngestErrc code);

class IngestError : public std::runtime_error {
public:
    IngestError(IngestErrc code, std::string message, std::size_t frames_read = 0)
        : std::runtime_error(std::move(message)), code_(code), frames_read_(frames_read) {}

    IngestErrc code() const noexcept { return code_; }
    // Frames successfully read before the error (meaningful for truncated_frame).
    std::size_t frames_read() const noexcept { return frames_read_; }

private:
    IngestErrc code_;
    std::size_t frames_read_;
};

struct RawFrame {
    std::int64_t ts_ns = 0;
    std::uint32_t linktype_id = 0;
    std::uint32_t captured_len = 0;
    std::uint32_t original_len = 0;
    Bytes frame_bytes;

    bool operator==(const RawFrame&) const = default;
};

struct CaptureStream {
    ByteOrder byte_order = ByteOrder::little;
    TsResolution ts_resolution = TsResolution::microsecond;
    std::uint32_t linktype_id = kLinkEthernet;
    std::uint32_t snaplen = 262144;
    std::vector<RawFrame> frames;
    // Set when the file ended inside a frame record; frames holds everything before it.
    std::optional<IngestError> tail_error;
};

// Throws IngestError{unknown_magic | truncated_header}. A short final frame is
// reported through CaptureStream::tail_error instead of throwing.
CaptureStream read_capture(ByteView bytes);

struct CaptureHeader {
    ByteOrder byte_order = ByteOrder::little;
    TsResolution ts_resolution = TsResolution::microsecond;
    std::uint32_t linktype_id = kLinkLinuxSll;
    std::uint32_t snaplen = 262144;
};

// Inverse of read_capture: classic pcap v2.4 in the requested byte order.
// Microsecond files truncate ts_ns to whole microseconds.
Bytes write_capture(const CaptureHeader& header, std::span<const RawFrame> frames);

struct IpAddress {
    std::uint8_t version = 4;
    std::array<std::uint8_t, 16> bytes{};  // IPv4 uses the first four

    static IpAddress v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d);
    static IpAddress v4(ByteView four);
    static IpAddress v6(ByteView sixteen);
    static std::optional<IpAddress> parse(std::string_view text);

    std::string to_string() const;

    auto operator<=>(const IpAddress&) const = default;
    bool operator==(const IpAddress&) const = default;
};

enum class Transport : std::uint8_t { tcp, udp };

std::string_view to_string(Transport t);

namespace tcp_flag {
inline constexpr std::uint8_t fin = 0x01;
inline constexpr std::uint8_t syn = 0x02;
inline constexpr std::uint8_t rst = 0x04;
inline constexpr std::uint8_t psh = 0x08;
inline constexpr std::uint8_t ack = 0x10;
inline constexpr std::uint8_t urg = 0x20;
}  // namespace tcp_flag

struct PacketRecord {
    std::int64_t ts_ns = 0;
    IpAddress src_ip;
    IpAddress dst_ip;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Transport transport = Transport::tcp;
    std::uint32_t packet_len = 0;  // original frame length
    Bytes payload;                 // may be shorter than on the wire under snaplen
    std::optional<std::uint8_t> tcp_flags;

    std::uint8_t ip_version() const { return src_ip.version; }
    bool operator==(const PacketRecord&) const = default;
};

enum class SkipReason { non_ip, other_protocol, ip_fragment, ipv6_unknown_header };

struct Skip {
    SkipReason reason;
};

struct Malformed {
    std::string what;
};

using DecodeResult = std::variant<PacketRecord, Skip, Malformed>;

// Throws IngestError{unsupported_link_type} for link types other than Ethernet
// and Linux cooked v1/v2. Everything else is reported through the variant.
DecodeResult decode_frame(const RawFrame& frame, std::uint32_t linktype_id);

struct DecodedCapture {
    std::vector<PacketRecord> packets;
    std::size_t total_frames = 0;
    std::size_t skipped = 0;
    std::size_t fragments = 0;  // subset of skipped
    std::size_t malformed = 0;
};

DecodedCapture decode_capture(const CaptureStream& stream);

// Builds the on-wire frame for a record (link header, IP, transport, payload).
// Checksums are left zero. Sequence numbers are not part of PacketRecord and
// are written as zero.
Bytes encode_frame(const PacketRecord& packet, std::uint32_t linktype_id);

}  // namespace appcap::ingest
