#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "appcap/bytes.hpp"
#include "appcap/ingest.hpp"

// Per-packet application protocol resolution over per-flow state.
namespace appcap::classify {

using ingest::IpAddress;
using ingest::PacketRecord;
using ingest::Transport;

enum class TlsVersion : std::uint8_t { sslv2, sslv3, tls1_0, tls1_1, tls1_2, tls1_3, unknown_ssl };

// Wireshark-style names: "SSLv2", "TLSv1", "TLSv1.3", and "SSL" for unknown_ssl.
std::string_view to_string(TlsVersion v);
std::optional<TlsVersion> tls_version_from_string(std::string_view s);

// Maps a wire version number. 0x0002 is SSLv2; TLS 1.3 drafts (0x7fxx) map to tls1_3.
std::optional<TlsVersion> tls_version_from_wire(std::uint16_t wire);

enum class ProtocolTag : std::uint8_t { http, do53, dot, tls, quic, other_tcp, other_udp };

std::string_view to_string(ProtocolTag t);

struct AppProtocol {
    ProtocolTag tag = ProtocolTag::other_tcp;
    std::optional<TlsVersion> tls_version;  // present iff tag is tls or dot

    static AppProtocol tls(TlsVersion v) { return {ProtocolTag::tls, v}; }
    static AppProtocol dot(TlsVersion v) { return {ProtocolTag::dot, v}; }
    static AppProtocol plain(ProtocolTag t) { return {t, std::nullopt}; }

    auto operator<=>(const AppProtocol&) const = default;
    bool operator==(const AppProtocol&) const = default;
};

// "TLSv1.3" for versioned TLS, otherwise the tag name ("DoT", "Do53", "QUIC", ...).
std::string display_name(const AppProtocol& p);

struct Endpoint {
    IpAddress ip;
    std::uint16_t port = 0;

    auto operator<=>(const Endpoint&) const = default;
    bool operator==(const Endpoint&) const = default;
};

struct FlowKey {
    Endpoint lo;
    Endpoint hi;
    Transport transport = Transport::tcp;

    static FlowKey of(const PacketRecord& p);

    auto operator<=>(const FlowKey&) const = default;
    bool operator==(const FlowKey&) const = default;
};

// ---- TLS record layer ------------------------------------------------------

inline constexpr std::size_t kMaxRecordLength = 16708;
inline constexpr std::size_t kReassemblyCap = 65536;

namespace content_type {
inline constexpr std::uint8_t change_cipher_spec = 20;
inline constexpr std::uint8_t alert = 21;
inline constexpr std::uint8_t handshake = 22;
inline constexpr std::uint8_t application_data = 23;
}  // namespace content_type

using Random = std::array<std::uint8_t, 32>;

struct HandshakeView {
    std::uint8_t type = 0;  // 1 ClientHello, 2 ServerHello
    std::uint16_t legacy_version = 0;
    Random random{};
    bool has_supported_versions = false;
    // ClientHello: the offered list. ServerHello: exactly the selected version.
    std::vector<std::uint16_t> supported_versions;

    bool operator==(const HandshakeView&) const = default;
};

// SSLv2 message types carried in the first body byte of a 2-byte-header record.
namespace sslv2_msg {
inline constexpr std::uint8_t client_hello = 1;
inline constexpr std::uint8_t client_master_key = 2;
inline constexpr std::uint8_t server_hello = 4;
}  // namespace sslv2_msg

struct TlsRecordView {
    std::uint8_t content_type = 0;  // for SSLv2 records: the message type byte
    std::uint16_t record_version = 0;
    bool sslv2 = false;
    std::size_t offset = 0;  // start of the header in the parsed buffer
    std::size_t size = 0;    // header + body
    std::optional<HandshakeView> handshake;
};

enum class TlsParseStatus { ok, not_tls, desync };

struct TlsParseResult {
    TlsParseStatus status = TlsParseStatus::ok;
    std::vector<TlsRecordView> records;
    Bytes remainder;  // trailing partial record, to be prepended to the next segment
};

// Splits one direction of a TCP stream into TLS records. With sslv2_framing set
// (the flow has already shown SSLv2 records) 2- and 3-byte SSLv2 headers are
// accepted without a hello.
TlsParseResult parse_tls_records(ByteView data, bool sslv2_framing = false);

// Wire-level hello parsers; exposed for tests and the fixture builder checks.
std::optional<HandshakeView> parse_hello(ByteView handshake_message);

TlsVersion resolve_tls_version(const std::optional<HandshakeView>& client_hello,
                               const std::optional<HandshakeView>& server_hello);

// ---- QUIC -------------------------------------------------------------------

enum class QuicPacketType : std::uint8_t { initial, zero_rtt, handshake, retry, version_negotiation, one_rtt };

struct QuicInfo {
    bool long_header = false;
    std::optional<std::uint32_t> version;
    QuicPacketType packet_type = QuicPacketType::one_rtt;
};

bool is_known_quic_version(std::uint32_t version);

// Short headers are only recognised when flow_quic_seen is set.
std::optional<QuicInfo> detect_quic(ByteView payload, bool flow_quic_seen);

// ---- DNS --------------------------------------------------------------------

struct DnsSummary {
    std::uint16_t id = 0;
    bool is_response = false;
    std::uint16_t qdcount = 0;
    std::optional<std::string> qname;  // first question, lower-case, no trailing dot
};

// Parses a bare DNS message (no TCP length prefix).
std::optional<DnsSummary> parse_dns_message(ByteView message);

// DNS message of a port-53 packet: strips the TCP length prefix when needed.
std::optional<DnsSummary> dns_of(const PacketRecord& record);

struct FlowState;

// Port rules: port 53 with a well-formed header is Do53; TCP port 853 is DoT
// (version from the flow when known, otherwise unknown_ssl). Anything else is nullopt.
std::optional<AppProtocol> classify_dns(const PacketRecord& record, const FlowState* flow = nullptr);

// ---- Flow state and packet classification -----------------------------------

struct DirectionBuffer {
    Bytes pending;
    bool desync = false;
};

struct FlowState {
    std::optional<TlsVersion> negotiated_tls;
    std::optional<TlsVersion> client_hello_version_hint;
    std::optional<HandshakeView> client_hello;
    std::optional<Random> client_random;
    bool quic_seen = false;
    bool tls_seen = false;
    bool sslv2_framing = false;
    bool sslv2_server_hello = false;
    bool sslv2_master_key = false;
    std::optional<Endpoint> client;  // sender of the first packet seen
    std::optional<AppProtocol> last_protocol;
    std::array<DirectionBuffer, 2> reassembly;  // [0] client to server, [1] server to client
    std::uint64_t packets = 0;
};

using FlowTable = std::map<FlowKey, FlowState>;

struct ClassifiedPacket {
    PacketRecord record;
    AppProtocol protocol;
    bool is_app_data = false;
    FlowKey flow;
    bool from_client = true;
};

ClassifiedPacket classify_packet(PacketRecord record, FlowTable& flows);

struct Classification {
    std::vector<ClassifiedPacket> packets;
    FlowTable flows;
};

// One output per input, order preserved, fresh flow table.
Classification classify_capture(std::vector<PacketRecord> packets);
Classification classify_capture(std::span<const PacketRecord> packets);

// Short human-readable packet summary for feature tables ("Client Hello",
// "Application Data", "Standard query", ...).
std::string packet_info(const ClassifiedPacket& packet);

}  // namespace appcap::classify
