#include <cctype>

#include "appcap/classify.hpp"

namespace appcap::classify {

namespace {

constexpr std::uint32_t kQuicV1 = 0x00000001;
constexpr std::uint32_t kQuicV2 = 0x6b3343cf;

}  // namespace

bool is_known_quic_version(std::uint32_t version) {
    return version == kQuicV1 || version == kQuicV2 || (version >= 0xff00001d && version <= 0xff000020);
}

std::optional<QuicInfo> detect_quic(ByteView payload, bool flow_quic_seen) {
    if (payload.empty()) return std::nullopt;
    const std::uint8_t first = payload[0];
    if ((first & 0x40) == 0) return std::nullopt;

    if ((first & 0x80) == 0) {
        if (!flow_quic_seen) return std::nullopt;
        return QuicInfo{false, std::nullopt, QuicPacketType::one_rtt};
    }

    if (payload.size() < 7) return std::nullopt;
    const std::uint32_t version = load_be32(payload, 1);
    QuicInfo info;
    info.long_header = true;
    info.version = version;
    if (version == 0) {
        info.packet_type = QuicPacketType::version_negotiation;
        return info;
    }
    if (!is_known_quic_version(version)) return std::nullopt;

    const unsigned bits = (first >> 4) & 0x03;
    if (version == kQuicV2) {
        static constexpr QuicPacketType kV2[] = {QuicPacketType::retry, QuicPacketType::initial,
                                                 QuicPacketType::zero_rtt, QuicPacketType::handshake};
        info.packet_type = kV2[bits];
    } else {
        static constexpr QuicPacketType kV1[] = {QuicPacketType::initial, QuicPacketType::zero_rtt,
                                                 QuicPacketType::handshake, QuicPacketType::retry};
        info.packet_type = kV1[bits];
    }
    return info;
}

std::optional<DnsSummary> parse_dns_message(ByteView msg) {
    if (msg.size() < 12) return std::nullopt;
    DnsSummary s;
    s.id = load_be16(msg, 0);
    s.is_response = (msg[2] & 0x80) != 0;
    s.qdcount = load_be16(msg, 4);
    if (s.qdcount == 0 && !s.is_response) return std::nullopt;

    if (s.qdcount > 0) {
        std::string name;
        std::size_t pos = 12;
        bool ok = false;
        while (pos < msg.size()) {
            const std::uint8_t len = msg[pos];
            if (len == 0) {
                ok = true;
                break;
            }
            // Compression pointers and extended label types do not occur in a first question.
            if ((len & 0xc0) != 0 || pos + 1 + len > msg.size()) break;
            if (!name.empty()) name.push_back('.');
            for (std::size_t i = 0; i < len; ++i) {
                name.push_back(static_cast<char>(std::tolower(msg[pos + 1 + i])));
            }
            pos += 1 + len;
        }
        if (ok) s.qname = std::move(name);
    }
    return s;
}

std::optional<DnsSummary> dns_of(const PacketRecord& record) {
    const ByteView payload(record.payload);
    if (record.transport == Transport::udp) return parse_dns_message(payload);
    if (payload.size() < 2) return std::nullopt;
    const std::size_t len = load_be16(payload, 0);
    if (len < 12) return std::nullopt;
    return parse_dns_message(payload.subspan(2, std::min(len, payload.size() - 2)));
}

std::optional<AppProtocol> classify_dns(const PacketRecord& record, const FlowState* flow) {
    const bool port53 = record.src_port == 53 || record.dst_port == 53;
    const bool port853 =
        record.transport == Transport::tcp && (record.src_port == 853 || record.dst_port == 853);
    if (port53 && dns_of(record)) return AppProtocol::plain(ProtocolTag::do53);
    if (port853) {
        TlsVersion v = TlsVersion::unknown_ssl;
        if (flow && flow->negotiated_tls) v = *flow->negotiated_tls;
        return AppProtocol::dot(v);
    }
    return std::nullopt;
}

}  // namespace appcap::classify
