#include "appcap/classify.hpp"

#include <algorithm>
#include <array>

namespace appcap::classify {

std::string_view to_string(ProtocolTag t) {
    switch (t) {
        case ProtocolTag::http: return "HTTP";
        case ProtocolTag::do53: return "Do53";
        case ProtocolTag::dot: return "DoT";
        case ProtocolTag::tls: return "TLS";
        case ProtocolTag::quic: return "QUIC";
        case ProtocolTag::other_tcp: return "OtherTCP";
        case ProtocolTag::other_udp: return "OtherUDP";
    }
    return "?";
}

std::string display_name(const AppProtocol& p) {
    if (p.tag == ProtocolTag::tls && p.tls_version) return std::string(to_string(*p.tls_version));
    return std::string(to_string(p.tag));
}

FlowKey FlowKey::of(const PacketRecord& p) {
    Endpoint a{p.src_ip, p.src_port};
    Endpoint b{p.dst_ip, p.dst_port};
    if (b < a) std::swap(a, b);
    return FlowKey{a, b, p.transport};
}

namespace {

struct TlsFeed {
    bool framed = false;
    bool app_data = false;
};

TlsVersion flow_tls_version(const FlowState& st) {
    if (st.negotiated_tls) return *st.negotiated_tls;
    if (st.client_hello_version_hint) return *st.client_hello_version_hint;
    return TlsVersion::unknown_ssl;
}

void note_tls_record(FlowState& st, const TlsRecordView& rec) {
    if (!rec.handshake) return;
    const auto& hs = *rec.handshake;
    if (hs.type == 1 && !st.client_hello) {
        st.client_hello = hs;
        st.client_random = hs.random;
        st.client_hello_version_hint = resolve_tls_version(hs, std::nullopt);
    } else if (hs.type == 2 && !st.negotiated_tls) {
        st.negotiated_tls = resolve_tls_version(st.client_hello, hs);
    }
}

// Returns true when the record is SSLv2 application data.
bool note_sslv2_record(FlowState& st, const TlsRecordView& rec) {
    if (st.sslv2_server_hello && st.sslv2_master_key) return true;
    switch (rec.content_type) {
        case sslv2_msg::client_hello:
            st.sslv2_framing = true;
            if (!st.client_hello_version_hint) st.client_hello_version_hint = TlsVersion::sslv2;
            break;
        case sslv2_msg::server_hello:
            st.sslv2_framing = true;
            st.sslv2_server_hello = true;
            if (!st.negotiated_tls) st.negotiated_tls = TlsVersion::sslv2;
            break;
        case sslv2_msg::client_master_key:
            if (st.sslv2_server_hello) st.sslv2_master_key = true;
            break;
        default:
            break;
    }
    return false;
}

TlsFeed feed_tls(FlowState& st, int dir, ByteView payload) {
    auto& buf = st.reassembly[static_cast<std::size_t>(dir)];
    if (buf.pending.size() + payload.size() > kReassemblyCap) {
        buf.pending.clear();
        buf.desync = true;
    }
    const std::size_t carry = buf.pending.size();
    Bytes data;
    data.reserve(carry + payload.size());
    data.insert(data.end(), buf.pending.begin(), buf.pending.end());
    data.insert(data.end(), payload.begin(), payload.end());

    auto parsed = parse_tls_records(data, st.sslv2_framing);
    TlsFeed feed;
    if (parsed.status == TlsParseStatus::not_tls) {
        buf.pending.clear();
        if (st.tls_seen) buf.desync = true;
        feed.framed = st.tls_seen;
        return feed;
    }

    for (const auto& rec : parsed.records) {
        const bool touches_packet = rec.offset + rec.size > carry;
        bool data_record = false;
        if (rec.sslv2) {
            data_record = note_sslv2_record(st, rec);
        } else {
            note_tls_record(st, rec);
            data_record = rec.content_type == content_type::application_data;
        }
        if (data_record && touches_packet) feed.app_data = true;
    }

    if (parsed.status == TlsParseStatus::desync) {
        buf.pending.clear();
        buf.desync = true;
    } else if (parsed.remainder.size() > kReassemblyCap) {
        buf.pending.clear();
        buf.desync = true;
    } else {
        const auto& tail = parsed.remainder;
        if (!tail.empty()) {
            const bool v2_data = st.sslv2_framing && st.sslv2_server_hello && st.sslv2_master_key &&
                                 (tail[0] & 0x80) != 0;
            if (tail[0] == content_type::application_data || v2_data) feed.app_data = true;
        }
        buf.pending = std::move(parsed.remainder);
    }

    feed.framed = st.tls_seen || !parsed.records.empty() || !buf.pending.empty();
    if (feed.framed) st.tls_seen = true;
    return feed;
}

bool is_http_start_line(ByteView p) {
    static constexpr std::array<std::string_view, 7> kPrefixes = {
        "GET ", "POST ", "HEAD ", "PUT ", "DELETE ", "OPTIONS ", "HTTP/"};
    for (auto prefix : kPrefixes) {
        if (p.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), p.begin())) return true;
    }
    return false;
}

bool has_port(const PacketRecord& r, std::uint16_t port) {
    return r.src_port == port || r.dst_port == port;
}

void classify_payload(const PacketRecord& rec, FlowState& st, int dir, ClassifiedPacket& out) {
    const bool tcp = rec.transport == Transport::tcp;
    const ByteView payload(rec.payload);

    if (tcp && has_port(rec, 853)) {
        const auto feed = feed_tls(st, dir, payload);
        out.protocol = AppProtocol::dot(flow_tls_version(st));
        out.is_app_data = feed.app_data;
        return;
    }

    if (has_port(rec, 53)) {
        if (classify_dns(rec, &st)) {
            out.protocol = AppProtocol::plain(ProtocolTag::do53);
            out.is_app_data = true;
            return;
        }
        if (st.last_protocol && st.last_protocol->tag == ProtocolTag::do53) {
            out.protocol = *st.last_protocol;
            return;
        }
    }

    if (tcp) {
        const auto feed = feed_tls(st, dir, payload);
        if (feed.framed) {
            out.protocol = AppProtocol::tls(flow_tls_version(st));
            out.is_app_data = feed.app_data;
            return;
        }
        const bool http_flow = st.last_protocol && st.last_protocol->tag == ProtocolTag::http;
        if (has_port(rec, 80) && (is_http_start_line(payload) || http_flow)) {
            out.protocol = AppProtocol::plain(ProtocolTag::http);
            out.is_app_data = true;
            return;
        }
        out.protocol = AppProtocol::plain(ProtocolTag::other_tcp);
        return;
    }

    if (auto quic = detect_quic(payload, st.quic_seen)) {
        if (quic->long_header) st.quic_seen = true;
        out.protocol = AppProtocol::plain(ProtocolTag::quic);
        out.is_app_data = !quic->long_header || quic->packet_type == QuicPacketType::zero_rtt;
        return;
    }
    out.protocol = AppProtocol::plain(ProtocolTag::other_udp);
}

}  // namespace

ClassifiedPacket classify_packet(PacketRecord record, FlowTable& flows) {
    ClassifiedPacket out;
    out.flow = FlowKey::of(record);
    auto& st = flows[out.flow];
    const Endpoint sender{record.src_ip, record.src_port};
    if (!st.client) st.client = sender;
    out.from_client = sender == *st.client;
    ++st.packets;

    const auto fallback = AppProtocol::plain(record.transport == Transport::tcp ? ProtocolTag::other_tcp
                                                                                : ProtocolTag::other_udp);
    if (record.payload.empty()) {
        out.protocol = st.last_protocol.value_or(fallback);
        // A pure ACK on a TLS flow reports the flow's current version.
        if (out.protocol.tag == ProtocolTag::tls) out.protocol.tls_version = flow_tls_version(st);
        if (out.protocol.tag == ProtocolTag::dot) out.protocol.tls_version = flow_tls_version(st);
    } else {
        classify_payload(record, st, out.from_client ? 0 : 1, out);
    }
    st.last_protocol = out.protocol;
    out.record = std::move(record);
    return out;
}

Classification classify_capture(std::vector<PacketRecord> packets) {
    Classification c;
    c.packets.reserve(packets.size());
    for (auto& p : packets) c.packets.push_back(classify_packet(std::move(p), c.flows));
    return c;
}

Classification classify_capture(std::span<const PacketRecord> packets) {
    return classify_capture(std::vector<PacketRecord>(packets.begin(), packets.end()));
}

std::string packet_info(const ClassifiedPacket& cp) {
    const ByteView p(cp.record.payload);
    if (p.empty()) {
        if (!cp.record.tcp_flags) return "";
        std::string flags;
        const std::uint8_t f = *cp.record.tcp_flags;
        auto add = [&](std::uint8_t bit, const char* name) {
            if (f & bit) flags += flags.empty() ? name : std::string(", ") + name;
        };
        add(ingest::tcp_flag::syn, "SYN");
        add(ingest::tcp_flag::fin, "FIN");
        add(ingest::tcp_flag::rst, "RST");
        add(ingest::tcp_flag::psh, "PSH");
        add(ingest::tcp_flag::ack, "ACK");
        return "[" + flags + "]";
    }
    switch (cp.protocol.tag) {
        case ProtocolTag::tls:
        case ProtocolTag::dot:
            if (p[0] == content_type::handshake && p.size() > 5) {
                if (p[5] == 1) return "Client Hello";
                if (p[5] == 2) return "Server Hello";
                return "Handshake";
            }
            if (p[0] == content_type::application_data) return "Application Data";
            if (p[0] == content_type::change_cipher_spec) return "Change Cipher Spec";
            if (p[0] == content_type::alert) return "Alert";
            if (p[0] & 0x80) return "SSLv2 Record";
            return "Continuation";
        case ProtocolTag::quic: {
            if ((p[0] & 0x80) == 0) return "Protected Payload";
            if (p.size() >= 5 && load_be32(p, 1) == 0) return "Version Negotiation";
            static constexpr const char* kTypes[] = {"Initial", "0-RTT", "Handshake", "Retry"};
            return kTypes[(p[0] >> 4) & 0x03];
        }
        case ProtocolTag::do53: {
            auto dns = dns_of(cp.record);
            if (!dns) return "DNS";
            std::string s = dns->is_response ? "Standard query response" : "Standard query";
            if (dns->qname) s += " " + *dns->qname;
            return s;
        }
        case ProtocolTag::http: {
            std::string line;
            for (std::size_t i = 0; i < p.size() && i < 80; ++i) {
                if (p[i] == '\r' || p[i] == '\n') break;
                line.push_back(static_cast<char>(p[i]));
            }
            return line;
        }
        default:
            return "";
    }
}

}  // namespace appcap::classify
