#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "appcap/bytes.hpp"
#include "appcap/classify.hpp"
#include "appcap/ingest.hpp"

namespace testutil {

using appcap::Bytes;
using appcap::ingest::IpAddress;
using appcap::ingest::PacketRecord;
using appcap::ingest::Transport;

inline IpAddress ip(std::string_view text) { return *IpAddress::parse(text); }

inline Bytes hex(std::string_view h) {
    Bytes out;
    appcap::from_hex(h, out);
    return out;
}

inline Bytes text(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline PacketRecord packet(Transport t, std::string_view src, std::uint16_t sport, std::string_view dst,
                           std::uint16_t dport, Bytes payload, std::int64_t ts_ns = 0) {
    PacketRecord r;
    r.ts_ns = ts_ns;
    r.transport = t;
    r.src_ip = ip(src);
    r.dst_ip = ip(dst);
    r.src_port = sport;
    r.dst_port = dport;
    r.payload = std::move(payload);
    r.packet_len = static_cast<std::uint32_t>(r.payload.size() + 40);
    if (t == Transport::tcp) r.tcp_flags = appcap::ingest::tcp_flag::ack;
    return r;
}

inline PacketRecord tcp(std::string_view src, std::uint16_t sport, std::string_view dst, std::uint16_t dport,
                        Bytes payload, std::int64_t ts_ns = 0) {
    return packet(Transport::tcp, src, sport, dst, dport, std::move(payload), ts_ns);
}

inline PacketRecord udp(std::string_view src, std::uint16_t sport, std::string_view dst, std::uint16_t dport,
                        Bytes payload, std::int64_t ts_ns = 0) {
    return packet(Transport::udp, src, sport, dst, dport, std::move(payload), ts_ns);
}

// TLS record with the given content type and a zero-filled body.
inline Bytes tls_record(std::uint8_t type, std::size_t body_len, std::uint16_t version = 0x0303) {
    Bytes out = {type, static_cast<std::uint8_t>(version >> 8), static_cast<std::uint8_t>(version),
                 static_cast<std::uint8_t>(body_len >> 8), static_cast<std::uint8_t>(body_len)};
    out.resize(5 + body_len, 0x5a);
    return out;
}

inline Bytes dns_query(std::uint16_t id, std::string_view name) {
    appcap::ByteWriter w;
    w.be16(id).be16(0x0100).be16(1).be16(0).be16(0).be16(0);
    std::size_t start = 0;
    while (start < name.size()) {
        auto dot = name.find('.', start);
        if (dot == std::string_view::npos) dot = name.size();
        w.u8(static_cast<std::uint8_t>(dot - start)).text(name.substr(start, dot - start));
        start = dot + 1;
    }
    w.u8(0).be16(1).be16(1);
    return w.take();
}

inline Bytes dns_response(std::uint16_t id, std::string_view name) {
    Bytes q = dns_query(id, name);
    q[2] = 0x81;
    q[3] = 0x80;
    return q;
}

// Hello vectors shared with the reference-dissector script.
Bytes hello_vector(std::string_view name);

}  // namespace testutil
