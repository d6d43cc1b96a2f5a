#include "appcap/ingest.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cstdio>

namespace appcap::ingest {

std::string_view to_string(IngestErrc code) {
    switch (code) {
        case IngestErrc::unknown_magic: return "UnknownMagic";
        case IngestErrc::truncated_header: return "TruncatedHeader";
        case IngestErrc::truncated_frame: return "TruncatedFrame";
        case IngestErrc::unsupported_link_type: return "UnsupportedLinkType";
    }
    return "?";
}

std::string_view to_string(Transport t) {
    return t == Transport::tcp ? "TCP" : "UDP";
}

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
    return ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
}

class HeaderReader {
public:
    HeaderReader(ByteView bytes, ByteOrder order) : bytes_(bytes), order_(order) {}

    std::uint32_t u32(std::size_t off) const {
        return order_ == ByteOrder::little ? load_le32(bytes_, off) : load_be32(bytes_, off);
    }

private:
    ByteView bytes_;
    ByteOrder order_;
};

}  // namespace

CaptureStream read_capture(ByteView bytes) {
    if (bytes.size() < 4) {
        throw IngestError(IngestErrc::truncated_header, "capture shorter than the pcap magic number");
    }

    CaptureStream stream;
    const std::uint32_t magic = load_le32(bytes, 0);
    if (magic == kMagicMicro || magic == kMagicNano) {
        stream.byte_order = ByteOrder::little;
        stream.ts_resolution = magic == kMagicNano ? TsResolution::nanosecond : TsResolution::microsecond;
    } else if (byteswap32(magic) == kMagicMicro || byteswap32(magic) == kMagicNano) {
        stream.byte_order = ByteOrder::big;
        stream.ts_resolution =
            byteswap32(magic) == kMagicNano ? TsResolution::nanosecond : TsResolution::microsecond;
    } else if (magic == kMagicPcapng) {
        throw IngestError(IngestErrc::unknown_magic, "pcapng captures are not supported; convert to classic pcap");
    } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "unknown capture magic 0x%08x", magic);
        throw IngestError(IngestErrc::unknown_magic, buf);
    }

    if (bytes.size() < kGlobalHeaderLen) {
        throw IngestError(IngestErrc::truncated_header, "pcap global header is shorter than 24 bytes");
    }

    const HeaderReader hdr(bytes, stream.byte_order);
    stream.snaplen = hdr.u32(16);
    // Upper bits carry FCS metadata in newer writers.
    stream.linktype_id = hdr.u32(20) & 0x03ffffff;

    const std::int64_t frac_scale = stream.ts_resolution == TsResolution::microsecond ? 1000 : 1;
    std::size_t off = kGlobalHeaderLen;
    while (off < bytes.size()) {
        const std::size_t remaining = bytes.size() - off;
        if (remaining < kRecordHeaderLen) {
            stream.tail_error = IngestError(IngestErrc::truncated_frame,
                                            "capture ends inside a record header", stream.frames.size());
            break;
        }
        const std::uint32_t ts_sec = hdr.u32(off);
        const std::uint32_t ts_frac = hdr.u32(off + 4);
        const std::uint32_t incl_len = hdr.u32(off + 8);
        const std::uint32_t orig_len = hdr.u32(off + 12);
        if (remaining - kRecordHeaderLen < incl_len) {
            stream.tail_error = IngestError(IngestErrc::truncated_frame,
                                            "capture ends inside frame data", stream.frames.size());
            break;
        }

        RawFrame frame;
        frame.ts_ns = static_cast<std::int64_t>(ts_sec) * 1'000'000'000 + ts_frac * frac_scale;
        frame.linktype_id = stream.linktype_id;
        frame.captured_len = incl_len;
        frame.original_len = std::max(orig_len, incl_len);
        const auto data = bytes.subspan(off + kRecordHeaderLen, incl_len);
        frame.frame_bytes.assign(data.begin(), data.end());
        stream.frames.push_back(std::move(frame));
        off += kRecordHeaderLen + incl_len;
    }
    return stream;
}

Bytes write_capture(const CaptureHeader& header, std::span<const RawFrame> frames) {
    ByteWriter w;
    const bool little = header.byte_order == ByteOrder::little;
    auto u16 = [&](std::uint16_t v) { little ? w.le16(v) : w.be16(v); };
    auto u32 = [&](std::uint32_t v) { little ? w.le32(v) : w.be32(v); };

    u32(header.ts_resolution == TsResolution::nanosecond ? kMagicNano : kMagicMicro);
    u16(2);
    u16(4);
    u32(0);  // thiszone
    u32(0);  // sigfigs
    u32(header.snaplen);
    u32(header.linktype_id);

    for (const auto& f : frames) {
        const std::int64_t sec = f.ts_ns / 1'000'000'000;
        const std::int64_t ns = f.ts_ns % 1'000'000'000;
        u32(static_cast<std::uint32_t>(sec));
        u32(static_cast<std::uint32_t>(header.ts_resolution == TsResolution::nanosecond ? ns : ns / 1000));
        u32(static_cast<std::uint32_t>(f.frame_bytes.size()));
        u32(f.original_len);
        w.bytes(f.frame_bytes);
    }
    return w.take();
}

IpAddress IpAddress::v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    IpAddress ip;
    ip.version = 4;
    ip.bytes[0] = a;
    ip.bytes[1] = b;
    ip.bytes[2] = c;
    ip.bytes[3] = d;
    return ip;
}

IpAddress IpAddress::v4(ByteView four) {
    return v4(four[0], four[1], four[2], four[3]);
}

IpAddress IpAddress::v6(ByteView sixteen) {
    IpAddress ip;
    ip.version = 6;
    std::copy_n(sixteen.begin(), 16, ip.bytes.begin());
    return ip;
}

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
    std::string s(text);
    IpAddress ip;
    if (inet_pton(AF_INET, s.c_str(), ip.bytes.data()) == 1) {
        ip.version = 4;
        return ip;
    }
    if (inet_pton(AF_INET6, s.c_str(), ip.bytes.data()) == 1) {
        ip.version = 6;
        return ip;
    }
    return std::nullopt;
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    inet_ntop(version == 4 ? AF_INET : AF_INET6, bytes.data(), buf, sizeof buf);
    return buf;
}

namespace {

constexpr std::uint16_t kEtherIpv4 = 0x0800;
constexpr std::uint16_t kEtherIpv6 = 0x86dd;
constexpr std::uint16_t kEtherVlan = 0x8100;
constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;

struct L3Result {
    IpAddress src;
    IpAddress dst;
    std::uint8_t protocol = 0;
    std::size_t l4_off = 0;
    std::size_t l4_end = 0;
};

using L3Outcome = std::variant<L3Result, Skip, Malformed>;

L3Outcome decode_ipv4(ByteView f, std::size_t off) {
    if (f.size() < off + 20) return Malformed{"IPv4 header truncated"};
    if ((f[off] >> 4) != 4) return Malformed{"IPv4 version nibble mismatch"};
    const std::size_t ihl = static_cast<std::size_t>(f[off] & 0x0f) * 4;
    if (ihl < 20 || f.size() < off + ihl) return Malformed{"IPv4 header length invalid"};
    const std::size_t total_len = load_be16(f, off + 2);
    const std::uint16_t frag = load_be16(f, off + 6);
    if ((frag & 0x1fff) != 0) return Skip{SkipReason::ip_fragment};

    L3Result r;
    r.src = IpAddress::v4(f.subspan(off + 12, 4));
    r.dst = IpAddress::v4(f.subspan(off + 16, 4));
    r.protocol = f[off + 9];
    r.l4_off = off + ihl;
    // total_len == 0 appears with segmentation offload; fall back to the frame end.
    if (total_len == 0) {
        r.l4_end = f.size();
    } else if (total_len < ihl) {
        return Malformed{"IPv4 total length shorter than header"};
    } else {
        r.l4_end = std::min(f.size(), off + total_len);
    }
    if (r.protocol != kProtoTcp && r.protocol != kProtoUdp) return Skip{SkipReason::other_protocol};
    return r;
}

L3Outcome decode_ipv6(ByteView f, std::size_t off) {
    if (f.size() < off + 40) return Malformed{"IPv6 header truncated"};
    if ((f[off] >> 4) != 6) return Malformed{"IPv6 version nibble mismatch"};
    const std::size_t payload_len = load_be16(f, off + 4);

    L3Result r;
    r.src = IpAddress::v6(f.subspan(off + 8, 16));
    r.dst = IpAddress::v6(f.subspan(off + 24, 16));
    r.l4_end = payload_len == 0 ? f.size() : std::min(f.size(), off + 40 + payload_len);

    std::uint8_t next = f[off + 6];
    std::size_t pos = off + 40;
    for (;;) {
        switch (next) {
            case kProtoTcp:
            case kProtoUdp:
                r.protocol = next;
                r.l4_off = pos;
                return r;
            case 0:    // hop-by-hop
            case 43:   // routing
            case 60: {  // destination options
                if (r.l4_end < pos + 8) return Malformed{"IPv6 extension header truncated"};
                const std::size_t len = (static_cast<std::size_t>(f[pos + 1]) + 1) * 8;
                if (r.l4_end < pos + len) return Malformed{"IPv6 extension header truncated"};
                next = f[pos];
                pos += len;
                break;
            }
            case 44: {  // fragment
                if (r.l4_end < pos + 8) return Malformed{"IPv6 fragment header truncated"};
                if ((load_be16(f, pos + 2) >> 3) != 0) return Skip{SkipReason::ip_fragment};
                next = f[pos];
                pos += 8;
                break;
            }
            case 58:  // ICMPv6
            case 59:  // no next header
                return Skip{SkipReason::other_protocol};
            default:
                return Skip{SkipReason::ipv6_unknown_header};
        }
    }
}

}  // namespace

DecodeResult decode_frame(const RawFrame& frame, std::uint32_t linktype_id) {
    const ByteView f(frame.frame_bytes);
    std::size_t off = 0;
    std::uint16_t ethertype = 0;

    switch (linktype_id) {
        case kLinkEthernet:
            if (f.size() < 14) return Malformed{"Ethernet header truncated"};
            ethertype = load_be16(f, 12);
            off = 14;
            break;
        case kLinkLinuxSll:
            if (f.size() < 16) return Malformed{"Linux cooked header truncated"};
            ethertype = load_be16(f, 14);
            off = 16;
            break;
        case kLinkLinuxSll2:
            if (f.size() < 20) return Malformed{"Linux cooked v2 header truncated"};
            ethertype = load_be16(f, 0);
            off = 20;
            break;
        default:
            throw IngestError(IngestErrc::unsupported_link_type,
                              "unsupported link type " + std::to_string(linktype_id));
    }

    if (ethertype == kEtherVlan) {
        if (f.size() < off + 4) return Malformed{"VLAN tag truncated"};
        ethertype = load_be16(f, off + 2);
        off += 4;
    }

    L3Outcome l3;
    if (ethertype == kEtherIpv4) {
        l3 = decode_ipv4(f, off);
    } else if (ethertype == kEtherIpv6) {
        l3 = decode_ipv6(f, off);
    } else {
        return Skip{SkipReason::non_ip};
    }
    if (auto* s = std::get_if<Skip>(&l3)) return *s;
    if (auto* m = std::get_if<Malformed>(&l3)) return *m;
    const auto& ip = std::get<L3Result>(l3);

    PacketRecord rec;
    rec.ts_ns = frame.ts_ns;
    rec.src_ip = ip.src;
    rec.dst_ip = ip.dst;
    rec.packet_len = frame.original_len;

    std::size_t payload_off = 0;
    std::size_t payload_end = ip.l4_end;
    if (ip.protocol == kProtoTcp) {
        if (ip.l4_end < ip.l4_off + 20) return Malformed{"TCP header truncated"};
        const std::size_t doff = static_cast<std::size_t>(f[ip.l4_off + 12] >> 4) * 4;
        if (doff < 20 || ip.l4_end < ip.l4_off + doff) return Malformed{"TCP data offset invalid"};
        rec.transport = Transport::tcp;
        rec.tcp_flags = f[ip.l4_off + 13];
        payload_off = ip.l4_off + doff;
    } else {
        if (ip.l4_end < ip.l4_off + 8) return Malformed{"UDP header truncated"};
        const std::size_t udp_len = load_be16(f, ip.l4_off + 4);
        rec.transport = Transport::udp;
        payload_off = ip.l4_off + 8;
        if (udp_len >= 8) payload_end = std::min(payload_end, ip.l4_off + udp_len);
    }
    rec.src_port = load_be16(f, ip.l4_off);
    rec.dst_port = load_be16(f, ip.l4_off + 2);
    if (payload_end > payload_off) {
        rec.payload.assign(f.begin() + static_cast<std::ptrdiff_t>(payload_off),
                           f.begin() + static_cast<std::ptrdiff_t>(payload_end));
    }
    return rec;
}

DecodedCapture decode_capture(const CaptureStream& stream) {
    DecodedCapture out;
    out.total_frames = stream.frames.size();
    out.packets.reserve(stream.frames.size());
    for (const auto& frame : stream.frames) {
        auto result = decode_frame(frame, stream.linktype_id);
        if (auto* rec = std::get_if<PacketRecord>(&result)) {
            out.packets.push_back(std::move(*rec));
        } else if (auto* skip = std::get_if<Skip>(&result)) {
            ++out.skipped;
            if (skip->reason == SkipReason::ip_fragment) ++out.fragments;
        } else {
            ++out.malformed;
        }
    }
    return out;
}

Bytes encode_frame(const PacketRecord& p, std::uint32_t linktype_id) {
    const std::uint16_t ethertype = p.src_ip.version == 4 ? kEtherIpv4 : kEtherIpv6;
    ByteWriter w;
    switch (linktype_id) {
        case kLinkEthernet:
            w.bytes(std::array<std::uint8_t, 6>{0x02, 0x42, 0xac, 0x11, 0x00, 0x01});
            w.bytes(std::array<std::uint8_t, 6>{0x02, 0x42, 0xac, 0x11, 0x00, 0x02});
            w.be16(ethertype);
            break;
        case kLinkLinuxSll:
            w.be16(4);  // sent by us
            w.be16(1);  // ARPHRD_ETHER
            w.be16(6);
            w.bytes(std::array<std::uint8_t, 8>{0x02, 0x42, 0xac, 0x11, 0x00, 0x02, 0, 0});
            w.be16(ethertype);
            break;
        case kLinkLinuxSll2:
            w.be16(ethertype);
            w.be16(0);
            w.be32(2);  // interface index
            w.be16(1);
            w.u8(4);
            w.u8(6);
            w.bytes(std::array<std::uint8_t, 8>{0x02, 0x42, 0xac, 0x11, 0x00, 0x02, 0, 0});
            break;
        default:
            throw IngestError(IngestErrc::unsupported_link_type,
                              "unsupported link type " + std::to_string(linktype_id));
    }

    const bool tcp = p.transport == Transport::tcp;
    const std::size_t l4_len = (tcp ? 20 : 8) + p.payload.size();
    const std::uint8_t proto = tcp ? kProtoTcp : kProtoUdp;
    if (p.src_ip.version == 4) {
        w.u8(0x45).u8(0).be16(static_cast<std::uint16_t>(20 + l4_len));
        w.be16(0).be16(0x4000);  // id, DF
        w.u8(64).u8(proto).be16(0);
        w.bytes(ByteView(p.src_ip.bytes).first(4));
        w.bytes(ByteView(p.dst_ip.bytes).first(4));
    } else {
        w.be32(0x60000000);
        w.be16(static_cast<std::uint16_t>(l4_len)).u8(proto).u8(64);
        w.bytes(p.src_ip.bytes);
        w.bytes(p.dst_ip.bytes);
    }

    w.be16(p.src_port).be16(p.dst_port);
    if (tcp) {
        w.be32(0).be32(0);
        w.u8(0x50).u8(p.tcp_flags.value_or(tcp_flag::ack));
        w.be16(65535).be16(0).be16(0);
    } else {
        w.be16(static_cast<std::uint16_t>(l4_len)).be16(0);
    }
    w.bytes(p.payload);
    return w.take();
}

}  // namespace appcap::ingest
