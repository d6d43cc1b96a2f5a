#include <algorithm>

#include "appcap/classify.hpp"

namespace appcap::classify {

std::string_view to_string(TlsVersion v) {
    switch (v) {
        case TlsVersion::sslv2: return "SSLv2";
        case TlsVersion::sslv3: return "SSLv3";
        case TlsVersion::tls1_0: return "TLSv1";
        case TlsVersion::tls1_1: return "TLSv1.1";
        case TlsVersion::tls1_2: return "TLSv1.2";
        case TlsVersion::tls1_3: return "TLSv1.3";
        case TlsVersion::unknown_ssl: return "SSL";
    }
    return "SSL";
}

std::optional<TlsVersion> tls_version_from_string(std::string_view s) {
    for (auto v : {TlsVersion::sslv2, TlsVersion::sslv3, TlsVersion::tls1_0, TlsVersion::tls1_1,
                   TlsVersion::tls1_2, TlsVersion::tls1_3, TlsVersion::unknown_ssl}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

std::optional<TlsVersion> tls_version_from_wire(std::uint16_t wire) {
    switch (wire) {
        case 0x0002: return TlsVersion::sslv2;
        case 0x0300: return TlsVersion::sslv3;
        case 0x0301: return TlsVersion::tls1_0;
        case 0x0302: return TlsVersion::tls1_1;
        case 0x0303: return TlsVersion::tls1_2;
        case 0x0304: return TlsVersion::tls1_3;
        default: break;
    }
    if ((wire & 0xff00) == 0x7f00) return TlsVersion::tls1_3;
    return std::nullopt;
}

namespace {

constexpr std::uint16_t kExtSupportedVersions = 0x002b;

bool is_grease(std::uint16_t v) {
    return (v & 0x0f0f) == 0x0a0a && (v >> 8) == (v & 0xff);
}

// Bounds-checked cursor over a hello body; every read fails softly.
class Cursor {
public:
    explicit Cursor(ByteView data) : data_(data) {}

    bool has(std::size_t n) const { return data_.size() - pos_ >= n; }
    std::size_t remaining() const { return data_.size() - pos_; }

    bool u8(std::uint8_t& v) {
        if (!has(1)) return false;
        v = data_[pos_++];
        return true;
    }
    bool u16(std::uint16_t& v) {
        if (!has(2)) return false;
        v = load_be16(data_, pos_);
        pos_ += 2;
        return true;
    }
    bool skip(std::size_t n) {
        if (!has(n)) return false;
        pos_ += n;
        return true;
    }
    bool take(std::size_t n, ByteView& out) {
        if (!has(n)) return false;
        out = data_.subspan(pos_, n);
        pos_ += n;
        return true;
    }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

void parse_extensions(Cursor& c, HandshakeView& view) {
    std::uint16_t total = 0;
    if (!c.u16(total)) return;
    ByteView block;
    if (!c.take(std::min<std::size_t>(total, c.remaining()), block)) return;
    Cursor ext(block);
    while (ext.remaining() >= 4) {
        std::uint16_t type = 0;
        std::uint16_t len = 0;
        ext.u16(type);
        ext.u16(len);
        ByteView body;
        if (!ext.take(len, body)) return;
        if (type != kExtSupportedVersions) continue;

        view.has_supported_versions = true;
        view.supported_versions.clear();
        if (view.type == 2) {
            if (body.size() >= 2) view.supported_versions.push_back(load_be16(body, 0));
        } else if (!body.empty()) {
            const std::size_t list_len = std::min<std::size_t>(body[0], body.size() - 1);
            for (std::size_t i = 0; i + 1 < list_len; i += 2) {
                view.supported_versions.push_back(load_be16(body, 1 + i));
            }
        }
    }
}

}  // namespace

std::optional<HandshakeView> parse_hello(ByteView msg) {
    if (msg.size() < 4) return std::nullopt;
    HandshakeView view;
    view.type = msg[0];
    if (view.type != 1 && view.type != 2) return std::nullopt;
    const std::size_t declared = load_be24(msg, 1);
    Cursor c(msg.subspan(4, std::min(declared, msg.size() - 4)));

    ByteView random;
    if (!c.u16(view.legacy_version) || !c.take(32, random)) return std::nullopt;
    std::copy(random.begin(), random.end(), view.random.begin());

    std::uint8_t sid_len = 0;
    if (!c.u8(sid_len) || !c.skip(sid_len)) return view;
    if (view.type == 1) {
        std::uint16_t cs_len = 0;
        std::uint8_t comp_len = 0;
        if (!c.u16(cs_len) || !c.skip(cs_len) || !c.u8(comp_len) || !c.skip(comp_len)) return view;
    } else {
        if (!c.skip(3)) return view;  // cipher suite + compression method
    }
    parse_extensions(c, view);
    return view;
}

TlsVersion resolve_tls_version(const std::optional<HandshakeView>& client_hello,
                               const std::optional<HandshakeView>& server_hello) {
    if (server_hello) {
        if (server_hello->has_supported_versions && !server_hello->supported_versions.empty()) {
            return tls_version_from_wire(server_hello->supported_versions.front())
                .value_or(TlsVersion::unknown_ssl);
        }
        return tls_version_from_wire(server_hello->legacy_version).value_or(TlsVersion::unknown_ssl);
    }
    if (client_hello) {
        if (client_hello->has_supported_versions) {
            std::optional<TlsVersion> best;
            for (auto wire : client_hello->supported_versions) {
                if (is_grease(wire)) continue;
                auto v = tls_version_from_wire(wire);
                if (v && (!best || *v > *best)) best = v;
            }
            if (best) return *best;
        }
        return tls_version_from_wire(client_hello->legacy_version).value_or(TlsVersion::unknown_ssl);
    }
    return TlsVersion::unknown_ssl;
}

namespace {

bool plausible_sslv2_version(std::uint16_t v) {
    return v == 0x0002 || (v >= 0x0300 && v <= 0x0303);
}

}  // namespace

TlsParseResult parse_tls_records(ByteView data, bool sslv2_framing) {
    TlsParseResult r;
    const std::size_t n = data.size();
    std::size_t off = 0;
    bool v2 = sslv2_framing;

    auto fail = [&] {
        r.status = r.records.empty() ? TlsParseStatus::not_tls : TlsParseStatus::desync;
        r.remainder.clear();
    };
    auto keep_tail = [&] { r.remainder.assign(data.begin() + static_cast<std::ptrdiff_t>(off), data.end()); };

    while (off < n) {
        const std::size_t rem = n - off;
        const std::uint8_t b0 = data[off];

        if (b0 >= content_type::change_cipher_spec && b0 <= content_type::application_data &&
            (rem < 2 || data[off + 1] == 0x03)) {
            if (rem < 5) {
                keep_tail();
                break;
            }
            const std::size_t len = load_be16(data, off + 3);
            if (len > kMaxRecordLength) {
                r.status = TlsParseStatus::desync;
                r.remainder.clear();
                return r;
            }
            if (rem < 5 + len) {
                keep_tail();
                break;
            }
            TlsRecordView view;
            view.content_type = b0;
            view.record_version = load_be16(data, off + 1);
            view.offset = off;
            view.size = 5 + len;
            if (b0 == content_type::handshake) view.handshake = parse_hello(data.subspan(off + 5, len));
            r.records.push_back(std::move(view));
            off += 5 + len;
            continue;
        }

        if (b0 & 0x80) {
            // SSLv2 two-byte header. Outside an SSLv2 flow only a hello is accepted.
            std::uint16_t version = 0x0002;
            if (!v2) {
                if (rem < 5) {
                    fail();
                    return r;
                }
                const std::uint8_t msg = data[off + 2];
                if (msg == sslv2_msg::client_hello && plausible_sslv2_version(load_be16(data, off + 3))) {
                    version = load_be16(data, off + 3);
                } else if (msg == sslv2_msg::server_hello && rem >= 7 && load_be16(data, off + 5) == 0x0002) {
                    version = 0x0002;
                } else {
                    fail();
                    return r;
                }
            }
            if (rem < 2) {
                keep_tail();
                break;
            }
            const std::size_t len = (static_cast<std::size_t>(b0 & 0x7f) << 8) | data[off + 1];
            if (len == 0) {
                fail();
                return r;
            }
            if (rem < 2 + len) {
                keep_tail();
                break;
            }
            TlsRecordView view;
            view.sslv2 = true;
            view.content_type = data[off + 2];
            view.record_version = version;
            view.offset = off;
            view.size = 2 + len;
            r.records.push_back(std::move(view));
            v2 = true;
            off += 2 + len;
            continue;
        }

        if (v2 && (b0 & 0x40) == 0) {
            // SSLv2 three-byte header (padded record).
            if (rem < 3) {
                keep_tail();
                break;
            }
            const std::size_t len = (static_cast<std::size_t>(b0 & 0x3f) << 8) | data[off + 1];
            if (len == 0) {
                fail();
                return r;
            }
            if (rem < 3 + len) {
                keep_tail();
                break;
            }
            TlsRecordView view;
            view.sslv2 = true;
            view.content_type = data[off + 3];
            view.record_version = 0x0002;
            view.offset = off;
            view.size = 3 + len;
            r.records.push_back(std::move(view));
            off += 3 + len;
            continue;
        }

        fail();
        return r;
    }
    return r;
}

}  // namespace appcap::classify
