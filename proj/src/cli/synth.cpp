#include "appcap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "json.hpp"

#include "appcap/io.hpp"

namespace appcap::synth {

using classify::TlsVersion;
using ingest::IpAddress;
using ingest::PacketRecord;
using ingest::Transport;
using json = nlohmann::json;

namespace {

struct ProfileName {
    Profile profile;
    std::string_view name;
};

constexpr ProfileName kProfiles[] = {
    {Profile::tls10, "Tls10"},   {Profile::tls11, "Tls11"},           {Profile::tls12, "Tls12"},
    {Profile::tls13, "Tls13"},   {Profile::ssl2, "Ssl2"},             {Profile::unknown_ssl, "UnknownSsl"},
    {Profile::quic_v1, "QuicV1"}, {Profile::do53, "Do53"},            {Profile::dot, "DoT"},
    {Profile::connectivity_http, "ConnectivityHttp"},
};

// 2025-03-14T10:15:00Z
constexpr std::int64_t kDefaultEpoch = 1741947300;

}  // namespace

std::string_view to_string(Profile p) {
    for (const auto& e : kProfiles) {
        if (e.profile == p) return e.name;
    }
    return "?";
}

std::optional<Profile> profile_from_string(std::string_view s) {
    for (const auto& e : kProfiles) {
        if (e.name == s) return e.profile;
    }
    return std::nullopt;
}

std::uint64_t flow_packet_count(const FlowSpec& flow) {
    switch (flow.profile) {
        case Profile::tls10:
        case Profile::tls11:
        case Profile::tls12:
        case Profile::tls13:
        case Profile::dot:
        case Profile::quic_v1:
            return flow.app_data_packets + 2;
        case Profile::ssl2:
            return flow.app_data_packets + 3;
        default:
            return flow.app_data_packets;
    }
}

// ---- spec parsing -------------------------------------------------------------

namespace {

class SpecReader {
public:
    SpecReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw SpecError(path_, "expected an object");
    }

    void allow(std::initializer_list<std::string_view> keys) const {
        for (const auto& [key, value] : node_.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                throw SpecError(field(key), "unknown field");
            }
        }
    }

    std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }
    bool has(std::string_view key) const { return node_.contains(key); }
    const json& at(std::string_view key) const {
        if (!node_.contains(key)) throw SpecError(field(key), "required field missing");
        return node_.at(std::string(key));
    }

    std::string string(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_string()) throw SpecError(field(key), "expected a string");
        return v.get<std::string>();
    }

    std::uint64_t unsigned_int(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw SpecError(field(key), "expected a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    double number(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_number()) throw SpecError(field(key), "expected a number");
        return v.get<double>();
    }

    const json& array(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_array()) throw SpecError(field(key), "expected an array");
        return v;
    }

private:
    const json& node_;
    std::string path_;
};

IpAddress parse_ip(const SpecReader& r, std::string_view key) {
    auto ip = IpAddress::parse(r.string(key));
    if (!ip) throw SpecError(r.field(key), "not an IP address");
    return *ip;
}

FlowSpec parse_flow(const json& node, const std::string& path) {
    SpecReader r(node, path);
    r.allow({"protocol_profile", "app_data_packets", "start_offset_s", "rate_pps", "server_ip", "server_port", "host",
             "qname", "dot_version"});
    FlowSpec f;
    const auto name = r.string("protocol_profile");
    auto profile = profile_from_string(name);
    if (!profile) throw SpecError(r.field("protocol_profile"), "unknown profile '" + name + "'");
    f.profile = *profile;
    f.app_data_packets = r.unsigned_int("app_data_packets");
    if (r.has("start_offset_s")) {
        f.start_offset_s = r.number("start_offset_s");
        if (!(f.start_offset_s >= 0) || !std::isfinite(f.start_offset_s)) {
            throw SpecError(r.field("start_offset_s"), "must be a non-negative number");
        }
    }
    if (r.has("rate_pps")) {
        f.rate_pps = r.number("rate_pps");
        if (!(f.rate_pps > 0) || !std::isfinite(f.rate_pps)) throw SpecError(r.field("rate_pps"), "must be positive");
    }
    if (r.has("server_ip")) f.server_ip = parse_ip(r, "server_ip");
    if (r.has("server_port")) {
        const auto port = r.unsigned_int("server_port");
        if (port == 0 || port > 65535) throw SpecError(r.field("server_port"), "must be in 1..65535");
        f.server_port = static_cast<std::uint16_t>(port);
    }
    if (r.has("host")) f.host = r.string("host");
    if (r.has("qname")) f.qname = r.string("qname");
    if (r.has("dot_version")) {
        if (f.profile != Profile::dot) throw SpecError(r.field("dot_version"), "only valid for the DoT profile");
        auto v = classify::tls_version_from_string(r.string("dot_version"));
        if (!v || *v < TlsVersion::tls1_0 || *v > TlsVersion::tls1_3) {
            throw SpecError(r.field("dot_version"), "expected TLSv1, TLSv1.1, TLSv1.2 or TLSv1.3");
        }
        f.dot_version = v;
    }
    return f;
}

}  // namespace

FixtureSpec parse_fixture_spec(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SpecError("$", std::string("invalid JSON: ") + e.what());
    }
    SpecReader r(root, "");
    r.allow({"seed", "client_ip", "linktype", "ts_resolution", "apps"});

    FixtureSpec spec;
    if (r.has("seed")) spec.seed = r.unsigned_int("seed");
    if (r.has("client_ip")) spec.client_ip = parse_ip(r, "client_ip");
    if (r.has("linktype")) {
        const auto lt = r.unsigned_int("linktype");
        if (lt != ingest::kLinkEthernet && lt != ingest::kLinkLinuxSll && lt != ingest::kLinkLinuxSll2) {
            throw SpecError("linktype", "expected 1, 113 or 276");
        }
        spec.linktype = static_cast<std::uint32_t>(lt);
    }
    if (r.has("ts_resolution")) {
        const auto res = r.string("ts_resolution");
        if (res == "us") {
            spec.ts_resolution = ingest::TsResolution::microsecond;
        } else if (res == "ns") {
            spec.ts_resolution = ingest::TsResolution::nanosecond;
        } else {
            throw SpecError("ts_resolution", "expected \"us\" or \"ns\"");
        }
    }

    const dataset::DateFormat fmt;
    std::set<std::string> stems;
    const auto& apps = r.array("apps");
    for (std::size_t i = 0; i < apps.size(); ++i) {
        const std::string app_path = "apps[" + std::to_string(i) + "]";
        SpecReader ar(apps[i], app_path);
        ar.allow({"app_name", "captures"});
        AppSpec app;
        app.app_name = ar.string("app_name");
        try {
            dataset::validate_label({app.app_name, {}, 1});
        } catch (const dataset::LabelError& e) {
            throw SpecError(ar.field("app_name"), e.what());
        }
        const auto& captures = ar.array("captures");
        for (std::size_t j = 0; j < captures.size(); ++j) {
            const std::string cap_path = app_path + ".captures[" + std::to_string(j) + "]";
            SpecReader cr(captures[j], cap_path);
            cr.allow({"date", "duration_s", "flows"});
            CaptureSpec cap;
            if (cr.has("date")) {
                auto date = fmt.parse(cr.string("date"));
                if (!date) throw SpecError(cr.field("date"), "expected " + fmt.pattern());
                cap.date = *date;
            }
            const auto duration = cr.unsigned_int("duration_s");
            if (duration < 1 || duration > (std::uint64_t{1} << 40)) {
                throw SpecError(cr.field("duration_s"), "must be a positive number of seconds");
            }
            cap.duration_s = static_cast<std::int64_t>(duration);
            const auto& flows = cr.array("flows");
            for (std::size_t k = 0; k < flows.size(); ++k) {
                cap.flows.push_back(parse_flow(flows[k], cap_path + ".flows[" + std::to_string(k) + "]"));
            }
            app.captures.push_back(std::move(cap));
        }
        spec.apps.push_back(std::move(app));

        for (std::size_t j = 0; j < spec.apps.back().captures.size(); ++j) {
            try {
                const auto stem = dataset::render_stem(capture_label(spec, i, j), fmt);
                if (!stems.insert(stem).second) {
                    throw SpecError(app_path + ".captures[" + std::to_string(j) + "].date",
                                    "duplicate capture name " + stem);
                }
            } catch (const dataset::LabelError& e) {
                const bool name = e.code() == dataset::LabelErrc::bad_app_name;
                throw SpecError(name ? app_path + ".app_name" : app_path + ".captures[" + std::to_string(j) + "]",
                                e.what());
            }
        }
    }
    return spec;
}

dataset::CaptureLabel capture_label(const FixtureSpec& spec, std::size_t app, std::size_t capture) {
    const auto& a = spec.apps.at(app);
    const auto& c = a.captures.at(capture);
    dataset::CaptureLabel label;
    label.app_name = a.app_name;
    label.duration_s = c.duration_s;
    label.capture_date = c.date.value_or(
        std::chrono::sys_seconds{std::chrono::seconds{kDefaultEpoch + 3600 * static_cast<std::int64_t>(capture)}});
    return label;
}

// ---- byte templates -----------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    std::uint64_t below(std::uint64_t n) { return next() % n; }
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
    Bytes bytes(std::size_t n) {
        Bytes out(n);
        for (std::size_t i = 0; i < n; i += 8) {
            const std::uint64_t v = next();
            for (std::size_t j = 0; j < 8 && i + j < n; ++j) out[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
        }
        return out;
    }

private:
    std::mt19937_64 engine_;
};

Bytes tls_record(std::uint8_t type, std::uint16_t version, ByteView body) {
    ByteWriter w;
    w.u8(type).be16(version).be16(static_cast<std::uint16_t>(body.size())).bytes(body);
    return w.take();
}

Bytes handshake(std::uint8_t type, ByteView body) {
    ByteWriter w;
    w.u8(type).be24(static_cast<std::uint32_t>(body.size())).bytes(body);
    return w.take();
}

std::uint16_t wire_version(TlsVersion v) {
    switch (v) {
        case TlsVersion::tls1_0: return 0x0301;
        case TlsVersion::tls1_1: return 0x0302;
        default: return 0x0303;
    }
}

Bytes client_hello(TlsVersion v, const classify::Random& random, ByteView session_id,
                   const std::optional<std::string>& sni) {
    const bool tls13 = v == TlsVersion::tls1_3;
    ByteWriter ext;
    if (sni) {
        ext.be16(0x0000).be16(static_cast<std::uint16_t>(sni->size() + 5));
        ext.be16(static_cast<std::uint16_t>(sni->size() + 3)).u8(0).be16(static_cast<std::uint16_t>(sni->size())).text(*sni);
    }
    if (tls13) {
        ext.be16(0x002b).be16(7).u8(6).be16(0x7a7a).be16(0x0304).be16(0x0303);
    }

    ByteWriter body;
    body.be16(wire_version(v)).bytes(random);
    body.u8(static_cast<std::uint8_t>(session_id.size())).bytes(session_id);
    if (tls13) {
        body.be16(6).be16(0x1301).be16(0x1302).be16(0xc02f);
    } else {
        body.be16(4).be16(0xc02f).be16(0x002f);
    }
    body.u8(1).u8(0);
    body.be16(static_cast<std::uint16_t>(ext.size())).bytes(ext.view());
    return tls_record(classify::content_type::handshake, 0x0301, handshake(1, body.view()));
}

Bytes server_hello(TlsVersion v, const classify::Random& random, ByteView session_id) {
    const bool tls13 = v == TlsVersion::tls1_3;
    ByteWriter body;
    body.be16(wire_version(v)).bytes(random);
    body.u8(static_cast<std::uint8_t>(session_id.size())).bytes(session_id);
    body.be16(tls13 ? 0x1301 : 0xc02f).u8(0);
    if (tls13) {
        body.be16(6).be16(0x002b).be16(2).be16(0x0304);
    } else {
        body.be16(5).be16(0xff01).be16(1).u8(0);
    }
    Bytes out = tls_record(classify::content_type::handshake, wire_version(v), handshake(2, body.view()));
    if (tls13) {
        const std::uint8_t ccs[] = {1};
        const Bytes rec = tls_record(classify::content_type::change_cipher_spec, 0x0303, ccs);
        out.insert(out.end(), rec.begin(), rec.end());
    }
    return out;
}

Bytes sslv2_record(ByteView body) {
    ByteWriter w;
    w.be16(static_cast<std::uint16_t>(0x8000 | body.size())).bytes(body);
    return w.take();
}

Bytes dns_message(std::uint16_t id, bool response, const std::string& qname, Rng& rng) {
    ByteWriter w;
    w.be16(id).be16(response ? 0x8180 : 0x0100).be16(1).be16(response ? 1 : 0).be16(0).be16(0);
    std::size_t start = 0;
    while (start <= qname.size()) {
        auto dot = qname.find('.', start);
        if (dot == std::string::npos) dot = qname.size();
        const auto label = std::string_view(qname).substr(start, dot - start);
        if (!label.empty()) w.u8(static_cast<std::uint8_t>(label.size())).text(label);
        start = dot + 1;
    }
    w.u8(0).be16(1).be16(1);
    if (response) {
        w.be16(0xc00c).be16(1).be16(1).be32(300).be16(4);
        w.u8(142).u8(250).u8(static_cast<std::uint8_t>(rng.below(256))).u8(static_cast<std::uint8_t>(rng.below(256)));
    }
    return w.take();
}

struct FlowPlan {
    Transport transport = Transport::tcp;
    IpAddress server_ip;
    std::uint16_t server_port = 443;
    std::uint16_t client_port = 0;
    std::vector<std::pair<bool, Bytes>> packets;  // (from_client, payload)
};

IpAddress default_server(Profile p) {
    switch (p) {
        case Profile::do53:
        case Profile::dot: return IpAddress::v4(8, 8, 8, 8);
        case Profile::quic_v1: return IpAddress::v4(142, 250, 200, 138);
        default: return IpAddress::v4(142, 250, 184, 3);
    }
}

std::uint16_t default_port(Profile p) {
    switch (p) {
        case Profile::do53: return 53;
        case Profile::dot: return 853;
        case Profile::connectivity_http: return 80;
        default: return 443;
    }
}

TlsVersion tls_profile_version(const FlowSpec& f) {
    switch (f.profile) {
        case Profile::tls10: return TlsVersion::tls1_0;
        case Profile::tls11: return TlsVersion::tls1_1;
        case Profile::tls12: return TlsVersion::tls1_2;
        case Profile::dot: return f.dot_version.value_or(TlsVersion::tls1_3);
        default: return TlsVersion::tls1_3;
    }
}

void plan_tls(const FlowSpec& f, FlowPlan& plan, Rng& rng, std::vector<keylog::KeyLogEntry>& keys) {
    const TlsVersion v = tls_profile_version(f);
    classify::Random client_random{};
    classify::Random server_random{};
    const Bytes cr = rng.bytes(32);
    const Bytes sr = rng.bytes(32);
    std::copy(cr.begin(), cr.end(), client_random.begin());
    std::copy(sr.begin(), sr.end(), server_random.begin());
    const Bytes session_id = v == TlsVersion::tls1_3 ? rng.bytes(32) : Bytes{};

    plan.packets.emplace_back(true, client_hello(v, client_random, session_id, f.host));
    plan.packets.emplace_back(false, server_hello(v, server_random, session_id));
    for (std::uint64_t k = 0; k < f.app_data_packets; ++k) {
        const Bytes body = rng.bytes(static_cast<std::size_t>(rng.between(24, 280)));
        plan.packets.emplace_back(k % 2 == 0, tls_record(classify::content_type::application_data, wire_version(v), body));
    }

    if (v == TlsVersion::tls1_3) {
        for (const char* label : {"CLIENT_HANDSHAKE_TRAFFIC_SECRET", "SERVER_HANDSHAKE_TRAFFIC_SECRET",
                                  "CLIENT_TRAFFIC_SECRET_0", "SERVER_TRAFFIC_SECRET_0"}) {
            keys.push_back({label, client_random, rng.bytes(32)});
        }
    } else {
        keys.push_back({"CLIENT_RANDOM", client_random, rng.bytes(48)});
    }
}

void plan_ssl2(const FlowSpec& f, FlowPlan& plan, Rng& rng) {
    ByteWriter ch;
    ch.u8(1).be16(0x0002).be16(6).be16(0).be16(16);
    ch.u8(0x07).u8(0x00).u8(0xc0).u8(0x01).u8(0x00).u8(0x80).bytes(rng.bytes(16));
    plan.packets.emplace_back(true, sslv2_record(ch.view()));

    ByteWriter sh;
    sh.u8(4).u8(0).u8(1).be16(0x0002).be16(64).be16(3).be16(16);
    sh.bytes(rng.bytes(64)).u8(0x07).u8(0x00).u8(0xc0).bytes(rng.bytes(16));
    plan.packets.emplace_back(false, sslv2_record(sh.view()));

    ByteWriter cmk;
    cmk.u8(2).u8(0x07).u8(0x00).u8(0xc0).be16(0).be16(64).be16(8).bytes(rng.bytes(72));
    plan.packets.emplace_back(true, sslv2_record(cmk.view()));

    for (std::uint64_t k = 0; k < f.app_data_packets; ++k) {
        plan.packets.emplace_back(k % 2 == 1, sslv2_record(rng.bytes(static_cast<std::size_t>(rng.between(16, 280)))));
    }
}

void plan_unknown_ssl(const FlowSpec& f, FlowPlan& plan, Rng& rng) {
    for (std::uint64_t k = 0; k < f.app_data_packets; ++k) {
        const Bytes body = rng.bytes(static_cast<std::size_t>(rng.between(24, 280)));
        plan.packets.emplace_back(k % 2 == 0, tls_record(classify::content_type::application_data, 0x0303, body));
    }
}

void plan_quic(const FlowSpec& f, FlowPlan& plan, Rng& rng) {
    const Bytes dcid = rng.bytes(8);
    const Bytes scid = rng.bytes(8);

    ByteWriter initial;
    initial.u8(0xc3).be32(1).u8(8).bytes(dcid).u8(8).bytes(scid).u8(0);
    const std::size_t initial_rest = 1200 - (initial.size() + 2);
    initial.be16(static_cast<std::uint16_t>(0x4000 | initial_rest)).bytes(rng.bytes(initial_rest));
    plan.packets.emplace_back(true, initial.take());

    ByteWriter hs;
    hs.u8(0xe1).be32(1).u8(8).bytes(scid).u8(8).bytes(rng.bytes(8));
    const std::size_t hs_rest = 600 - (hs.size() + 2);
    hs.be16(static_cast<std::uint16_t>(0x4000 | hs_rest)).bytes(rng.bytes(hs_rest));
    plan.packets.emplace_back(false, hs.take());

    for (std::uint64_t k = 0; k < f.app_data_packets; ++k) {
        ByteWriter s;
        s.u8(static_cast<std::uint8_t>(0x40 | rng.below(0x40))).bytes(k % 2 == 0 ? dcid : scid);
        s.bytes(rng.bytes(static_cast<std::size_t>(rng.between(20, 300))));
        plan.packets.emplace_back(k % 2 == 0, s.take());
    }
}

void plan_do53(const FlowSpec& f, FlowPlan& plan, Rng& rng) {
    const std::string qname = f.qname.value_or("example.org");
    std::uint16_t id = 0;
    for (std::uint64_t k = 0; k < f.app_data_packets; ++k) {
        const bool query = k % 2 == 0;
        if (query) id = static_cast<std::uint16_t>(rng.below(65536));
        plan.packets.emplace_back(query, dns_message(id, !query, qname, rng));
    }
}

void plan_http(const FlowSpec& f, FlowPlan& plan) {
    const std::string host = f.host.value_or("connectivitycheck.gstatic.com");
    const std::string request = "GET /generate_204 HTTP/1.1\r\nHost: " + host +
                                "\r\nUser-Agent: Dalvik/2.1.0 (Linux; U; Android 13)\r\nConnection: Keep-Alive\r\n\r\n";
    const std::string response = "HTTP/1.1 204 No Content\r\nContent-Length: 0\r\n\r\n";
    for (std::uint64_t k = 0; k < f.app_data_packets; ++k) {
        const std::string& text = k % 2 == 0 ? request : response;
        plan.packets.emplace_back(k % 2 == 0, Bytes(text.begin(), text.end()));
    }
}

std::uint32_t frame_overhead(std::uint32_t linktype, const PacketRecord& r) {
    std::uint32_t link = linktype == ingest::kLinkEthernet ? 14 : linktype == ingest::kLinkLinuxSll ? 16 : 20;
    const std::uint32_t ip = r.ip_version() == 4 ? 20 : 40;
    const std::uint32_t l4 = r.transport == Transport::tcp ? 20 : 8;
    return link + ip + l4;
}

}  // namespace

SynthCapture synthesize_capture(const FixtureSpec& spec, std::size_t app, std::size_t capture) {
    const auto& cap = spec.apps.at(app).captures.at(capture);
    SynthCapture out;
    out.label = capture_label(spec, app, capture);
    Rng rng(splitmix64(spec.seed ^ splitmix64((static_cast<std::uint64_t>(app) << 32) | capture)));

    std::set<std::uint16_t> used_ports;
    const std::int64_t base_ns = out.label.capture_date.time_since_epoch().count() * 1'000'000'000LL;
    const bool micro = spec.ts_resolution == ingest::TsResolution::microsecond;

    struct Stamped {
        std::int64_t ts;
        std::size_t order;
        PacketRecord record;
    };
    std::vector<Stamped> all;

    for (const auto& f : cap.flows) {
        FlowPlan plan;
        plan.transport = f.profile == Profile::do53 || f.profile == Profile::quic_v1 ? Transport::udp : Transport::tcp;
        plan.server_ip = f.server_ip.value_or(default_server(f.profile));
        plan.server_port = f.server_port.value_or(default_port(f.profile));
        do {
            plan.client_port = static_cast<std::uint16_t>(rng.between(32768, 60999));
        } while (!used_ports.insert(plan.client_port).second);

        switch (f.profile) {
            case Profile::tls10:
            case Profile::tls11:
            case Profile::tls12:
            case Profile::tls13:
            case Profile::dot: plan_tls(f, plan, rng, out.keys); break;
            case Profile::ssl2: plan_ssl2(f, plan, rng); break;
            case Profile::unknown_ssl: plan_unknown_ssl(f, plan, rng); break;
            case Profile::quic_v1: plan_quic(f, plan, rng); break;
            case Profile::do53: plan_do53(f, plan, rng); break;
            case Profile::connectivity_http: plan_http(f, plan); break;
        }

        for (std::size_t k = 0; k < plan.packets.size(); ++k) {
            auto& [from_client, payload] = plan.packets[k];
            const double offset_s = f.start_offset_s + static_cast<double>(k) / f.rate_pps;
            const std::int64_t ts = micro ? base_ns + std::llround(offset_s * 1e6) * 1000LL
                                          : base_ns + std::llround(offset_s * 1e9);
            PacketRecord r;
            r.ts_ns = ts;
            r.transport = plan.transport;
            r.src_ip = from_client ? spec.client_ip : plan.server_ip;
            r.dst_ip = from_client ? plan.server_ip : spec.client_ip;
            r.src_port = from_client ? plan.client_port : plan.server_port;
            r.dst_port = from_client ? plan.server_port : plan.client_port;
            if (plan.transport == Transport::tcp) r.tcp_flags = ingest::tcp_flag::psh | ingest::tcp_flag::ack;
            r.payload = std::move(payload);
            r.packet_len = frame_overhead(spec.linktype, r) + static_cast<std::uint32_t>(r.payload.size());
            all.push_back({ts, all.size(), std::move(r)});
        }
    }

    std::sort(all.begin(), all.end(),
              [](const Stamped& a, const Stamped& b) { return std::tie(a.ts, a.order) < std::tie(b.ts, b.order); });
    out.packets.reserve(all.size());
    for (auto& s : all) out.packets.push_back(std::move(s.record));
    return out;
}

Bytes encode_capture(const FixtureSpec& spec, const SynthCapture& capture) {
    std::vector<ingest::RawFrame> frames;
    frames.reserve(capture.packets.size());
    for (const auto& p : capture.packets) {
        ingest::RawFrame f;
        f.ts_ns = p.ts_ns;
        f.linktype_id = spec.linktype;
        f.frame_bytes = ingest::encode_frame(p, spec.linktype);
        f.captured_len = static_cast<std::uint32_t>(f.frame_bytes.size());
        f.original_len = f.captured_len;
        frames.push_back(std::move(f));
    }
    ingest::CaptureHeader header;
    header.linktype_id = spec.linktype;
    header.ts_resolution = spec.ts_resolution;
    return ingest::write_capture(header, frames);
}

std::vector<std::filesystem::path> write_fixture(const FixtureSpec& spec, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io::IoError("cannot create " + out_dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    for (std::size_t a = 0; a < spec.apps.size(); ++a) {
        for (std::size_t c = 0; c < spec.apps[a].captures.size(); ++c) {
            const auto capture = synthesize_capture(spec, a, c);
            const auto pcap_path = out_dir / dataset::render_capture_filename(capture.label);
            const auto keylog_path = out_dir / keylog::keylog_filename_for(capture.label);
            io::write_file(pcap_path, encode_capture(spec, capture));
            io::write_text(keylog_path, keylog::render_keylog(capture.keys));
            written.push_back(pcap_path);
            written.push_back(keylog_path);
        }
    }
    return written;
}

}  // namespace appcap::synth
