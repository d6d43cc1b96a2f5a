#include "doctest.h"

#include "appcap/classify.hpp"
#include "support.hpp"

using namespace appcap;
using namespace appcap::classify;
using testutil::hello_vector;
using testutil::hex;

namespace {

std::optional<HandshakeView> hello_of(std::string_view vector_name) {
    auto rec = parse_tls_records(hello_vector(vector_name));
    REQUIRE(rec.records.size() == 1);
    return rec.records[0].handshake;
}

// Minimal ClientHello handshake message with no extensions.
Bytes bare_client_hello(std::uint16_t legacy) {
    ByteWriter body;
    body.be16(legacy).bytes(Bytes(32, 0x11)).u8(0).be16(2).be16(0x002f).u8(1).u8(0);
    ByteWriter msg;
    msg.u8(1).be24(static_cast<std::uint32_t>(body.size())).bytes(body.view());
    ByteWriter rec;
    rec.u8(22).be16(0x0301).be16(static_cast<std::uint16_t>(msg.size())).bytes(msg.view());
    return rec.take();
}

}  // namespace

TEST_CASE("frozen ClientHello parses with supported_versions") {
    const auto raw = hello_vector("client_hello");
    auto r = parse_tls_records(raw);
    CHECK(r.status == TlsParseStatus::ok);
    REQUIRE(r.records.size() == 1);
    CHECK(r.remainder.empty());
    const auto& rec = r.records[0];
    CHECK(rec.content_type == content_type::handshake);
    CHECK(rec.record_version == 0x0301);
    CHECK(rec.size == raw.size());
    REQUIRE(rec.handshake);
    CHECK(rec.handshake->type == 1);
    CHECK(rec.handshake->legacy_version == 0x0303);
    CHECK(rec.handshake->has_supported_versions);
    CHECK(rec.handshake->supported_versions == std::vector<std::uint16_t>{0x0304, 0x0303});
    CHECK(rec.handshake->random[0] == 0x10);
    CHECK(rec.handshake->random[31] == 0x2f);
}

TEST_CASE("exact-length application_data record") {
    auto r = parse_tls_records(hex("17030300050102030405"));
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].content_type == content_type::application_data);
    CHECK(r.remainder.empty());
}

TEST_CASE("partial header is carried over") {
    auto r = parse_tls_records(hex("160303"));
    CHECK(r.records.empty());
    CHECK(r.status == TlsParseStatus::ok);
    CHECK(r.remainder == hex("160303"));
}

TEST_CASE("record split across two segments reassembles") {
    Bytes rec = testutil::tls_record(23, 100);
    Bytes first(rec.begin(), rec.begin() + 40);
    auto r1 = parse_tls_records(first);
    CHECK(r1.records.empty());
    CHECK(r1.remainder == first);
    Bytes joined = r1.remainder;
    joined.insert(joined.end(), rec.begin() + 40, rec.end());
    auto r2 = parse_tls_records(joined);
    REQUIRE(r2.records.size() == 1);
    CHECK(r2.remainder.empty());
}

TEST_CASE("oversized record length desyncs") {
    Bytes ok = testutil::tls_record(23, 4);
    ByteWriter w;
    w.bytes(ok).u8(23).be16(0x0303).be16(static_cast<std::uint16_t>(kMaxRecordLength + 1));
    auto r = parse_tls_records(w.view());
    CHECK(r.status == TlsParseStatus::desync);
    CHECK(r.remainder.empty());

    auto limit = testutil::tls_record(23, kMaxRecordLength);
    CHECK(parse_tls_records(limit).records.size() == 1);
}

TEST_CASE("non-TLS bytes are not_tls") {
    CHECK(parse_tls_records(testutil::text("GET / HTTP/1.1\r\n")).status == TlsParseStatus::not_tls);
}

TEST_CASE("version resolution from hellos") {
    const auto ch = hello_of("client_hello");
    const auto sh13 = hello_of("server_hello_13");
    const auto sh12 = hello_of("server_hello_12");
    REQUIRE(sh13);
    CHECK(sh13->legacy_version == 0x0303);
    CHECK(sh13->supported_versions == std::vector<std::uint16_t>{0x0304});
    CHECK(resolve_tls_version(ch, sh13) == TlsVersion::tls1_3);
    CHECK(resolve_tls_version(ch, sh12) == TlsVersion::tls1_2);
    CHECK(resolve_tls_version(std::nullopt, sh12) == TlsVersion::tls1_2);
    CHECK(resolve_tls_version(ch, std::nullopt) == TlsVersion::tls1_3);
    CHECK(resolve_tls_version(std::nullopt, std::nullopt) == TlsVersion::unknown_ssl);

    auto legacy = parse_tls_records(bare_client_hello(0x0301));
    REQUIRE(legacy.records.size() == 1);
    CHECK(resolve_tls_version(legacy.records[0].handshake, std::nullopt) == TlsVersion::tls1_0);
}

TEST_CASE("GREASE values never win the ClientHello hint") {
    HandshakeView ch;
    ch.type = 1;
    ch.legacy_version = 0x0303;
    ch.has_supported_versions = true;
    ch.supported_versions = {0x7a7a, 0x0303, 0xfafa};
    CHECK(resolve_tls_version(ch, std::nullopt) == TlsVersion::tls1_2);
}

TEST_CASE("wire version mapping") {
    CHECK(tls_version_from_wire(0x0002) == TlsVersion::sslv2);
    CHECK(tls_version_from_wire(0x0300) == TlsVersion::sslv3);
    CHECK(tls_version_from_wire(0x0301) == TlsVersion::tls1_0);
    CHECK(tls_version_from_wire(0x0302) == TlsVersion::tls1_1);
    CHECK(tls_version_from_wire(0x0303) == TlsVersion::tls1_2);
    CHECK(tls_version_from_wire(0x0304) == TlsVersion::tls1_3);
    CHECK(tls_version_from_wire(0x7f17) == TlsVersion::tls1_3);
    CHECK_FALSE(tls_version_from_wire(0x1234));
    CHECK(to_string(TlsVersion::tls1_0) == "TLSv1");
    CHECK(to_string(TlsVersion::unknown_ssl) == "SSL");
    for (auto v : {TlsVersion::sslv2, TlsVersion::sslv3, TlsVersion::tls1_0, TlsVersion::tls1_1,
                   TlsVersion::tls1_2, TlsVersion::tls1_3, TlsVersion::unknown_ssl}) {
        CHECK(tls_version_from_string(to_string(v)) == v);
    }
}

TEST_CASE("frozen hellos drive flow classification") {
    using testutil::tcp;
    auto run = [](std::string_view server_hello) {
        std::vector<PacketRecord> pkts = {
            tcp("10.0.2.16", 50000, "142.250.184.3", 443, hello_vector("client_hello"), 1),
            tcp("142.250.184.3", 443, "10.0.2.16", 50000, hello_vector(server_hello), 2),
            tcp("10.0.2.16", 50000, "142.250.184.3", 443, testutil::tls_record(23, 64), 3),
            tcp("142.250.184.3", 443, "10.0.2.16", 50000, {}, 4),
        };
        return classify_capture(std::move(pkts));
    };
    auto c13 = run("server_hello_13");
    REQUIRE(c13.packets.size() == 4);
    CHECK(c13.packets[2].protocol == AppProtocol::tls(TlsVersion::tls1_3));
    CHECK(c13.packets[2].is_app_data);
    CHECK_FALSE(c13.packets[0].is_app_data);
    CHECK(c13.packets[3].protocol == AppProtocol::tls(TlsVersion::tls1_3));
    CHECK_FALSE(c13.packets[3].is_app_data);
    const auto& flow = c13.flows.begin()->second;
    REQUIRE(flow.client_random);
    CHECK((*flow.client_random)[0] == 0x10);

    auto c12 = run("server_hello_12");
    CHECK(c12.packets[2].protocol == AppProtocol::tls(TlsVersion::tls1_2));
}

TEST_CASE("SSLv2 records classify as SSLv2") {
    using testutil::tcp;
    // CLIENT-HELLO: len 0x0d, msg 1, version 0x0002, cipher/session/challenge lengths.
    const Bytes ch = hex("800d01000200030000000801000080");
    const Bytes sh = hex("800c040001000200000000000000");
    const Bytes cmk = hex("8005020700c0ff");
    const Bytes data = hex("8006aabbccddeeff");
    std::vector<PacketRecord> pkts = {
        tcp("10.0.2.16", 50001, "1.2.3.4", 443, ch, 1),
        tcp("1.2.3.4", 443, "10.0.2.16", 50001, sh, 2),
        tcp("10.0.2.16", 50001, "1.2.3.4", 443, cmk, 3),
        tcp("1.2.3.4", 443, "10.0.2.16", 50001, data, 4),
    };
    auto c = classify_capture(std::move(pkts));
    for (const auto& p : c.packets) CHECK(p.protocol == AppProtocol::tls(TlsVersion::sslv2));
    CHECK_FALSE(c.packets[0].is_app_data);
    CHECK_FALSE(c.packets[2].is_app_data);
    CHECK(c.packets[3].is_app_data);
}
