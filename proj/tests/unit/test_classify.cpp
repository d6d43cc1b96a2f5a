#include "doctest.h"

#include <algorithm>
#include <random>

#include "appcap/classify.hpp"
#include "support.hpp"

using namespace appcap;
using namespace appcap::classify;
using testutil::hex;
using testutil::tcp;
using testutil::udp;

TEST_CASE("QUIC long header v1 and gated short header") {
    Bytes initial = hex("c300000001");
    initial.resize(1200, 0);
    auto q = detect_quic(initial, false);
    REQUIRE(q);
    CHECK(q->long_header);
    CHECK(q->version == 1u);
    CHECK(q->packet_type == QuicPacketType::initial);

    const Bytes short_hdr = hex("45aabbccdd");
    CHECK_FALSE(detect_quic(short_hdr, false));
    auto s = detect_quic(short_hdr, true);
    REQUIRE(s);
    CHECK_FALSE(s->long_header);

    CHECK_FALSE(detect_quic(testutil::dns_query(1, "example.org"), false));
}

TEST_CASE("QUIC flow: handshake is not app data, short headers are") {
    Bytes initial = hex("c300000001");
    initial.resize(1200, 0);
    std::vector<PacketRecord> pkts = {
        udp("10.0.2.16", 40000, "142.250.200.138", 443, initial, 1),
        udp("142.250.200.138", 443, "10.0.2.16", 40000, hex("45010203"), 2),
        udp("10.0.2.16", 40001, "142.250.200.138", 443, hex("45010203"), 3),
    };
    auto c = classify_capture(std::move(pkts));
    CHECK(c.packets[0].protocol.tag == ProtocolTag::quic);
    CHECK_FALSE(c.packets[0].is_app_data);
    CHECK(c.packets[1].protocol.tag == ProtocolTag::quic);
    CHECK(c.packets[1].is_app_data);
    CHECK(c.packets[2].protocol.tag == ProtocolTag::other_udp);
}

TEST_CASE("DNS on port 53") {
    auto q = udp("10.0.2.16", 40000, "8.8.8.8", 53, testutil::dns_query(0x1234, "Example.ORG"));
    auto proto = classify_dns(q);
    REQUIRE(proto);
    CHECK(proto->tag == ProtocolTag::do53);
    auto dns = dns_of(q);
    REQUIRE(dns);
    CHECK(dns->id == 0x1234);
    CHECK(dns->qname == "example.org");
    CHECK_FALSE(dns->is_response);

    CHECK_FALSE(classify_dns(udp("10.0.2.16", 40000, "8.8.8.8", 53, hex("a1b2c3"))));

    ByteWriter framed;
    const Bytes msg = testutil::dns_response(7, "www.google.com");
    framed.be16(static_cast<std::uint16_t>(msg.size())).bytes(msg);
    auto over_tcp = dns_of(tcp("8.8.8.8", 53, "10.0.2.16", 40000, framed.take()));
    REQUIRE(over_tcp);
    CHECK(over_tcp->is_response);
    CHECK(over_tcp->qname == "www.google.com");
}

TEST_CASE("DoT takes the negotiated version") {
    std::vector<PacketRecord> pkts = {
        tcp("10.0.2.16", 50000, "8.8.8.8", 853, testutil::hello_vector("client_hello"), 1),
        tcp("8.8.8.8", 853, "10.0.2.16", 50000, testutil::hello_vector("server_hello_13"), 2),
        tcp("10.0.2.16", 50000, "8.8.8.8", 853, testutil::tls_record(23, 40), 3),
    };
    auto c = classify_capture(std::move(pkts));
    CHECK(c.packets[2].protocol == AppProtocol::dot(TlsVersion::tls1_3));
    CHECK(c.packets[2].is_app_data);
    CHECK(display_name(c.packets[2].protocol) == "DoT");
}

TEST_CASE("HTTP request and response on port 80") {
    std::vector<PacketRecord> pkts = {
        tcp("10.0.2.16", 50000, "142.250.184.3", 80,
            testutil::text("GET /generate_204 HTTP/1.1\r\nHost: connectivitycheck.gstatic.com\r\n\r\n"), 1),
        tcp("142.250.184.3", 80, "10.0.2.16", 50000, testutil::text("HTTP/1.1 204 No Content\r\n\r\n"), 2),
        tcp("10.0.2.16", 50001, "142.250.184.3", 8080, testutil::text("GET / HTTP/1.1\r\n\r\n"), 3),
    };
    auto c = classify_capture(std::move(pkts));
    CHECK(c.packets[0].protocol.tag == ProtocolTag::http);
    CHECK(c.packets[0].is_app_data);
    CHECK(c.packets[1].protocol.tag == ProtocolTag::http);
    CHECK(c.packets[2].protocol.tag == ProtocolTag::other_tcp);
    CHECK(packet_info(c.packets[0]) == "GET /generate_204 HTTP/1.1");
}

TEST_CASE("empty input and pure ACK inheritance") {
    CHECK(classify_capture(std::vector<PacketRecord>{}).packets.empty());

    auto syn = tcp("10.0.2.16", 50000, "1.1.1.1", 443, {});
    syn.tcp_flags = ingest::tcp_flag::syn;
    auto c = classify_capture(std::vector<PacketRecord>{syn});
    CHECK(c.packets[0].protocol.tag == ProtocolTag::other_tcp);
    CHECK(packet_info(c.packets[0]) == "[SYN]");
}

TEST_CASE("interleaving flows does not change per-packet labels") {
    // Three flows: TLS 1.3, QUIC, Do53. Per-flow order is preserved under shuffling.
    std::vector<std::vector<PacketRecord>> flows(3);
    flows[0] = {
        tcp("10.0.2.16", 50000, "142.250.184.3", 443, testutil::hello_vector("client_hello")),
        tcp("142.250.184.3", 443, "10.0.2.16", 50000, testutil::hello_vector("server_hello_13")),
        tcp("10.0.2.16", 50000, "142.250.184.3", 443, testutil::tls_record(23, 10)),
        tcp("142.250.184.3", 443, "10.0.2.16", 50000, {}),
    };
    Bytes initial = hex("c300000001");
    initial.resize(1200, 0);
    flows[1] = {
        udp("10.0.2.16", 40000, "142.250.200.138", 443, initial),
        udp("142.250.200.138", 443, "10.0.2.16", 40000, hex("41ff")),
    };
    flows[2] = {
        udp("10.0.2.16", 40002, "8.8.8.8", 53, testutil::dns_query(9, "example.org")),
        udp("8.8.8.8", 53, "10.0.2.16", 40002, testutil::dns_response(9, "example.org")),
    };

    std::vector<PacketRecord> contiguous;
    for (const auto& f : flows) contiguous.insert(contiguous.end(), f.begin(), f.end());
    const auto reference = classify_capture(contiguous);
    auto label_of = [&](std::size_t flow, std::size_t idx) {
        std::size_t base = 0;
        for (std::size_t i = 0; i < flow; ++i) base += flows[i].size();
        return std::make_pair(reference.packets[base + idx].protocol, reference.packets[base + idx].is_app_data);
    };

    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::size_t> order;
        for (std::size_t f = 0; f < flows.size(); ++f) order.insert(order.end(), flows[f].size(), f);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::size_t> next(flows.size(), 0);
        std::vector<std::pair<std::size_t, std::size_t>> origin;
        std::vector<PacketRecord> mixed;
        for (auto f : order) {
            origin.emplace_back(f, next[f]);
            mixed.push_back(flows[f][next[f]++]);
        }
        const auto got = classify_capture(mixed);
        for (std::size_t i = 0; i < got.packets.size(); ++i) {
            const auto expected = label_of(origin[i].first, origin[i].second);
            CHECK(got.packets[i].protocol == expected.first);
            CHECK(got.packets[i].is_app_data == expected.second);
        }
    }
}

TEST_CASE("classification is deterministic") {
    std::vector<PacketRecord> pkts = {
        tcp("10.0.2.16", 50000, "142.250.184.3", 443, testutil::hello_vector("client_hello")),
        udp("10.0.2.16", 40002, "8.8.8.8", 53, testutil::dns_query(9, "example.org")),
    };
    const auto a = classify_capture(pkts);
    const auto b = classify_capture(pkts);
    REQUIRE(a.packets.size() == b.packets.size());
    for (std::size_t i = 0; i < a.packets.size(); ++i) CHECK(a.packets[i].protocol == b.packets[i].protocol);
}
