#include "doctest.h"

#include "appcap/keylog.hpp"
#include "support.hpp"

using namespace appcap;
using namespace appcap::keylog;
using classify::TlsVersion;
using testutil::PacketRecord;

namespace {

// Client hello from the frozen vectors with its random overwritten by `seed`.
Bytes client_hello_with_random(std::uint8_t seed) {
    Bytes ch = testutil::hello_vector("client_hello");
    for (std::size_t i = 0; i < 32; ++i) ch[11 + i] = static_cast<std::uint8_t>(seed + i);
    return ch;
}

Random random_of(std::uint8_t seed) {
    Random r{};
    for (std::size_t i = 0; i < 32; ++i) r[i] = static_cast<std::uint8_t>(seed + i);
    return r;
}

std::string line(std::string_view label, const Random& r, std::size_t secret_len = 48) {
    return std::string(label) + " " + to_hex(r) + " " + to_hex(Bytes(secret_len, 0xee)) + "\n";
}

classify::Classification tls13_flows(std::initializer_list<std::uint8_t> seeds) {
    std::vector<PacketRecord> pkts;
    std::uint16_t port = 50000;
    for (auto s : seeds) {
        pkts.push_back(testutil::tcp("10.0.2.16", port, "142.250.184.3", 443, client_hello_with_random(s)));
        pkts.push_back(testutil::tcp("142.250.184.3", 443, "10.0.2.16", port,
                                     testutil::hello_vector("server_hello_13")));
        ++port;
    }
    return classify::classify_capture(std::move(pkts));
}

std::string tls13_keys(std::uint8_t seed) {
    std::string out;
    for (auto l : required_labels(TlsVersion::tls1_3)) out += line(l, random_of(seed), 32);
    return out;
}

}  // namespace

TEST_CASE("single traffic secret line") {
    const auto r = random_of(0x40);
    auto idx = parse_keylog(line("CLIENT_HANDSHAKE_TRAFFIC_SECRET", r));
    CHECK(idx.entry_count() == 1);
    CHECK(idx.malformed_lines == 0);
    REQUIRE(idx.find(r));
    CHECK(idx.find(r)->front().label == "CLIENT_HANDSHAKE_TRAFFIC_SECRET");
    CHECK(idx.find(r)->front().secret.size() == 48);
}

TEST_CASE("empty, comment and garbage input") {
    auto empty = parse_keylog("");
    CHECK(empty.entry_count() == 0);
    CHECK(empty.malformed_lines == 0);

    auto garbage = parse_keylog("garbage");
    CHECK(garbage.entry_count() == 0);
    CHECK(garbage.malformed_lines == 1);

    auto mixed = parse_keylog("# comment\r\n\r\nCLIENT_RANDOM zz 00\r\n" + line("CLIENT_RANDOM", random_of(1)));
    CHECK(mixed.entry_count() == 1);
    CHECK(mixed.malformed_lines == 1);

    CHECK(parse_keylog("CLIENT_RANDOM " + to_hex(Bytes(31, 0)) + " 00\n").malformed_lines == 1);
    CHECK(parse_keylog("client_random " + to_hex(Bytes(32, 0)) + " 00\n").malformed_lines == 1);
    CHECK(parse_keylog("CLIENT_RANDOM " + to_hex(Bytes(32, 0)) + "\n").malformed_lines == 1);
}

TEST_CASE("render and parse round trip") {
    std::vector<KeyLogEntry> entries = {
        {"CLIENT_RANDOM", random_of(3), Bytes(48, 0xab)},
        {"CLIENT_TRAFFIC_SECRET_0", random_of(4), Bytes(32, 0x01)},
    };
    auto idx = parse_keylog(render_keylog(entries));
    CHECK(idx.entry_count() == 2);
    CHECK(idx.find(random_of(3))->front() == entries[0]);
    CHECK(idx.find(random_of(4))->front() == entries[1]);
}

TEST_CASE("coverage: three flows, two randoms logged") {
    auto c = tls13_flows({0x10, 0x50, 0x90});
    auto idx = parse_keylog(tls13_keys(0x10) + tls13_keys(0x90));
    auto r = key_coverage(c, idx);
    CHECK(r.tls_flows == 3);
    CHECK(r.flows_with_client_hello == 3);
    CHECK(r.flows_with_keys == 2);
    CHECK(r.coverage_fraction == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("coverage with no TLS flows is zero") {
    auto r = key_coverage(classify::Classification{}, KeyIndex{});
    CHECK(r.tls_flows == 0);
    CHECK(r.coverage_fraction == 0.0);
}

TEST_CASE("TLS 1.3 flows need all four secrets") {
    auto c = tls13_flows({0x10});
    std::string partial;
    const auto labels = required_labels(TlsVersion::tls1_3);
    for (std::size_t i = 0; i + 1 < labels.size(); ++i) partial += line(labels[i], random_of(0x10), 32);
    CHECK(key_coverage(c, parse_keylog(partial)).flows_with_keys == 0);
    CHECK(key_coverage(c, parse_keylog(tls13_keys(0x10))).flows_with_keys == 1);
    CHECK(key_coverage(c, parse_keylog(line("CLIENT_RANDOM", random_of(0x10)))).flows_with_keys == 0);
}

TEST_CASE("required labels per version") {
    CHECK(required_labels(TlsVersion::tls1_2) == std::vector<std::string_view>{"CLIENT_RANDOM"});
    CHECK(required_labels(TlsVersion::tls1_3).size() == 4);
    CHECK(required_labels(TlsVersion::unknown_ssl).empty());
}

TEST_CASE("keylog filename for a label") {
    dataset::CaptureLabel l{"com.chess", std::chrono::sys_seconds{std::chrono::seconds{1741947300}}, 300};
    CHECK(keylog_filename_for(l) == "sslkeylog_com.chess_20250314T101500Z_300.txt");
}
