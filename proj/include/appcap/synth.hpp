#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "appcap/classify.hpp"
#include "appcap/dataset.hpp"
#include "appcap/ingest.hpp"
#include "appcap/keylog.hpp"

// Deterministic fixture generation: labeled captures plus paired key logs
// built from per-protocol byte templates.
namespace appcap::synth {

enum class Profile {
    tls10,
    tls11,
    tls12,
    tls13,
    ssl2,
    unknown_ssl,
    quic_v1,
    do53,
    dot,
    connectivity_http,
};

// Spec names: "Tls10", "Tls11", "Tls12", "Tls13", "Ssl2", "UnknownSsl",
// "QuicV1", "Do53", "DoT", "ConnectivityHttp".
std::string_view to_string(Profile p);
std::optional<Profile> profile_from_string(std::string_view s);

struct FlowSpec {
    Profile profile = Profile::tls13;
    std::uint64_t app_data_packets = 0;
    double start_offset_s = 0.0;
    double rate_pps = 1.0;
    std::optional<ingest::IpAddress> server_ip;
    std::optional<std::uint16_t> server_port;
    std::optional<std::string> host;   // SNI or HTTP Host
    std::optional<std::string> qname;  // Do53 question
    std::optional<classify::TlsVersion> dot_version;
};

// Packets a flow produces: handshake packets plus app_data_packets.
std::uint64_t flow_packet_count(const FlowSpec& flow);

struct CaptureSpec {
    std::optional<std::chrono::sys_seconds> date;
    std::int64_t duration_s = 300;
    std::vector<FlowSpec> flows;
};

struct AppSpec {
    std::string app_name;
    std::vector<CaptureSpec> captures;
};

struct FixtureSpec {
    std::uint64_t seed = 1;
    ingest::IpAddress client_ip = ingest::IpAddress::v4(10, 0, 2, 16);
    std::uint32_t linktype = ingest::kLinkLinuxSll;
    ingest::TsResolution ts_resolution = ingest::TsResolution::microsecond;
    std::vector<AppSpec> apps;
};

// Invalid specs carry the JSON path of the offending field, for example
// "apps[0].captures[1].flows[2].protocol_profile".
class SpecError : public std::runtime_error {
public:
    SpecError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

FixtureSpec parse_fixture_spec(std::string_view json_text);

// Label a capture receives when its spec has no explicit date.
dataset::CaptureLabel capture_label(const FixtureSpec& spec, std::size_t app, std::size_t capture);

struct SynthCapture {
    dataset::CaptureLabel label;
    std::vector<ingest::PacketRecord> packets;  // sorted by timestamp
    std::vector<keylog::KeyLogEntry> keys;
};

SynthCapture synthesize_capture(const FixtureSpec& spec, std::size_t app, std::size_t capture);

Bytes encode_capture(const FixtureSpec& spec, const SynthCapture& capture);

// Writes <stem>.pcap and sslkeylog_<stem>.txt for every capture. Returns the
// written paths in generation order.
std::vector<std::filesystem::path> write_fixture(const FixtureSpec& spec, const std::filesystem::path& out_dir);

}  // namespace appcap::synth
