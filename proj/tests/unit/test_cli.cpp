#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "appcap/commands.hpp"
#include "appcap/io.hpp"
#include "appcap/synth.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace appcap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("appcap_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
    json body() const { return json::parse(out).at("body"); }
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    CliRun r;
    r.code = cli::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const char* kTwoAppSpec = R"({
  "seed": 11,
  "apps": [
    {"app_name": "com.example.chat", "captures": [
      {"duration_s": 600, "flows": [
        {"protocol_profile": "Tls13", "app_data_packets": 600, "rate_pps": 1},
        {"protocol_profile": "Do53", "app_data_packets": 20, "start_offset_s": 1}
      ]}
    ]},
    {"app_name": "wsj.reader_sp", "captures": [
      {"date": "20250315T080000Z", "duration_s": 300, "flows": [
        {"protocol_profile": "QuicV1", "app_data_packets": 50},
        {"protocol_profile": "Tls12", "app_data_packets": 30, "host": "wsj.com"}
      ]}
    ]}
  ]
})";

std::string spec_error_path(const std::string& text) {
    try {
        synth::parse_fixture_spec(text);
    } catch (const synth::SpecError& e) {
        return e.path();
    }
    return "<no error>";
}

}  // namespace

TEST_CASE("synth output is deterministic and round-trips through ingest") {
    auto spec = synth::parse_fixture_spec(kTwoAppSpec);
    auto a = synth::synthesize_capture(spec, 0, 0);
    auto b = synth::synthesize_capture(spec, 0, 0);
    CHECK(a.packets == b.packets);
    CHECK(a.keys == b.keys);
    CHECK(synth::encode_capture(spec, a) == synth::encode_capture(spec, b));
    CHECK(a.packets.size() == 600 + 2 + 20);

    auto loaded = cli::load_capture_bytes(synth::encode_capture(spec, a));
    REQUIRE(loaded.classified.packets.size() == a.packets.size());
    for (std::size_t i = 0; i < a.packets.size(); ++i) CHECK(loaded.classified.packets[i].record == a.packets[i]);

    spec.seed = 12;
    CHECK(synth::synthesize_capture(spec, 0, 0).packets != a.packets);
}

TEST_CASE("fixture spec errors carry the field path") {
    CHECK(spec_error_path("not json") == "$");
    CHECK(spec_error_path(R"({"apps": [], "extra": 1})") == "extra");
    CHECK(spec_error_path(R"({"apps": [{"app_name": "a", "captures": [{"duration_s": 5, "flows": [{"protocol_profile": "Gopher",
        "app_data_packets": 1}]}]}]})") == "apps[0].captures[0].flows[0].protocol_profile");
    CHECK(spec_error_path(R"({"apps": [{"app_name": "a", "captures": [{"duration_s": 0, "flows": []}]}]})") ==
          "apps[0].captures[0].duration_s");
    CHECK(spec_error_path(R"({"apps": [{"app_name": "", "captures": []}]})") == "apps[0].app_name");
}

TEST_CASE("exit codes") {
    TempDir tmp("exit");
    CHECK(run({"analyze", (tmp.path / "missing.pcap").string()}).code == 2);

    write(tmp.path / "garbage.pcap", "this is not a capture file at all");
    CHECK(run({"analyze", (tmp.path / "garbage.pcap").string()}).code == 3);

    CHECK(run({"analyze"}).code == 64);
    CHECK(run({"frobnicate"}).code == 64);
    CHECK(run({"dataset", "stats", tmp.path.string(), "--truncate-min", "-1"}).code == 64);

    fs::create_directories(tmp.path / "empty");
    CHECK(run({"dataset", "stats", (tmp.path / "empty").string()}).code == 3);

    write(tmp.path / "bad.json", R"({"apps": 3})");
    auto bad = run({"synth", (tmp.path / "bad.json").string(), (tmp.path / "out").string()});
    CHECK(bad.code == 64);
    CHECK(bad.err.find("apps") != std::string::npos);
}

TEST_CASE("synth, scan, analyze and keycov through the command line") {
    TempDir tmp("flow");
    write(tmp.path / "spec.json", kTwoAppSpec);
    const auto ds = tmp.path / "ds";
    REQUIRE(run({"synth", (tmp.path / "spec.json").string(), ds.string()}).code == 0);

    auto scan = run({"dataset", "scan", ds.string()});
    REQUIRE(scan.code == 0);
    CHECK(scan.body().at("manifest").at("entry_count") == 2);
    CHECK(scan.body().at("manifest").at("apps") == json::array({"com.example.chat", "wsj.reader_sp"}));

    const auto stem = ds / "wsj.reader_sp_20250315T080000Z_300";
    auto an = run({"analyze", stem.string() + ".pcap", "--keylog",
                   (ds / "sslkeylog_wsj.reader_sp_20250315T080000Z_300.txt").string()});
    REQUIRE(an.code == 0);
    const auto body = an.body();
    CHECK(body.at("distribution").at("total") == 84);
    CHECK(body.at("coverage").at("coverage_fraction") == 1.0);

    auto kc = run({"keycov", stem.string() + ".pcap",
                   (ds / "sslkeylog_wsj.reader_sp_20250315T080000Z_300.txt").string()});
    REQUIRE(kc.code == 0);
    CHECK(kc.body().at("coverage").at("tls_flows") == 1);

    const auto report = tmp.path / "report.json";
    REQUIRE(run({"dataset", "scan", ds.string(), "--json", report.string()}).code == 0);
    CHECK(json::parse(io::read_text(report)).at("command") == "dataset scan");
}

TEST_CASE("stats truncation halves a constant-rate capture") {
    TempDir tmp("trunc");
    write(tmp.path / "spec.json", kTwoAppSpec);
    const auto ds = tmp.path / "ds";
    REQUIRE(run({"synth", (tmp.path / "spec.json").string(), ds.string()}).code == 0);
    fs::remove(ds / "wsj.reader_sp_20250315T080000Z_300.pcap");
    fs::remove(ds / "sslkeylog_wsj.reader_sp_20250315T080000Z_300.txt");

    auto full = run({"dataset", "stats", ds.string()});
    auto half = run({"dataset", "stats", ds.string(), "--truncate-min", "5"});
    REQUIRE(full.code == 0);
    REQUIRE(half.code == 0);
    const auto n_full = full.body().at("packets").get<std::int64_t>();
    const auto n_half = half.body().at("packets").get<std::int64_t>();
    CHECK(n_full == 622);
    CHECK(std::abs(2 * n_half - n_full) <= 24);
    CHECK(half.body().at("ppm")[0].at("mean_ppm").get<double>() ==
          doctest::Approx(full.body().at("ppm")[0].at("mean_ppm").get<double>()).epsilon(0.05));
}

TEST_CASE("compare is symmetric and rejects disjoint datasets") {
    TempDir tmp("cmp");
    write(tmp.path / "a.json", R"({"seed": 1, "apps": [
      {"app_name": "app.one", "captures": [{"duration_s": 60, "flows": [
        {"protocol_profile": "Tls12", "app_data_packets": 100}]}]},
      {"app_name": "app.two", "captures": [{"duration_s": 60, "flows": [
        {"protocol_profile": "Do53", "app_data_packets": 10}]}]}]})");
    write(tmp.path / "b.json", R"({"seed": 2, "apps": [
      {"app_name": "app.one", "captures": [{"duration_s": 60, "flows": [
        {"protocol_profile": "Tls13", "app_data_packets": 300},
        {"protocol_profile": "QuicV1", "app_data_packets": 40}]}]}]})");
    write(tmp.path / "c.json", R"({"apps": [
      {"app_name": "other", "captures": [{"duration_s": 60, "flows": [
        {"protocol_profile": "Do53", "app_data_packets": 4}]}]}]})");
    for (auto n : {"a", "b", "c"}) {
        REQUIRE(run({"synth", (tmp.path / (std::string(n) + ".json")).string(), (tmp.path / n).string()}).code == 0);
    }
    auto ab = run({"compare", (tmp.path / "a").string(), (tmp.path / "b").string()});
    auto ba = run({"compare", (tmp.path / "b").string(), (tmp.path / "a").string()});
    REQUIRE(ab.code == 0);
    REQUIRE(ba.code == 0);
    const auto x = ab.body();
    const auto y = ba.body();
    CHECK(x.at("common_apps") == y.at("common_apps"));
    REQUIRE(x.at("ppm").size() == 1);
    CHECK(x.at("ppm")[0].at("ppm_a") == y.at("ppm")[0].at("ppm_b"));
    CHECK(x.at("ppm")[0].at("ratio").get<double>() * y.at("ppm")[0].at("ratio").get<double>() ==
          doctest::Approx(1.0));
    CHECK(x.at("distribution_a") == y.at("distribution_b"));
    CHECK(x.at("quic_behavior")[0].at("behavior") == "AdoptedInB");
    CHECK(y.at("quic_behavior")[0].at("behavior") == "PresentInAOnlyInB_Absent");

    auto disjoint = run({"compare", (tmp.path / "a").string(), (tmp.path / "c").string()});
    CHECK(disjoint.code == 3);
}

TEST_CASE("envelope is reproducible under SOURCE_DATE_EPOCH") {
    TempDir tmp("env");
    write(tmp.path / "spec.json", kTwoAppSpec);
    REQUIRE(run({"synth", (tmp.path / "spec.json").string(), (tmp.path / "ds").string()}).code == 0);
    ::setenv("SOURCE_DATE_EPOCH", "1741947300", 1);
    auto a = run({"dataset", "scan", (tmp.path / "ds").string()});
    auto b = run({"dataset", "scan", (tmp.path / "ds").string()});
    ::unsetenv("SOURCE_DATE_EPOCH");
    CHECK(a.out == b.out);
    const auto env = json::parse(a.out);
    CHECK(env.at("generated_at") == "2025-03-14T10:15:00Z");
    CHECK(env.at("report_schema") == 1);
    CHECK(env.at("tool_version") == "0.1.0");
}
