#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "appcap/classify.hpp"
#include "appcap/dataset.hpp"

// Dataset statistics: distributions, packet rates, histograms, encryption
// breakdowns, flow graphs and two-dataset comparison.
namespace appcap::analytics {

using classify::AppProtocol;
using classify::ClassifiedPacket;
using classify::ProtocolTag;
using classify::TlsVersion;
using ingest::Transport;

enum class Scope { all_packets, app_data_only };

std::string_view to_string(Scope s);

struct Category {
    Transport transport = Transport::tcp;
    AppProtocol protocol;

    auto operator<=>(const Category&) const = default;
    bool operator==(const Category&) const = default;
};

// "TCP/TLSv1.3", "UDP/Do53", "TCP/DoT".
std::string category_name(const Category& c);

using CountMap = std::map<Category, std::uint64_t>;

// Raw per-category tallies. DoT keeps its TLS version here; distributions fold it.
struct CategoryCounts {
    CountMap all;
    CountMap app_data;

    const CountMap& in(Scope s) const { return s == Scope::all_packets ? all : app_data; }
    void add(const ClassifiedPacket& p);
    void merge(const CategoryCounts& other);
};

CategoryCounts count_categories(std::span<const ClassifiedPacket> packets);

std::uint64_t total(const CountMap& counts);
void merge_into(CountMap& into, const CountMap& from);

struct ProtocolDistribution {
    Scope scope = Scope::all_packets;
    CountMap counts;  // zero categories omitted; DoT unversioned
    std::uint64_t total = 0;
    std::map<Category, double> percentages;

    std::uint64_t count_of(Transport t, const AppProtocol& p) const;
    // Share per transport, over all counted packets.
    double transport_pct(Transport t) const;
};

ProtocolDistribution distribution_from_counts(const CountMap& counts, Scope scope);
ProtocolDistribution protocol_distribution(std::span<const ClassifiedPacket> packets, Scope scope);

// ---- packet rates -----------------------------------------------------------

// count × 60 / duration, duration floored at one second.
double ppm_from_count(std::uint64_t count, double duration_s);

// Duration is the label's when present, else the first-to-last packet span.
double packets_per_minute(std::span<const ClassifiedPacket> packets,
                          const std::optional<dataset::CaptureLabel>& label,
                          Scope scope = Scope::all_packets);

struct CapturePpm {
    std::string app_name;
    double ppm = 0.0;
};

struct PpmRecord {
    std::string app_name;
    double mean_ppm = 0.0;
    std::size_t captures_used = 0;
};

// Per-app arithmetic mean, sorted by app name.
std::vector<PpmRecord> mean_ppm_per_app(std::span<const CapturePpm> captures);

// Unweighted mean over apps.
double dataset_mean_ppm(std::span<const PpmRecord> records);

// ---- temporal histogram -----------------------------------------------------

enum class Series : std::uint8_t { tcp_encrypted, quic, do53, dot, http };
inline constexpr std::size_t kSeriesCount = 5;

std::string_view to_string(Series s);
std::optional<Series> series_of(const AppProtocol& p);

struct TemporalHistogram {
    double bin_width_s = 10.0;
    std::int64_t t0_ns = 0;
    std::vector<std::array<std::uint64_t, kSeriesCount>> bins;

    std::uint64_t series_total(Series s) const;
};

// Counts app-data packets of the five series. Bins are anchored at t0 (the
// first input packet by default) and extend to the last input packet.
TemporalHistogram temporal_histogram(std::span<const ClassifiedPacket> packets, double bin_width_s = 10.0,
                                     std::optional<std::int64_t> t0_ns = std::nullopt);

// ---- encryption -------------------------------------------------------------

struct VersionShare {
    std::uint64_t count = 0;
    double pct = 0.0;
};

struct EncryptionBreakdown {
    // TLS and DoT app-data packets over TCP, by version.
    std::map<TlsVersion, VersionShare> tcp_encrypted;
    std::uint64_t tcp_encrypted_total = 0;
    // SSLv2 + SSLv3 + unknown SSL, as a share of tcp_encrypted_total.
    double legacy_ssl_pct = 0.0;

    std::uint64_t quic_app_data = 0;
    std::uint64_t app_data_total = 0;
    double quic_share_pct = 0.0;

    std::uint64_t dot_count = 0;
    double dot_pct_of_total = 0.0;
    std::map<TlsVersion, VersionShare> dot_versions;
};

EncryptionBreakdown encryption_from_counts(const CountMap& app_data_counts);
EncryptionBreakdown encryption_breakdown(std::span<const ClassifiedPacket> packets);

struct DnsSplit {
    std::uint64_t do53 = 0;
    std::uint64_t dot = 0;
    double do53_pct = 0.0;
    double dot_pct = 0.0;
};

DnsSplit dns_split(const CountMap& counts);

// ---- flow graphs ------------------------------------------------------------

enum class GraphMode { comm_graph6, sankey3 };

struct GraphNode {
    int stage = 0;
    std::string label;
};

struct GraphLink {
    std::size_t from = 0;
    std::size_t to = 0;
    std::uint64_t packets = 0;
};

struct FlowGraph {
    GraphMode mode = GraphMode::sankey3;
    std::vector<std::string> stages;
    std::vector<GraphNode> nodes;  // sorted by stage, then label
    std::vector<GraphLink> links;  // sorted by (from, to)

    std::optional<std::size_t> find(int stage, std::string_view label) const;
};

struct FlowGraphOptions {
    Scope scope = Scope::app_data_only;
    std::uint16_t port_interval = 4096;
};

// Accumulates per-app packets and emits one graph. CommGraph6 orients every
// packet client to server: source IP, transport, source port interval,
// destination port, destination IP, app.
class FlowGraphBuilder {
public:
    explicit FlowGraphBuilder(GraphMode mode, FlowGraphOptions options = {});

    void add(const std::string& app_name, std::span<const ClassifiedPacket> packets);
    FlowGraph build() const;

private:
    GraphMode mode_;
    FlowGraphOptions options_;
    CountMap sankey_counts_;
    std::map<std::array<std::string, 6>, std::uint64_t> paths_;
};

// Transport, Encrypted/Cleartext, terminal protocol. Other TCP/UDP is left out.
FlowGraph sankey_from_counts(const CountMap& counts);

// ---- per-capture and per-dataset summaries ----------------------------------

struct CaptureSummary {
    std::string app_name;
    std::optional<dataset::CaptureLabel> label;
    CategoryCounts counts;
    double duration_s = 0.0;
    double ppm_all = 0.0;
    double ppm_app_data = 0.0;

    double ppm(Scope s) const { return s == Scope::all_packets ? ppm_all : ppm_app_data; }
};

// Packets are expected to be truncated already. With a truncation window the
// rate duration is min(label duration, window).
CaptureSummary summarize_capture(std::string app_name, std::span<const ClassifiedPacket> packets,
                                 const std::optional<dataset::CaptureLabel>& label,
                                 std::optional<double> truncate_min = std::nullopt);

struct AppAggregate {
    CategoryCounts counts;
    std::vector<double> ppm_all;
    std::vector<double> ppm_app_data;

    std::size_t captures() const { return ppm_all.size(); }
    double mean_ppm(Scope s) const;
};

struct DatasetSummary {
    std::map<std::string, AppAggregate> apps;

    void add(const CaptureSummary& capture);
    std::size_t capture_count() const;
    CategoryCounts pooled(const std::vector<std::string>* only_apps = nullptr) const;
    std::vector<PpmRecord> ppm_records(Scope s) const;
};

// ---- comparison -------------------------------------------------------------

enum class QuicBehavior { consistent_both, adopted_in_b, present_in_a_only_b_absent, absent_both };

std::string_view to_string(QuicBehavior b);
QuicBehavior quic_behavior(std::uint64_t quic_a, std::uint64_t quic_b);

class NoCommonApps : public std::runtime_error {
public:
    NoCommonApps() : std::runtime_error("the two datasets share no app names") {}
};

std::vector<std::string> common_apps(const DatasetSummary& a, const DatasetSummary& b);

struct CompareOptions {
    Scope stats_scope = Scope::app_data_only;
    Scope ppm_scope = Scope::all_packets;
    // Restrict aggregate statistics to common apps.
    bool common_only = false;
};

struct PpmRow {
    std::string app_name;
    double ppm_a = 0.0;
    double ppm_b = 0.0;
    double ratio = 0.0;  // ppm_b / ppm_a, 0 when ppm_a is 0
    std::size_t captures_a = 0;
    std::size_t captures_b = 0;
};

struct BihistogramRow {
    std::string app_name;
    std::map<TlsVersion, std::uint64_t> counts_a;
    std::map<TlsVersion, std::uint64_t> counts_b;
};

struct QuicRow {
    std::string app_name;
    std::uint64_t quic_a = 0;
    std::uint64_t quic_b = 0;
    QuicBehavior behavior = QuicBehavior::absent_both;
};

struct DnsEvolution {
    double do53_pct_a = 0.0;
    double dot_pct_a = 0.0;
    double do53_pct_b = 0.0;
    double dot_pct_b = 0.0;
};

struct ComparisonReport {
    CompareOptions options;
    std::vector<std::string> common_apps;
    std::size_t apps_a = 0;
    std::size_t apps_b = 0;
    ProtocolDistribution distribution_a;
    ProtocolDistribution distribution_b;
    EncryptionBreakdown encryption_a;
    EncryptionBreakdown encryption_b;
    std::vector<PpmRow> ppm;
    double mean_ppm_a = 0.0;
    double mean_ppm_b = 0.0;
    double mean_ppm_ratio_a_over_b = 0.0;
    std::vector<BihistogramRow> encryption_bihistogram;
    std::vector<QuicRow> quic_behavior;
    std::map<QuicBehavior, std::size_t> quic_behavior_tally;
    DnsEvolution dns_evolution;
    FlowGraph sankey_a;
    FlowGraph sankey_b;
};

// Throws NoCommonApps when the app sets are disjoint.
ComparisonReport compare_datasets(const DatasetSummary& a, const DatasetSummary& b, const CompareOptions& options = {});

}  // namespace appcap::analytics
