#include "appcap/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace appcap::analytics {

std::string_view to_string(Scope s) {
    return s == Scope::all_packets ? "AllPackets" : "AppDataOnly";
}

std::string category_name(const Category& c) {
    return std::string(c.transport == Transport::tcp ? "TCP/" : "UDP/") + classify::display_name(c.protocol);
}

void CategoryCounts::add(const ClassifiedPacket& p) {
    const Category c{p.record.transport, p.protocol};
    ++all[c];
    if (p.is_app_data) ++app_data[c];
}

void merge_into(CountMap& into, const CountMap& from) {
    for (const auto& [c, n] : from) into[c] += n;
}

void CategoryCounts::merge(const CategoryCounts& other) {
    merge_into(all, other.all);
    merge_into(app_data, other.app_data);
}

CategoryCounts count_categories(std::span<const ClassifiedPacket> packets) {
    CategoryCounts counts;
    for (const auto& p : packets) counts.add(p);
    return counts;
}

std::uint64_t total(const CountMap& counts) {
    std::uint64_t n = 0;
    for (const auto& [c, k] : counts) n += k;
    return n;
}

namespace {

double pct(std::uint64_t part, std::uint64_t whole) {
    return whole == 0 ? 0.0 : static_cast<double>(part) * 100.0 / static_cast<double>(whole);
}

bool is_tcp_encrypted(const Category& c) {
    return c.transport == Transport::tcp && (c.protocol.tag == ProtocolTag::tls || c.protocol.tag == ProtocolTag::dot);
}

}  // namespace

std::uint64_t ProtocolDistribution::count_of(Transport t, const AppProtocol& p) const {
    auto it = counts.find(Category{t, p});
    return it == counts.end() ? 0 : it->second;
}

double ProtocolDistribution::transport_pct(Transport t) const {
    std::uint64_t n = 0;
    for (const auto& [c, k] : counts) {
        if (c.transport == t) n += k;
    }
    return pct(n, total);
}

ProtocolDistribution distribution_from_counts(const CountMap& counts, Scope scope) {
    ProtocolDistribution d;
    d.scope = scope;
    for (const auto& [c, n] : counts) {
        if (n == 0) continue;
        Category folded = c;
        if (folded.protocol.tag == ProtocolTag::dot) folded.protocol = AppProtocol::plain(ProtocolTag::dot);
        d.counts[folded] += n;
        d.total += n;
    }
    for (const auto& [c, n] : d.counts) d.percentages[c] = pct(n, d.total);
    return d;
}

ProtocolDistribution protocol_distribution(std::span<const ClassifiedPacket> packets, Scope scope) {
    return distribution_from_counts(count_categories(packets).in(scope), scope);
}

double ppm_from_count(std::uint64_t count, double duration_s) {
    return static_cast<double>(count) * 60.0 / std::max(duration_s, 1.0);
}

namespace {

double span_seconds(std::span<const ClassifiedPacket> packets) {
    if (packets.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(packets.begin(), packets.end(), [](const auto& a, const auto& b) {
        return a.record.ts_ns < b.record.ts_ns;
    });
    return static_cast<double>(hi->record.ts_ns - lo->record.ts_ns) / 1e9;
}

}  // namespace

double packets_per_minute(std::span<const ClassifiedPacket> packets,
                          const std::optional<dataset::CaptureLabel>& label, Scope scope) {
    const std::uint64_t n =
        scope == Scope::all_packets
            ? packets.size()
            : static_cast<std::uint64_t>(std::count_if(packets.begin(), packets.end(),
                                                       [](const ClassifiedPacket& p) { return p.is_app_data; }));
    if (n == 0) return 0.0;
    const double duration = label ? static_cast<double>(label->duration_s) : span_seconds(packets);
    return ppm_from_count(n, duration);
}

std::vector<PpmRecord> mean_ppm_per_app(std::span<const CapturePpm> captures) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& c : captures) {
        auto& [sum, n] = acc[c.app_name];
        sum += c.ppm;
        ++n;
    }
    std::vector<PpmRecord> out;
    for (const auto& [app, v] : acc) out.push_back({app, v.first / static_cast<double>(v.second), v.second});
    return out;
}

double dataset_mean_ppm(std::span<const PpmRecord> records) {
    if (records.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : records) sum += r.mean_ppm;
    return sum / static_cast<double>(records.size());
}

std::string_view to_string(Series s) {
    switch (s) {
        case Series::tcp_encrypted: return "TCP-encrypted";
        case Series::quic: return "QUIC";
        case Series::do53: return "Do53";
        case Series::dot: return "DoT";
        case Series::http: return "HTTP";
    }
    return "?";
}

std::optional<Series> series_of(const AppProtocol& p) {
    switch (p.tag) {
        case ProtocolTag::tls: return Series::tcp_encrypted;
        case ProtocolTag::quic: return Series::quic;
        case ProtocolTag::do53: return Series::do53;
        case ProtocolTag::dot: return Series::dot;
        case ProtocolTag::http: return Series::http;
        default: return std::nullopt;
    }
}

std::uint64_t TemporalHistogram::series_total(Series s) const {
    std::uint64_t n = 0;
    for (const auto& bin : bins) n += bin[static_cast<std::size_t>(s)];
    return n;
}

TemporalHistogram temporal_histogram(std::span<const ClassifiedPacket> packets, double bin_width_s,
                                     std::optional<std::int64_t> t0_ns) {
    if (!(bin_width_s > 0) || !std::isfinite(bin_width_s)) {
        throw std::invalid_argument("histogram bin width must be positive");
    }
    TemporalHistogram h;
    h.bin_width_s = bin_width_s;
    if (packets.empty()) {
        h.t0_ns = t0_ns.value_or(0);
        return h;
    }
    std::int64_t lo = packets.front().record.ts_ns;
    std::int64_t hi = lo;
    for (const auto& p : packets) {
        lo = std::min(lo, p.record.ts_ns);
        hi = std::max(hi, p.record.ts_ns);
    }
    h.t0_ns = t0_ns.value_or(lo);
    const auto width_ns = static_cast<std::int64_t>(std::llround(bin_width_s * 1e9));
    if (hi < h.t0_ns) return h;
    h.bins.resize(static_cast<std::size_t>((hi - h.t0_ns) / width_ns) + 1, {});
    for (const auto& p : packets) {
        if (!p.is_app_data || p.record.ts_ns < h.t0_ns) continue;
        auto s = series_of(p.protocol);
        if (!s) continue;
        const auto k = static_cast<std::size_t>((p.record.ts_ns - h.t0_ns) / width_ns);
        ++h.bins[k][static_cast<std::size_t>(*s)];
    }
    return h;
}

EncryptionBreakdown encryption_from_counts(const CountMap& counts) {
    EncryptionBreakdown e;
    for (const auto& [c, n] : counts) {
        e.app_data_total += n;
        if (is_tcp_encrypted(c)) {
            const auto v = c.protocol.tls_version.value_or(TlsVersion::unknown_ssl);
            e.tcp_encrypted[v].count += n;
            e.tcp_encrypted_total += n;
        }
        if (c.protocol.tag == ProtocolTag::quic) e.quic_app_data += n;
        if (c.protocol.tag == ProtocolTag::dot) {
            e.dot_count += n;
            e.dot_versions[c.protocol.tls_version.value_or(TlsVersion::unknown_ssl)].count += n;
        }
    }
    std::uint64_t legacy = 0;
    for (auto& [v, share] : e.tcp_encrypted) {
        share.pct = pct(share.count, e.tcp_encrypted_total);
        if (v == TlsVersion::sslv2 || v == TlsVersion::sslv3 || v == TlsVersion::unknown_ssl) legacy += share.count;
    }
    for (auto& [v, share] : e.dot_versions) share.pct = pct(share.count, e.dot_count);
    e.legacy_ssl_pct = pct(legacy, e.tcp_encrypted_total);
    e.quic_share_pct = pct(e.quic_app_data, e.app_data_total);
    e.dot_pct_of_total = pct(e.dot_count, e.app_data_total);
    return e;
}

EncryptionBreakdown encryption_breakdown(std::span<const ClassifiedPacket> packets) {
    return encryption_from_counts(count_categories(packets).app_data);
}

DnsSplit dns_split(const CountMap& counts) {
    DnsSplit d;
    for (const auto& [c, n] : counts) {
        if (c.protocol.tag == ProtocolTag::do53) d.do53 += n;
        if (c.protocol.tag == ProtocolTag::dot) d.dot += n;
    }
    d.do53_pct = pct(d.do53, d.do53 + d.dot);
    d.dot_pct = pct(d.dot, d.do53 + d.dot);
    return d;
}

// ---- flow graphs ------------------------------------------------------------

std::optional<std::size_t> FlowGraph::find(int stage, std::string_view label) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].stage == stage && nodes[i].label == label) return i;
    }
    return std::nullopt;
}

namespace {

using NodeKey = std::pair<int, std::string>;

FlowGraph assemble(GraphMode mode, std::vector<std::string> stages,
                   const std::map<std::pair<NodeKey, NodeKey>, std::uint64_t>& edges) {
    FlowGraph g;
    g.mode = mode;
    g.stages = std::move(stages);
    std::map<NodeKey, std::size_t> index;
    for (const auto& [edge, n] : edges) {
        index.emplace(edge.first, 0);
        index.emplace(edge.second, 0);
    }
    for (auto& [key, idx] : index) {
        idx = g.nodes.size();
        g.nodes.push_back({key.first, key.second});
    }
    for (const auto& [edge, n] : edges) {
        if (n == 0) continue;
        g.links.push_back({index.at(edge.first), index.at(edge.second), n});
    }
    std::sort(g.links.begin(), g.links.end(),
              [](const GraphLink& a, const GraphLink& b) { return std::tie(a.from, a.to) < std::tie(b.from, b.to); });
    return g;
}

std::optional<std::string> terminal_label(const AppProtocol& p) {
    switch (p.tag) {
        case ProtocolTag::tls: return classify::display_name(p);
        case ProtocolTag::dot: return std::string("DoT");
        case ProtocolTag::quic: return std::string("QUIC");
        case ProtocolTag::do53: return std::string("Do53");
        case ProtocolTag::http: return std::string("HTTP");
        default: return std::nullopt;
    }
}

std::string port_interval_label(std::uint16_t port, std::uint16_t width) {
    const std::uint32_t lo = port / width * width;
    const std::uint32_t hi = std::min<std::uint32_t>(lo + width - 1, 65535);
    return std::to_string(lo) + "-" + std::to_string(hi);
}

}  // namespace

FlowGraph sankey_from_counts(const CountMap& counts) {
    std::map<std::pair<NodeKey, NodeKey>, std::uint64_t> edges;
    for (const auto& [c, n] : counts) {
        auto terminal = terminal_label(c.protocol);
        if (!terminal || n == 0) continue;
        const bool clear = c.protocol.tag == ProtocolTag::do53 || c.protocol.tag == ProtocolTag::http;
        const NodeKey transport{0, c.transport == Transport::tcp ? "TCP" : "UDP"};
        const NodeKey status{1, clear ? "Cleartext" : "Encrypted"};
        const NodeKey proto{2, *terminal};
        edges[{transport, status}] += n;
        edges[{status, proto}] += n;
    }
    return assemble(GraphMode::sankey3, {"transport", "encryption", "protocol"}, edges);
}

FlowGraphBuilder::FlowGraphBuilder(GraphMode mode, FlowGraphOptions options) : mode_(mode), options_(options) {
    if (options_.port_interval == 0) throw std::invalid_argument("port interval must be positive");
}

void FlowGraphBuilder::add(const std::string& app_name, std::span<const ClassifiedPacket> packets) {
    for (const auto& p : packets) {
        if (options_.scope == Scope::app_data_only && !p.is_app_data) continue;
        if (mode_ == GraphMode::sankey3) {
            ++sankey_counts_[Category{p.record.transport, p.protocol}];
            continue;
        }
        const auto& r = p.record;
        const auto& src_ip = p.from_client ? r.src_ip : r.dst_ip;
        const auto& dst_ip = p.from_client ? r.dst_ip : r.src_ip;
        const auto src_port = p.from_client ? r.src_port : r.dst_port;
        const auto dst_port = p.from_client ? r.dst_port : r.src_port;
        ++paths_[{src_ip.to_string(), r.transport == Transport::tcp ? "TCP" : "UDP",
                  port_interval_label(src_port, options_.port_interval), std::to_string(dst_port),
                  dst_ip.to_string(), app_name}];
    }
}

FlowGraph FlowGraphBuilder::build() const {
    if (mode_ == GraphMode::sankey3) return sankey_from_counts(sankey_counts_);
    std::map<std::pair<NodeKey, NodeKey>, std::uint64_t> edges;
    for (const auto& [path, n] : paths_) {
        for (int s = 0; s + 1 < 6; ++s) {
            edges[{NodeKey{s, path[static_cast<std::size_t>(s)]}, NodeKey{s + 1, path[static_cast<std::size_t>(s + 1)]}}] += n;
        }
    }
    return assemble(GraphMode::comm_graph6,
                    {"source_ip", "transport", "source_port_interval", "destination_port", "destination_ip", "app"},
                    edges);
}

// ---- summaries ----------------------------------------------------------------

CaptureSummary summarize_capture(std::string app_name, std::span<const ClassifiedPacket> packets,
                                 const std::optional<dataset::CaptureLabel>& label,
                                 std::optional<double> truncate_min) {
    CaptureSummary s;
    s.app_name = std::move(app_name);
    s.label = label;
    s.counts = count_categories(packets);
    s.duration_s = label ? static_cast<double>(label->duration_s) : span_seconds(packets);
    if (truncate_min) s.duration_s = std::min(s.duration_s, *truncate_min * 60.0);
    s.ppm_all = ppm_from_count(total(s.counts.all), s.duration_s);
    s.ppm_app_data = ppm_from_count(total(s.counts.app_data), s.duration_s);
    return s;
}

double AppAggregate::mean_ppm(Scope s) const {
    const auto& v = s == Scope::all_packets ? ppm_all : ppm_app_data;
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void DatasetSummary::add(const CaptureSummary& capture) {
    auto& app = apps[capture.app_name];
    app.counts.merge(capture.counts);
    app.ppm_all.push_back(capture.ppm_all);
    app.ppm_app_data.push_back(capture.ppm_app_data);
}

std::size_t DatasetSummary::capture_count() const {
    std::size_t n = 0;
    for (const auto& [name, app] : apps) n += app.captures();
    return n;
}

CategoryCounts DatasetSummary::pooled(const std::vector<std::string>* only_apps) const {
    CategoryCounts out;
    for (const auto& [name, app] : apps) {
        if (only_apps && !std::binary_search(only_apps->begin(), only_apps->end(), name)) continue;
        out.merge(app.counts);
    }
    return out;
}

std::vector<PpmRecord> DatasetSummary::ppm_records(Scope s) const {
    std::vector<PpmRecord> out;
    for (const auto& [name, app] : apps) out.push_back({name, app.mean_ppm(s), app.captures()});
    return out;
}

// ---- comparison -------------------------------------------------------------

std::string_view to_string(QuicBehavior b) {
    switch (b) {
        case QuicBehavior::consistent_both: return "ConsistentBoth";
        case QuicBehavior::adopted_in_b: return "AdoptedInB";
        case QuicBehavior::present_in_a_only_b_absent: return "PresentInAOnlyInB_Absent";
        case QuicBehavior::absent_both: return "AbsentBoth";
    }
    return "?";
}

QuicBehavior quic_behavior(std::uint64_t quic_a, std::uint64_t quic_b) {
    if (quic_a > 0 && quic_b > 0) return QuicBehavior::consistent_both;
    if (quic_b > 0) return QuicBehavior::adopted_in_b;
    if (quic_a > 0) return QuicBehavior::present_in_a_only_b_absent;
    return QuicBehavior::absent_both;
}

std::vector<std::string> common_apps(const DatasetSummary& a, const DatasetSummary& b) {
    std::vector<std::string> out;
    for (const auto& [name, app] : a.apps) {
        if (b.apps.contains(name)) out.push_back(name);
    }
    return out;
}

namespace {

std::uint64_t quic_packets(const CountMap& counts) {
    std::uint64_t n = 0;
    for (const auto& [c, k] : counts) {
        if (c.protocol.tag == ProtocolTag::quic) n += k;
    }
    return n;
}

std::map<TlsVersion, std::uint64_t> encrypted_by_version(const CountMap& counts) {
    std::map<TlsVersion, std::uint64_t> out;
    for (const auto& [c, n] : counts) {
        if (is_tcp_encrypted(c)) out[c.protocol.tls_version.value_or(TlsVersion::unknown_ssl)] += n;
    }
    return out;
}

}  // namespace

ComparisonReport compare_datasets(const DatasetSummary& a, const DatasetSummary& b, const CompareOptions& options) {
    ComparisonReport r;
    r.options = options;
    r.common_apps = common_apps(a, b);
    if (r.common_apps.empty()) throw NoCommonApps();
    r.apps_a = a.apps.size();
    r.apps_b = b.apps.size();

    const auto* selection = options.common_only ? &r.common_apps : nullptr;
    const auto pooled_a = a.pooled(selection);
    const auto pooled_b = b.pooled(selection);
    const auto& stats_a = pooled_a.in(options.stats_scope);
    const auto& stats_b = pooled_b.in(options.stats_scope);

    r.distribution_a = distribution_from_counts(stats_a, options.stats_scope);
    r.distribution_b = distribution_from_counts(stats_b, options.stats_scope);
    r.encryption_a = encryption_from_counts(stats_a);
    r.encryption_b = encryption_from_counts(stats_b);
    const auto dns_a = dns_split(stats_a);
    const auto dns_b = dns_split(stats_b);
    r.dns_evolution = {dns_a.do53_pct, dns_a.dot_pct, dns_b.do53_pct, dns_b.dot_pct};
    r.sankey_a = sankey_from_counts(stats_a);
    r.sankey_b = sankey_from_counts(stats_b);

    auto select_records = [&](const DatasetSummary& d) {
        auto records = d.ppm_records(options.ppm_scope);
        if (selection) {
            std::erase_if(records, [&](const PpmRecord& rec) {
                return !std::binary_search(selection->begin(), selection->end(), rec.app_name);
            });
        }
        return records;
    };
    const auto records_a = select_records(a);
    const auto records_b = select_records(b);
    r.mean_ppm_a = dataset_mean_ppm(records_a);
    r.mean_ppm_b = dataset_mean_ppm(records_b);
    r.mean_ppm_ratio_a_over_b = r.mean_ppm_b == 0.0 ? 0.0 : r.mean_ppm_a / r.mean_ppm_b;

    for (const auto& name : r.common_apps) {
        const auto& app_a = a.apps.at(name);
        const auto& app_b = b.apps.at(name);

        PpmRow row{name, app_a.mean_ppm(options.ppm_scope), app_b.mean_ppm(options.ppm_scope), 0.0,
                   app_a.captures(), app_b.captures()};
        row.ratio = row.ppm_a == 0.0 ? 0.0 : row.ppm_b / row.ppm_a;
        r.ppm.push_back(row);

        r.encryption_bihistogram.push_back({name, encrypted_by_version(app_a.counts.in(options.stats_scope)),
                                            encrypted_by_version(app_b.counts.in(options.stats_scope))});

        QuicRow q{name, quic_packets(app_a.counts.all), quic_packets(app_b.counts.all), QuicBehavior::absent_both};
        q.behavior = quic_behavior(q.quic_a, q.quic_b);
        ++r.quic_behavior_tally[q.behavior];
        r.quic_behavior.push_back(q);
    }
    return r;
}

}  // namespace appcap::analytics
