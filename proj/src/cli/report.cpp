#include "appcap/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>

#include "appcap/io.hpp"

namespace appcap::report {

using namespace analytics;

namespace {

json category_json(const Category& c, std::uint64_t count, double pct) {
    return {{"transport", std::string(ingest::to_string(c.transport))},
            {"protocol", classify::display_name(c.protocol)},
            {"name", category_name(c)},
            {"count", count},
            {"pct", pct}};
}

json version_shares(const std::map<TlsVersion, VersionShare>& shares) {
    json out = json::array();
    for (const auto& [v, s] : shares) {
        out.push_back({{"version", std::string(classify::to_string(v))}, {"count", s.count}, {"pct", s.pct}});
    }
    return out;
}

json version_counts(const std::map<TlsVersion, std::uint64_t>& counts) {
    json out = json::object();
    for (const auto& [v, n] : counts) out[std::string(classify::to_string(v))] = n;
    return out;
}

}  // namespace

json to_json(const ProtocolDistribution& d) {
    json cats = json::array();
    for (const auto& [c, n] : d.counts) cats.push_back(category_json(c, n, d.percentages.at(c)));
    return {{"scope", std::string(to_string(d.scope))},
            {"total", d.total},
            {"tcp_pct", d.transport_pct(Transport::tcp)},
            {"udp_pct", d.transport_pct(Transport::udp)},
            {"categories", cats}};
}

json to_json(const TemporalHistogram& h) {
    json series = json::array();
    for (std::size_t s = 0; s < kSeriesCount; ++s) series.push_back(std::string(to_string(static_cast<Series>(s))));
    json bins = json::array();
    for (const auto& b : h.bins) bins.push_back(json(std::vector<std::uint64_t>(b.begin(), b.end())));
    return {{"bin_width_s", h.bin_width_s}, {"t0_ns", h.t0_ns}, {"series", series}, {"bins", bins}};
}

json to_json(const EncryptionBreakdown& e) {
    return {{"tcp_encrypted_total", e.tcp_encrypted_total},
            {"tcp_encrypted", version_shares(e.tcp_encrypted)},
            {"legacy_ssl_pct", e.legacy_ssl_pct},
            {"app_data_total", e.app_data_total},
            {"quic_app_data", e.quic_app_data},
            {"quic_share_pct", e.quic_share_pct},
            {"dot_count", e.dot_count},
            {"dot_pct_of_total", e.dot_pct_of_total},
            {"dot_versions", version_shares(e.dot_versions)}};
}

json to_json(const DnsSplit& d) {
    return {{"do53", d.do53}, {"dot", d.dot}, {"do53_pct", d.do53_pct}, {"dot_pct", d.dot_pct}};
}

json to_json(const FlowGraph& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes) nodes.push_back({{"stage", n.stage}, {"label", n.label}});
    json links = json::array();
    for (const auto& l : g.links) links.push_back({{"from", l.from}, {"to", l.to}, {"packets", l.packets}});
    return {{"mode", g.mode == GraphMode::sankey3 ? "Sankey3" : "CommGraph6"},
            {"stages", g.stages},
            {"nodes", nodes},
            {"links", links}};
}

json to_json(const ComparisonReport& r) {
    json ppm = json::array();
    for (const auto& row : r.ppm) {
        ppm.push_back({{"app", row.app_name},
                       {"ppm_a", row.ppm_a},
                       {"ppm_b", row.ppm_b},
                       {"ratio", row.ratio},
                       {"captures_a", row.captures_a},
                       {"captures_b", row.captures_b}});
    }
    json bihist = json::array();
    for (const auto& row : r.encryption_bihistogram) {
        bihist.push_back({{"app", row.app_name}, {"a", version_counts(row.counts_a)}, {"b", version_counts(row.counts_b)}});
    }
    json quic = json::array();
    for (const auto& q : r.quic_behavior) {
        quic.push_back({{"app", q.app_name},
                        {"quic_a", q.quic_a},
                        {"quic_b", q.quic_b},
                        {"behavior", std::string(to_string(q.behavior))}});
    }
    json tally = json::object();
    for (auto b : {QuicBehavior::consistent_both, QuicBehavior::adopted_in_b, QuicBehavior::present_in_a_only_b_absent,
                   QuicBehavior::absent_both}) {
        auto it = r.quic_behavior_tally.find(b);
        tally[std::string(to_string(b))] = it == r.quic_behavior_tally.end() ? 0 : it->second;
    }
    return {{"common_apps", r.common_apps},
            {"apps_a", r.apps_a},
            {"apps_b", r.apps_b},
            {"stats_scope", std::string(to_string(r.options.stats_scope))},
            {"ppm_scope", std::string(to_string(r.options.ppm_scope))},
            {"common_only", r.options.common_only},
            {"distribution_a", to_json(r.distribution_a)},
            {"distribution_b", to_json(r.distribution_b)},
            {"encryption_a", to_json(r.encryption_a)},
            {"encryption_b", to_json(r.encryption_b)},
            {"ppm", ppm},
            {"mean_ppm_a", r.mean_ppm_a},
            {"mean_ppm_b", r.mean_ppm_b},
            {"mean_ppm_ratio_a_over_b", r.mean_ppm_ratio_a_over_b},
            {"encryption_bihistogram", bihist},
            {"quic_behavior", quic},
            {"quic_behavior_tally", tally},
            {"dns_evolution",
             {{"do53_pct_a", r.dns_evolution.do53_pct_a},
              {"dot_pct_a", r.dns_evolution.dot_pct_a},
              {"do53_pct_b", r.dns_evolution.do53_pct_b},
              {"dot_pct_b", r.dns_evolution.dot_pct_b}}},
            {"sankey_a", to_json(r.sankey_a)},
            {"sankey_b", to_json(r.sankey_b)}};
}

json to_json(const keylog::CoverageReport& c) {
    return {{"tls_flows", c.tls_flows},
            {"flows_with_client_hello", c.flows_with_client_hello},
            {"flows_without_client_hello", c.flows_without_client_hello},
            {"flows_with_keys", c.flows_with_keys},
            {"coverage_fraction", c.coverage_fraction}};
}

std::string format_iso8601(std::chrono::sys_seconds t) {
    const std::time_t tt = static_cast<std::time_t>(t.time_since_epoch().count());
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json to_json(const dataset::CaptureLabel& label) {
    return {{"app_name", label.app_name},
            {"capture_date", format_iso8601(label.capture_date)},
            {"duration_s", label.duration_s}};
}

json to_json(const dataset::DatasetManifest& m) {
    json entries = json::array();
    for (const auto& e : m.entries) {
        json row = to_json(e.label);
        row["capture"] = e.capture_path.filename().string();
        row["keylog"] = e.keylog_path ? json(e.keylog_path->filename().string()) : json(nullptr);
        entries.push_back(row);
    }
    auto names = [](const std::vector<std::filesystem::path>& paths) {
        json out = json::array();
        for (const auto& p : paths) out.push_back(p.filename().string());
        return out;
    };
    return {{"apps", m.apps},
            {"app_count", m.apps.size()},
            {"entry_count", m.entries.size()},
            {"entries", entries},
            {"unpaired_keylogs", names(m.unpaired_keylogs)},
            {"unparseable", names(m.unparseable)}};
}

Input digest_input(const std::filesystem::path& path) {
    return {path, io::sha256_hex(io::read_file(path))};
}

json make_envelope(const std::string& command, const std::vector<Input>& inputs, json body) {
    std::chrono::sys_seconds now;
    const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
    char* end = nullptr;
    const long long fixed = epoch ? std::strtoll(epoch, &end, 10) : 0;
    if (epoch && end != epoch && *end == '\0') {
        now = std::chrono::sys_seconds{std::chrono::seconds{fixed}};
    } else {
        now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    }
    json in = json::array();
    for (const auto& i : inputs) in.push_back({{"path", i.path.string()}, {"sha256", i.sha256}});
    return {{"tool_version", kToolVersion},
            {"command", command},
            {"inputs", in},
            {"generated_at", format_iso8601(now)},
            {"report_schema", kReportSchema},
            {"body", std::move(body)}};
}

std::string ppm_csv(const ComparisonReport& r) {
    std::string out = "app,ppm_a,ppm_b,ratio\n";
    char buf[128];
    for (const auto& row : r.ppm) {
        std::snprintf(buf, sizeof buf, ",%.2f,%.2f,%.4f\n", row.ppm_a, row.ppm_b, row.ratio);
        out += row.app_name + buf;
    }
    return out;
}

}  // namespace appcap::report
