#include "appcap/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ctime>
#include <map>
#include <set>

namespace appcap::dataset {

namespace fs = std::filesystem;
using classify::FlowKey;
using classify::ProtocolTag;

namespace {

// 9999-12-31T23:59:59Z; four-digit years keep the date field fixed-width.
constexpr std::int64_t kMaxEpochSeconds = 253402300799;

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

std::string_view to_string(LabelErrc code) {
    switch (code) {
        case LabelErrc::bad_extension: return "BadExtension";
        case LabelErrc::bad_date: return "BadDate";
        case LabelErrc::bad_duration: return "BadDuration";
        case LabelErrc::bad_app_name: return "BadAppName";
    }
    return "?";
}

DateFormat::DateFormat(std::string pattern) : pattern_(std::move(pattern)) {
    const std::string sample = format(std::chrono::sys_seconds{});
    if (sample.empty() || sample.find_first_of("_/\\") != std::string::npos) {
        throw std::invalid_argument("date pattern must render a non-empty field without '_' or path separators");
    }
}

std::string DateFormat::format(std::chrono::sys_seconds t) const {
    const std::time_t tt = static_cast<std::time_t>(t.time_since_epoch().count());
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[128];
    const std::size_t n = std::strftime(buf, sizeof buf, pattern_.c_str(), &tm);
    return std::string(buf, n);
}

std::optional<std::chrono::sys_seconds> DateFormat::parse(std::string_view text) const {
    if (text.empty()) return std::nullopt;
    const std::string s(text);
    std::tm tm{};
    const char* end = strptime(s.c_str(), pattern_.c_str(), &tm);
    if (end == nullptr || *end != '\0') return std::nullopt;
    const std::time_t tt = timegm(&tm);
    if (tt < 0 || tt > kMaxEpochSeconds) return std::nullopt;
    const std::chrono::sys_seconds result{std::chrono::seconds{tt}};
    if (format(result) != text) return std::nullopt;
    return result;
}

void validate_label(const CaptureLabel& label) {
    if (label.app_name.empty() || label.app_name.find_first_of("/\\") != std::string::npos ||
        label.app_name.find('\0') != std::string::npos) {
        throw LabelError(LabelErrc::bad_app_name, "app name must be non-empty and free of path separators");
    }
    const auto secs = label.capture_date.time_since_epoch().count();
    if (secs < 0 || secs > kMaxEpochSeconds) {
        throw LabelError(LabelErrc::bad_date, "capture date outside 1970..9999");
    }
    if (label.duration_s < 1) throw LabelError(LabelErrc::bad_duration, "duration must be at least 1 second");
}

std::string render_stem(const CaptureLabel& label, const DateFormat& fmt) {
    validate_label(label);
    return label.app_name + "_" + fmt.format(label.capture_date) + "_" + std::to_string(label.duration_s);
}

CaptureLabel parse_stem(std::string_view stem, const DateFormat& fmt) {
    const auto last = stem.rfind('_');
    if (last == std::string_view::npos) {
        throw LabelError(LabelErrc::bad_date, "missing date and duration fields in '" + std::string(stem) + "'");
    }
    const auto rest = stem.substr(0, last);
    const auto second = rest.rfind('_');
    if (second == std::string_view::npos) {
        throw LabelError(LabelErrc::bad_date, "missing date field in '" + std::string(stem) + "'");
    }
    const auto date_text = rest.substr(second + 1);
    const auto duration_text = stem.substr(last + 1);

    CaptureLabel label;
    label.app_name = std::string(rest.substr(0, second));

    auto date = fmt.parse(date_text);
    if (!date) {
        throw LabelError(LabelErrc::bad_date, "date '" + std::string(date_text) + "' does not match " + fmt.pattern());
    }
    label.capture_date = *date;

    const bool digits = !duration_text.empty() && duration_text.size() <= 18 &&
                        std::all_of(duration_text.begin(), duration_text.end(),
                                    [](char c) { return c >= '0' && c <= '9'; });
    if (!digits || duration_text[0] == '0') {
        throw LabelError(LabelErrc::bad_duration, "duration '" + std::string(duration_text) + "' is not a positive integer");
    }
    label.duration_s = std::stoll(std::string(duration_text));

    if (label.app_name.empty() || label.app_name.find_first_of("/\\") != std::string::npos) {
        throw LabelError(LabelErrc::bad_app_name, "app name is empty or contains a path separator");
    }
    return label;
}

std::string render_capture_filename(const CaptureLabel& label, const DateFormat& fmt) {
    return render_stem(label, fmt) + std::string(kCaptureExtension);
}

CaptureLabel parse_capture_filename(std::string_view name, const DateFormat& fmt) {
    if (!ends_with(name, kCaptureExtension)) {
        throw LabelError(LabelErrc::bad_extension, "capture file name must end with .pcap");
    }
    return parse_stem(name.substr(0, name.size() - kCaptureExtension.size()), fmt);
}

std::string render_keylog_filename(const CaptureLabel& label, const DateFormat& fmt) {
    return std::string(kKeylogPrefix) + render_stem(label, fmt) + std::string(kKeylogExtension);
}

CaptureLabel parse_keylog_filename(std::string_view name, const DateFormat& fmt) {
    if (!starts_with(name, kKeylogPrefix) || !ends_with(name, kKeylogExtension) ||
        name.size() < kKeylogPrefix.size() + kKeylogExtension.size()) {
        throw LabelError(LabelErrc::bad_extension, "key log file name must be sslkeylog_<stem>.txt");
    }
    return parse_stem(name.substr(kKeylogPrefix.size(),
                                  name.size() - kKeylogPrefix.size() - kKeylogExtension.size()),
                      fmt);
}

std::size_t DatasetManifest::unparseable_captures() const {
    return static_cast<std::size_t>(std::count_if(unparseable.begin(), unparseable.end(), [](const fs::path& p) {
        return ends_with(p.filename().string(), kCaptureExtension);
    }));
}

DatasetManifest scan_dataset(std::span<const ListingEntry> listing, const DateFormat& fmt) {
    DatasetManifest m;
    std::map<std::string, ManifestEntry> captures;
    std::map<std::string, fs::path> keylogs;

    for (const auto& item : listing) {
        if (item.kind != EntryKind::file) continue;
        const std::string name = item.path.filename().string();
        if (ends_with(name, kCaptureExtension)) {
            try {
                ManifestEntry e{parse_capture_filename(name, fmt), item.path, std::nullopt};
                captures.emplace(name.substr(0, name.size() - kCaptureExtension.size()), std::move(e));
            } catch (const LabelError&) {
                m.unparseable.push_back(item.path);
            }
        } else if (starts_with(name, kKeylogPrefix) && ends_with(name, kKeylogExtension)) {
            try {
                parse_keylog_filename(name, fmt);
                keylogs.emplace(name.substr(kKeylogPrefix.size(),
                                            name.size() - kKeylogPrefix.size() - kKeylogExtension.size()),
                                item.path);
            } catch (const LabelError&) {
                m.unparseable.push_back(item.path);
            }
        }
    }

    for (auto& [stem, path] : keylogs) {
        auto it = captures.find(stem);
        if (it == captures.end()) {
            m.unpaired_keylogs.push_back(path);
        } else {
            it->second.keylog_path = path;
        }
    }

    std::set<std::string> apps;
    for (auto& [stem, entry] : captures) {
        apps.insert(entry.label.app_name);
        m.entries.push_back(std::move(entry));
    }
    std::sort(m.entries.begin(), m.entries.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
        return std::tie(a.label.app_name, a.label.capture_date, a.label.duration_s, a.capture_path) <
               std::tie(b.label.app_name, b.label.capture_date, b.label.duration_s, b.capture_path);
    });
    m.apps.assign(apps.begin(), apps.end());
    std::sort(m.unparseable.begin(), m.unparseable.end());
    std::sort(m.unpaired_keylogs.begin(), m.unpaired_keylogs.end());
    return m;
}

std::vector<ListingEntry> list_directory(const fs::path& dir) {
    std::vector<ListingEntry> out;
    for (const auto& de : fs::directory_iterator(dir)) {
        if (de.is_regular_file()) {
            out.push_back({de.path(), EntryKind::file});
        } else if (de.is_directory()) {
            out.push_back({de.path(), EntryKind::directory});
        }
    }
    std::sort(out.begin(), out.end(), [](const ListingEntry& a, const ListingEntry& b) { return a.path < b.path; });
    return out;
}

std::int64_t truncation_window_ns(double minutes) {
    if (!(minutes > 0) || !std::isfinite(minutes)) {
        throw std::invalid_argument("truncation window must be a positive number of minutes");
    }
    return static_cast<std::int64_t>(std::llround(minutes * 60.0 * 1e9));
}

std::vector<ClassifiedPacket> truncate_packets(std::vector<ClassifiedPacket> packets, double minutes) {
    const std::int64_t window = truncation_window_ns(minutes);
    if (packets.empty()) return packets;
    auto by_ts = [](const ClassifiedPacket& a, const ClassifiedPacket& b) { return a.record.ts_ns < b.record.ts_ns; };
    if (!std::is_sorted(packets.begin(), packets.end(), by_ts)) {
        std::stable_sort(packets.begin(), packets.end(), by_ts);
    }
    const std::int64_t cutoff = packets.front().record.ts_ns + window;
    auto end = std::find_if(packets.begin(), packets.end(),
                            [cutoff](const ClassifiedPacket& p) { return p.record.ts_ns >= cutoff; });
    packets.erase(end, packets.end());
    return packets;
}

std::string_view to_string(BackgroundKind kind) {
    switch (kind) {
        case BackgroundKind::connectivity_http: return "ConnectivityHttp";
        case BackgroundKind::connectivity_do53: return "ConnectivityDo53";
        case BackgroundKind::system_dot: return "SystemDot";
        case BackgroundKind::none: return "None";
    }
    return "?";
}

namespace {

constexpr std::string_view kConnectivityHost = "connectivitycheck.gstatic.com";

bool is_connectivity_query_name(std::string_view name) {
    return name == kConnectivityHost || name == "www.google.com";
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string strip_port(std::string host) {
    if (!host.empty() && host.front() == '[') {
        const auto close = host.find(']');
        return close == std::string::npos ? host : host.substr(1, close - 1);
    }
    const auto colon = host.find(':');
    if (colon != std::string::npos) host.resize(colon);
    return host;
}

// Host targeted by an HTTP request, from an absolute-form target or the Host header.
std::optional<std::string> http_request_host(ByteView payload) {
    const std::string_view text(reinterpret_cast<const char*>(payload.data()), payload.size());
    const auto line_end = text.find("\r\n");
    const auto line = text.substr(0, line_end);
    const auto sp1 = line.find(' ');
    if (sp1 == std::string_view::npos) return std::nullopt;
    const auto method = line.substr(0, sp1);
    if (method == "HTTP/1.0" || method == "HTTP/1.1" || starts_with(method, "HTTP/")) return std::nullopt;
    const auto sp2 = line.find(' ', sp1 + 1);
    const auto target = line.substr(sp1 + 1, sp2 == std::string_view::npos ? std::string_view::npos : sp2 - sp1 - 1);

    const std::string target_lc = lower(target);
    if (starts_with(target_lc, "http://")) {
        const auto host_part = std::string_view(target_lc).substr(7);
        return strip_port(std::string(host_part.substr(0, host_part.find('/'))));
    }
    if (line_end == std::string_view::npos) return std::nullopt;

    std::size_t pos = line_end + 2;
    while (pos < text.size()) {
        const auto eol = text.find("\r\n", pos);
        const auto header = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        if (header.empty()) break;
        const auto colon = header.find(':');
        if (colon != std::string_view::npos && lower(header.substr(0, colon)) == "host") {
            auto value = header.substr(colon + 1);
            while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) value.remove_prefix(1);
            while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.remove_suffix(1);
            return strip_port(lower(value));
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 2;
    }
    return std::nullopt;
}

bool is_google_dns(const ingest::IpAddress& ip) {
    static const auto a = *ingest::IpAddress::parse("8.8.8.8");
    static const auto b = *ingest::IpAddress::parse("8.8.4.4");
    return ip == a || ip == b;
}

}  // namespace

std::vector<BackgroundKind> attribute_background(std::span<const ClassifiedPacket> packets,
                                                 const BackgroundOptions& options) {
    // First request seen per port-80 flow, and connectivity DNS transactions.
    std::map<FlowKey, bool> http_flow_first_request;
    std::set<std::pair<FlowKey, std::uint16_t>> connectivity_transactions;

    for (const auto& p : packets) {
        const auto& r = p.record;
        if (p.protocol.tag == ProtocolTag::http && !r.payload.empty() &&
            !http_flow_first_request.contains(p.flow)) {
            if (auto host = http_request_host(r.payload)) {
                http_flow_first_request[p.flow] = *host == kConnectivityHost;
            }
        }
        if (p.protocol.tag == ProtocolTag::do53) {
            auto dns = classify::dns_of(r);
            if (dns && !dns->is_response && dns->qname && is_connectivity_query_name(*dns->qname)) {
                connectivity_transactions.emplace(p.flow, dns->id);
            }
        }
    }

    std::vector<BackgroundKind> tags;
    tags.reserve(packets.size());
    for (const auto& p : packets) {
        const auto& r = p.record;
        BackgroundKind kind = BackgroundKind::none;
        const bool port80 = r.transport == ingest::Transport::tcp && (r.src_port == 80 || r.dst_port == 80);

        if (port80) {
            auto it = http_flow_first_request.find(p.flow);
            if (it != http_flow_first_request.end() && it->second) {
                kind = BackgroundKind::connectivity_http;
            } else if (p.protocol.tag == ProtocolTag::http && !r.payload.empty()) {
                auto host = http_request_host(r.payload);
                if (host && *host == kConnectivityHost) kind = BackgroundKind::connectivity_http;
            }
        } else if (p.protocol.tag == ProtocolTag::do53) {
            auto dns = classify::dns_of(r);
            if (dns) {
                const bool named = dns->qname && is_connectivity_query_name(*dns->qname);
                const bool answered = dns->is_response && connectivity_transactions.contains({p.flow, dns->id});
                if (named || answered) kind = BackgroundKind::connectivity_do53;
            }
        } else if (p.protocol.tag == ProtocolTag::dot && options.baseline_mode) {
            const auto& server = r.dst_port == 853 ? r.dst_ip : r.src_ip;
            if (is_google_dns(server)) kind = BackgroundKind::system_dot;
        }
        tags.push_back(kind);
    }
    return tags;
}

}  // namespace appcap::dataset
