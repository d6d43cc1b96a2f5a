#include "appcap/keylog.hpp"

#include <algorithm>

namespace appcap::keylog {

using classify::TlsVersion;

std::size_t KeyIndex::entry_count() const {
    std::size_t n = 0;
    for (const auto& [random, entries] : by_random) n += entries.size();
    return n;
}

const std::vector<KeyLogEntry>* KeyIndex::find(const Random& random) const {
    auto it = by_random.find(random);
    return it == by_random.end() ? nullptr : &it->second;
}

void KeyIndex::add(KeyLogEntry entry) {
    auto& list = by_random[entry.client_random];
    list.push_back(std::move(entry));
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool valid_label(std::string_view label) {
    return !label.empty() && std::all_of(label.begin(), label.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    });
}

}  // namespace

KeyIndex parse_keylog(std::string_view text) {
    KeyIndex index;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        const auto fields = split_ws(line);
        if (fields.empty() || fields.front().front() == '#') {
            if (eol == text.size()) break;
            continue;
        }
        Bytes random;
        Bytes secret;
        const bool ok = fields.size() == 3 && valid_label(fields[0]) && from_hex(fields[1], random) &&
                        random.size() == 32 && from_hex(fields[2], secret) && !secret.empty();
        if (!ok) {
            ++index.malformed_lines;
        } else {
            KeyLogEntry e;
            e.label = std::string(fields[0]);
            std::copy(random.begin(), random.end(), e.client_random.begin());
            e.secret = std::move(secret);
            index.add(std::move(e));
        }
        if (eol == text.size()) break;
    }
    return index;
}

std::string render_keylog(const std::vector<KeyLogEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += e.label;
        out += ' ';
        out += to_hex(e.client_random);
        out += ' ';
        out += to_hex(e.secret);
        out += '\n';
    }
    return out;
}

std::vector<std::string_view> required_labels(TlsVersion version) {
    switch (version) {
        case TlsVersion::tls1_3:
            return {"CLIENT_HANDSHAKE_TRAFFIC_SECRET", "SERVER_HANDSHAKE_TRAFFIC_SECRET",
                    "CLIENT_TRAFFIC_SECRET_0", "SERVER_TRAFFIC_SECRET_0"};
        case TlsVersion::sslv3:
        case TlsVersion::tls1_0:
        case TlsVersion::tls1_1:
        case TlsVersion::tls1_2:
            return {"CLIENT_RANDOM"};
        default:
            return {};
    }
}

CoverageReport key_coverage(const classify::FlowTable& flows, const KeyIndex& index) {
    CoverageReport r;
    for (const auto& [key, st] : flows) {
        if (!st.tls_seen) continue;
        ++r.tls_flows;
        if (!st.client_random) {
            ++r.flows_without_client_hello;
            continue;
        }
        ++r.flows_with_client_hello;
        const auto* entries = index.find(*st.client_random);
        if (entries == nullptr || entries->empty()) continue;
        const auto version = st.negotiated_tls.value_or(TlsVersion::unknown_ssl);
        const auto needed = required_labels(version);
        const bool complete = std::all_of(needed.begin(), needed.end(), [&](std::string_view label) {
            return std::any_of(entries->begin(), entries->end(),
                               [&](const KeyLogEntry& e) { return e.label == label; });
        });
        if (complete) ++r.flows_with_keys;
    }
    r.coverage_fraction = static_cast<double>(r.flows_with_keys) /
                          static_cast<double>(std::max<std::size_t>(r.flows_with_client_hello, 1));
    return r;
}

CoverageReport key_coverage(const classify::Classification& classified, const KeyIndex& index) {
    return key_coverage(classified.flows, index);
}

std::string keylog_filename_for(const dataset::CaptureLabel& label, const dataset::DateFormat& fmt) {
    return dataset::render_keylog_filename(label, fmt);
}

}  // namespace appcap::keylog
