#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "appcap/bytes.hpp"
#include "appcap/classify.hpp"
#include "appcap/dataset.hpp"

// NSS key log files and their coverage of a capture's TLS flows.
namespace appcap::keylog {

using classify::Random;

struct KeyLogEntry {
    std::string label;
    Random client_random{};
    Bytes secret;

    bool operator==(const KeyLogEntry&) const = default;
};

struct KeyIndex {
    std::map<Random, std::vector<KeyLogEntry>> by_random;
    std::size_t malformed_lines = 0;

    std::size_t entry_count() const;
    const std::vector<KeyLogEntry>* find(const Random& random) const;
    void add(KeyLogEntry entry);
};

// Tolerant: '#' comments and blank lines are ignored, anything else that is
// not `LABEL <64 hex> <hex>` is counted in malformed_lines.
KeyIndex parse_keylog(std::string_view text);

// One line per entry, upper-case labels as given, lower-case hex.
std::string render_keylog(const std::vector<KeyLogEntry>& entries);

// Labels that must all be present for a flow to count as decryptable.
// TLS 1.3 needs both handshake and both application traffic secrets;
// earlier versions need CLIENT_RANDOM; an unknown version accepts any entry.
std::vector<std::string_view> required_labels(classify::TlsVersion version);

struct CoverageReport {
    std::size_t tls_flows = 0;
    std::size_t flows_with_client_hello = 0;
    std::size_t flows_without_client_hello = 0;
    std::size_t flows_with_keys = 0;
    double coverage_fraction = 0.0;
};

CoverageReport key_coverage(const classify::FlowTable& flows, const KeyIndex& index);
CoverageReport key_coverage(const classify::Classification& classified, const KeyIndex& index);

std::string keylog_filename_for(const dataset::CaptureLabel& label, const dataset::DateFormat& fmt = {});

}  // namespace appcap::keylog
