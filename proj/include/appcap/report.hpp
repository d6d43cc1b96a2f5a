#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "appcap/analytics.hpp"
#include "appcap/dataset.hpp"
#include "appcap/keylog.hpp"

// JSON serialization of report bodies and the envelope around them.
namespace appcap::report {

using nlohmann::json;

inline constexpr int kReportSchema = 1;
inline constexpr const char* kToolVersion = "0.1.0";

json to_json(const analytics::ProtocolDistribution& d);
json to_json(const analytics::TemporalHistogram& h);
json to_json(const analytics::EncryptionBreakdown& e);
json to_json(const analytics::DnsSplit& d);
json to_json(const analytics::FlowGraph& g);
json to_json(const analytics::ComparisonReport& r);
json to_json(const keylog::CoverageReport& c);
json to_json(const dataset::CaptureLabel& label);
// File names only, so manifests do not depend on where the dataset lives.
json to_json(const dataset::DatasetManifest& m);

std::string format_iso8601(std::chrono::sys_seconds t);

struct Input {
    std::filesystem::path path;
    std::string sha256;
};

Input digest_input(const std::filesystem::path& path);

// generated_at is taken from SOURCE_DATE_EPOCH when set, otherwise the clock.
json make_envelope(const std::string& command, const std::vector<Input>& inputs, json body);

// Table-3-shaped CSV: app,ppm_a,ppm_b,ratio.
std::string ppm_csv(const analytics::ComparisonReport& r);

}  // namespace appcap::report
