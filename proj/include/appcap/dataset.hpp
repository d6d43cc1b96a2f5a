#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "appcap/classify.hpp"

// Labeled dataset layout: filename grammar, directory manifests, truncation
// and background attribution.
namespace appcap::dataset {

using classify::ClassifiedPacket;

struct CaptureLabel {
    std::string app_name;
    std::chrono::sys_seconds capture_date{};
    std::int64_t duration_s = 1;

    bool operator==(const CaptureLabel&) const = default;
};

// strftime/strptime pattern for the [date] field. The rendered form must not
// contain '_' so that right-anchored parsing stays unambiguous.
class DateFormat {
public:
    DateFormat() = default;
    explicit DateFormat(std::string pattern);

    const std::string& pattern() const { return pattern_; }
    std::string format(std::chrono::sys_seconds t) const;
    // Strict: the text must re-render identically.
    std::optional<std::chrono::sys_seconds> parse(std::string_view text) const;

private:
    std::string pattern_ = "%Y%m%dT%H%M%SZ";
};

enum class LabelErrc { bad_extension, bad_date, bad_duration, bad_app_name };

std::string_view to_string(LabelErrc code);

class LabelError : public std::runtime_error {
public:
    LabelError(LabelErrc code, std::string message) : std::runtime_error(std::move(message)), code_(code) {}
    LabelErrc code() const noexcept { return code_; }

private:
    LabelErrc code_;
};

inline constexpr std::string_view kCaptureExtension = ".pcap";
inline constexpr std::string_view kKeylogPrefix = "sslkeylog_";
inline constexpr std::string_view kKeylogExtension = ".txt";

// "<app>_<date>_<duration>" without extension.
std::string render_stem(const CaptureLabel& label, const DateFormat& fmt = {});
CaptureLabel parse_stem(std::string_view stem, const DateFormat& fmt = {});

std::string render_capture_filename(const CaptureLabel& label, const DateFormat& fmt = {});
CaptureLabel parse_capture_filename(std::string_view name, const DateFormat& fmt = {});

std::string render_keylog_filename(const CaptureLabel& label, const DateFormat& fmt = {});
CaptureLabel parse_keylog_filename(std::string_view name, const DateFormat& fmt = {});

// Throws LabelError when the label cannot be rendered faithfully.
void validate_label(const CaptureLabel& label);

enum class EntryKind { file, directory };

struct ListingEntry {
    std::filesystem::path path;
    EntryKind kind = EntryKind::file;
};

struct ManifestEntry {
    CaptureLabel label;
    std::filesystem::path capture_path;
    std::optional<std::filesystem::path> keylog_path;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;  // sorted by app name, then capture date
    std::vector<std::string> apps;       // sorted, distinct
    std::vector<std::filesystem::path> unpaired_keylogs;
    std::vector<std::filesystem::path> unparseable;

    std::size_t unparseable_captures() const;
};

DatasetManifest scan_dataset(std::span<const ListingEntry> listing, const DateFormat& fmt = {});

// Flat, non-recursive listing of a directory.
std::vector<ListingEntry> list_directory(const std::filesystem::path& dir);

// Keeps packets with ts < first_ts + minutes. Input is stably sorted by
// timestamp first when out of order.
std::vector<ClassifiedPacket> truncate_packets(std::vector<ClassifiedPacket> packets, double minutes);

std::int64_t truncation_window_ns(double minutes);

enum class BackgroundKind { connectivity_http, connectivity_do53, system_dot, none };

std::string_view to_string(BackgroundKind kind);

struct BackgroundOptions {
    // SystemDot is only assigned for captures with no user-app context.
    bool baseline_mode = false;
};

std::vector<BackgroundKind> attribute_background(std::span<const ClassifiedPacket> packets,
                                                 const BackgroundOptions& options = {});

}  // namespace appcap::dataset
