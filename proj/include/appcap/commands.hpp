#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "appcap/analytics.hpp"
#include "appcap/classify.hpp"
#include "appcap/dataset.hpp"
#include "appcap/ingest.hpp"
#include "appcap/report.hpp"

// Command implementations behind the appcap executable. Each returns a body
// plus the inputs it consumed; run_cli adds the envelope and handles output.
namespace appcap::cli {

enum ExitCode : int { exit_ok = 0, exit_io = 2, exit_domain = 3, exit_usage = 64 };

// Unparseable, empty or otherwise unusable inputs (exit 3).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadedCapture {
    std::uint32_t linktype = 0;
    std::size_t frames = 0;
    std::size_t skipped = 0;
    std::size_t fragments = 0;
    std::size_t malformed = 0;
    std::optional<std::string> tail_error;
    classify::Classification classified;
};

LoadedCapture load_capture(const std::filesystem::path& path);
LoadedCapture load_capture_bytes(ByteView bytes);

// Reads, classifies, truncates and summarizes every capture of a dataset
// directory. Captures are processed one at a time.
struct DatasetRun {
    dataset::DatasetManifest manifest;
    analytics::DatasetSummary summary;
    std::vector<report::Input> inputs;
};

DatasetRun summarize_dataset(const std::filesystem::path& dir, std::optional<double> truncate_min);

struct CommandResult {
    std::string command;
    std::vector<report::Input> inputs;
    report::json body;
    std::optional<std::string> csv;
};

struct AnalyzeOptions {
    std::filesystem::path capture;
    std::optional<std::filesystem::path> keylog;
    bool app_data_only = false;
    double bin_width_s = 10.0;
};

CommandResult cmd_analyze(const AnalyzeOptions& options);

CommandResult cmd_dataset_scan(const std::filesystem::path& dir);

struct StatsOptions {
    std::filesystem::path dir;
    std::optional<double> truncate_min;
    bool app_data_only = false;
};

CommandResult cmd_dataset_stats(const StatsOptions& options);

struct CompareCmdOptions {
    std::filesystem::path dir_a;
    std::filesystem::path dir_b;
    std::optional<double> truncate_min_a;
    std::optional<double> truncate_min_b;
    analytics::CompareOptions compare;
};

CommandResult cmd_compare(const CompareCmdOptions& options);

CommandResult cmd_keycov(const std::filesystem::path& capture, const std::filesystem::path& keylog_path);

CommandResult cmd_baseline(const std::filesystem::path& capture, double bin_width_s = 10.0);

CommandResult cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir,
                        std::optional<std::uint64_t> seed);

// Full command line (without argv[0]). Reads APPCAP_OUTPUT_DIR for relative
// output paths and the default synth directory.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace appcap::cli
