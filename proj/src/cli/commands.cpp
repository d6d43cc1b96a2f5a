#include "appcap/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"

#include "appcap/io.hpp"
#include "appcap/keylog.hpp"
#include "appcap/synth.hpp"

namespace appcap::cli {

namespace fs = std::filesystem;
using report::json;

// ---- capture loading ----------------------------------------------------------

LoadedCapture load_capture_bytes(ByteView bytes) {
    auto stream = ingest::read_capture(bytes);
    LoadedCapture out;
    out.linktype = stream.linktype_id;
    out.frames = stream.frames.size();
    if (stream.tail_error) out.tail_error = stream.tail_error->what();
    auto decoded = ingest::decode_capture(stream);
    stream.frames.clear();
    stream.frames.shrink_to_fit();
    out.skipped = decoded.skipped;
    out.fragments = decoded.fragments;
    out.malformed = decoded.malformed;
    out.classified = classify::classify_capture(std::move(decoded.packets));
    return out;
}

LoadedCapture load_capture(const fs::path& path) {
    const Bytes bytes = io::read_file(path);
    try {
        return load_capture_bytes(bytes);
    } catch (const ingest::IngestError& e) {
        throw ingest::IngestError(e.code(), path.filename().string() + ": " + e.what(), e.frames_read());
    }
}

namespace {

std::optional<dataset::CaptureLabel> label_of(const fs::path& path) {
    try {
        return dataset::parse_capture_filename(path.filename().string());
    } catch (const dataset::LabelError&) {
        return std::nullopt;
    }
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

json capture_json(const fs::path& path, const LoadedCapture& c, const std::optional<dataset::CaptureLabel>& label) {
    return {{"file", path.filename().string()},
            {"linktype", c.linktype},
            {"frames", c.frames},
            {"packets", c.classified.packets.size()},
            {"skipped", c.skipped},
            {"fragments", c.fragments},
            {"malformed", c.malformed},
            {"truncated_tail", c.tail_error.has_value()},
            {"label", label ? report::to_json(*label) : json(nullptr)}};
}

}  // namespace

DatasetRun summarize_dataset(const fs::path& dir, std::optional<double> truncate_min) {
    if (!fs::is_directory(dir)) throw io::IoError("not a directory: " + dir.string());
    DatasetRun run;
    const auto listing = dataset::list_directory(dir);
    run.manifest = dataset::scan_dataset(listing);
    for (const auto& entry : run.manifest.entries) {
        const Bytes bytes = io::read_file(entry.capture_path);
        run.inputs.push_back({entry.capture_path, io::sha256_hex(bytes)});
        LoadedCapture loaded;
        try {
            loaded = load_capture_bytes(bytes);
        } catch (const ingest::IngestError& e) {
            throw ingest::IngestError(e.code(), entry.capture_path.filename().string() + ": " + e.what(),
                                      e.frames_read());
        }
        auto packets = std::move(loaded.classified.packets);
        if (truncate_min) packets = dataset::truncate_packets(std::move(packets), *truncate_min);
        run.summary.add(analytics::summarize_capture(entry.label.app_name, packets, entry.label, truncate_min));
    }
    return run;
}

// ---- commands -----------------------------------------------------------------

CommandResult cmd_analyze(const AnalyzeOptions& options) {
    CommandResult r;
    r.command = "analyze";
    r.inputs.push_back(report::digest_input(options.capture));
    const auto loaded = load_capture(options.capture);
    const auto label = label_of(options.capture);
    const auto& packets = loaded.classified.packets;
    const auto scope = options.app_data_only ? analytics::Scope::app_data_only : analytics::Scope::all_packets;

    json features = json::array();
    std::string csv = "ts_ns,src_ip,dst_ip,src_port,dst_port,transport,protocol,info,length,app_data\n";
    for (const auto& p : packets) {
        if (options.app_data_only && !p.is_app_data) continue;
        const auto& rec = p.record;
        const std::string proto = classify::display_name(p.protocol);
        const std::string info = classify::packet_info(p);
        features.push_back({{"ts_ns", rec.ts_ns},
                            {"src_ip", rec.src_ip.to_string()},
                            {"dst_ip", rec.dst_ip.to_string()},
                            {"src_port", rec.src_port},
                            {"dst_port", rec.dst_port},
                            {"transport", std::string(ingest::to_string(rec.transport))},
                            {"protocol", proto},
                            {"info", info},
                            {"length", rec.packet_len},
                            {"app_data", p.is_app_data}});
        csv += std::to_string(rec.ts_ns) + "," + rec.src_ip.to_string() + "," + rec.dst_ip.to_string() + "," +
               std::to_string(rec.src_port) + "," + std::to_string(rec.dst_port) + "," +
               std::string(ingest::to_string(rec.transport)) + "," + csv_field(proto) + "," + csv_field(info) + "," +
               std::to_string(rec.packet_len) + "," + (p.is_app_data ? "1" : "0") + "\n";
    }

    const auto counts = analytics::count_categories(packets);
    r.body = {{"capture", capture_json(options.capture, loaded, label)},
              {"distribution", report::to_json(analytics::distribution_from_counts(counts.in(scope), scope))},
              {"histogram", report::to_json(analytics::temporal_histogram(packets, options.bin_width_s))},
              {"encryption", report::to_json(analytics::encryption_from_counts(counts.app_data))},
              {"dns", report::to_json(analytics::dns_split(counts.in(scope)))},
              {"ppm", analytics::packets_per_minute(packets, label)},
              {"features", features}};

    if (options.keylog) {
        r.inputs.push_back(report::digest_input(*options.keylog));
        const auto index = keylog::parse_keylog(io::read_text(*options.keylog));
        r.body["keylog"] = {{"entries", index.entry_count()}, {"malformed_lines", index.malformed_lines}};
        r.body["coverage"] = report::to_json(keylog::key_coverage(loaded.classified, index));
    }
    r.csv = std::move(csv);
    return r;
}

CommandResult cmd_dataset_scan(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw io::IoError("not a directory: " + dir.string());
    CommandResult r;
    r.command = "dataset scan";
    const auto manifest = dataset::scan_dataset(dataset::list_directory(dir));
    r.body = {{"manifest", report::to_json(manifest)}};
    std::string csv = "app_name,capture_date,duration_s,capture,keylog\n";
    for (const auto& e : manifest.entries) {
        csv += csv_field(e.label.app_name) + "," + report::format_iso8601(e.label.capture_date) + "," +
               std::to_string(e.label.duration_s) + "," + csv_field(e.capture_path.filename().string()) + "," +
               (e.keylog_path ? csv_field(e.keylog_path->filename().string()) : std::string()) + "\n";
    }
    r.csv = std::move(csv);
    return r;
}

CommandResult cmd_dataset_stats(const StatsOptions& options) {
    CommandResult r;
    r.command = "dataset stats";
    auto run = summarize_dataset(options.dir, options.truncate_min);
    if (run.manifest.entries.empty()) throw DomainError("dataset " + options.dir.string() + " has no parseable captures");
    r.inputs = std::move(run.inputs);

    const auto scope = options.app_data_only ? analytics::Scope::app_data_only : analytics::Scope::all_packets;
    const auto pooled = run.summary.pooled();
    const auto records = run.summary.ppm_records(analytics::Scope::all_packets);
    json ppm = json::array();
    std::string csv = "app,mean_ppm,captures\n";
    for (const auto& rec : records) {
        ppm.push_back({{"app", rec.app_name}, {"mean_ppm", rec.mean_ppm}, {"captures", rec.captures_used}});
        csv += csv_field(rec.app_name) + "," + std::to_string(rec.mean_ppm) + "," + std::to_string(rec.captures_used) + "\n";
    }
    r.body = {{"manifest",
               {{"app_count", run.manifest.apps.size()},
                {"entry_count", run.manifest.entries.size()},
                {"unpaired_keylogs", run.manifest.unpaired_keylogs.size()},
                {"unparseable", run.manifest.unparseable.size()}}},
              {"truncate_min", options.truncate_min ? json(*options.truncate_min) : json(nullptr)},
              {"ppm", ppm},
              {"mean_ppm", analytics::dataset_mean_ppm(records)},
              {"packets", analytics::total(pooled.all)},
              {"app_data_packets", analytics::total(pooled.app_data)},
              {"distribution", report::to_json(analytics::distribution_from_counts(pooled.in(scope), scope))},
              {"encryption", report::to_json(analytics::encryption_from_counts(pooled.app_data))},
              {"dns", report::to_json(analytics::dns_split(pooled.in(scope)))},
              {"sankey", report::to_json(analytics::sankey_from_counts(pooled.app_data))}};
    r.csv = std::move(csv);
    return r;
}

CommandResult cmd_compare(const CompareCmdOptions& options) {
    CommandResult r;
    r.command = "compare";
    auto a = summarize_dataset(options.dir_a, options.truncate_min_a);
    auto b = summarize_dataset(options.dir_b, options.truncate_min_b);
    r.inputs = std::move(a.inputs);
    r.inputs.insert(r.inputs.end(), b.inputs.begin(), b.inputs.end());
    analytics::ComparisonReport cmp;
    try {
        cmp = analytics::compare_datasets(a.summary, b.summary, options.compare);
    } catch (const analytics::NoCommonApps& e) {
        throw DomainError(e.what());
    }
    r.body = report::to_json(cmp);
    r.body["truncate_min_a"] = options.truncate_min_a ? json(*options.truncate_min_a) : json(nullptr);
    r.body["truncate_min_b"] = options.truncate_min_b ? json(*options.truncate_min_b) : json(nullptr);
    r.csv = report::ppm_csv(cmp);
    return r;
}

CommandResult cmd_keycov(const fs::path& capture, const fs::path& keylog_path) {
    CommandResult r;
    r.command = "keycov";
    r.inputs.push_back(report::digest_input(capture));
    r.inputs.push_back(report::digest_input(keylog_path));
    const auto loaded = load_capture(capture);
    const auto index = keylog::parse_keylog(io::read_text(keylog_path));
    r.body = {{"capture", capture_json(capture, loaded, label_of(capture))},
              {"keylog", {{"entries", index.entry_count()}, {"malformed_lines", index.malformed_lines}}},
              {"coverage", report::to_json(keylog::key_coverage(loaded.classified, index))}};
    return r;
}

CommandResult cmd_baseline(const fs::path& capture, double bin_width_s) {
    CommandResult r;
    r.command = "baseline";
    r.inputs.push_back(report::digest_input(capture));
    const auto loaded = load_capture(capture);
    const auto& packets = loaded.classified.packets;
    const auto tags = dataset::attribute_background(packets, {.baseline_mode = true});

    std::map<dataset::BackgroundKind, std::uint64_t> tally;
    std::vector<classify::ClassifiedPacket> tagged;
    for (std::size_t i = 0; i < packets.size(); ++i) {
        ++tally[tags[i]];
        if (tags[i] != dataset::BackgroundKind::none) tagged.push_back(packets[i]);
    }
    json tallies = json::object();
    for (auto k : {dataset::BackgroundKind::connectivity_http, dataset::BackgroundKind::connectivity_do53,
                   dataset::BackgroundKind::system_dot, dataset::BackgroundKind::none}) {
        tallies[std::string(dataset::to_string(k))] = tally[k];
    }
    std::optional<std::int64_t> t0;
    if (!packets.empty()) {
        t0 = std::min_element(packets.begin(), packets.end(), [](const auto& x, const auto& y) {
                 return x.record.ts_ns < y.record.ts_ns;
             })->record.ts_ns;
    }
    r.body = {{"capture", capture_json(capture, loaded, label_of(capture))},
              {"tallies", tallies},
              {"tagged_distribution",
               report::to_json(analytics::protocol_distribution(tagged, analytics::Scope::all_packets))},
              {"histogram", report::to_json(analytics::temporal_histogram(tagged, bin_width_s, t0))}};
    return r;
}

CommandResult cmd_synth(const fs::path& spec_path, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
    CommandResult r;
    r.command = "synth";
    const std::string text = io::read_text(spec_path);
    r.inputs.push_back({spec_path, io::sha256_hex(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()))});
    auto spec = synth::parse_fixture_spec(text);
    if (seed) spec.seed = *seed;
    const auto written = synth::write_fixture(spec, out_dir);
    json files = json::array();
    for (const auto& p : written) {
        files.push_back({{"file", p.filename().string()}, {"sha256", io::sha256_hex(io::read_file(p))}});
    }
    std::size_t captures = 0;
    for (const auto& app : spec.apps) captures += app.captures.size();
    r.body = {{"seed", spec.seed}, {"captures", captures}, {"files", files}};
    return r;
}

// ---- command line -------------------------------------------------------------

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

fs::path resolve_output(const std::string& path) {
    fs::path p(path);
    const char* dir = std::getenv("APPCAP_OUTPUT_DIR");
    if (p.is_relative() && dir != nullptr && *dir != '\0') return fs::path(dir) / p;
    return p;
}

struct Outputs {
    std::string json_path;
    std::string csv_path;
};

void add_outputs(CLI::App* cmd, Outputs& o, bool csv) {
    cmd->add_option("--json", o.json_path, "Write the JSON report here instead of stdout");
    if (csv) cmd->add_option("--csv", o.csv_path, "Write the CSV table here");
}

void emit(const CommandResult& result, const Outputs& o, std::ostream& out) {
    const std::string text = report::make_envelope(result.command, result.inputs, result.body).dump(2) + "\n";
    if (o.json_path.empty()) {
        out << text;
    } else {
        const auto path = resolve_output(o.json_path);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        io::write_text(path, text);
    }
    if (!o.csv_path.empty()) {
        if (!result.csv) throw UsageError("--csv is not supported by " + result.command);
        const auto path = resolve_output(o.csv_path);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        io::write_text(path, *result.csv);
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Packet-capture analysis for labeled mobile-app traffic datasets", "appcap"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(report::kToolVersion));

    Outputs outputs;
    std::function<CommandResult()> action;

    AnalyzeOptions analyze;
    std::string analyze_keylog;
    auto* analyze_cmd = app.add_subcommand("analyze", "Classify one capture and report its statistics");
    analyze_cmd->add_option("capture", analyze.capture, "Capture file (.pcap)")->required();
    analyze_cmd->add_option("--keylog", analyze_keylog, "Paired SSL key log for coverage");
    analyze_cmd->add_flag("--app-data-only", analyze.app_data_only, "Count only packets carrying app data");
    analyze_cmd->add_option("--bins", analyze.bin_width_s, "Histogram bin width in seconds")->check(CLI::PositiveNumber);
    add_outputs(analyze_cmd, outputs, true);
    analyze_cmd->callback([&] {
        if (!analyze_keylog.empty()) analyze.keylog = analyze_keylog;
        action = [&] { return cmd_analyze(analyze); };
    });

    auto* dataset_cmd = app.add_subcommand("dataset", "Dataset directory commands");
    dataset_cmd->require_subcommand(1);
    fs::path scan_dir;
    auto* scan_cmd = dataset_cmd->add_subcommand("scan", "List captures, key logs and naming problems");
    scan_cmd->add_option("dir", scan_dir, "Dataset directory")->required();
    add_outputs(scan_cmd, outputs, true);
    scan_cmd->callback([&] { action = [&] { return cmd_dataset_scan(scan_dir); }; });

    StatsOptions stats;
    double stats_truncate = 0.0;
    auto* stats_cmd = dataset_cmd->add_subcommand("stats", "Per-app packet rates and dataset distribution");
    stats_cmd->add_option("dir", stats.dir, "Dataset directory")->required();
    auto* stats_trunc =
        stats_cmd->add_option("--truncate-min", stats_truncate, "Keep the first N minutes of each capture")
            ->check(CLI::PositiveNumber);
    stats_cmd->add_flag("--app-data-only", stats.app_data_only, "Distribution over app-data packets only");
    add_outputs(stats_cmd, outputs, true);
    stats_cmd->callback([&] {
        if (stats_trunc->count() > 0) stats.truncate_min = stats_truncate;
        action = [&] { return cmd_dataset_stats(stats); };
    });

    CompareCmdOptions compare;
    double trunc_all = 0.0;
    double trunc_a = 0.0;
    double trunc_b = 0.0;
    bool all_packets = false;
    bool ppm_app_data = false;
    auto* compare_cmd = app.add_subcommand("compare", "Compare two datasets over their common apps");
    compare_cmd->add_option("dir_a", compare.dir_a, "Dataset A (earlier)")->required();
    compare_cmd->add_option("dir_b", compare.dir_b, "Dataset B (later)")->required();
    auto* opt_trunc = compare_cmd->add_option("--truncate-min", trunc_all, "Truncate captures of both datasets")
                          ->check(CLI::PositiveNumber);
    auto* opt_trunc_a =
        compare_cmd->add_option("--truncate-min-a", trunc_a, "Truncate dataset A only")->check(CLI::PositiveNumber);
    auto* opt_trunc_b =
        compare_cmd->add_option("--truncate-min-b", trunc_b, "Truncate dataset B only")->check(CLI::PositiveNumber);
    compare_cmd->add_flag("--common-only", compare.compare.common_only, "Aggregate statistics over common apps only");
    compare_cmd->add_flag("--all-packets", all_packets, "Statistics over all packets instead of app data");
    compare_cmd->add_flag("--ppm-app-data", ppm_app_data, "Packet rates over app-data packets");
    add_outputs(compare_cmd, outputs, true);
    compare_cmd->callback([&] {
        if (opt_trunc->count() > 0) compare.truncate_min_a = compare.truncate_min_b = trunc_all;
        if (opt_trunc_a->count() > 0) compare.truncate_min_a = trunc_a;
        if (opt_trunc_b->count() > 0) compare.truncate_min_b = trunc_b;
        if (all_packets) compare.compare.stats_scope = analytics::Scope::all_packets;
        if (ppm_app_data) compare.compare.ppm_scope = analytics::Scope::app_data_only;
        action = [&] { return cmd_compare(compare); };
    });

    fs::path keycov_capture;
    fs::path keycov_log;
    auto* keycov_cmd = app.add_subcommand("keycov", "Key log coverage of a capture's TLS flows");
    keycov_cmd->add_option("capture", keycov_capture, "Capture file")->required();
    keycov_cmd->add_option("keylog", keycov_log, "NSS key log file")->required();
    add_outputs(keycov_cmd, outputs, false);
    keycov_cmd->callback([&] { action = [&] { return cmd_keycov(keycov_capture, keycov_log); }; });

    fs::path baseline_capture;
    double baseline_bins = 10.0;
    auto* baseline_cmd = app.add_subcommand("baseline", "Attribute background traffic of an idle capture");
    baseline_cmd->add_option("capture", baseline_capture, "Capture file")->required();
    baseline_cmd->add_option("--bins", baseline_bins, "Histogram bin width in seconds")->check(CLI::PositiveNumber);
    add_outputs(baseline_cmd, outputs, false);
    baseline_cmd->callback([&] { action = [&] { return cmd_baseline(baseline_capture, baseline_bins); }; });

    fs::path synth_spec;
    std::string synth_out;
    std::uint64_t synth_seed = 0;
    auto* synth_cmd = app.add_subcommand("synth", "Generate labeled captures and key logs from a fixture spec");
    synth_cmd->add_option("spec", synth_spec, "Fixture spec (JSON)")->required();
    synth_cmd->add_option("out_dir", synth_out, "Output directory (default: $APPCAP_OUTPUT_DIR)");
    auto* opt_seed = synth_cmd->add_option("--seed", synth_seed, "Override the fixture seed");
    add_outputs(synth_cmd, outputs, false);
    synth_cmd->callback([&] {
        action = [&] {
            fs::path dir = synth_out;
            if (dir.empty()) {
                const char* env = std::getenv("APPCAP_OUTPUT_DIR");
                if (env == nullptr || *env == '\0') throw UsageError("synth needs out_dir or APPCAP_OUTPUT_DIR");
                dir = env;
            }
            std::optional<std::uint64_t> seed;
            if (opt_seed->count() > 0) seed = synth_seed;
            return cmd_synth(synth_spec, dir, seed);
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        emit(action(), outputs, out);
        return exit_ok;
    } catch (const synth::SpecError& e) {
        err << "appcap: invalid fixture spec at " << e.what() << "\n";
        return exit_usage;
    } catch (const UsageError& e) {
        err << "appcap: " << e.what() << "\n";
        return exit_usage;
    } catch (const io::IoError& e) {
        err << "appcap: " << e.what() << "\n";
        return exit_io;
    } catch (const fs::filesystem_error& e) {
        err << "appcap: " << e.what() << "\n";
        return exit_io;
    } catch (const ingest::IngestError& e) {
        err << "appcap: " << ingest::to_string(e.code()) << ": " << e.what() << "\n";
        return exit_domain;
    } catch (const DomainError& e) {
        err << "appcap: " << e.what() << "\n";
        return exit_domain;
    } catch (const dataset::LabelError& e) {
        err << "appcap: " << dataset::to_string(e.code()) << ": " << e.what() << "\n";
        return exit_domain;
    }
}

}  // namespace appcap::cli
