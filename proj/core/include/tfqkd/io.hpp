#pragma once

#include "tfqkd/keyrate.hpp"
#include "tfqkd/optimize.hpp"
#include "tfqkd/sim.hpp"
#include "tfqkd/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tfqkd {

enum class ReportFormat { Json, Csv };

struct TallyFileMeta {
    std::string label;
    double distance_km = 0.0;
    double attenuation_db = 0.0;  ///< total fibre loss
    double clock_hz = 0.0;        ///< effective signal frequency
    std::string parameter_set;
    bool sent_shared = false;     ///< sent block shared across sibling datasets
};

/// Published post-processing results bundled with a dataset, for regression
/// against the exact key-rate path.
struct ReportedValues {
    double n_pulses = 0.0;
    double n1_before = 0.0;
    double n1_after = 0.0;
    double e1ph_before = 0.0;
    double e1ph_after = 0.0;
    double nt_after = 0.0;
    double et_before = 0.0;
    double et_after = 0.0;
    double ex = 0.0;
    double r_per_pulse = 0.0;
    double r_bps = 0.0;
};

struct TallyFile {
    TallyFileMeta meta;
    TallyRecord tally;
    std::optional<ReportedValues> reported;
};

/// Parses a tally file; throws ParseError on malformed input (with the byte
/// position), a named-key error for missing fields, and ValidationError when
/// the counts break the tally invariants.
TallyFile parse_tally_file(const std::string& path);
TallyRecord parse_tally(const std::string& path);

std::string tally_to_json(const TallyFile& file);
void write_tally_file(const std::string& path, const TallyFile& file);

struct RunConfig {
    SourceParams source;
    SecurityParams security;
    ChannelConfig channel;
    AnalysisOptions analysis;
    PhaseModel phase;
    FrameSchedule schedule;
    std::uint64_t n_pairs = 1000000;
    std::uint64_t seed = 1;
    bool per_window = false;
    bool track_phase = true;
    OptimizerConfig optimizer;

    SessionConfig session() const;
};

RunConfig parse_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

/// Bundled operating points: the long-haul configuration and the
/// short-distance configuration.
RunConfig long_haul_config();
RunConfig short_haul_config();

std::string report_to_json(const KeyRateReport& report);
KeyRateReport report_from_json(const std::string& text);
std::string report_to_csv(const KeyRateReport& report);

std::string emit_report(const KeyRateReport& report, ReportFormat format);

std::string analysis_to_json(const AnalysisReport& report);
std::string optimum_to_json(const Optimum& optimum);
std::string session_summary_to_json(const SessionTruth& truth);
std::string scan_to_csv(const std::vector<ScanRow>& rows);

/// Writes via a temp file in the same directory plus rename.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace tfqkd
