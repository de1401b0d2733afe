// Command-line front end: key-rate evaluation, tally analysis, session
// simulation, parameter optimization and distance scans.

#include "tfqkd/errors.hpp"
#include "tfqkd/io.hpp"
#include "tfqkd/keyrate.hpp"
#include "tfqkd/optimize.hpp"
#include "tfqkd/sim.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitValidation = 4;
constexpr int kExitVacuous = 5;

void emit_error(int code, const std::string& kind, const std::string& message) {
    std::cerr << "{\"error\":{\"code\":" << code << ",\"kind\":\"" << kind
              << "\",\"message\":\"" << message << "\"}}" << std::endl;
}

void deliver(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << content;
    } else {
        tfqkd::write_file_atomic(out_path, content);
    }
}

tfqkd::RunConfig load_config(const std::string& path) {
    if (path.empty()) return tfqkd::long_haul_config();
    return tfqkd::parse_run_config(path);
}

} // namespace

int main(int argc, char** argv) {
    using namespace tfqkd;

    CLI::App app{"sending-or-not-sending twin-field QKD toolkit"};
    app.require_subcommand(1);

    std::string tally_path, config_path, out_path, distances;
    std::string format = "json";
    std::string mode;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* cmd, bool with_tally) {
        if (with_tally)
            cmd->add_option("--tally", tally_path, "tally JSON file")->required();
        cmd->add_option("--config", config_path, "run configuration JSON");
        cmd->add_option("--out", out_path, "output path (default stdout)");
        cmd->add_option("--seed", seed, "random seed override");
        cmd->add_option("--format", format, "json or csv")
            ->check(CLI::IsMember({"json", "csv"}));
        cmd->add_option("--mode", mode, "estimation mode")
            ->check(CLI::IsMember({"mean", "finite"}));
    };

    CLI::App* keyrate_cmd = app.add_subcommand(
        "keyrate", "evaluate the key-rate formula on a tally's reported values");
    add_common(keyrate_cmd, true);

    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "full estimation pipeline from raw counts");
    add_common(analyze_cmd, true);

    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "Monte Carlo session; emits a tally file");
    add_common(simulate_cmd, false);
    std::string truth_path;
    simulate_cmd->add_option("--truth-out", truth_path, "session truth summary path");

    CLI::App* optimize_cmd =
        app.add_subcommand("optimize", "search source parameters for the best rate");
    add_common(optimize_cmd, false);

    CLI::App* scan_cmd =
        app.add_subcommand("scan", "expected rate versus distance (CSV)");
    add_common(scan_cmd, false);
    scan_cmd->add_option("--distances", distances, "grid as from:to:step in km")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error(kExitUsage, "usage", e.what());
        return kExitUsage;
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (mode == "mean") cfg.analysis.mode = EstimationMode::MeanValue;
        if (mode == "finite") cfg.analysis.mode = EstimationMode::Finite;
        const ReportFormat fmt =
            format == "csv" ? ReportFormat::Csv : ReportFormat::Json;

        if (*keyrate_cmd) {
            const TallyFile file = parse_tally_file(tally_path);
            if (!file.reported)
                throw ValidationError("tally file carries no reported block");
            KeyRateInput in;
            in.n_total = file.reported->n_pulses > 0.0
                             ? file.reported->n_pulses
                             : static_cast<double>(file.tally.n_total);
            in.n1 = file.reported->n1_after;
            in.e1ph = file.reported->e1ph_after;
            in.n_t = file.reported->nt_after;
            in.e_t = file.reported->et_after;
            in.n_vy_plus_n_yv = static_cast<double>(
                file.tally.detected_at(Source::Vacuum, Source::Signal) +
                file.tally.detected_at(Source::Signal, Source::Vacuum));
            in.sec = cfg.security;
            in.clock_hz = file.meta.clock_hz > 0.0 ? file.meta.clock_hz
                                                   : cfg.channel.clock_hz;
            if (file.meta.attenuation_db > 0.0)
                in.eta_total = db_to_transmittance(file.meta.attenuation_db);
            deliver(emit_report(secure_key_rate(in), fmt), out_path);
        } else if (*analyze_cmd) {
            const TallyFile file = parse_tally_file(tally_path);
            ChannelConfig ch = cfg.channel;
            if (file.meta.clock_hz > 0.0) ch.clock_hz = file.meta.clock_hz;
            const AnalysisReport report =
                analyze(file.tally, cfg.source, cfg.security, ch, cfg.analysis);
            deliver(analysis_to_json(report), out_path);
        } else if (*simulate_cmd) {
            const SessionTruth truth = simulate_session(cfg.session());
            TallyFile file;
            file.meta.label = "simulated";
            file.meta.distance_km = cfg.channel.length_a_km + cfg.channel.length_b_km;
            file.meta.attenuation_db =
                file.meta.distance_km * cfg.channel.atten_db_per_km;
            file.meta.clock_hz = cfg.channel.clock_hz;
            file.tally = truth.tally;
            deliver(tally_to_json(file), out_path);
            if (!truth_path.empty())
                write_file_atomic(truth_path, session_summary_to_json(truth));
        } else if (*optimize_cmd) {
            const Optimum opt =
                optimize(cfg.optimizer, cfg.session(), cfg.security, cfg.analysis);
            deliver(optimum_to_json(opt), out_path);
        } else if (*scan_cmd) {
            double from = 0.0, to = 0.0, step = 0.0;
            if (std::sscanf(distances.c_str(), "%lf:%lf:%lf", &from, &to, &step) != 3)
                throw ValidationError("--distances expects from:to:step");
            const auto rows =
                scan_distances(cfg.session(), cfg.security, cfg.analysis, from, to, step);
            deliver(scan_to_csv(rows), out_path);
        }
    } catch (const ParseError& e) {
        emit_error(kExitParse, "parse", e.what());
        return kExitParse;
    } catch (const VacuousBoundError& e) {
        emit_error(kExitVacuous, "vacuous-bound", e.what());
        return kExitVacuous;
    } catch (const InsufficientDataError& e) {
        emit_error(kExitVacuous, "insufficient-data", e.what());
        return kExitVacuous;
    } catch (const ValidationError& e) {
        emit_error(kExitValidation, "validation", e.what());
        return kExitValidation;
    } catch (const DomainError& e) {
        emit_error(kExitValidation, "domain", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        emit_error(1, "internal", e.what());
        return 1;
    }
    return kExitOk;
}
