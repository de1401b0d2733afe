#include "tfqkd/io.hpp"

#include "tfqkd/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tfqkd {

using nlohmann::json;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON in " + path + ": " + e.what());
    }
}

const json& need(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end())
        throw ParseError("missing key \"" + std::string(key) + "\" in " + where);
    return *it;
}

std::uint64_t need_count(const json& obj, const char* key, const std::string& where) {
    const json& v = need(obj, key, where);
    if (v.is_number_integer()) {
        const auto s = v.get<std::int64_t>();
        if (s < 0) throw ValidationError(std::string(key) + " is negative");
        return static_cast<std::uint64_t>(s);
    }
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d < 0.0) throw ValidationError(std::string(key) + " is negative");
        return static_cast<std::uint64_t>(d);
    }
    throw ParseError(std::string(key) + " is not a count in " + where);
}

std::string count_key(const char* prefix, int a, int b) {
    return std::string(prefix) + "_" + std::to_string(a) + std::to_string(b);
}

json source_to_json(const SourceParams& p) {
    return json{{"mu_v", p.mu_v}, {"mu_x", p.mu_x}, {"mu_y", p.mu_y},
                {"p_v", p.p_v},   {"p_x", p.p_x},   {"p_y", p.p_y}};
}

SourceParams source_from_json(const json& j) {
    SourceParams p;
    p.mu_v = j.value("mu_v", 0.0);
    p.mu_x = need(j, "mu_x", "source").get<double>();
    p.mu_y = need(j, "mu_y", "source").get<double>();
    p.p_v = need(j, "p_v", "source").get<double>();
    p.p_x = need(j, "p_x", "source").get<double>();
    p.p_y = need(j, "p_y", "source").get<double>();
    return p;
}

json security_to_json(const SecurityParams& s) {
    return json{{"eps_chernoff", s.eps_chernoff},
                {"eps_cor", s.eps_cor},
                {"eps_pa", s.eps_pa},
                {"eps_hat", s.eps_hat},
                {"f", s.f}};
}

SecurityParams security_from_json(const json& j) {
    SecurityParams s;
    s.eps_chernoff = j.value("eps_chernoff", 1e-10);
    s.eps_cor = j.value("eps_cor", 1e-10);
    s.eps_pa = j.value("eps_pa", 1e-10);
    s.eps_hat = j.value("eps_hat", 1e-10);
    s.f = j.value("f", 1.16);
    return s;
}

json channel_to_json(const ChannelConfig& c) {
    return json{{"length_a_km", c.length_a_km},
                {"length_b_km", c.length_b_km},
                {"atten_db_per_km", c.atten_db_per_km},
                {"extra_loss_a_db", c.extra_loss_a_db},
                {"extra_loss_b_db", c.extra_loss_b_db},
                {"det_eff", {c.det_eff[0], c.det_eff[1]}},
                {"dark_hz", {c.dark_hz[0], c.dark_hz[1]}},
                {"window_eff", c.window_eff},
                {"dark_window_s", c.dark_window_s},
                {"clock_hz", c.clock_hz},
                {"misalignment", c.misalignment}};
}

ChannelConfig channel_from_json(const json& j) {
    ChannelConfig c;
    c.length_a_km = j.value("length_a_km", 0.0);
    c.length_b_km = j.value("length_b_km", 0.0);
    c.atten_db_per_km = j.value("atten_db_per_km", 0.16);
    if (j.contains("extra_loss_db")) {
        c.set_extra_loss_db(j["extra_loss_db"].get<double>());
    }
    c.extra_loss_a_db = j.value("extra_loss_a_db", c.extra_loss_a_db);
    c.extra_loss_b_db = j.value("extra_loss_b_db", c.extra_loss_b_db);
    if (j.contains("det_eff")) {
        c.det_eff = {j["det_eff"][0].get<double>(), j["det_eff"][1].get<double>()};
    }
    if (j.contains("dark_hz")) {
        c.dark_hz = {j["dark_hz"][0].get<double>(), j["dark_hz"][1].get<double>()};
    }
    c.window_eff = j.value("window_eff", 1.0);
    c.dark_window_s = j.value("dark_window_s", 2e-10);
    c.clock_hz = j.value("clock_hz", 1e9);
    c.misalignment = j.value("misalignment", 0.0);
    return c;
}

json phase_to_json(const PhaseModel& p) {
    return json{{"diffusion_rad2_per_s", p.diffusion_rad2_per_s},
                {"lambda1_nm", p.lambda1_nm},
                {"lambda2_nm", p.lambda2_nm},
                {"refresh_interval_s", p.refresh_interval_s},
                {"est_window_s", p.est_window_s},
                {"reference_rate", p.reference_rate},
                {"dim_reference_rate", p.dim_reference_rate},
                {"visibility", p.visibility},
                {"expected_residual_rms", p.expected_residual_rms}};
}

PhaseModel phase_from_json(const json& j) {
    PhaseModel p;
    p.diffusion_rad2_per_s = j.value("diffusion_rad2_per_s", p.diffusion_rad2_per_s);
    p.lambda1_nm = j.value("lambda1_nm", p.lambda1_nm);
    p.lambda2_nm = j.value("lambda2_nm", p.lambda2_nm);
    p.refresh_interval_s = j.value("refresh_interval_s", p.refresh_interval_s);
    p.est_window_s = j.value("est_window_s", p.est_window_s);
    p.reference_rate = j.value("reference_rate", p.reference_rate);
    p.dim_reference_rate = j.value("dim_reference_rate", p.dim_reference_rate);
    p.visibility = j.value("visibility", p.visibility);
    p.expected_residual_rms = j.value("expected_residual_rms", p.expected_residual_rms);
    return p;
}

json schedule_to_json(const FrameSchedule& s) {
    return json{{"raw_clock_hz", s.raw_clock_hz},
                {"frame_quantum_frac", s.frame_quantum_frac},
                {"period_quantum_frac", s.period_quantum_frac},
                {"guard_eff", s.guard_eff}};
}

FrameSchedule schedule_from_json(const json& j) {
    FrameSchedule s;
    s.raw_clock_hz = j.value("raw_clock_hz", s.raw_clock_hz);
    s.frame_quantum_frac = j.value("frame_quantum_frac", s.frame_quantum_frac);
    s.period_quantum_frac = j.value("period_quantum_frac", s.period_quantum_frac);
    s.guard_eff = j.value("guard_eff", s.guard_eff);
    return s;
}

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

TallyFile parse_tally_file(const std::string& path) {
    const json j = load_json(path);
    TallyFile out;

    if (j.contains("meta")) {
        const json& m = j["meta"];
        out.meta.label = m.value("label", std::string{});
        out.meta.distance_km = m.value("distance_km", 0.0);
        out.meta.attenuation_db = m.value("attenuation_db", 0.0);
        out.meta.clock_hz = m.value("clock_hz", 0.0);
        out.meta.parameter_set = m.value("parameter_set", std::string{});
        out.meta.sent_shared = m.value("sent_shared_across_short_distances", false);
    }

    const json& counts = need(j, "counts", path);
    out.tally.n_total = need_count(counts, "n_total", path);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            out.tally.sent[a][b] =
                need_count(counts, count_key("sent", a, b).c_str(), path);
            out.tally.detected[a][b] =
                need_count(counts, count_key("detected", a, b).c_str(), path);
        }
    }
    out.tally.valid_det1 = need_count(counts, "detected_valid_det1", path);
    out.tally.valid_det2 = need_count(counts, "detected_valid_det2", path);
    out.tally.ds_total = need_count(counts, "detected_11_ds", path);
    out.tally.ds_correct = need_count(counts, "correct_11_ds", path);

    require_valid(validate(out.tally));

    if (j.contains("reported")) {
        const json& r = j["reported"];
        ReportedValues rv;
        rv.n_pulses = r.value("n_pulses", 0.0);
        rv.n1_before = r.value("n1_before_aopp", 0.0);
        rv.n1_after = r.value("n1_after_aopp", 0.0);
        rv.e1ph_before = r.value("e1ph_before_aopp", 0.0);
        rv.e1ph_after = r.value("e1ph_after_aopp", 0.0);
        rv.nt_after = r.value("nt_after_aopp", 0.0);
        rv.et_before = r.value("et_before_aopp", 0.0);
        rv.et_after = r.value("et_after_aopp", 0.0);
        rv.ex = r.value("ex", 0.0);
        rv.r_per_pulse = r.value("r_per_pulse", 0.0);
        rv.r_bps = r.value("r_bps", 0.0);
        out.reported = rv;
    }
    return out;
}

TallyRecord parse_tally(const std::string& path) {
    return parse_tally_file(path).tally;
}

std::string tally_to_json(const TallyFile& file) {
    json counts;
    counts["n_total"] = file.tally.n_total;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            counts[count_key("sent", a, b)] = file.tally.sent[a][b];
            counts[count_key("detected", a, b)] = file.tally.detected[a][b];
        }
    }
    counts["detected_valid_det1"] = file.tally.valid_det1;
    counts["detected_valid_det2"] = file.tally.valid_det2;
    counts["detected_11_ds"] = file.tally.ds_total;
    counts["correct_11_ds"] = file.tally.ds_correct;

    json j;
    j["meta"] = json{{"label", file.meta.label},
                     {"distance_km", file.meta.distance_km},
                     {"attenuation_db", file.meta.attenuation_db},
                     {"clock_hz", file.meta.clock_hz},
                     {"parameter_set", file.meta.parameter_set},
                     {"sent_shared_across_short_distances", file.meta.sent_shared}};
    j["counts"] = counts;
    if (file.reported) {
        const ReportedValues& r = *file.reported;
        j["reported"] = json{{"n_pulses", r.n_pulses},
                             {"n1_before_aopp", r.n1_before},
                             {"n1_after_aopp", r.n1_after},
                             {"e1ph_before_aopp", r.e1ph_before},
                             {"e1ph_after_aopp", r.e1ph_after},
                             {"nt_after_aopp", r.nt_after},
                             {"et_before_aopp", r.et_before},
                             {"et_after_aopp", r.et_after},
                             {"ex", r.ex},
                             {"r_per_pulse", r.r_per_pulse},
                             {"r_bps", r.r_bps}};
    }
    return j.dump(2) + "\n";
}

void write_tally_file(const std::string& path, const TallyFile& file) {
    write_file_atomic(path, tally_to_json(file));
}

SessionConfig RunConfig::session() const {
    SessionConfig cfg;
    cfg.source = source;
    cfg.channel = channel;
    cfg.n_pairs = n_pairs;
    cfg.phase = phase;
    cfg.schedule = schedule;
    cfg.delta_slice = analysis.delta_slice;
    cfg.seed = seed;
    cfg.per_window = per_window;
    cfg.track_phase = track_phase;
    return cfg;
}

RunConfig parse_run_config(const std::string& path) {
    const json j = load_json(path);
    RunConfig cfg;
    if (j.contains("source")) cfg.source = source_from_json(j["source"]);
    if (j.contains("security")) cfg.security = security_from_json(j["security"]);
    if (j.contains("channel")) cfg.channel = channel_from_json(j["channel"]);
    if (j.contains("phase")) cfg.phase = phase_from_json(j["phase"]);
    if (j.contains("schedule")) cfg.schedule = schedule_from_json(j["schedule"]);
    if (j.contains("analysis")) {
        const json& a = j["analysis"];
        const std::string mode = a.value("mode", std::string("finite"));
        if (mode == "finite") {
            cfg.analysis.mode = EstimationMode::Finite;
        } else if (mode == "mean") {
            cfg.analysis.mode = EstimationMode::MeanValue;
        } else {
            throw ParseError("unknown analysis mode \"" + mode + "\"");
        }
        cfg.analysis.delta_slice = a.value("delta_slice", kDefaultDeltaSlice);
    }
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        cfg.optimizer.mu_x_min = o.value("mu_x_min", cfg.optimizer.mu_x_min);
        cfg.optimizer.mu_x_max = o.value("mu_x_max", cfg.optimizer.mu_x_max);
        cfg.optimizer.mu_y_min = o.value("mu_y_min", cfg.optimizer.mu_y_min);
        cfg.optimizer.mu_y_max = o.value("mu_y_max", cfg.optimizer.mu_y_max);
        cfg.optimizer.p_floor = o.value("p_floor", cfg.optimizer.p_floor);
        cfg.optimizer.restarts = o.value("restarts", cfg.optimizer.restarts);
        cfg.optimizer.max_evals = o.value("max_evals", cfg.optimizer.max_evals);
        cfg.optimizer.tolerance = o.value("tolerance", cfg.optimizer.tolerance);
        if (o.value("warm_start", true)) cfg.optimizer.warm_start = cfg.source;
    } else {
        cfg.optimizer.warm_start = cfg.source;
    }
    cfg.n_pairs = j.value("n_pairs", cfg.n_pairs);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.per_window = j.value("per_window", cfg.per_window);
    cfg.track_phase = j.value("track_phase", cfg.track_phase);
    cfg.optimizer.seed = cfg.seed;
    return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["source"] = source_to_json(cfg.source);
    j["security"] = security_to_json(cfg.security);
    j["channel"] = channel_to_json(cfg.channel);
    j["phase"] = phase_to_json(cfg.phase);
    j["schedule"] = schedule_to_json(cfg.schedule);
    j["analysis"] = json{
        {"mode", cfg.analysis.mode == EstimationMode::Finite ? "finite" : "mean"},
        {"delta_slice", cfg.analysis.delta_slice}};
    j["n_pairs"] = cfg.n_pairs;
    j["seed"] = cfg.seed;
    j["per_window"] = cfg.per_window;
    j["track_phase"] = cfg.track_phase;
    return j.dump(2) + "\n";
}

RunConfig long_haul_config() {
    RunConfig cfg;
    cfg.source = SourceParams{0.0, 0.08, 0.445, 0.52, 0.28, 0.20};
    cfg.channel.length_a_km = 500.0;
    cfg.channel.length_b_km = 502.0;
    cfg.channel.atten_db_per_km = 156.5 / 1002.0;
    cfg.channel.set_extra_loss_db(1.4);
    cfg.channel.det_eff = {0.60, 0.55};
    cfg.channel.dark_hz = {0.019, 0.035};
    cfg.channel.window_eff = 0.65;
    cfg.channel.dark_window_s = 2e-10;
    cfg.channel.clock_hz = 3.51e8;
    cfg.channel.misalignment = 0.025;
    cfg.schedule = FrameSchedule{1e9, 0.6, 0.6, 0.975};
    cfg.phase.diffusion_rad2_per_s = 2.0;
    cfg.phase.est_window_s = 2e-3;
    cfg.phase.reference_rate = 120.0;
    cfg.phase.dim_reference_rate = 120.0;
    cfg.phase.expected_residual_rms = 0.13;
    cfg.n_pairs = 1000000000ULL;
    return cfg;
}

RunConfig short_haul_config() {
    RunConfig cfg;
    cfg.source = SourceParams{0.0, 0.05, 0.482, 0.68, 0.04, 0.28};
    cfg.channel.length_a_km = 101.0;
    cfg.channel.length_b_km = 101.0;
    cfg.channel.atten_db_per_km = 31.6 / 202.0;
    cfg.channel.set_extra_loss_db(1.4);
    cfg.channel.det_eff = {0.80, 0.80};
    cfg.channel.dark_hz = {10.0, 10.0};
    cfg.channel.window_eff = 1.0;
    cfg.channel.dark_window_s = 5e-10;
    cfg.channel.clock_hz = 9e8;
    cfg.channel.misalignment = 0.035;
    cfg.schedule = FrameSchedule{1e9, 1.0, 0.9, 1.0};
    cfg.phase.diffusion_rad2_per_s = 2.0;
    cfg.phase.est_window_s = 1e-3;
    cfg.phase.reference_rate = 150.0;
    cfg.phase.dim_reference_rate = 150.0;
    cfg.phase.expected_residual_rms = 0.10;
    cfg.n_pairs = 1000000000ULL;
    return cfg;
}

std::string report_to_json(const KeyRateReport& r) {
    json j{{"r_per_pulse", r.r_per_pulse},
           {"r_per_pulse_unclamped", r.r_per_pulse_unclamped},
           {"r_bps", r.r_bits_per_second},
           {"r_tail", r.r_tail},
           {"total_secure_bits", r.total_secure_bits}};
    if (r.has_plob) {
        j["plob_bound"] = r.plob_bound;
        j["plob_margin"] = r.plob_margin;
    }
    return j.dump(2) + "\n";
}

KeyRateReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed report JSON: ") + e.what());
    }
    KeyRateReport r;
    r.r_per_pulse = need(j, "r_per_pulse", "report").get<double>();
    r.r_per_pulse_unclamped = j.value("r_per_pulse_unclamped", r.r_per_pulse);
    r.r_bits_per_second = need(j, "r_bps", "report").get<double>();
    r.r_tail = need(j, "r_tail", "report").get<double>();
    r.total_secure_bits = need(j, "total_secure_bits", "report").get<double>();
    if (j.contains("plob_bound")) {
        r.plob_bound = j["plob_bound"].get<double>();
        r.plob_margin = j.value("plob_margin", 0.0);
        r.has_plob = true;
    }
    return r;
}

std::string report_to_csv(const KeyRateReport& r) {
    std::ostringstream out;
    out << "r_per_pulse,r_per_pulse_unclamped,r_bps,r_tail,total_secure_bits,"
           "plob_bound,plob_margin\n";
    out << csv_number(r.r_per_pulse) << ',' << csv_number(r.r_per_pulse_unclamped)
        << ',' << csv_number(r.r_bits_per_second) << ',' << csv_number(r.r_tail)
        << ',' << csv_number(r.total_secure_bits) << ','
        << (r.has_plob ? csv_number(r.plob_bound) : "") << ','
        << (r.has_plob ? csv_number(r.plob_margin) : "") << '\n';
    return out.str();
}

std::string emit_report(const KeyRateReport& report, ReportFormat format) {
    return format == ReportFormat::Json ? report_to_json(report)
                                        : report_to_csv(report);
}

std::string analysis_to_json(const AnalysisReport& a) {
    json j;
    j["decoy"] = json{{"y1_alice_sends", a.decoy.y1_alice_sends.y1},
                      {"y1_bob_sends", a.decoy.y1_bob_sends.y1},
                      {"y1_lower", a.decoy.y1_lower},
                      {"n1_pre_aopp", a.decoy.n1_pre},
                      {"e1ph_pre_aopp", a.decoy.e1ph_pre},
                      {"ex", a.decoy.ex},
                      {"vacuous", a.decoy.vacuous}};
    j["aopp"] = json{{"kept_pairs", a.aopp.kept_pairs},
                     {"n_t_post", a.aopp.n_t_post},
                     {"e_t_post", a.aopp.e_t_post},
                     {"n1_post", a.aopp.n1_post},
                     {"e1ph_post", a.aopp.e1ph_post},
                     {"vacuous", a.aopp.vacuous}};
    j["pre"] = json{{"n_t_pre", a.n_t_pre}, {"e_t_pre", a.e_t_pre}};
    j["keyrate"] = json::parse(report_to_json(a.keyrate));
    j["vacuous"] = a.vacuous;
    return j.dump(2) + "\n";
}

std::string optimum_to_json(const Optimum& o) {
    json j;
    j["best_params"] = source_to_json(o.best_params);
    j["best_rate"] = o.best_rate;
    j["eval_count"] = o.eval_count;
    return j.dump(2) + "\n";
}

std::string session_summary_to_json(const SessionTruth& t) {
    json j;
    j["true_untagged_vy"] = t.true_untagged_vy;
    j["true_untagged_yv"] = t.true_untagged_yv;
    j["true_e1ph"] = t.true_e1ph;
    j["residual_rms"] = t.residual_rms;
    j["ex"] = t.ex;
    j["detections"] = t.tally.sum_detected();
    return j.dump(2) + "\n";
}

std::string scan_to_csv(const std::vector<ScanRow>& rows) {
    std::ostringstream out;
    out << "distance_km,eta_db,mu_x,mu_y,p_v,p_x,p_y,r_per_pulse,r_bps,plob,"
           "crosses_plob\n";
    for (const ScanRow& r : rows) {
        out << csv_number(r.distance_km) << ',' << csv_number(r.eta_db) << ','
            << csv_number(r.mu_x) << ',' << csv_number(r.mu_y) << ','
            << csv_number(r.p_v) << ',' << csv_number(r.p_x) << ','
            << csv_number(r.p_y) << ',' << csv_number(r.r_per_pulse) << ','
            << csv_number(r.r_bps) << ',' << csv_number(r.plob) << ','
            << (r.crosses_plob ? 1 : 0) << '\n';
    }
    return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw ParseError("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

} // namespace tfqkd
