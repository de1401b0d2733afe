#include "tfqkd/optimize.hpp"

#include "tfqkd/errors.hpp"

#include <gsl/gsl_multimin.h>

#include <cmath>
#include <numbers>
#include <random>

namespace tfqkd {

namespace {

// Gauss-Hermite nodes/weights (n=8) for averaging over the Gaussian residual.
constexpr std::array<double, 8> kGhNodes = {
    -2.930637420257244, -1.981656756695843, -1.157193712446780,
    -0.381186990207322, 0.381186990207322,  1.157193712446780,
    1.981656756695843,  2.930637420257244};
constexpr std::array<double, 8> kGhWeights = {
    1.99604072211368e-4, 0.0170779830074134, 0.207802325814892,
    0.661147012558241,   0.661147012558241,  0.207802325814892,
    0.0170779830074134,  1.99604072211368e-4};
constexpr double kGhNorm = 1.7724538509055160273;  // sqrt(pi)

std::uint64_t round_count(double x) {
    return static_cast<std::uint64_t>(std::llround(std::max(0.0, x)));
}

} // namespace

TallyRecord expected_tally(const SessionConfig& cfg) {
    require_valid(validate(cfg));

    TallyRecord tally;
    tally.n_total = cfg.n_pairs;

    // Sent counts: rounded expectations with the remainder folded into the
    // signal-signal cell so the total stays exact.
    const double n = static_cast<double>(cfg.n_pairs);
    std::uint64_t assigned = 0;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            if (a == 2 && b == 2) continue;
            const double p = cfg.source.prob(static_cast<Source>(a)) *
                             cfg.source.prob(static_cast<Source>(b));
            tally.sent[a][b] = round_count(n * p);
            assigned += tally.sent[a][b];
        }
    }
    if (assigned > cfg.n_pairs)
        throw ValidationError("expected sent counts exceed n_pairs");
    tally.sent[2][2] = cfg.n_pairs - assigned;

    double det1 = 0.0, det2 = 0.0;
    const auto book = [&](int a, int b, const SinglesProbabilities& s) {
        const double windows = static_cast<double>(tally.sent[a][b]);
        tally.detected[a][b] = round_count(windows * s.total());
        det1 += windows * s.det1;
        det2 += windows * s.det2;
    };

    const double pd1 = std::min(1.0, cfg.channel.dark_hz[0] * cfg.channel.dark_window_s);
    const double pd2 = std::min(1.0, cfg.channel.dark_hz[1] * cfg.channel.dark_window_s);
    book(0, 0, SinglesProbabilities{pd1 * (1.0 - pd2), pd2 * (1.0 - pd1)});
    book(1, 0, singles_at(cfg.source.mu_x, 0.0, cfg.channel, 0.0));
    book(0, 1, singles_at(0.0, cfg.source.mu_x, cfg.channel, 0.0));
    book(2, 0, singles_at(cfg.source.mu_y, 0.0, cfg.channel, 0.0));
    book(0, 2, singles_at(0.0, cfg.source.mu_y, cfg.channel, 0.0));
    book(1, 2, singles_phase_avg(cfg.source.mu_x, cfg.source.mu_y, cfg.channel));
    book(2, 1, singles_phase_avg(cfg.source.mu_y, cfg.source.mu_x, cfg.channel));
    book(2, 2, singles_phase_avg(cfg.source.mu_y, cfg.source.mu_y, cfg.channel));

    // Decoy-decoy windows: total detections from the full phase average,
    // slice statistics averaged over the residual distribution.
    const auto s_xx = singles_phase_avg(cfg.source.mu_x, cfg.source.mu_x, cfg.channel);
    book(1, 1, s_xx);

    const double sigma = cfg.track_phase ? cfg.phase.expected_residual_rms : 0.0;
    SinglesProbabilities band0{}, bandpi{};
    for (std::size_t i = 0; i < kGhNodes.size(); ++i) {
        const double resid = std::numbers::sqrt2 * sigma * kGhNodes[i];
        const double w = kGhWeights[i] / kGhNorm;
        const auto b0 = singles_in_band(cfg.source.mu_x, cfg.channel,
                                        cfg.delta_slice, 0, resid);
        const auto bpi = singles_in_band(cfg.source.mu_x, cfg.channel,
                                         cfg.delta_slice, 1, resid);
        band0.det1 += w * b0.det1;
        band0.det2 += w * b0.det2;
        bandpi.det1 += w * bpi.det1;
        bandpi.det2 += w * bpi.det2;
    }
    const double slice_windows =
        static_cast<double>(tally.sent[1][1]) * cfg.delta_slice / (2.0 * std::numbers::pi);
    tally.ds_total = round_count(slice_windows * (band0.total() + bandpi.total()));
    tally.ds_correct = round_count(slice_windows * (band0.det1 + bandpi.det2));
    if (tally.ds_correct > tally.ds_total) tally.ds_correct = tally.ds_total;

    // Per-detector totals: distribute the expectation, preserving the sum.
    const double total_det = static_cast<double>(tally.sum_detected());
    const double det_sum = det1 + det2;
    tally.valid_det1 = round_count(det_sum > 0.0 ? total_det * det1 / det_sum : 0.0);
    tally.valid_det2 = tally.sum_detected() - tally.valid_det1;
    return tally;
}

double expected_rate(const SourceParams& params, const SessionConfig& base,
                     const SecurityParams& sec, const AnalysisOptions& opts) {
    const ValidationResult v = validate(params);
    if (!v.ok()) return 0.0;
    SessionConfig cfg = base;
    cfg.source = params;
    try {
        const TallyRecord tally = expected_tally(cfg);
        const AnalysisReport report = analyze(tally, params, sec, cfg.channel, opts);
        return report.vacuous ? 0.0 : report.keyrate.r_per_pulse;
    } catch (const VacuousBoundError&) {
        return 0.0;
    } catch (const InsufficientDataError&) {
        return 0.0;
    }
}

namespace {

struct Reparam {
    const OptimizerConfig* cfg;

    SourceParams decode(const double* theta) const {
        SourceParams p;
        p.mu_x = std::exp(theta[0]);
        p.mu_y = p.mu_x * (1.0 + std::exp(theta[1]));
        const double ex = std::exp(theta[2]);
        const double ey = std::exp(theta[3]);
        const double z = 1.0 + ex + ey;
        p.p_v = 1.0 / z;
        p.p_x = ex / z;
        p.p_y = ey / z;
        return p;
    }

    std::array<double, 4> encode(const SourceParams& p) const {
        return {std::log(p.mu_x), std::log(p.mu_y / p.mu_x - 1.0),
                std::log(p.p_x / p.p_v), std::log(p.p_y / p.p_v)};
    }

    bool in_bounds(const SourceParams& p) const {
        return p.mu_x >= cfg->mu_x_min && p.mu_x <= cfg->mu_x_max &&
               p.mu_y >= cfg->mu_y_min && p.mu_y <= cfg->mu_y_max &&
               p.mu_x < p.mu_y && p.p_v >= cfg->p_floor && p.p_x >= cfg->p_floor &&
               p.p_y >= cfg->p_floor;
    }
};

struct Objective {
    Reparam reparam;
    const SessionConfig* base;
    const SecurityParams* sec;
    const AnalysisOptions* opts;
    Optimum* opt;

    double operator()(const double* theta) const {
        const SourceParams p = reparam.decode(theta);
        if (!reparam.in_bounds(p)) {
            double violation = 0.0;
            violation += std::max(0.0, reparam.cfg->mu_x_min - p.mu_x);
            violation += std::max(0.0, p.mu_x - reparam.cfg->mu_x_max);
            violation += std::max(0.0, reparam.cfg->mu_y_min - p.mu_y);
            violation += std::max(0.0, p.mu_y - reparam.cfg->mu_y_max);
            return 1e3 * (1.0 + violation);
        }
        const double rate = expected_rate(p, *base, *sec, *opts);
        opt->eval_count++;
        opt->trace.emplace_back(p, rate);
        if (rate > opt->best_rate) {
            opt->best_rate = rate;
            opt->best_params = p;
        }
        // Log scale keeps the simplex well conditioned across the many
        // orders of magnitude a distance sweep spans.
        return -std::log10(rate + 1e-300);
    }

    static double gsl_eval(const gsl_vector* v, void* params) {
        const auto* self = static_cast<const Objective*>(params);
        return (*self)(v->data);
    }
};

} // namespace

Optimum optimize(const OptimizerConfig& cfg, const SessionConfig& base,
                 const SecurityParams& sec, const AnalysisOptions& opts) {
    if (cfg.restarts < 1) throw DomainError("restarts must be >= 1");
    if (!(cfg.mu_x_min < cfg.mu_x_max && cfg.mu_y_min < cfg.mu_y_max &&
          cfg.mu_x_min > 0.0))
        throw DomainError("infeasible intensity bounds");

    Optimum out;
    out.best_params = SourceParams{};
    Reparam reparam{&cfg};
    Objective objective{reparam, &base, &sec, &opts, &out};

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::vector<std::array<double, 4>> starts;
    if (cfg.warm_start) {
        require_valid(validate(*cfg.warm_start));
        starts.push_back(reparam.encode(*cfg.warm_start));
    }
    while (static_cast<int>(starts.size()) < cfg.restarts) {
        SourceParams p;
        p.mu_x = cfg.mu_x_min + uni(rng) * (cfg.mu_x_max - cfg.mu_x_min);
        const double lo = std::max(cfg.mu_y_min, p.mu_x * 1.5);
        if (lo >= cfg.mu_y_max) continue;
        p.mu_y = lo + uni(rng) * (cfg.mu_y_max - lo);
        const double a = 0.2 + uni(rng), b = 0.05 + uni(rng), c = 0.05 + uni(rng);
        const double z = a + b + c;
        p.p_v = a / z;
        p.p_x = b / z;
        p.p_y = c / z;
        if (!reparam.in_bounds(p)) continue;
        starts.push_back(reparam.encode(p));
    }

    gsl_multimin_fminimizer* minimizer =
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4);
    gsl_vector* x = gsl_vector_alloc(4);
    gsl_vector* step = gsl_vector_alloc(4);

    gsl_multimin_function func;
    func.n = 4;
    func.f = &Objective::gsl_eval;
    func.params = &objective;

    for (const auto& start : starts) {
        for (std::size_t i = 0; i < 4; ++i) gsl_vector_set(x, i, start[i]);
        gsl_vector_set_all(step, 0.25);
        gsl_multimin_fminimizer_set(minimizer, &func, x, step);

        const int iter_budget = std::max(1, cfg.max_evals);
        for (int iter = 0; iter < iter_budget; ++iter) {
            if (gsl_multimin_fminimizer_iterate(minimizer) != 0) break;
            const double size = gsl_multimin_fminimizer_size(minimizer);
            if (gsl_multimin_test_size(size, cfg.tolerance) == GSL_SUCCESS) break;
        }
    }

    gsl_vector_free(step);
    gsl_vector_free(x);
    gsl_multimin_fminimizer_free(minimizer);
    return out;
}

std::vector<ScanRow> scan_distances(const SessionConfig& base,
                                    const SecurityParams& sec,
                                    const AnalysisOptions& opts, double from_km,
                                    double to_km, double step_km) {
    if (!(step_km > 0.0) || to_km < from_km) throw DomainError("bad distance grid");

    std::vector<ScanRow> rows;
    for (double d = from_km; d <= to_km + 1e-9; d += step_km) {
        SessionConfig cfg = base;
        cfg.channel.length_a_km = d / 2.0;
        cfg.channel.length_b_km = d / 2.0;

        ScanRow row;
        row.distance_km = d;
        row.eta_db = d * cfg.channel.atten_db_per_km;
        row.mu_x = cfg.source.mu_x;
        row.mu_y = cfg.source.mu_y;
        row.p_v = cfg.source.p_v;
        row.p_x = cfg.source.p_x;
        row.p_y = cfg.source.p_y;
        row.r_per_pulse = expected_rate(cfg.source, cfg, sec, opts);
        row.r_bps = row.r_per_pulse * cfg.channel.clock_hz;
        row.plob = plob(db_to_transmittance(row.eta_db));
        row.crosses_plob = row.r_per_pulse > row.plob;
        rows.push_back(row);
    }
    return rows;
}

} // namespace tfqkd
