#pragma once

#include "tfqkd/keyrate.hpp"
#include "tfqkd/sim.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace tfqkd {

/// Analytic expectation of a session tally: per-class window counts times
/// phase-averaged click probabilities, with the slice statistics folded over
/// a Gaussian residual of width phase.expected_residual_rms. Counts are
/// rounded, keeping the sent total exactly n_pairs.
TallyRecord expected_tally(const SessionConfig& cfg);

/// Expected key rate of one parameter point: expectation tally -> full
/// analysis pipeline. Vacuous bounds and infeasible inputs evaluate to 0.
double expected_rate(const SourceParams& params, const SessionConfig& base,
                     const SecurityParams& sec, const AnalysisOptions& opts = {});

struct OptimizerConfig {
    double mu_x_min = 0.005;
    double mu_x_max = 0.30;
    double mu_y_min = 0.05;
    double mu_y_max = 0.80;
    double p_floor = 0.01;     ///< minimum send probability per source
    int restarts = 8;
    int max_evals = 400;       ///< objective evaluations per restart
    double tolerance = 1e-5;   ///< simplex size threshold in the unconstrained space
    std::uint64_t seed = 1;
    std::optional<SourceParams> warm_start;
};

struct Optimum {
    SourceParams best_params;
    double best_rate = 0.0;
    std::uint64_t eval_count = 0;
    std::vector<std::pair<SourceParams, double>> trace;
};

/// Multi-start downhill-simplex over a 4-dimensional unconstrained
/// reparameterization (log mu_x, log intensity ratio, two softmax logits for
/// the send probabilities). Deterministic in the seed.
Optimum optimize(const OptimizerConfig& cfg, const SessionConfig& base,
                 const SecurityParams& sec, const AnalysisOptions& opts = {});

struct ScanRow {
    double distance_km = 0.0;
    double eta_db = 0.0;
    double mu_x = 0.0;
    double mu_y = 0.0;
    double p_v = 0.0;
    double p_x = 0.0;
    double p_y = 0.0;
    double r_per_pulse = 0.0;
    double r_bps = 0.0;
    double plob = 0.0;
    bool crosses_plob = false;  ///< expected rate exceeds the capacity bound
};

/// Expected rate versus total fibre distance at fixed source parameters.
/// Arms are split evenly; the capacity column uses the pure-fibre
/// transmittance.
std::vector<ScanRow> scan_distances(const SessionConfig& base,
                                    const SecurityParams& sec,
                                    const AnalysisOptions& opts, double from_km,
                                    double to_km, double step_km);

} // namespace tfqkd
