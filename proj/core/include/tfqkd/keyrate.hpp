#pragma once

#include "tfqkd/aopp.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/types.hpp"

#include <numbers>
#include <optional>

namespace tfqkd {

/// Default full width of the post-selected phase band around each
/// interference point. The bundled datasets place about 1/6 of the
/// decoy-decoy detections inside the preset band, which this matches.
inline constexpr double kDefaultDeltaSlice = std::numbers::pi / 6.0;

/// Shannon entropy of a binary variable, in bits. H(0) = H(1) = 0.
double binary_entropy(double x);

/// Per-pulse finite-size overhead:
///   (1/N) [ 2 log2(2/eps_cor) + 4 log2(1/(sqrt(2) eps_pa eps_hat))
///           + 2 log2(n_vy + n_yv) ].
double r_tail(double n_total, double n_vy_plus_n_yv, const SecurityParams& sec);

/// Repeaterless secret-key capacity of a lossy channel, -log2(1 - eta).
double plob(double eta);

/// Post-pairing quantities feeding the key-rate formula.
struct KeyRateInput {
    double n_total = 0.0;          ///< total pulse pairs N
    double n1 = 0.0;               ///< untagged bits surviving the pairing (lower bound)
    double e1ph = 0.0;             ///< their phase-flip rate (upper bound)
    double n_t = 0.0;              ///< surviving bits
    double e_t = 0.0;              ///< their bit-flip rate
    double n_vy_plus_n_yv = 0.0;   ///< raw vacuum-signal key counts entering the overhead term
    SecurityParams sec;
    double clock_hz = 1e9;         ///< effective pulse-pair frequency
    std::optional<double> eta_total;  ///< fibre transmittance for the capacity comparison
};

ValidationResult validate(const KeyRateInput& in);

struct KeyRateReport {
    double r_per_pulse = 0.0;
    double r_per_pulse_unclamped = 0.0;  ///< sign preserved for distance-limit scans
    double r_bits_per_second = 0.0;
    double r_tail = 0.0;
    double total_secure_bits = 0.0;      ///< floor(max(0, R) * N)
    double plob_bound = 0.0;
    double plob_margin = 0.0;            ///< r_per_pulse - plob_bound
    bool has_plob = false;
};

/// R = (1/N) { n1 [1 - H(e1ph)] - f n_t H(E_t) } - r_tail, clamped at zero.
KeyRateReport secure_key_rate(const KeyRateInput& in);

struct AnalysisOptions {
    EstimationMode mode = EstimationMode::Finite;
    double delta_slice = kDefaultDeltaSlice;
};

/// End-to-end result of the tally -> decoy -> pairing -> key-rate pipeline,
/// keeping every intermediate quantity for audit.
struct AnalysisReport {
    DecoyOutcome decoy;
    AoppResult aopp;
    double n_t_pre = 0.0;
    double e_t_pre = 0.0;
    KeyRateInput input;
    KeyRateReport keyrate;
    bool vacuous = false;
};

/// Runs the full pipeline on one tally. A vacuous yield bound short-circuits
/// to a zero-rate report with the flag set; missing phase-slice data with a
/// non-vacuous yield raises InsufficientDataError.
AnalysisReport analyze(const TallyRecord& tally, const SourceParams& src,
                       const SecurityParams& sec, const ChannelConfig& ch,
                       const AnalysisOptions& opts = {});

} // namespace tfqkd
