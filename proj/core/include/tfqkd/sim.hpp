#pragma once

#include "tfqkd/aopp.hpp"
#include "tfqkd/keyrate.hpp"
#include "tfqkd/phase.hpp"
#include "tfqkd/types.hpp"

#include <cstdint>
#include <vector>

namespace tfqkd {

/// Time-multiplexing layout of reference and quantum signals. The effective
/// pulse-pair frequency is the raw clock scaled by the quantum duty cycles
/// and a guard factor for windows dropped near the strong reference.
struct FrameSchedule {
    double raw_clock_hz = 1e9;
    double frame_quantum_frac = 0.6;   ///< quantum share of each frame
    double period_quantum_frac = 0.6;  ///< quantum share of each pulse period
    double guard_eff = 0.975;

    double effective_clock_hz() const {
        return raw_clock_hz * frame_quantum_frac * period_quantum_frac * guard_eff;
    }
};

ValidationResult validate(const FrameSchedule& schedule);

struct SessionConfig {
    SourceParams source;
    ChannelConfig channel;
    std::uint64_t n_pairs = 0;
    PhaseModel phase;
    FrameSchedule schedule;
    double delta_slice = kDefaultDeltaSlice;
    std::uint64_t seed = 1;
    bool per_window = false;   ///< materialize raw keys and the window log
    bool track_phase = true;   ///< run the reference/estimation pipeline
};

ValidationResult validate(const SessionConfig& cfg);

/// One effective window of the per-window log. Flags pack the click pattern
/// and truth annotations so the tally can be recounted from the log.
struct WindowRecord {
    std::uint8_t alice_source = 0;
    std::uint8_t bob_source = 0;
    std::uint8_t flags = 0;

    static constexpr std::uint8_t kClick1 = 0x01;
    static constexpr std::uint8_t kClick2 = 0x02;
    static constexpr std::uint8_t kInBand0 = 0x04;
    static constexpr std::uint8_t kInBandPi = 0x08;
    static constexpr std::uint8_t kUntagged = 0x10;
    static constexpr std::uint8_t kPhaseFlip = 0x20;
};

struct SessionTruth {
    TallyRecord tally;
    RawKeyPair keys;                       ///< per-window mode only
    std::vector<std::uint8_t> phase_flip;  ///< truth flags parallel to the key bits
    std::uint64_t true_untagged_vy = 0;
    std::uint64_t true_untagged_yv = 0;
    double true_e1ph = 0.0;    ///< analytic single-photon error rate of the session
    double residual_rms = 0.0;
    double ex = 0.0;           ///< observed slice error rate
    std::vector<WindowRecord> window_log;  ///< per-window mode only
};

/// Marginal click probability of each detector for one pulse pair at
/// relative phase delta. Port intensities follow the balanced-splitter
/// interference of the two attenuated fields; each detector sees its port
/// scaled by detector and window efficiency on top of its dark floor.
struct ClickProbabilities {
    double det1 = 0.0;
    double det2 = 0.0;
};
ClickProbabilities click_probabilities(double mu_a, double mu_b, double eta_a,
                                       double eta_b, double delta,
                                       const ChannelConfig& ch);

/// Single-click (heralding) probabilities per detector.
struct SinglesProbabilities {
    double det1 = 0.0;
    double det2 = 0.0;
    double total() const { return det1 + det2; }
};

/// Singles at a fixed relative phase, after misalignment port mixing.
SinglesProbabilities singles_at(double mu_a, double mu_b, const ChannelConfig& ch,
                                double delta);

/// Singles averaged over a uniform relative phase.
SinglesProbabilities singles_phase_avg(double mu_a, double mu_b,
                                       const ChannelConfig& ch);

/// Singles averaged over announced phases inside the post-selected band
/// around 0 (band=0) or pi (band=1), with the actual interference phase
/// offset by the residual tracking error.
SinglesProbabilities singles_in_band(double mu_x, const ChannelConfig& ch,
                                     double delta_slice, int band, double residual);

/// Monte Carlo session. Aggregate mode draws per-class counts directly and
/// scales to any n_pairs; per-window mode materializes the raw keys, the
/// untagged/phase-flip truth masks and a full window log. Deterministic in
/// the seed.
SessionTruth simulate_session(const SessionConfig& cfg);

/// Rebuilds the tally from a per-window log (recount check).
TallyRecord recount_tally(const std::vector<WindowRecord>& log);

} // namespace tfqkd
