#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tfqkd {

/// Index of the three sources on each side: vacuum, decoy, signal.
enum class Source : int { Vacuum = 0, Decoy = 1, Signal = 2 };

inline constexpr int kNumSources = 3;

/// Intensities and send probabilities of the three sources, symmetric for
/// both parties. The vacuum intensity is fixed at zero.
struct SourceParams {
    double mu_v = 0.0;  ///< vacuum mean photon number, must stay 0
    double mu_x = 0.0;  ///< decoy mean photon number
    double mu_y = 0.0;  ///< signal mean photon number
    double p_v = 0.0;   ///< probability of choosing vacuum
    double p_x = 0.0;   ///< probability of choosing decoy
    double p_y = 0.0;   ///< probability of choosing signal

    double prob(Source s) const {
        switch (s) {
            case Source::Vacuum: return p_v;
            case Source::Decoy: return p_x;
            default: return p_y;
        }
    }
    double intensity(Source s) const {
        switch (s) {
            case Source::Vacuum: return mu_v;
            case Source::Decoy: return mu_x;
            default: return mu_y;
        }
    }
};

/// Failure-probability budget and error-correction inefficiency.
struct SecurityParams {
    double eps_chernoff = 1e-10;  ///< per-bound failure probability for interval estimates
    double eps_cor = 1e-10;       ///< error-correction failure probability
    double eps_pa = 1e-10;        ///< privacy-amplification failure probability
    double eps_hat = 1e-10;       ///< smooth-entropy chain-rule coefficient
    double f = 1.16;              ///< error-correction inefficiency, >= 1
};

/// Which part of the link a transmittance refers to.
enum class Side { A, B, Total };

/// Static description of the optical link: fibre spans, the measurement
/// node's internal loss, detection efficiencies and noise floors.
///
/// The node's internal loss applies per arm (each party's light traverses
/// the interferometer optics before detection); the two arm fields default
/// to the same value.
struct ChannelConfig {
    double length_a_km = 0.0;
    double length_b_km = 0.0;
    double atten_db_per_km = 0.16;
    double extra_loss_a_db = 0.0;  ///< internal loss seen by A's light
    double extra_loss_b_db = 0.0;  ///< internal loss seen by B's light
    std::array<double, 2> det_eff = {1.0, 1.0};  ///< per-detector efficiency
    std::array<double, 2> dark_hz = {0.0, 0.0};  ///< per-detector noise rate
    double window_eff = 1.0;       ///< time-window filtering efficiency on signal
    double dark_window_s = 2e-10;  ///< acceptance window for noise counts
    double clock_hz = 1e9;         ///< effective signal frequency
    double misalignment = 0.0;     ///< baseline interference error fraction

    void set_extra_loss_db(double db) { extra_loss_a_db = extra_loss_b_db = db; }

    /// Fibre-plus-internal dB for one arm, or pure-fibre dB for the total link.
    double path_db(Side side) const;
};

/// 10^(-dB/10).
double db_to_transmittance(double db);

/// Transmittance of one arm (fibre + internal loss) or of the whole fibre
/// (Side::Total, fibre only — this is the eta the repeaterless capacity
/// comparison uses).
double transmittance(const ChannelConfig& ch, Side side);

/// Raw integer counts of one session, per source pair. Index order is
/// [alice][bob] with 0=vacuum, 1=decoy, 2=signal. Rates are always derived
/// on demand; the statistics machinery operates on counts.
struct TallyRecord {
    std::uint64_t n_total = 0;  ///< total pulse pairs sent
    std::array<std::array<std::uint64_t, 3>, 3> sent{};
    std::array<std::array<std::uint64_t, 3>, 3> detected{};
    std::uint64_t valid_det1 = 0;  ///< single-click events on detector 1
    std::uint64_t valid_det2 = 0;  ///< single-click events on detector 2
    std::uint64_t ds_total = 0;    ///< decoy-decoy events inside the phase slice
    std::uint64_t ds_correct = 0;  ///< of those, clicks on the expected port

    std::uint64_t sent_at(Source a, Source b) const {
        return sent[static_cast<int>(a)][static_cast<int>(b)];
    }
    std::uint64_t detected_at(Source a, Source b) const {
        return detected[static_cast<int>(a)][static_cast<int>(b)];
    }
    std::uint64_t sum_sent() const;
    std::uint64_t sum_detected() const;

    /// Component-wise sum; sharded simulations merge with this.
    TallyRecord& merge(const TallyRecord& other);
};

/// Outcome of cross-field validation: either clean, or the list of violated
/// invariants in human-readable form.
struct ValidationResult {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string message() const;
};

ValidationResult validate(const SourceParams& src);
ValidationResult validate(const SecurityParams& sec);
ValidationResult validate(const ChannelConfig& ch);
ValidationResult validate(const TallyRecord& tally);
ValidationResult validate(const SourceParams& src, const SecurityParams& sec,
                          const ChannelConfig& ch);

/// Throws ValidationError when the result is not ok.
void require_valid(const ValidationResult& result);

} // namespace tfqkd
