#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace tfqkd {

/// Interferometric drift model and reference-signal budget. The drift is a
/// random walk in optical path length shared by both wavelengths, so the two
/// phases stay locked at the wavelength ratio.
struct PhaseModel {
    double diffusion_rad2_per_s = 10.0;  ///< phase variance growth at lambda1
    double lambda1_nm = 1548.51;         ///< reference wavelength
    double lambda2_nm = 1550.12;         ///< signal wavelength
    double refresh_interval_s = 0.5;     ///< dim-reference offset refresh period
    double est_window_s = 1e-3;          ///< drift-estimation block length
    double reference_rate = 25.0;        ///< strong-ref detections per slice per block
    double dim_reference_rate = 25.0;    ///< dim-ref detections per slice at a refresh
    double visibility = 1.0;             ///< interference contrast of the references
    double expected_residual_rms = 0.20; ///< residual proxy used by expectation-mode tallies

    double wavelength_ratio() const { return lambda1_nm / lambda2_nm; }
};

/// Unwrapped truth phases at both wavelengths on the block grid.
struct PhaseTrace {
    double dt = 1e-3;
    std::vector<double> phi1;
    std::vector<double> phi2;
};

/// Wiener walk in path length sampled every est_window_s.
PhaseTrace phase_walk(const PhaseModel& model, double duration_s, std::uint64_t seed);

/// Detected reference counts of one estimation block, one entry per relative
/// phase slice {0, pi/2, pi, 3pi/2}. Counts are doubles so that noiseless
/// expected-count traces can be fed through the same estimator.
struct ReferenceBlock {
    std::array<double, 4> strong{};
    bool has_dim = false;
    std::array<double, 4> dim{};
};

/// Samples reference detections from a truth trace: strong-reference counts
/// follow the lambda1 phase every block, dim-reference counts follow the
/// lambda2 phase at every refresh boundary. poisson=false emits the exact
/// expected counts.
std::vector<ReferenceBlock> sample_reference_counts(const PhaseTrace& trace,
                                                    const PhaseModel& model,
                                                    std::uint64_t seed,
                                                    bool poisson = true);

struct PhaseEstimate {
    std::vector<double> phi2_hat;     ///< estimated signal-band phase per block
    std::vector<std::uint8_t> stale;  ///< block had no usable reference counts
};

/// Reconstructs the signal-band phase: per-block argmax of the four-slice
/// strong-reference contrast, unwrapped across blocks, scaled by the
/// wavelength ratio, and re-anchored at each dim-reference refresh.
/// Empty blocks hold the previous estimate and are flagged stale.
PhaseEstimate estimate_phase(const std::vector<ReferenceBlock>& blocks,
                             const PhaseModel& model);

struct ResidualReport {
    double rms_rad = 0.0;
    double mean_cos = 1.0;
    std::vector<double> residual;  ///< wrapped to (-pi, pi]

    /// X-basis error contribution of the residual plus a constant
    /// misalignment floor.
    double implied_qber(double misalignment) const {
        return 0.5 * (1.0 - mean_cos) + misalignment;
    }
};

ResidualReport phase_residuals(const PhaseTrace& truth, const PhaseEstimate& estimate);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double rad);

} // namespace tfqkd
