#include "tfqkd/phase.hpp"

#include "tfqkd/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace tfqkd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Slice offsets of the four modulated relative phases.
constexpr std::array<double, 4> kSlicePhase = {0.0, std::numbers::pi / 2.0,
                                               std::numbers::pi,
                                               3.0 * std::numbers::pi / 2.0};

std::array<double, 4> expected_counts(double phi, double rate, double visibility) {
    std::array<double, 4> out{};
    for (int j = 0; j < 4; ++j)
        out[j] = rate * 0.5 * (1.0 + visibility * std::cos(phi + kSlicePhase[j]));
    return out;
}

// Argument of the complex slice contrast; exact for noiseless counts.
double phase_from_counts(const std::array<double, 4>& counts) {
    const double re = counts[0] - counts[2];
    const double im = counts[3] - counts[1];
    return std::atan2(im, re);
}

bool usable(const std::array<double, 4>& counts) {
    double sum = 0.0;
    for (double c : counts) sum += c;
    return sum > 0.0;
}

} // namespace

double wrap_angle(double rad) {
    double w = std::remainder(rad, kTwoPi);
    if (w <= -std::numbers::pi) w += kTwoPi;
    return w;
}

PhaseTrace phase_walk(const PhaseModel& model, double duration_s, std::uint64_t seed) {
    if (!(duration_s > 0.0)) throw DomainError("duration must be positive");
    if (model.diffusion_rad2_per_s < 0.0) throw DomainError("diffusion must be >= 0");

    const std::size_t blocks =
        static_cast<std::size_t>(std::ceil(duration_s / model.est_window_s));
    PhaseTrace trace;
    trace.dt = model.est_window_s;
    trace.phi1.resize(blocks);
    trace.phi2.resize(blocks);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, std::sqrt(model.diffusion_rad2_per_s *
                                                         model.est_window_s));
    const double ratio = model.wavelength_ratio();
    double phi = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        trace.phi1[b] = phi;
        trace.phi2[b] = phi * ratio;
        phi += model.diffusion_rad2_per_s > 0.0 ? step(rng) : 0.0;
    }
    return trace;
}

std::vector<ReferenceBlock> sample_reference_counts(const PhaseTrace& trace,
                                                    const PhaseModel& model,
                                                    std::uint64_t seed,
                                                    bool poisson) {
    std::mt19937_64 rng(seed);
    const std::size_t refresh_every = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(model.refresh_interval_s /
                                                 model.est_window_s)));

    std::vector<ReferenceBlock> blocks(trace.phi1.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto strong =
            expected_counts(trace.phi1[b], model.reference_rate, model.visibility);
        for (int j = 0; j < 4; ++j) {
            blocks[b].strong[j] =
                poisson && strong[j] > 0.0
                    ? static_cast<double>(std::poisson_distribution<long long>(strong[j])(rng))
                    : strong[j];
        }
        if (b % refresh_every == 0) {
            blocks[b].has_dim = true;
            const auto dim = expected_counts(trace.phi2[b], model.dim_reference_rate,
                                             model.visibility);
            for (int j = 0; j < 4; ++j) {
                blocks[b].dim[j] =
                    poisson && dim[j] > 0.0
                        ? static_cast<double>(std::poisson_distribution<long long>(dim[j])(rng))
                        : dim[j];
            }
        }
    }
    return blocks;
}

PhaseEstimate estimate_phase(const std::vector<ReferenceBlock>& blocks,
                             const PhaseModel& model) {
    PhaseEstimate out;
    out.phi2_hat.resize(blocks.size(), 0.0);
    out.stale.resize(blocks.size(), 0);
    if (blocks.empty()) return out;

    const double ratio = model.wavelength_ratio();
    double unwrapped1 = 0.0;     // accumulated lambda1 drift since start
    double prev_wrapped = 0.0;
    bool have_prev = false;
    double anchor_unwrapped = 0.0;
    double anchor_phi2 = 0.0;
    bool anchored = false;

    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (usable(blocks[b].strong)) {
            const double wrapped = phase_from_counts(blocks[b].strong);
            if (have_prev) {
                unwrapped1 += wrap_angle(wrapped - prev_wrapped);
            }
            prev_wrapped = wrapped;
            have_prev = true;
        } else {
            out.stale[b] = 1;  // hold the last drift value
        }

        if (blocks[b].has_dim && usable(blocks[b].dim)) {
            anchor_phi2 = phase_from_counts(blocks[b].dim);
            anchor_unwrapped = unwrapped1;
            anchored = true;
        }

        const double drift2 = ratio * (unwrapped1 - anchor_unwrapped);
        out.phi2_hat[b] = anchored ? anchor_phi2 + drift2 : ratio * unwrapped1;
    }
    return out;
}

ResidualReport phase_residuals(const PhaseTrace& truth, const PhaseEstimate& estimate) {
    if (truth.phi2.size() != estimate.phi2_hat.size())
        throw ValidationError("trace and estimate lengths differ");

    ResidualReport out;
    out.residual.resize(truth.phi2.size());
    double sq = 0.0;
    double cs = 0.0;
    for (std::size_t b = 0; b < truth.phi2.size(); ++b) {
        const double r = wrap_angle(truth.phi2[b] - estimate.phi2_hat[b]);
        out.residual[b] = r;
        sq += r * r;
        cs += std::cos(r);
    }
    if (!out.residual.empty()) {
        out.rms_rad = std::sqrt(sq / static_cast<double>(out.residual.size()));
        out.mean_cos = cs / static_cast<double>(out.residual.size());
    }
    return out;
}

} // namespace tfqkd
