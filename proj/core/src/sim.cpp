#include "tfqkd/sim.hpp"

#include "tfqkd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace tfqkd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kPhaseAvgPoints = 128;  // trapezoid on the full period
constexpr int kBandAvgPoints = 17;    // odd-count uniform average over the band

double dark_prob(const ChannelConfig& ch, int det) {
    return std::min(1.0, ch.dark_hz[det] * ch.dark_window_s);
}

// Single-photon interference visibility of the two arms; detector
// efficiencies act after the port choice and are left out on purpose.
double arm_visibility(const ChannelConfig& ch) {
    const double ta = transmittance(ch, Side::A);
    const double tb = transmittance(ch, Side::B);
    if (ta + tb <= 0.0) return 0.0;
    return 2.0 * std::sqrt(ta * tb) / (ta + tb);
}

// Truth phase-flip probability of a delocalized single photon under a
// residual tracking error r and a constant misalignment floor m.
double single_photon_error(double residual, double visibility, double misalignment) {
    return 0.5 * (1.0 - (1.0 - 2.0 * misalignment) * visibility * std::cos(residual));
}

SinglesProbabilities mix_misalignment(SinglesProbabilities s, double m) {
    return SinglesProbabilities{(1.0 - m) * s.det1 + m * s.det2,
                                (1.0 - m) * s.det2 + m * s.det1};
}

SinglesProbabilities singles_from_clicks(const ClickProbabilities& p) {
    return SinglesProbabilities{p.det1 * (1.0 - p.det2), p.det2 * (1.0 - p.det1)};
}

// Deterministic helpers around the standard distributions. Binomial draws
// with tiny success probability go through the Poisson limit, which the
// library handles at any n.
std::uint64_t draw_binomial(std::mt19937_64& rng, std::uint64_t n, double p) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const double mean = static_cast<double>(n) * p;
    if (p < 1e-7 && mean < 1e6) {
        std::poisson_distribution<std::uint64_t> pois(mean);
        const std::uint64_t draw = pois(rng);
        return std::min(draw, n);
    }
    std::binomial_distribution<std::uint64_t> bin(n, p);
    return bin(rng);
}

// Sequential conditional draw of (count at det1, count at det2) given the two
// single-click probabilities.
std::pair<std::uint64_t, std::uint64_t> draw_singles(std::mt19937_64& rng,
                                                     std::uint64_t n,
                                                     const SinglesProbabilities& s) {
    const std::uint64_t d1 = draw_binomial(rng, n, s.det1);
    const double rest = 1.0 - s.det1;
    const double p2 = rest > 0.0 ? std::min(1.0, s.det2 / rest) : 0.0;
    const std::uint64_t d2 = draw_binomial(rng, n - d1, p2);
    return {d1, d2};
}

} // namespace

ValidationResult validate(const FrameSchedule& schedule) {
    ValidationResult r;
    auto frac_ok = [](double f) { return f > 0.0 && f <= 1.0; };
    if (!(schedule.raw_clock_hz > 0.0)) r.violations.emplace_back("raw clock not positive");
    if (!frac_ok(schedule.frame_quantum_frac))
        r.violations.emplace_back("frame_quantum_frac outside (0,1]");
    if (!frac_ok(schedule.period_quantum_frac))
        r.violations.emplace_back("period_quantum_frac outside (0,1]");
    if (!frac_ok(schedule.guard_eff)) r.violations.emplace_back("guard_eff outside (0,1]");
    return r;
}

ValidationResult validate(const SessionConfig& cfg) {
    ValidationResult r = validate(cfg.channel);
    ValidationResult rs = validate(cfg.schedule);
    r.violations.insert(r.violations.end(), rs.violations.begin(), rs.violations.end());
    if (cfg.n_pairs < 1) r.violations.emplace_back("n_pairs must be >= 1");
    if (!(cfg.delta_slice > 0.0 && cfg.delta_slice < std::numbers::pi))
        r.violations.emplace_back("delta_slice outside (0, pi)");
    return r;
}

ClickProbabilities click_probabilities(double mu_a, double mu_b, double eta_a,
                                       double eta_b, double delta,
                                       const ChannelConfig& ch) {
    const double ia = eta_a * mu_a;
    const double ib = eta_b * mu_b;
    const double cross = 2.0 * std::sqrt(ia * ib) * std::cos(delta);
    const double i_plus = 0.5 * (ia + ib + cross);
    const double i_minus = 0.5 * (ia + ib - cross);

    ClickProbabilities out;
    out.det1 = 1.0 - (1.0 - dark_prob(ch, 0)) *
                         std::exp(-i_plus * ch.det_eff[0] * ch.window_eff);
    out.det2 = 1.0 - (1.0 - dark_prob(ch, 1)) *
                         std::exp(-i_minus * ch.det_eff[1] * ch.window_eff);
    return out;
}

SinglesProbabilities singles_at(double mu_a, double mu_b, const ChannelConfig& ch,
                                double delta) {
    const double eta_a = transmittance(ch, Side::A);
    const double eta_b = transmittance(ch, Side::B);
    const auto clicks = click_probabilities(mu_a, mu_b, eta_a, eta_b, delta, ch);
    return mix_misalignment(singles_from_clicks(clicks), ch.misalignment);
}

SinglesProbabilities singles_phase_avg(double mu_a, double mu_b,
                                       const ChannelConfig& ch) {
    SinglesProbabilities sum;
    for (int i = 0; i < kPhaseAvgPoints; ++i) {
        const double delta = kTwoPi * (i + 0.5) / kPhaseAvgPoints;
        const auto s = singles_at(mu_a, mu_b, ch, delta);
        sum.det1 += s.det1;
        sum.det2 += s.det2;
    }
    sum.det1 /= kPhaseAvgPoints;
    sum.det2 /= kPhaseAvgPoints;
    return sum;
}

SinglesProbabilities singles_in_band(double mu_x, const ChannelConfig& ch,
                                     double delta_slice, int band, double residual) {
    const double center = band == 0 ? 0.0 : std::numbers::pi;
    SinglesProbabilities sum;
    for (int i = 0; i < kBandAvgPoints; ++i) {
        const double announced =
            center - 0.5 * delta_slice +
            delta_slice * (i + 0.5) / kBandAvgPoints;
        const auto s = singles_at(mu_x, mu_x, ch, announced + residual);
        sum.det1 += s.det1;
        sum.det2 += s.det2;
    }
    sum.det1 /= kBandAvgPoints;
    sum.det2 /= kBandAvgPoints;
    return sum;
}

namespace {

struct PhasePipeline {
    std::vector<double> residual;  // per block
    double rms = 0.0;
};

PhasePipeline run_phase_pipeline(const SessionConfig& cfg, std::size_t blocks,
                                 std::uint64_t seed) {
    PhasePipeline out;
    out.residual.assign(std::max<std::size_t>(blocks, 1), 0.0);
    if (!cfg.track_phase) return out;

    const double duration =
        static_cast<double>(blocks) * cfg.phase.est_window_s;
    const PhaseTrace trace = phase_walk(cfg.phase, duration, seed);
    const auto counts = sample_reference_counts(trace, cfg.phase, seed ^ 0x9e3779b97f4a7c15ULL);
    const PhaseEstimate estimate = estimate_phase(counts, cfg.phase);
    const ResidualReport report = phase_residuals(trace, estimate);
    for (std::size_t b = 0; b < out.residual.size() && b < report.residual.size(); ++b)
        out.residual[b] = report.residual[b];
    out.rms = report.rms_rad;
    return out;
}

class AggregateSimulator {
public:
    AggregateSimulator(const SessionConfig& cfg, std::mt19937_64& rng)
        : cfg_(cfg), rng_(rng) {}

    void run(SessionTruth& truth) {
        const double eff_clock = cfg_.schedule.effective_clock_hz();
        const double duration = static_cast<double>(cfg_.n_pairs) / eff_clock;
        const std::size_t blocks = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(duration / cfg_.phase.est_window_s)));
        const PhasePipeline phase = run_phase_pipeline(cfg_, blocks, cfg_.seed);
        truth.residual_rms = phase.rms;

        const double vis = arm_visibility(cfg_.channel);
        double err_sum = 0.0;
        for (double r : phase.residual)
            err_sum += single_photon_error(r, vis, cfg_.channel.misalignment);
        truth.true_e1ph = err_sum / static_cast<double>(phase.residual.size());

        // Window counts per source pair.
        std::array<std::array<std::uint64_t, 3>, 3> counts{};
        std::uint64_t remaining = cfg_.n_pairs;
        double prob_left = 1.0;
        for (int a = 0; a < 3 && remaining > 0; ++a) {
            for (int b = 0; b < 3; ++b) {
                if (a == 2 && b == 2) {
                    counts[a][b] = remaining;
                    remaining = 0;
                    break;
                }
                const double p = cfg_.source.prob(static_cast<Source>(a)) *
                                 cfg_.source.prob(static_cast<Source>(b));
                const double cond = prob_left > 0.0 ? std::min(1.0, p / prob_left) : 0.0;
                const std::uint64_t n = draw_binomial(rng_, remaining, cond);
                counts[a][b] = n;
                remaining -= n;
                prob_left -= p;
            }
        }
        truth.tally.n_total = cfg_.n_pairs;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) truth.tally.sent[a][b] = counts[a][b];

        sample_dark_only(truth, counts[0][0]);
        sample_single_sender(truth, Source::Decoy, /*alice=*/true, counts[1][0]);
        sample_single_sender(truth, Source::Decoy, /*alice=*/false, counts[0][1]);
        sample_signal_with_truth(truth, /*alice=*/true, counts[2][0]);
        sample_signal_with_truth(truth, /*alice=*/false, counts[0][2]);
        sample_phase_averaged(truth, Source::Decoy, Source::Signal, counts[1][2]);
        sample_phase_averaged(truth, Source::Signal, Source::Decoy, counts[2][1]);
        sample_phase_averaged(truth, Source::Signal, Source::Signal, counts[2][2]);
        sample_decoy_decoy(truth, counts[1][1], phase.residual);

        if (truth.tally.ds_total > 0) {
            truth.ex = static_cast<double>(truth.tally.ds_total - truth.tally.ds_correct) /
                       static_cast<double>(truth.tally.ds_total);
        }
    }

private:
    void book(SessionTruth& truth, Source a, Source b, std::uint64_t d1,
              std::uint64_t d2) {
        truth.tally.detected[static_cast<int>(a)][static_cast<int>(b)] += d1 + d2;
        truth.tally.valid_det1 += d1;
        truth.tally.valid_det2 += d2;
    }

    void sample_dark_only(SessionTruth& truth, std::uint64_t n) {
        const double pd1 = dark_prob(cfg_.channel, 0);
        const double pd2 = dark_prob(cfg_.channel, 1);
        SinglesProbabilities s{pd1 * (1.0 - pd2), pd2 * (1.0 - pd1)};
        const auto [d1, d2] = draw_singles(rng_, n, s);
        book(truth, Source::Vacuum, Source::Vacuum, d1, d2);
    }

    void sample_single_sender(SessionTruth& truth, Source src, bool alice,
                              std::uint64_t n) {
        const double mu = cfg_.source.intensity(src);
        const auto s = alice ? singles_at(mu, 0.0, cfg_.channel, 0.0)
                             : singles_at(0.0, mu, cfg_.channel, 0.0);
        const auto [d1, d2] = draw_singles(rng_, n, s);
        if (alice)
            book(truth, src, Source::Vacuum, d1, d2);
        else
            book(truth, Source::Vacuum, src, d1, d2);
    }

    // Signal-vacuum windows carry the untagged truth: the emission photon
    // number is sampled explicitly and the single-photon class tallied.
    void sample_signal_with_truth(SessionTruth& truth, bool alice, std::uint64_t n) {
        const double mu = cfg_.source.mu_y;
        const double eta_arm =
            transmittance(cfg_.channel, alice ? Side::A : Side::B);
        const double t1 = eta_arm * 0.5 * cfg_.channel.det_eff[0] * cfg_.channel.window_eff;
        const double t2 = eta_arm * 0.5 * cfg_.channel.det_eff[1] * cfg_.channel.window_eff;
        const double pd1 = dark_prob(cfg_.channel, 0);
        const double pd2 = dark_prob(cfg_.channel, 1);

        std::uint64_t remaining = n;
        double prob_left = 1.0;
        double pk = std::exp(-mu);  // Poisson(k=0)
        std::uint64_t total_d1 = 0, total_d2 = 0, untagged = 0;
        for (int k = 0; remaining > 0 && prob_left > 1e-18; ++k) {
            const double cond = std::min(1.0, pk / prob_left);
            const std::uint64_t nk = draw_binomial(rng_, remaining, cond);
            if (nk > 0) {
                const double no1 = (1.0 - pd1) * std::pow(1.0 - t1, k);
                const double no2 = (1.0 - pd2) * std::pow(1.0 - t2, k);
                const double none =
                    (1.0 - pd1) * (1.0 - pd2) * std::pow(1.0 - t1 - t2, k);
                SinglesProbabilities s{std::max(0.0, no2 - none),
                                       std::max(0.0, no1 - none)};
                const auto [d1, d2] = draw_singles(rng_, nk, s);
                total_d1 += d1;
                total_d2 += d2;
                if (k == 1) untagged += d1 + d2;
            }
            remaining -= nk;
            prob_left -= pk;
            pk *= mu / (k + 1);
        }
        if (alice) {
            book(truth, Source::Signal, Source::Vacuum, total_d1, total_d2);
            truth.true_untagged_yv += untagged;
        } else {
            book(truth, Source::Vacuum, Source::Signal, total_d1, total_d2);
            truth.true_untagged_vy += untagged;
        }
    }

    void sample_phase_averaged(SessionTruth& truth, Source a, Source b,
                               std::uint64_t n) {
        const auto s = singles_phase_avg(cfg_.source.intensity(a),
                                         cfg_.source.intensity(b), cfg_.channel);
        const auto [d1, d2] = draw_singles(rng_, n, s);
        book(truth, a, b, d1, d2);
    }

    void sample_decoy_decoy(SessionTruth& truth, std::uint64_t n,
                            const std::vector<double>& residual) {
        const double band_frac = cfg_.delta_slice / kTwoPi;  // one band
        const std::uint64_t n_band0 = draw_binomial(rng_, n, band_frac);
        const std::uint64_t n_bandpi =
            draw_binomial(rng_, n - n_band0,
                          std::min(1.0, band_frac / (1.0 - band_frac)));
        const std::uint64_t n_out = n - n_band0 - n_bandpi;

        const double mu = cfg_.source.mu_x;
        const auto s_all = singles_phase_avg(mu, mu, cfg_.channel);

        const std::size_t blocks = residual.size();
        std::uint64_t left0 = n_band0, leftpi = n_bandpi, leftout = n_out;
        std::uint64_t d1 = 0, d2 = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            const std::uint64_t share = blocks - b;
            const std::uint64_t m0 = draw_binomial(rng_, left0, 1.0 / share);
            const std::uint64_t mpi = draw_binomial(rng_, leftpi, 1.0 / share);
            const std::uint64_t mout = draw_binomial(rng_, leftout, 1.0 / share);
            left0 -= m0;
            leftpi -= mpi;
            leftout -= mout;

            const auto s0 = singles_in_band(mu, cfg_.channel, cfg_.delta_slice, 0,
                                            residual[b]);
            const auto spi = singles_in_band(mu, cfg_.channel, cfg_.delta_slice, 1,
                                             residual[b]);
            // Complement average keeps the overall singles rate exact.
            const double denom = kTwoPi - 2.0 * cfg_.delta_slice;
            SinglesProbabilities sout{
                std::max(0.0, (kTwoPi * s_all.det1 -
                               cfg_.delta_slice * (s0.det1 + spi.det1)) / denom),
                std::max(0.0, (kTwoPi * s_all.det2 -
                               cfg_.delta_slice * (s0.det2 + spi.det2)) / denom)};

            const auto [b0_1, b0_2] = draw_singles(rng_, m0, s0);
            const auto [bpi_1, bpi_2] = draw_singles(rng_, mpi, spi);
            const auto [out_1, out_2] = draw_singles(rng_, mout, sout);
            d1 += b0_1 + bpi_1 + out_1;
            d2 += b0_2 + bpi_2 + out_2;
            truth.tally.ds_total += b0_1 + b0_2 + bpi_1 + bpi_2;
            truth.tally.ds_correct += b0_1 + bpi_2;  // expected port per band
        }
        book(truth, Source::Decoy, Source::Decoy, d1, d2);
    }

    const SessionConfig& cfg_;
    std::mt19937_64& rng_;
};

class PerWindowSimulator {
public:
    PerWindowSimulator(const SessionConfig& cfg, std::mt19937_64& rng)
        : cfg_(cfg), rng_(rng) {}

    void run(SessionTruth& truth) {
        const double eff_clock = cfg_.schedule.effective_clock_hz();
        const double windows_per_block = eff_clock * cfg_.phase.est_window_s;
        const std::size_t blocks = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::ceil(static_cast<double>(cfg_.n_pairs) / windows_per_block)));
        const PhasePipeline phase = run_phase_pipeline(cfg_, blocks, cfg_.seed);
        truth.residual_rms = phase.rms;

        const double vis = arm_visibility(cfg_.channel);
        double err_sum = 0.0;
        for (double r : phase.residual)
            err_sum += single_photon_error(r, vis, cfg_.channel.misalignment);
        truth.true_e1ph = err_sum / static_cast<double>(phase.residual.size());

        truth.tally.n_total = cfg_.n_pairs;
        truth.window_log.reserve(cfg_.n_pairs);

        const double eta_a = transmittance(cfg_.channel, Side::A);
        const double eta_b = transmittance(cfg_.channel, Side::B);
        const double pd1 = dark_prob(cfg_.channel, 0);
        const double pd2 = dark_prob(cfg_.channel, 1);

        std::uniform_real_distribution<double> uni(0.0, 1.0);
        const double pv = cfg_.source.p_v;
        const double px = cfg_.source.p_x;

        for (std::uint64_t w = 0; w < cfg_.n_pairs; ++w) {
            const std::size_t block = std::min<std::size_t>(
                static_cast<std::size_t>(static_cast<double>(w) / windows_per_block),
                phase.residual.size() - 1);
            const double resid = phase.residual[block];
            const double e_block =
                single_photon_error(resid, vis, cfg_.channel.misalignment);

            const Source a = draw_source(uni, pv, px);
            const Source b = draw_source(uni, pv, px);
            const double mu_a = cfg_.source.intensity(a);
            const double mu_b = cfg_.source.intensity(b);

            WindowRecord rec;
            rec.alice_source = static_cast<std::uint8_t>(a);
            rec.bob_source = static_cast<std::uint8_t>(b);
            truth.tally.sent[static_cast<int>(a)][static_cast<int>(b)]++;

            bool click1 = false, click2 = false, untagged = false;
            const bool z_single_sender =
                (a == Source::Vacuum && b == Source::Signal) ||
                (a == Source::Signal && b == Source::Vacuum);

            double announced = 0.0;
            if (z_single_sender) {
                // Photon-number sampling keeps the untagged truth exact and
                // matches the coherent click model in distribution.
                const double eta_arm = (a == Source::Signal) ? eta_a : eta_b;
                const double t1 =
                    eta_arm * 0.5 * cfg_.channel.det_eff[0] * cfg_.channel.window_eff;
                const double t2 =
                    eta_arm * 0.5 * cfg_.channel.det_eff[1] * cfg_.channel.window_eff;
                std::poisson_distribution<int> pois(cfg_.source.mu_y);
                const int k = pois(rng_);
                bool sig1 = false, sig2 = false;
                for (int i = 0; i < k; ++i) {
                    const double u = uni(rng_);
                    if (u < t1)
                        sig1 = true;
                    else if (u < t1 + t2)
                        sig2 = true;
                }
                click1 = sig1 || uni(rng_) < pd1;
                click2 = sig2 || uni(rng_) < pd2;
                untagged = (k == 1);
            } else {
                announced = kTwoPi * uni(rng_);
                const auto p = click_probabilities(mu_a, mu_b, eta_a, eta_b,
                                                   announced + resid, cfg_.channel);
                click1 = uni(rng_) < p.det1;
                click2 = uni(rng_) < p.det2;
                if (mu_a > 0.0 && mu_b > 0.0 && uni(rng_) < cfg_.channel.misalignment)
                    std::swap(click1, click2);
            }

            const bool heralded = click1 != click2;
            if (click1) rec.flags |= WindowRecord::kClick1;
            if (click2) rec.flags |= WindowRecord::kClick2;

            if (heralded) {
                truth.tally.detected[static_cast<int>(a)][static_cast<int>(b)]++;
                truth.tally.valid_det1 += click1 ? 1 : 0;
                truth.tally.valid_det2 += click2 ? 1 : 0;

                const bool z_window = (a != Source::Decoy) && (b != Source::Decoy);
                if (z_window) {
                    truth.keys.alice_bits.push_back(a == Source::Signal ? 1 : 0);
                    truth.keys.bob_bits.push_back(b == Source::Vacuum ? 1 : 0);
                    bool flip = false;
                    if (z_single_sender && untagged) {
                        rec.flags |= WindowRecord::kUntagged;
                        flip = uni(rng_) < e_block;
                        if (flip) rec.flags |= WindowRecord::kPhaseFlip;
                        if (a == Source::Signal)
                            truth.true_untagged_yv++;
                        else
                            truth.true_untagged_vy++;
                    }
                    truth.keys.untagged_mask.push_back(
                        (rec.flags & WindowRecord::kUntagged) ? 1 : 0);
                    truth.phase_flip.push_back(flip ? 1 : 0);
                }

                if (a == Source::Decoy && b == Source::Decoy) {
                    const double wrapped = wrap_angle(announced);
                    const bool in0 = std::abs(wrapped) <= 0.5 * cfg_.delta_slice;
                    const bool inpi = std::abs(std::abs(wrapped) - std::numbers::pi) <=
                                      0.5 * cfg_.delta_slice;
                    if (in0 || inpi) {
                        rec.flags |= in0 ? WindowRecord::kInBand0 : WindowRecord::kInBandPi;
                        truth.tally.ds_total++;
                        const bool correct = in0 ? click1 : click2;
                        if (correct) truth.tally.ds_correct++;
                    }
                }
            }
            truth.window_log.push_back(rec);
        }

        if (truth.tally.ds_total > 0) {
            truth.ex = static_cast<double>(truth.tally.ds_total - truth.tally.ds_correct) /
                       static_cast<double>(truth.tally.ds_total);
        }
    }

private:
    Source draw_source(std::uniform_real_distribution<double>& uni, double pv,
                       double px) {
        const double u = uni(rng_);
        if (u < pv) return Source::Vacuum;
        if (u < pv + px) return Source::Decoy;
        return Source::Signal;
    }

    const SessionConfig& cfg_;
    std::mt19937_64& rng_;
};

} // namespace

SessionTruth simulate_session(const SessionConfig& cfg) {
    require_valid(validate(cfg));
    std::mt19937_64 rng(cfg.seed);
    SessionTruth truth;
    if (cfg.per_window) {
        PerWindowSimulator sim(cfg, rng);
        sim.run(truth);
    } else {
        AggregateSimulator sim(cfg, rng);
        sim.run(truth);
    }
    return truth;
}

TallyRecord recount_tally(const std::vector<WindowRecord>& log) {
    TallyRecord tally;
    tally.n_total = log.size();
    for (const WindowRecord& rec : log) {
        tally.sent[rec.alice_source][rec.bob_source]++;
        const bool click1 = rec.flags & WindowRecord::kClick1;
        const bool click2 = rec.flags & WindowRecord::kClick2;
        if (click1 == click2) continue;
        tally.detected[rec.alice_source][rec.bob_source]++;
        tally.valid_det1 += click1 ? 1 : 0;
        tally.valid_det2 += click2 ? 1 : 0;
        if (rec.flags & (WindowRecord::kInBand0 | WindowRecord::kInBandPi)) {
            tally.ds_total++;
            const bool correct =
                (rec.flags & WindowRecord::kInBand0) ? click1 : click2;
            if (correct) tally.ds_correct++;
        }
    }
    return tally;
}

} // namespace tfqkd
