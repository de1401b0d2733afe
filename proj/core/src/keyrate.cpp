#include "tfqkd/keyrate.hpp"

#include "tfqkd/errors.hpp"

#include <cmath>

namespace tfqkd {

double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("binary_entropy argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double r_tail(double n_total, double n_vy_plus_n_yv, const SecurityParams& sec) {
    require_valid(validate(sec));
    if (n_total <= 0.0) throw DomainError("n_total must be positive");
    if (n_vy_plus_n_yv < 1.0)
        throw DomainError("n_vy + n_yv must be at least 1 for the overhead term");
    const double bits = 2.0 * std::log2(2.0 / sec.eps_cor) +
                        4.0 * std::log2(1.0 / (std::numbers::sqrt2 * sec.eps_pa * sec.eps_hat)) +
                        2.0 * std::log2(n_vy_plus_n_yv);
    return bits / n_total;
}

double plob(double eta) {
    if (!(eta >= 0.0 && eta < 1.0))
        throw DomainError("plob requires eta in [0,1); the bound diverges at 1");
    return -std::log2(1.0 - eta);
}

ValidationResult validate(const KeyRateInput& in) {
    ValidationResult r = validate(in.sec);
    auto fail = [&](const char* what) { r.violations.emplace_back(what); };
    if (!(in.n_total > 0.0)) fail("n_total must be positive");
    if (in.n1 < 0.0 || in.n_t < 0.0) fail("counts must be non-negative");
    if (in.n1 > in.n_t) fail("n1 exceeds n_t");
    if (in.n_t > in.n_total) fail("n_t exceeds n_total");
    if (!(in.e1ph >= 0.0 && in.e1ph <= 1.0)) fail("e1ph outside [0,1]");
    if (!(in.e_t >= 0.0 && in.e_t <= 1.0)) fail("e_t outside [0,1]");
    if (in.n_vy_plus_n_yv < 1.0) fail("n_vy + n_yv must be at least 1");
    if (!(in.clock_hz > 0.0)) fail("clock_hz must be positive");
    if (in.eta_total && !(*in.eta_total >= 0.0 && *in.eta_total < 1.0))
        fail("eta_total outside [0,1)");
    return r;
}

KeyRateReport secure_key_rate(const KeyRateInput& in) {
    require_valid(validate(in));

    KeyRateReport out;
    out.r_tail = r_tail(in.n_total, in.n_vy_plus_n_yv, in.sec);
    const double secret =
        in.n1 * (1.0 - binary_entropy(in.e1ph)) -
        in.sec.f * in.n_t * binary_entropy(in.e_t);
    out.r_per_pulse_unclamped = secret / in.n_total - out.r_tail;
    out.r_per_pulse = std::max(0.0, out.r_per_pulse_unclamped);
    out.r_bits_per_second = out.r_per_pulse * in.clock_hz;
    out.total_secure_bits = std::floor(out.r_per_pulse * in.n_total);
    if (in.eta_total) {
        out.plob_bound = plob(*in.eta_total);
        out.plob_margin = out.r_per_pulse - out.plob_bound;
        out.has_plob = true;
    }
    return out;
}

AnalysisReport analyze(const TallyRecord& tally, const SourceParams& src,
                       const SecurityParams& sec, const ChannelConfig& ch,
                       const AnalysisOptions& opts) {
    require_valid(validate(src, sec, ch));
    require_valid(validate(tally));

    AnalysisReport report;
    report.decoy =
        estimate_decoy(tally, src, opts.delta_slice, sec.eps_chernoff, opts.mode);

    // Bob's 0-bits are the windows where he sent, 1-bits where he did not;
    // within each class the disagreements are the both-sent / neither-sent
    // windows.
    const double det_vv = static_cast<double>(tally.detected_at(Source::Vacuum, Source::Vacuum));
    const double det_vy = static_cast<double>(tally.detected_at(Source::Vacuum, Source::Signal));
    const double det_yv = static_cast<double>(tally.detected_at(Source::Signal, Source::Vacuum));
    const double det_yy = static_cast<double>(tally.detected_at(Source::Signal, Source::Signal));
    report.n_t_pre = det_vv + det_vy + det_yv + det_yy;
    report.e_t_pre =
        report.n_t_pre > 0.0 ? (det_vv + det_yy) / report.n_t_pre : 0.0;

    report.input.n_total = static_cast<double>(tally.n_total);
    report.input.n_vy_plus_n_yv = det_vy + det_yv;
    report.input.sec = sec;
    report.input.clock_hz = ch.clock_hz;
    const double eta = transmittance(ch, Side::Total);
    if (eta < 1.0) report.input.eta_total = eta;

    const auto fill_plob = [&](KeyRateReport& kr) {
        if (!report.input.eta_total) return;
        kr.plob_bound = plob(*report.input.eta_total);
        kr.plob_margin = kr.r_per_pulse - kr.plob_bound;
        kr.has_plob = true;
    };

    if (report.decoy.vacuous) {
        report.vacuous = true;
        report.aopp.vacuous = true;
        // No untagged bits credited: the rate is zero by construction and the
        // report still carries the capacity comparison.
        report.keyrate.r_tail = report.input.n_vy_plus_n_yv >= 1.0
                                    ? r_tail(report.input.n_total,
                                             report.input.n_vy_plus_n_yv, sec)
                                    : 0.0;
        fill_plob(report.keyrate);
        return report;
    }

    AoppEstimateInput pairing_in;
    pairing_in.n0 = det_vy + det_yy;
    pairing_in.n1_bits = det_yv + det_vv;
    pairing_in.err0 = det_yy;
    pairing_in.err1 = det_vv;
    pairing_in.u0 = report.decoy.n1_from_vy;
    pairing_in.u1 = report.decoy.n1_from_yv;
    pairing_in.e1ph_pre = report.decoy.e1ph_pre;
    pairing_in.eps = sec.eps_chernoff;
    report.aopp = estimate_after_aopp(pairing_in, opts.mode);

    if (report.aopp.vacuous) {
        report.vacuous = true;
        fill_plob(report.keyrate);
        return report;
    }

    report.input.n1 = report.aopp.n1_post;
    report.input.e1ph = report.aopp.e1ph_post;
    report.input.n_t = report.aopp.n_t_post;
    report.input.e_t = report.aopp.e_t_post;
    report.keyrate = secure_key_rate(report.input);
    return report;
}

} // namespace tfqkd
