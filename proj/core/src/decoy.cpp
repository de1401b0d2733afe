#include "tfqkd/decoy.hpp"

#include "tfqkd/errors.hpp"
#include "tfqkd/finite_stat.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace tfqkd {

namespace {

std::string pair_label(Source a, Source b) {
    return std::to_string(static_cast<int>(a)) + std::to_string(static_cast<int>(b));
}

double adj_rate(std::uint64_t detected, std::uint64_t sent, double eps,
                EstimationMode mode, bool adverse_up) {
    if (sent == 0) throw ValidationError("rate requested for pair with zero sent count");
    const double x = static_cast<double>(detected);
    if (mode == EstimationMode::MeanValue) return x / static_cast<double>(sent);
    const double adj = adverse_up ? mean_upper(x, eps) : mean_lower(x, eps);
    return adj / static_cast<double>(sent);
}

} // namespace

double RateTable::at(Source a, Source b) const {
    if (!defined_[idx(a)][idx(b)]) {
        throw ValidationError("counting rate undefined: no pulses sent for pair " +
                              pair_label(a, b));
    }
    return rate_[idx(a)][idx(b)];
}

RateTable counting_rates(const TallyRecord& tally) {
    RateTable table;
    for (int a = 0; a < kNumSources; ++a) {
        for (int b = 0; b < kNumSources; ++b) {
            if (tally.sent[a][b] == 0) continue;
            table.set(static_cast<Source>(a), static_cast<Source>(b),
                      static_cast<double>(tally.detected[a][b]) /
                          static_cast<double>(tally.sent[a][b]));
        }
    }
    return table;
}

double y1_mean_value(double s0, double sx, double sy, double mu_x, double mu_y) {
    if (!(mu_x > 0.0 && mu_y > mu_x)) throw DomainError("need 0 < mu_x < mu_y");
    const double num = mu_y * mu_y * std::exp(mu_x) * sx -
                       mu_x * mu_x * std::exp(mu_y) * sy -
                       (mu_y * mu_y - mu_x * mu_x) * s0;
    return num / (mu_x * mu_y * (mu_y - mu_x));
}

YieldBound y1_lower_bound(const TallyRecord& tally, Direction dir, double mu_x,
                          double mu_y, double eps, EstimationMode mode) {
    const bool alice = (dir == Direction::AliceSends);
    const Source v = Source::Vacuum;
    const Source x = Source::Decoy;
    const Source y = Source::Signal;

    const auto sent = [&](Source s, bool swap) {
        return swap ? tally.sent_at(s, v) : tally.sent_at(v, s);
    };
    const auto det = [&](Source s, bool swap) {
        return swap ? tally.detected_at(s, v) : tally.detected_at(v, s);
    };

    // Signs in the numerator decide the adverse direction per term.
    const double s0 = adj_rate(tally.detected_at(v, v), tally.sent_at(v, v), eps,
                               mode, /*adverse_up=*/true);
    const double sx_rate = adj_rate(det(x, alice), sent(x, alice), eps, mode, false);
    const double sy_rate = adj_rate(det(y, alice), sent(y, alice), eps, mode, true);

    const double y1 = y1_mean_value(s0, sx_rate, sy_rate, mu_x, mu_y);
    if (y1 <= 0.0) return YieldBound{0.0, true};
    return YieldBound{y1, false};
}

UntaggedBound n1_pre_aopp(const YieldBound& alice_sends, const YieldBound& bob_sends,
                          const TallyRecord& tally, double mu_y) {
    UntaggedBound out;
    const double weight = mu_y * std::exp(-mu_y);
    out.from_vy = static_cast<double>(tally.sent_at(Source::Vacuum, Source::Signal)) *
                  weight * bob_sends.y1;
    out.from_yv = static_cast<double>(tally.sent_at(Source::Signal, Source::Vacuum)) *
                  weight * alice_sends.y1;
    out.n1 = out.from_vy + out.from_yv;
    out.vacuous = alice_sends.vacuous && bob_sends.vacuous;
    return out;
}

double e1ph_upper_bound(const TallyRecord& tally, double mu_x, double y1_lower,
                        double delta_slice, double eps, EstimationMode mode) {
    if (tally.ds_total == 0)
        throw InsufficientDataError("no phase-slice events recorded");
    if (y1_lower <= 0.0)
        throw VacuousBoundError("phase-error bound requires a positive yield bound");
    if (!(delta_slice > 0.0 && delta_slice < std::numbers::pi))
        throw DomainError("delta_slice must lie in (0, pi)");

    const std::uint64_t sent_xx = tally.sent_at(Source::Decoy, Source::Decoy);
    if (sent_xx == 0) throw ValidationError("no decoy-decoy pulses sent");
    // Pairs landing in the post-selected band under uniform random phase.
    const double n_slice =
        static_cast<double>(sent_xx) * (delta_slice / std::numbers::pi);

    const double errors = static_cast<double>(tally.ds_total - tally.ds_correct);
    const double err_adj =
        (mode == EstimationMode::Finite) ? mean_upper(errors, eps) : errors;
    const double t_delta = err_adj / n_slice;

    const double s00 = adj_rate(tally.detected_at(Source::Vacuum, Source::Vacuum),
                                tally.sent_at(Source::Vacuum, Source::Vacuum), eps,
                                mode, /*adverse_up=*/false);

    const double atten = std::exp(-2.0 * mu_x);
    const double num = t_delta - 0.5 * atten * s00;
    const double e1 = num / (2.0 * mu_x * atten * y1_lower);
    if (e1 < 0.0) return 0.0;
    return e1 > 0.5 ? 0.5 : e1;
}

DecoyOutcome estimate_decoy(const TallyRecord& tally, const SourceParams& src,
                            double delta_slice, double eps, EstimationMode mode) {
    DecoyOutcome out;
    out.y1_alice_sends =
        y1_lower_bound(tally, Direction::AliceSends, src.mu_x, src.mu_y, eps, mode);
    out.y1_bob_sends =
        y1_lower_bound(tally, Direction::BobSends, src.mu_x, src.mu_y, eps, mode);
    out.y1_lower = std::min(out.y1_alice_sends.y1, out.y1_bob_sends.y1);

    const UntaggedBound n1 =
        n1_pre_aopp(out.y1_alice_sends, out.y1_bob_sends, tally, src.mu_y);
    out.n1_pre = n1.n1;
    out.n1_from_vy = n1.from_vy;
    out.n1_from_yv = n1.from_yv;

    if (tally.ds_total > 0) {
        out.ex = static_cast<double>(tally.ds_total - tally.ds_correct) /
                 static_cast<double>(tally.ds_total);
    }

    if (out.y1_lower <= 0.0 || out.n1_pre <= 0.0) {
        out.vacuous = true;
        out.n1_pre = out.n1_from_vy = out.n1_from_yv = 0.0;
        return out;
    }

    out.e1ph_pre =
        e1ph_upper_bound(tally, src.mu_x, out.y1_lower, delta_slice, eps, mode);
    return out;
}

} // namespace tfqkd
