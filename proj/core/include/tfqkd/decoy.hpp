#pragma once

#include "tfqkd/types.hpp"

#include <array>

namespace tfqkd {

/// Whether interval estimates are applied to the counts.
/// MeanValue evaluates the estimators on raw ratios; Finite replaces each
/// count by its adverse-side expected-value bound first.
enum class EstimationMode { MeanValue, Finite };

/// Which party holds the non-vacuum source in a directional estimate.
enum class Direction { AliceSends, BobSends };

/// Per-source-pair counting rates, defined only where pulses were sent.
class RateTable {
public:
    void set(Source a, Source b, double rate) {
        rate_[idx(a)][idx(b)] = rate;
        defined_[idx(a)][idx(b)] = true;
    }
    bool defined(Source a, Source b) const { return defined_[idx(a)][idx(b)]; }
    /// Throws ValidationError naming the pair when it was never sent.
    double at(Source a, Source b) const;

private:
    static int idx(Source s) { return static_cast<int>(s); }
    std::array<std::array<double, 3>, 3> rate_{};
    std::array<std::array<bool, 3>, 3> defined_{};
};

/// detected/sent per pair; pairs with zero sent stay undefined and error on
/// access.
RateTable counting_rates(const TallyRecord& tally);

struct YieldBound {
    double y1 = 0.0;
    bool vacuous = false;  ///< numerator went negative after adverse adjustment
};

/// Unclamped three-intensity single-photon yield estimate from the three
/// counting rates with the far side on vacuum:
///   [mu_y^2 e^{mu_x} S_x - mu_x^2 e^{mu_y} S_y - (mu_y^2 - mu_x^2) S_0]
///   / (mu_x mu_y (mu_y - mu_x))
/// Dropping the multi-photon terms is valid because
/// mu_y^2 mu_x^k <= mu_x^2 mu_y^k for k >= 2.
double y1_mean_value(double s0, double sx, double sy, double mu_x, double mu_y);

/// Directional lower bound on the single-photon yield. In Finite mode each
/// count is replaced by its adverse expected-value bound before the ratio is
/// formed: lower for the positively weighted decoy rate, upper for the
/// signal and vacuum rates.
YieldBound y1_lower_bound(const TallyRecord& tally, Direction dir, double mu_x,
                          double mu_y, double eps, EstimationMode mode);

struct UntaggedBound {
    double n1 = 0.0;       ///< total untagged lower bound before pairing
    double from_vy = 0.0;  ///< contribution of Alice-vacuum / Bob-signal windows
    double from_yv = 0.0;  ///< contribution of Alice-signal / Bob-vacuum windows
    bool vacuous = false;
};

/// sent_vy * mu_y e^{-mu_y} * Y1(Bob sends) + sent_yv * mu_y e^{-mu_y} * Y1(Alice sends).
UntaggedBound n1_pre_aopp(const YieldBound& alice_sends, const YieldBound& bob_sends,
                          const TallyRecord& tally, double mu_y);

/// Upper bound on the phase-flip rate of untagged bits from the decoy-decoy
/// phase-slice tallies. delta_slice is the full angular width of the
/// post-selected band around each of the two interference points, so the
/// accepted fraction of decoy-decoy pairs is delta_slice / pi.
double e1ph_upper_bound(const TallyRecord& tally, double mu_x, double y1_lower,
                        double delta_slice, double eps, EstimationMode mode);

/// Everything the pairing stage needs from the decoy analysis.
struct DecoyOutcome {
    YieldBound y1_alice_sends;
    YieldBound y1_bob_sends;
    double y1_lower = 0.0;   ///< min over directions, used by the phase-error bound
    double n1_pre = 0.0;
    double n1_from_vy = 0.0;
    double n1_from_yv = 0.0;
    double e1ph_pre = 0.0;
    double ex = 0.0;         ///< raw slice error rate
    bool vacuous = false;
};

/// Full three-intensity estimation pass over one tally.
/// When the yield bound is vacuous the outcome is returned with zeroed
/// quantities and the flag set instead of raising; the phase-error bound is
/// skipped in that case since no untagged bits are credited anyway.
DecoyOutcome estimate_decoy(const TallyRecord& tally, const SourceParams& src,
                            double delta_slice, double eps, EstimationMode mode);

} // namespace tfqkd
