#pragma once

#include "tfqkd/decoy.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace tfqkd {

/// Sifted key material of one session plus simulation-truth annotations.
struct RawKeyPair {
    std::vector<std::uint8_t> alice_bits;
    std::vector<std::uint8_t> bob_bits;
    std::vector<std::uint8_t> untagged_mask;  ///< truth: bit came from a single-photon emission
    std::size_t length() const { return alice_bits.size(); }
};

/// Index pairs produced by the parity-pairing step. Each pair joins one
/// 0-bit and one 1-bit of Bob's string; first/second are positions in the
/// original key, ordered so that first < second.
struct Pairing {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
};

/// Uniformly random perfect matching between Bob's 0-bits and 1-bits via a
/// seeded shuffle. Pair count equals min(#zeros, #ones); leftover bits are
/// discarded. Deterministic in (bits, seed).
Pairing pair_bits(const std::vector<std::uint8_t>& bob_bits, std::uint64_t seed);

struct AoppResult {
    std::uint64_t kept_pairs = 0;
    double n_t_post = 0.0;
    double e_t_post = 0.0;
    double n1_post = 0.0;
    double e1ph_post = 0.0;
    bool vacuous = false;
};

struct AoppApplied {
    AoppResult stats;
    RawKeyPair kept;  ///< first bit of each surviving pair, in pair order
    std::vector<std::pair<std::uint32_t, std::uint32_t>> surviving;
};

/// Procedural transformation: a pair survives iff Alice's two bits also
/// have odd parity; both parties keep the bit at the smaller original index.
/// Truth-mode n1_post counts surviving pairs whose both members are untagged.
AoppApplied apply_aopp(const RawKeyPair& keys, const Pairing& pairing);

/// Observables feeding the analytic before->after mapping. Bit classes are
/// Bob's 0-bits and 1-bits; err counts are the positions within each class
/// where Alice disagrees; u0/u1 are the (already adverse-bounded) untagged
/// counts within each class.
struct AoppEstimateInput {
    double n0 = 0.0;
    double n1_bits = 0.0;
    double err0 = 0.0;
    double err1 = 0.0;
    double u0 = 0.0;
    double u1 = 0.0;
    double e1ph_pre = 0.0;
    double eps = 1e-10;

    /// Builds the input from aggregate pre-pairing statistics when the
    /// per-class split is unknown: errors and untagged bits are spread
    /// proportionally over the two classes.
    static AoppEstimateInput from_aggregates(double n_t_pre, double zeros,
                                             double ones, double n1_pre,
                                             double e1ph_pre, double e_t_pre,
                                             double eps);
};

/// Mean-value mapping of the pairing step with optional finite-size
/// adjustment:
///   pairs g = min(n0, n1_bits), survival from the per-class disagreement
///   rates, untagged survival as the both-untagged pair expectation, and
///   e1ph_post = 2 e (1 - e) on the surviving untagged pairs.
/// Finite mode lower-bounds the surviving untagged count and upper-bounds
/// the implied phase-flip count before forming the rate.
AoppResult estimate_after_aopp(const AoppEstimateInput& in, EstimationMode mode);

} // namespace tfqkd
