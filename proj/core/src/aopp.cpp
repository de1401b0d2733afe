#include "tfqkd/aopp.hpp"

#include "tfqkd/errors.hpp"
#include "tfqkd/finite_stat.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tfqkd {

Pairing pair_bits(const std::vector<std::uint8_t>& bob_bits, std::uint64_t seed) {
    std::vector<std::uint32_t> zeros;
    std::vector<std::uint32_t> ones;
    zeros.reserve(bob_bits.size() / 2);
    ones.reserve(bob_bits.size() / 2);
    for (std::uint32_t i = 0; i < bob_bits.size(); ++i) {
        (bob_bits[i] ? ones : zeros).push_back(i);
    }

    // Shuffling one list already makes the matching uniform over all perfect
    // matchings between the two classes.
    std::mt19937_64 rng(seed);
    std::shuffle(ones.begin(), ones.end(), rng);

    Pairing out;
    const std::size_t count = std::min(zeros.size(), ones.size());
    out.pairs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t z = zeros[i];
        const std::uint32_t o = ones[i];
        out.pairs.emplace_back(std::min(z, o), std::max(z, o));
    }
    return out;
}

AoppApplied apply_aopp(const RawKeyPair& keys, const Pairing& pairing) {
    if (keys.bob_bits.size() != keys.alice_bits.size())
        throw ValidationError("alice/bob bit strings differ in length");
    const bool have_mask = !keys.untagged_mask.empty();
    if (have_mask && keys.untagged_mask.size() != keys.alice_bits.size())
        throw ValidationError("untagged mask length mismatch");

    AoppApplied out;
    std::uint64_t errors = 0;
    std::uint64_t untagged = 0;
    for (const auto& [first, second] : pairing.pairs) {
        if (second >= keys.length())
            throw ValidationError("pairing index out of range");
        if ((keys.alice_bits[first] ^ keys.alice_bits[second]) != 1) continue;

        out.surviving.emplace_back(first, second);
        out.kept.alice_bits.push_back(keys.alice_bits[first]);
        out.kept.bob_bits.push_back(keys.bob_bits[first]);
        if (have_mask) {
            const bool both = keys.untagged_mask[first] && keys.untagged_mask[second];
            out.kept.untagged_mask.push_back(both ? 1 : 0);
            untagged += both ? 1 : 0;
        }
        errors += (keys.alice_bits[first] != keys.bob_bits[first]) ? 1 : 0;
    }

    out.stats.kept_pairs = out.surviving.size();
    out.stats.n_t_post = static_cast<double>(out.stats.kept_pairs);
    out.stats.e_t_post = out.stats.kept_pairs
                             ? static_cast<double>(errors) /
                                   static_cast<double>(out.stats.kept_pairs)
                             : 0.0;
    out.stats.n1_post = static_cast<double>(untagged);
    return out;
}

AoppEstimateInput AoppEstimateInput::from_aggregates(double n_t_pre, double zeros,
                                                     double ones, double n1_pre,
                                                     double e1ph_pre, double e_t_pre,
                                                     double eps) {
    AoppEstimateInput in;
    in.n0 = zeros;
    in.n1_bits = ones;
    in.err0 = e_t_pre * zeros;
    in.err1 = e_t_pre * ones;
    const double total = n_t_pre > 0.0 ? n_t_pre : zeros + ones;
    in.u0 = total > 0.0 ? n1_pre * zeros / total : 0.0;
    in.u1 = total > 0.0 ? n1_pre * ones / total : 0.0;
    in.e1ph_pre = e1ph_pre;
    in.eps = eps;
    return in;
}

AoppResult estimate_after_aopp(const AoppEstimateInput& in, EstimationMode mode) {
    AoppResult out;
    const double g = std::min(in.n0, in.n1_bits);
    if (g <= 0.0) {
        out.vacuous = true;
        return out;
    }

    const double q0 = in.err0 / in.n0;
    const double q1 = in.err1 / in.n1_bits;
    // A pair survives iff both members disagree with Alice or neither does;
    // a surviving pair is an error iff both disagreed.
    const double p_surv = (1.0 - q0) * (1.0 - q1) + q0 * q1;
    out.kept_pairs = static_cast<std::uint64_t>(std::llround(g * p_surv));
    out.n_t_post = g * p_surv;
    out.e_t_post = p_surv > 0.0 ? q0 * q1 / p_surv : 0.0;

    // Both-untagged pairs always have odd Alice parity, so they all survive.
    const double untagged_pairs = g * (in.u0 / in.n0) * (in.u1 / in.n1_bits);
    if (untagged_pairs <= 0.0) {
        out.vacuous = true;
        return out;
    }

    const double e1_mean = 2.0 * in.e1ph_pre * (1.0 - in.e1ph_pre);
    if (mode == EstimationMode::MeanValue) {
        out.n1_post = std::min(untagged_pairs, out.n_t_post);
        out.e1ph_post = e1_mean;
        return out;
    }

    out.n1_post = std::min(mean_lower(untagged_pairs, in.eps), out.n_t_post);
    if (out.n1_post <= 0.0) {
        out.n1_post = 0.0;
        out.vacuous = true;
        return out;
    }
    if (e1_mean == 0.0) {
        out.e1ph_post = 0.0;
        return out;
    }
    const double flips_upper = mean_upper(untagged_pairs * e1_mean, in.eps);
    out.e1ph_post = std::min(0.5, flips_upper / out.n1_post);
    return out;
}

} // namespace tfqkd
