#include "tfqkd/types.hpp"

#include "tfqkd/errors.hpp"

#include <cmath>
#include <sstream>

namespace tfqkd {

double db_to_transmittance(double db) {
    return std::pow(10.0, -db / 10.0);
}

double ChannelConfig::path_db(Side side) const {
    switch (side) {
        case Side::A:
            return length_a_km * atten_db_per_km + extra_loss_a_db;
        case Side::B:
            return length_b_km * atten_db_per_km + extra_loss_b_db;
        default:
            return (length_a_km + length_b_km) * atten_db_per_km;
    }
}

double transmittance(const ChannelConfig& ch, Side side) {
    return db_to_transmittance(ch.path_db(side));
}

std::uint64_t TallyRecord::sum_sent() const {
    std::uint64_t total = 0;
    for (const auto& row : sent)
        for (std::uint64_t v : row) total += v;
    return total;
}

std::uint64_t TallyRecord::sum_detected() const {
    std::uint64_t total = 0;
    for (const auto& row : detected)
        for (std::uint64_t v : row) total += v;
    return total;
}

TallyRecord& TallyRecord::merge(const TallyRecord& other) {
    n_total += other.n_total;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            sent[a][b] += other.sent[a][b];
            detected[a][b] += other.detected[a][b];
        }
    }
    valid_det1 += other.valid_det1;
    valid_det2 += other.valid_det2;
    ds_total += other.ds_total;
    ds_correct += other.ds_correct;
    return *this;
}

std::string ValidationResult::message() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) out << "; ";
        out << violations[i];
    }
    return out.str();
}

namespace {

void check(std::vector<std::string>& out, bool ok, const std::string& what) {
    if (!ok) out.push_back(what);
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }
bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }

std::string pair_name(int a, int b) {
    std::ostringstream s;
    s << a << b;
    return s.str();
}

} // namespace

ValidationResult validate(const SourceParams& src) {
    ValidationResult r;
    check(r.violations, src.mu_v == 0.0, "mu_v must be 0");
    check(r.violations, src.mu_v < src.mu_x, "mu_v < mu_x violated");
    check(r.violations, src.mu_x < src.mu_y, "mu_x < mu_y violated");
    check(r.violations, in_open_unit(src.p_v), "p_v outside (0,1)");
    check(r.violations, in_open_unit(src.p_x), "p_x outside (0,1)");
    check(r.violations, in_open_unit(src.p_y), "p_y outside (0,1)");
    const double sum = src.p_v + src.p_x + src.p_y;
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream s;
        s << "probabilities sum to " << sum;
        r.violations.push_back(s.str());
    }
    return r;
}

ValidationResult validate(const SecurityParams& sec) {
    ValidationResult r;
    check(r.violations, in_open_unit(sec.eps_chernoff), "eps_chernoff outside (0,1)");
    check(r.violations, in_open_unit(sec.eps_cor), "eps_cor outside (0,1)");
    check(r.violations, in_open_unit(sec.eps_pa), "eps_pa outside (0,1)");
    check(r.violations, in_open_unit(sec.eps_hat), "eps_hat outside (0,1)");
    check(r.violations, sec.f >= 1.0, "f < 1");
    return r;
}

ValidationResult validate(const ChannelConfig& ch) {
    ValidationResult r;
    check(r.violations, ch.length_a_km >= 0.0, "length_a_km negative");
    check(r.violations, ch.length_b_km >= 0.0, "length_b_km negative");
    check(r.violations, ch.atten_db_per_km >= 0.0, "atten_db_per_km negative");
    check(r.violations, ch.extra_loss_a_db >= 0.0, "extra_loss_a_db negative");
    check(r.violations, ch.extra_loss_b_db >= 0.0, "extra_loss_b_db negative");
    check(r.violations, in_unit(ch.det_eff[0]) && in_unit(ch.det_eff[1]),
          "detector efficiency outside [0,1]");
    check(r.violations, in_unit(ch.window_eff), "window_eff outside [0,1]");
    check(r.violations, ch.dark_hz[0] >= 0.0 && ch.dark_hz[1] >= 0.0,
          "dark rate negative");
    check(r.violations, ch.dark_window_s >= 0.0, "dark_window_s negative");
    check(r.violations, ch.clock_hz > 0.0, "clock_hz not positive");
    check(r.violations, ch.misalignment >= 0.0 && ch.misalignment <= 0.5,
          "misalignment outside [0,0.5]");
    return r;
}

ValidationResult validate(const TallyRecord& tally) {
    ValidationResult r;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            if (tally.detected[a][b] > tally.sent[a][b]) {
                r.violations.push_back("detected_" + pair_name(a, b) +
                                       " exceeds sent_" + pair_name(a, b));
            }
        }
    }
    check(r.violations, tally.sum_sent() == tally.n_total,
          "sum of sent counts differs from n_total");
    check(r.violations, tally.ds_correct <= tally.ds_total,
          "ds_correct exceeds ds_total");
    check(r.violations, tally.valid_det1 + tally.valid_det2 == tally.sum_detected(),
          "per-detector valid counts do not sum to total detections");
    return r;
}

ValidationResult validate(const SourceParams& src, const SecurityParams& sec,
                          const ChannelConfig& ch) {
    ValidationResult r = validate(src);
    ValidationResult rs = validate(sec);
    ValidationResult rc = validate(ch);
    r.violations.insert(r.violations.end(), rs.violations.begin(), rs.violations.end());
    r.violations.insert(r.violations.end(), rc.violations.begin(), rc.violations.end());
    return r;
}

void require_valid(const ValidationResult& result) {
    if (!result.ok()) throw ValidationError(result.message());
}

} // namespace tfqkd
