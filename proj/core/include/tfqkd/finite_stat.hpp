#pragma once

namespace tfqkd {

/// Two-sided interval for the expected value behind an observed count, at a
/// given failure probability per side.
struct BoundPair {
    double lower = 0.0;
    double upper = 0.0;
    double epsilon = 0.0;
};

/// Lower bound on the expected value given an observed count X:
/// L = max(0, X - sqrt(2*beta*X)) with beta = ln(1/eps). The true mean lies
/// below L with probability at most eps.
double mean_lower(double observed, double eps);

/// Upper bound on the expected value given an observed count X:
/// U = X + beta/2 + sqrt(2*beta*X + beta^2/4) with beta = ln(1/eps).
double mean_upper(double observed, double eps);

BoundPair mean_bounds(double observed, double eps);

} // namespace tfqkd
