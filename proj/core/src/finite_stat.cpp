#include "tfqkd/finite_stat.hpp"

#include "tfqkd/errors.hpp"

#include <cmath>

namespace tfqkd {

namespace {

double beta_of(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0,1)");
    return std::log(1.0 / eps);
}

} // namespace

double mean_lower(double observed, double eps) {
    if (observed < 0.0) throw DomainError("observed count must be >= 0");
    const double beta = beta_of(eps);
    const double lower = observed - std::sqrt(2.0 * beta * observed);
    return lower > 0.0 ? lower : 0.0;
}

double mean_upper(double observed, double eps) {
    if (observed < 0.0) throw DomainError("observed count must be >= 0");
    const double beta = beta_of(eps);
    return observed + 0.5 * beta +
           std::sqrt(2.0 * beta * observed + 0.25 * beta * beta);
}

BoundPair mean_bounds(double observed, double eps) {
    return BoundPair{mean_lower(observed, eps), mean_upper(observed, eps), eps};
}

} // namespace tfqkd
