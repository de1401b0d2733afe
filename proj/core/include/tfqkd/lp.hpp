#pragma once

#include <vector>

namespace tfqkd {

/// Dense two-phase primal simplex for
///     min c.x   s.t.   A x <= b,  x >= 0.
/// Sized for the small yield programs here (tens of variables/rows).
struct LpSolution {
    enum class Status { Optimal, Infeasible, Unbounded };
    Status status = Status::Optimal;
    double objective = 0.0;
    std::vector<double> x;
};

LpSolution solve_lp(const std::vector<double>& c,
                    const std::vector<std::vector<double>>& a,
                    const std::vector<double>& b);

/// Independent single-photon-yield oracle: minimizes Y1 over all yield
/// vectors Y_k in [0,1], k <= cutoff, whose truncated Poisson mixtures are
/// consistent with the observed counting rates (s0, sx, sy). Truncation is
/// accounted for by letting each mixture undershoot its rate by at most the
/// Poisson tail mass beyond the cutoff.
struct YieldLpResult {
    double y1 = 0.0;
    bool feasible = true;
    std::vector<double> yields;  ///< optimizer's Y_0..Y_cutoff when feasible
};

YieldLpResult lp_y1_lower(double s0, double sx, double sy, double mu_x,
                          double mu_y, int cutoff);

} // namespace tfqkd
