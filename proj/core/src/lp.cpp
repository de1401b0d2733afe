#include "tfqkd/lp.hpp"

#include "tfqkd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace tfqkd {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kFeasTol = 1e-9;
constexpr int kMaxIters = 20000;

// Tableau rows: m constraint rows (equalities with slack/artificial basis)
// plus one objective row. Bland's rule keeps the iteration finite.
class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : cols_(cols), data_(rows * cols, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::size_t cols() const { return cols_; }

private:
    std::size_t cols_;
    std::vector<double> data_;
};

void pivot(Tableau& t, std::vector<std::size_t>& basis, std::size_t rows,
           std::size_t prow, std::size_t pcol) {
    const double pval = t.at(prow, pcol);
    for (std::size_t c = 0; c < t.cols(); ++c) t.at(prow, c) /= pval;
    for (std::size_t r = 0; r < rows; ++r) {
        if (r == prow) continue;
        const double factor = t.at(r, pcol);
        if (factor == 0.0) continue;
        for (std::size_t c = 0; c < t.cols(); ++c)
            t.at(r, c) -= factor * t.at(prow, c);
    }
    basis[prow] = pcol;
}

// Runs simplex iterations on the given objective row (last row of the
// tableau). Columns >= allowed_cols never enter. Returns false on unbounded.
bool iterate(Tableau& t, std::vector<std::size_t>& basis, std::size_t m,
             std::size_t allowed_cols) {
    const std::size_t obj = m;
    for (int iter = 0; iter < kMaxIters; ++iter) {
        // Bland: lowest-index column with a negative reduced cost.
        std::size_t pcol = allowed_cols;
        for (std::size_t c = 0; c < allowed_cols; ++c) {
            if (t.at(obj, c) < -kPivotTol) {
                pcol = c;
                break;
            }
        }
        if (pcol == allowed_cols) return true;  // optimal

        std::size_t prow = m;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < m; ++r) {
            const double a = t.at(r, pcol);
            if (a <= kPivotTol) continue;
            const double ratio = t.at(r, t.cols() - 1) / a;
            if (ratio < best_ratio - kPivotTol ||
                (ratio < best_ratio + kPivotTol &&
                 (prow == m || basis[r] < basis[prow]))) {
                best_ratio = ratio;
                prow = r;
            }
        }
        if (prow == m) return false;  // unbounded
        pivot(t, basis, m + 1, prow, pcol);
    }
    throw std::runtime_error("simplex iteration limit exceeded");
}

} // namespace

LpSolution solve_lp(const std::vector<double>& c,
                    const std::vector<std::vector<double>>& a,
                    const std::vector<double>& b) {
    const std::size_t m = a.size();
    const std::size_t n = c.size();
    if (b.size() != m) throw DomainError("rhs size mismatch");

    // Row equilibration keeps the pivot tolerance meaningful when rates span
    // many orders of magnitude.
    std::vector<std::vector<double>> as(a);
    std::vector<double> bs(b);
    for (std::size_t r = 0; r < m; ++r) {
        if (as[r].size() != n) throw DomainError("constraint row size mismatch");
        double mx = std::abs(bs[r]);
        for (double v : as[r]) mx = std::max(mx, std::abs(v));
        if (mx > 0.0) {
            for (double& v : as[r]) v /= mx;
            bs[r] /= mx;
        }
    }

    // Count artificials: rows whose slack cannot start basic.
    std::size_t n_art = 0;
    for (std::size_t r = 0; r < m; ++r)
        if (bs[r] < 0.0) ++n_art;

    const std::size_t total = n + m + n_art;
    Tableau t(m + 1, total + 1);
    std::vector<std::size_t> basis(m);

    std::size_t art = n + m;
    for (std::size_t r = 0; r < m; ++r) {
        const double sign = (bs[r] < 0.0) ? -1.0 : 1.0;
        for (std::size_t col = 0; col < n; ++col) t.at(r, col) = sign * as[r][col];
        t.at(r, n + r) = sign;  // slack
        t.at(r, total) = sign * bs[r];
        if (bs[r] < 0.0) {
            t.at(r, art) = 1.0;
            basis[r] = art++;
        } else {
            basis[r] = n + r;
        }
    }

    LpSolution sol;
    if (n_art > 0) {
        // Phase 1: minimize the artificial sum, priced out for the basis.
        for (std::size_t col = n + m; col < total; ++col) t.at(m, col) = 1.0;
        for (std::size_t r = 0; r < m; ++r) {
            if (basis[r] >= n + m) {
                for (std::size_t col = 0; col <= total; ++col)
                    t.at(m, col) -= t.at(r, col);
            }
        }
        if (!iterate(t, basis, m, total))
            throw std::runtime_error("phase-1 simplex unbounded");
        if (t.at(m, total) < -kFeasTol) {
            sol.status = LpSolution::Status::Infeasible;
            return sol;
        }
        // Kick any leftover artificial out of the basis if possible.
        for (std::size_t r = 0; r < m; ++r) {
            if (basis[r] < n + m) continue;
            std::size_t enter = n + m;
            for (std::size_t col = 0; col < n + m; ++col) {
                if (std::abs(t.at(r, col)) > kPivotTol) {
                    enter = col;
                    break;
                }
            }
            if (enter < n + m) pivot(t, basis, m + 1, r, enter);
        }
    }

    // Phase 2 objective.
    for (std::size_t col = 0; col <= total; ++col) t.at(m, col) = 0.0;
    for (std::size_t col = 0; col < n; ++col) t.at(m, col) = c[col];
    for (std::size_t r = 0; r < m; ++r) {
        if (basis[r] < n && c[basis[r]] != 0.0) {
            const double factor = c[basis[r]];
            for (std::size_t col = 0; col <= total; ++col)
                t.at(m, col) -= factor * t.at(r, col);
        }
    }
    if (!iterate(t, basis, m, n + m)) {
        sol.status = LpSolution::Status::Unbounded;
        return sol;
    }

    sol.x.assign(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        if (basis[r] < n) sol.x[basis[r]] = t.at(r, total);
    sol.objective = 0.0;
    for (std::size_t col = 0; col < n; ++col) sol.objective += c[col] * sol.x[col];
    return sol;
}

namespace {

double poisson_pmf(int k, double mu) {
    if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
    double logp = -mu + k * std::log(mu);
    for (int i = 2; i <= k; ++i) logp -= std::log(static_cast<double>(i));
    return std::exp(logp);
}

} // namespace

YieldLpResult lp_y1_lower(double s0, double sx, double sy, double mu_x,
                          double mu_y, int cutoff) {
    if (cutoff < 3) throw DomainError("cutoff must be >= 3");
    if (!(mu_x > 0.0 && mu_y > mu_x)) throw DomainError("need 0 < mu_x < mu_y");

    // Yields are solved in units of the largest observed rate so that
    // infeasibility stays visible at any rate scale.
    const double scale = std::max({s0, sx, sy, 1e-300});

    const int n = cutoff + 1;
    std::vector<double> c(n, 0.0);
    c[1] = 1.0;

    std::vector<std::vector<double>> a;
    std::vector<double> b;

    const auto add_mixture = [&](double mu, double rate) {
        std::vector<double> row(n, 0.0);
        double mass = 0.0;
        for (int k = 0; k < n; ++k) {
            row[k] = poisson_pmf(k, mu);
            mass += row[k];
        }
        const double tail = std::max(0.0, 1.0 - mass);
        a.push_back(row);
        b.push_back(rate / scale);  // mixture <= rate
        std::vector<double> neg(n);
        for (int k = 0; k < n; ++k) neg[k] = -row[k];
        a.push_back(neg);
        b.push_back(-(rate - tail) / scale);  // mixture >= rate - tail
    };

    add_mixture(0.0, s0);
    add_mixture(mu_x, sx);
    add_mixture(mu_y, sy);

    for (int k = 0; k < n; ++k) {
        std::vector<double> row(n, 0.0);
        row[k] = 1.0;
        a.push_back(row);
        b.push_back(1.0 / scale);  // Y_k <= 1
    }

    const LpSolution sol = solve_lp(c, a, b);
    YieldLpResult out;
    if (sol.status != LpSolution::Status::Optimal) {
        out.feasible = false;
        return out;
    }
    out.y1 = sol.objective * scale;
    out.yields = sol.x;
    for (double& y : out.yields) y *= scale;
    return out;
}

} // namespace tfqkd
