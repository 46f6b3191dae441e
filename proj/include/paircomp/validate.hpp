#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "paircomp/math.hpp"
#include "paircomp/model.hpp"

namespace paircomp {

struct AssumptionCheck {
    bool pass = true;
    double worst_violation = 0.0;
};

/// Numerical verdicts for the four validity assumptions plus strict
/// log-concavity, probed on a y-grid.
///
/// Predictability monotonicity is checked on cumulative probabilities,
/// P(X <= x; y) nonincreasing in y: larger relative scores push the outcome
/// distribution upward. The per-outcome densities themselves are not
/// monotone for the multi-outcome and continuous families (the mass of an
/// intermediate losing outcome rises before it falls), so the cumulative
/// form is the one all valid models actually satisfy.
struct ValidityReport {
    AssumptionCheck normalization;   // sum/integral of f(.; y) equals 1
    AssumptionCheck symmetry;        // f(x; y) = f(-x; -y)
    AssumptionCheck monotonicity;    // P(X <= x; y) nonincreasing in y
    AssumptionCheck boundedness;     // sup_y f(x; y) finite (grid proxy)
    AssumptionCheck log_concavity;   // g2(x; y) < 0 everywhere probed
    std::string grid_description;

    bool all_pass() const {
        return normalization.pass && symmetry.pass && monotonicity.pass &&
               boundedness.pass && log_concavity.pass;
    }
};

struct ValidityTolerances {
    double normalization_finite = 1e-12;
    double normalization_continuous = 1e-6;
    double symmetry = 1e-12;
    double monotonicity = 1e-12;
    double boundedness_cap = 1e6;
    double quadrature_abs_tol = 1e-9;
};

namespace detail {

inline std::vector<double> x_probes(const LinkModel& model) {
    if (model.space.kind == OutcomeSpace::Kind::finite) {
        return model.space.values;
    }
    const double s = model.integration_halfwidth > 0.0
                         ? model.integration_halfwidth / 10.0
                         : 1.0;
    return {-4.0 * s, -2.0 * s, -s, -0.5 * s, 0.0, 0.5 * s, s, 2.0 * s, 4.0 * s};
}

inline double total_mass(const LinkModel& model, double y, double quad_tol) {
    if (model.space.kind == OutcomeSpace::Kind::finite) {
        double sum = 0.0;
        for (double x : model.space.values) sum += model.density(x, y);
        return sum;
    }
    const double w = model.integration_halfwidth > 0.0 ? model.integration_halfwidth : 10.0;
    const double lo = std::max(model.space.lo, y - w);
    const double hi = std::min(model.space.hi, y + w);
    return integrate([&](double x) { return model.density(x, y); }, lo, hi, quad_tol);
}

inline double cumulative_mass(const LinkModel& model, double x, double y, double quad_tol) {
    if (model.space.kind == OutcomeSpace::Kind::finite) {
        double sum = 0.0;
        for (double v : model.space.values) {
            if (v <= x) sum += model.density(v, y);
        }
        return sum;
    }
    if (model.cdf_fn) return model.cdf_fn(x, y);
    const double w = model.integration_halfwidth > 0.0 ? model.integration_halfwidth : 10.0;
    const double lo = std::max(model.space.lo, y - w);
    if (x <= lo) return 0.0;
    return integrate([&](double t) { return model.density(t, y); }, lo, x, quad_tol);
}

}  // namespace detail

/// Checks Assumptions 1-4 and strict log-concavity of `model` over `y_grid`
/// (which must be nonempty and symmetric about 0). Failures are reported,
/// never thrown.
inline ValidityReport validate_model(const LinkModel& model,
                                     const std::vector<double>& y_grid,
                                     const ValidityTolerances& tol = {}) {
    if (y_grid.empty()) throw std::invalid_argument("validate_model: empty y grid");
    std::vector<double> grid = y_grid;
    std::sort(grid.begin(), grid.end());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::fabs(grid[i] + grid[grid.size() - 1 - i]) > 1e-9) {
            throw std::invalid_argument("validate_model: y grid must be symmetric about 0");
        }
    }

    ValidityReport report;
    const bool finite = model.space.kind == OutcomeSpace::Kind::finite;
    const double norm_tol =
        finite ? tol.normalization_finite : tol.normalization_continuous;
    const std::vector<double> probes = detail::x_probes(model);

    double worst_norm = 0.0;
    double worst_sym = 0.0;
    double worst_mono = 0.0;
    double max_density = 0.0;
    double worst_g2 = -std::numeric_limits<double>::infinity();

    std::vector<double> prev_cum;
    std::vector<double> cur_cum(probes.size());
    for (std::size_t yi = 0; yi < grid.size(); ++yi) {
        const double y = grid[yi];
        worst_norm = std::max(
            worst_norm, std::fabs(detail::total_mass(model, y, tol.quadrature_abs_tol) - 1.0));
        for (std::size_t xi = 0; xi < probes.size(); ++xi) {
            const double x = probes[xi];
            const double fxy = model.density(x, y);
            max_density = std::max(max_density, fxy);
            worst_sym = std::max(worst_sym, std::fabs(fxy - model.density(-x, -y)));
            worst_g2 = std::max(worst_g2, model.score_slope_fn(x, y));
            cur_cum[xi] = detail::cumulative_mass(model, x, y, tol.quadrature_abs_tol);
            if (yi > 0) {
                // Assumption 3: larger y makes outcomes stochastically larger
                worst_mono = std::max(worst_mono, cur_cum[xi] - prev_cum[xi]);
            }
        }
        prev_cum = cur_cum;
    }

    report.normalization = {worst_norm <= norm_tol, worst_norm};
    report.symmetry = {worst_sym <= tol.symmetry, worst_sym};
    report.monotonicity = {worst_mono <= tol.monotonicity, worst_mono};
    const bool bounded = std::isfinite(max_density) && max_density < tol.boundedness_cap;
    report.boundedness = {bounded, bounded ? 0.0 : max_density};
    report.log_concavity = {worst_g2 < 0.0, std::max(worst_g2, 0.0)};

    std::ostringstream desc;
    desc << "y in [" << grid.front() << ", " << grid.back() << "], " << grid.size()
         << " points; x probes: " << probes.size()
         << (finite ? " (outcome list)" : " (continuous samples)");
    report.grid_description = desc.str();
    return report;
}

/// Uniform grid |y| <= half_range with the given step, symmetric about 0.
inline std::vector<double> symmetric_grid(double half_range, double step) {
    std::vector<double> grid;
    const auto half_count = static_cast<long>(std::floor(half_range / step + 1e-12));
    for (long k = -half_count; k <= half_count; ++k) {
        grid.push_back(static_cast<double>(k) * step);
    }
    return grid;
}

}  // namespace paircomp
