#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "paircomp/math.hpp"
#include "paircomp/model.hpp"

namespace paircomp {

/// The rate constants of the uniform-consistency bound at dynamic range M.
/// c2 is the score bound over |y| <= M; c3/c4 bound |g2| over |y| <= M+1;
/// c5 is the sub-gaussian norm used instead of c2 for unbounded scores.
struct ConstantsBundle {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    bool c2_bounded = true;
    std::optional<double> c5;
    double m_range = 0.0;
    double grid_step = 0.0;  // y resolution behind the extrema searches

    enum class RateForm { bounded_c2, subgaussian_c5 };
    RateForm rate_form = RateForm::bounded_c2;
};

/// Sparsity and dynamic-range schedules for a given subject count.
struct Schedule {
    std::int64_t n = 0;
    double p_dense = 0.0;         // 1/2
    double p_mid = 0.0;           // sqrt((log n)^3 / n)
    double p_sparse = 0.0;        // (log n)^3 / n
    double p_connectivity = 0.0;  // (log n) / n
    double m_unit = 1.0;
    double m_half_loglog = 0.0;   // (log log n) / 2
    double m_two_loglog = 0.0;    // 2 log log n
};

/// C1: probability that the strongest subject beats (or ties) the weakest in
/// one comparison, i.e. the mass of f(.; M) on [0, infinity).
inline double global_discrepancy(const LinkModel& model, double m_range) {
    if (!(m_range >= 0.0)) {
        throw std::invalid_argument("global_discrepancy: M must be nonnegative");
    }
    if (model.space.kind == OutcomeSpace::Kind::finite) {
        double mass = 0.0;
        for (double x : model.space.values) {
            if (x >= 0.0) mass += model.density(x, m_range);
        }
        return mass;
    }
    if (model.name == "normal") {
        return normal_cdf(m_range / model.params.at("sigma"));
    }
    const double w = model.integration_halfwidth > 0.0 ? model.integration_halfwidth : 10.0;
    const double hi = std::min(model.space.hi, m_range + w);
    return integrate([&](double x) { return model.density(x, m_range); }, 0.0, hi, 1e-9);
}

namespace detail {

// Extremum of fn over [-range, range]: uniform grid of the given step with
// golden-section refinement around every interior candidate, so the result
// is deterministic for a fixed resolution.
inline double grid_extremum(const std::function<double(double)>& fn, double range,
                            double step, bool maximize) {
    const double sign = maximize ? 1.0 : -1.0;
    auto signed_fn = [&](double y) { return sign * fn(y); };
    const auto half = static_cast<std::int64_t>(std::ceil(range / step));
    const double actual_step = half > 0 ? range / static_cast<double>(half) : 0.0;
    double best_val = signed_fn(-range);
    std::int64_t best_idx = -half;
    for (std::int64_t k = -half + 1; k <= half; ++k) {
        const double v = signed_fn(static_cast<double>(k) * actual_step);
        if (v > best_val) {
            best_val = v;
            best_idx = k;
        }
    }
    if (half == 0) return sign * best_val;
    const double lo = std::max(-range, static_cast<double>(best_idx - 1) * actual_step);
    const double hi = std::min(range, static_cast<double>(best_idx + 1) * actual_step);
    const double refined = golden_section_max(signed_fn, lo, hi, 1e-12);
    return sign * std::max(best_val, signed_fn(refined));
}

inline std::vector<double> continuous_x_probes(const LinkModel& model) {
    const double s = model.integration_halfwidth > 0.0 ? model.integration_halfwidth / 10.0 : 1.0;
    return {-4.0 * s, -2.0 * s, -s, -0.5 * s, 0.0, 0.5 * s, s, 2.0 * s, 4.0 * s};
}

}  // namespace detail

/// C5: sup over |y| <= M of the psi_2 norm of g(X_y, y), each norm solved by
/// bisection of E[exp(g^2/t^2)] = 2. Throws std::runtime_error when the
/// bracket cannot be established (not sub-gaussian on the probed range).
inline double sub_gaussian_norm(const LinkModel& model, double m_range,
                                double y_step = 2e-2) {
    if (!(m_range >= 0.0)) {
        throw std::invalid_argument("sub_gaussian_norm: M must be nonnegative");
    }
    const bool finite = model.space.kind == OutcomeSpace::Kind::finite;
    const double w = model.integration_halfwidth > 0.0 ? model.integration_halfwidth : 10.0;

    // The mgf integrand is divergent below the psi_2 root, so the bisection
    // must see huge-but-cheap values there: a fixed composite rule (not the
    // adaptive one) keeps every evaluation at bounded cost.
    auto expectation = [&](double y, const std::function<double(double)>& h) {
        if (finite) {
            double sum = 0.0;
            for (double x : model.space.values) sum += model.density(x, y) * h(x);
            return sum;
        }
        const double lo = std::max(model.space.lo, y - 3.0 * w);
        const double hi = std::min(model.space.hi, y + 3.0 * w);
        const int panels = 120;
        const double width = (hi - lo) / panels;
        double sum = 0.0;
        for (int k = 0; k < panels; ++k) {
            double val, err;
            detail::gk15([&](double x) { return model.density(x, y) * h(x); },
                         lo + k * width, lo + (k + 1) * width, val, err);
            sum += val;
        }
        return sum;
    };

    auto psi2_at = [&](double y) {
        const double second_moment = expectation(y, [&](double x) {
            const double g = model.score_fn(x, y);
            return g * g;
        });
        if (second_moment <= 0.0) return 0.0;
        auto mgf_minus_two = [&](double t) {
            const double t2 = t * t;
            return expectation(y, [&](double x) {
                       const double g = model.score_fn(x, y);
                       return std::exp(std::min(g * g / t2, 700.0));
                   }) -
                   2.0;
        };
        // Jensen gives E[exp(g^2/t^2)] >= 2 at t_lo, so the root is above it.
        double t_lo = std::sqrt(second_moment / std::log(2.0));
        double t_hi = t_lo;
        int expansions = 0;
        while (mgf_minus_two(t_hi) > 0.0) {
            t_hi *= 2.0;
            if (++expansions > 60) {
                throw std::runtime_error("sub_gaussian_norm: bisection bracket not found");
            }
        }
        if (t_hi == t_lo) return t_lo;
        for (int iter = 0; iter < 100 && (t_hi - t_lo) > 1e-12 * t_hi; ++iter) {
            const double mid = 0.5 * (t_lo + t_hi);
            (mgf_minus_two(mid) > 0.0 ? t_lo : t_hi) = mid;
        }
        return 0.5 * (t_lo + t_hi);
    };

    return detail::grid_extremum(psi2_at, m_range, y_step, /*maximize=*/true);
}

/// Computes C1-C4 (and C5 when the score is unbounded) at dynamic range M.
/// Extrema over y are taken on a grid of the given step with golden-section
/// refinement; extrema over x are exact for finite A.
inline ConstantsBundle constants(const LinkModel& model, double m_range,
                                 double grid_step = 1e-3) {
    if (!(m_range >= 0.0)) {
        throw std::invalid_argument("constants: M must be nonnegative");
    }
    ConstantsBundle bundle;
    bundle.m_range = m_range;
    bundle.grid_step = grid_step;
    bundle.c1 = global_discrepancy(model, m_range);

    const bool finite = model.space.kind == OutcomeSpace::Kind::finite;
    const std::vector<double> xs =
        finite ? model.space.values : detail::continuous_x_probes(model);

    if (model.score_bounded) {
        double c2 = 0.0;
        for (double x : xs) {
            c2 = std::max(c2, detail::grid_extremum(
                                  [&](double y) { return std::fabs(model.score_fn(x, y)); },
                                  m_range, grid_step, true));
        }
        bundle.c2 = c2;
        bundle.c2_bounded = true;
        bundle.rate_form = ConstantsBundle::RateForm::bounded_c2;
    } else {
        bundle.c2 = std::numeric_limits<double>::infinity();
        bundle.c2_bounded = false;
        bundle.c5 = sub_gaussian_norm(model, m_range);
        bundle.rate_form = ConstantsBundle::RateForm::subgaussian_c5;
    }

    double c3 = 0.0;
    double c4 = std::numeric_limits<double>::infinity();
    for (double x : xs) {
        auto abs_g2 = [&](double y) { return std::fabs(model.score_slope_fn(x, y)); };
        c3 = std::max(c3, detail::grid_extremum(abs_g2, m_range + 1.0, grid_step, true));
        c4 = std::min(c4, detail::grid_extremum(abs_g2, m_range + 1.0, grid_step, false));
    }
    bundle.c3 = c3;
    bundle.c4 = c4;
    return bundle;
}

/// Delta_n = K * C3 / C4^2 * sqrt(log n / (n p)) * log n / log(n p),
/// with K = C2 for bounded scores and K = C5 otherwise.
inline double delta_n(const ConstantsBundle& bundle, std::int64_t n, double p) {
    if (n < 3) throw std::invalid_argument("delta_n: n must be >= 3");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("delta_n: p must be in (0,1]");
    const double np = static_cast<double>(n) * p;
    if (!(np > 1.0)) {
        throw std::invalid_argument("delta_n: need n*p > 1 (log np must be positive)");
    }
    double rate_constant = bundle.c2;
    if (!bundle.c2_bounded) {
        if (!bundle.c5) {
            throw std::logic_error("delta_n: unbounded C2 but no C5 in the bundle");
        }
        rate_constant = *bundle.c5;
    }
    const double log_n = std::log(static_cast<double>(n));
    return rate_constant * bundle.c3 / (bundle.c4 * bundle.c4) *
           std::sqrt(log_n / np) * (log_n / std::log(np));
}

/// The existence-rate ratio log n / (n p |log C1|); infinite when C1 = 1.
inline double existence_rate_term(std::int64_t n, double p, double c1) {
    if (n < 2) throw std::invalid_argument("existence_rate_term: n must be >= 2");
    if (!(p > 0.0 && p <= 1.0)) {
        throw std::invalid_argument("existence_rate_term: p must be in (0,1]");
    }
    if (!(c1 >= 0.5 && c1 <= 1.0)) {
        throw std::invalid_argument("existence_rate_term: C1 must lie in [1/2, 1]");
    }
    if (c1 == 1.0) return std::numeric_limits<double>::infinity();
    return std::log(static_cast<double>(n)) /
           (static_cast<double>(n) * p * std::fabs(std::log(c1)));
}

/// The p_n / M_n schedules used by the simulation protocol. Probabilities
/// are clamped to 1 for the small n where the formulas exceed it.
inline Schedule schedule(std::int64_t n) {
    if (n < 3) throw std::invalid_argument("schedule: n must be >= 3");
    Schedule s;
    s.n = n;
    const double log_n = std::log(static_cast<double>(n));
    s.p_dense = 0.5;
    s.p_sparse = std::min(1.0, log_n * log_n * log_n / static_cast<double>(n));
    s.p_mid = std::min(1.0, std::sqrt(log_n * log_n * log_n / static_cast<double>(n)));
    s.p_connectivity = std::min(1.0, log_n / static_cast<double>(n));
    s.m_unit = 1.0;
    s.m_half_loglog = 0.5 * std::log(log_n);
    s.m_two_loglog = 2.0 * std::log(log_n);
    return s;
}

}  // namespace paircomp
