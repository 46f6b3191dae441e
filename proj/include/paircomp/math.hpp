#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace paircomp {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kLogTwoPi = 1.83787706640934548356065947281123527;
inline constexpr double kSqrt2 = 1.41421356237309504880168872420969808;

/// Logistic sigmoid 1/(1+e^{-t}), stable for large |t|.
inline double logistic(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// d/dt logistic(t) = logistic(t) * logistic(-t).
inline double logistic_deriv(double t) {
    const double s = logistic(-std::fabs(t));
    return s * (1.0 - s);
}

/// log(1 + e^t), stable for large |t|.
inline double softplus(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

inline double normal_pdf(double x, double mean = 0.0, double sigma = 1.0) {
    const double z = (x - mean) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * kPi));
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / kSqrt2);
}

/// log Phi(z) without underflow. Direct erfc down to z = -30, then the
/// Mills-ratio asymptotic series (truncated where its terms stop shrinking
/// in double precision).
inline double log_normal_cdf(double z) {
    if (z >= -30.0) {
        return std::log(0.5 * std::erfc(-z / kSqrt2));
    }
    const double y2 = z * z;
    double term = 1.0;
    double series = 1.0;
    // series = 1 - 1/z^2 + 3/z^4 - 15/z^6 + ...
    for (int k = 1; k <= 8; ++k) {
        term *= -(2.0 * k - 1.0) / y2;
        series += term;
    }
    return -0.5 * y2 - std::log(-z) - 0.5 * kLogTwoPi + std::log(series);
}

/// Maximize a unimodal function on [a, b] by golden-section search.
/// Returns the abscissa of the maximum located to within `tol`.
inline double golden_section_max(const std::function<double(double)>& f,
                                 double a, double b, double tol = 1e-10) {
    static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (positive half).
inline constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kGK15Weights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double kG7Weights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

inline void gk15(const std::function<double(double)>& f, double a, double b,
                 double& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double resk = 0.0;
    double resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double x = kGK15Nodes[i];
        double fsum;
        if (i == 7) {
            fsum = f(c);
        } else {
            fsum = f(c - h * x) + f(c + h * x);
        }
        resk += kGK15Weights[i] * fsum;
        // odd-index Kronrod nodes (and the center) are the Gauss-7 nodes
        if (i % 2 == 1) resg += kG7Weights[i / 2] * fsum;
    }
    kronrod = resk * h;
    err = std::fabs((resk - resg) * h);
}

inline double adaptive_gk(const std::function<double(double)>& f, double a,
                          double b, double abs_tol, int depth) {
    double val, err;
    gk15(f, a, b, val, err);
    if (err <= abs_tol || depth >= 48) return val;
    const double c = 0.5 * (a + b);
    return adaptive_gk(f, a, c, 0.5 * abs_tol, depth + 1) +
           adaptive_gk(f, c, b, 0.5 * abs_tol, depth + 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G7,K15) quadrature with absolute tolerance.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double abs_tol = 1e-9) {
    if (!(a < b)) return 0.0;
    return detail::adaptive_gk(f, a, b, abs_tol, 0);
}

/// Type-7 quantile (linear interpolation) of a sorted ascending sample.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace paircomp
