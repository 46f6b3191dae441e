#pragma once

// Independent oracles used by the tests: finite differences for the
// derivative checks, a dense Jacobi eigensolver for the Hessian checks, a
// chi-square statistic for sampling laws, and a nested grid search for tiny
// MLE problems. None of these share code with the paths they verify.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "paircomp/estimator.hpp"
#include "paircomp/existence.hpp"
#include "paircomp/model.hpp"
#include "paircomp/simulate.hpp"

namespace testutil {

using paircomp::ComparisonDataset;
using paircomp::LinkModel;
using paircomp::Rng;
using paircomp::ScoreVector;

inline double fd_score(const LinkModel& m, double x, double y, double h = 1e-5) {
    return (m.log_density_fn(x, y + h) - m.log_density_fn(x, y - h)) / (2.0 * h);
}

inline double fd_score_slope(const LinkModel& m, double x, double y, double h = 1e-5) {
    return (m.score_fn(x, y + h) - m.score_fn(x, y - h)) / (2.0 * h);
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi sweeps, ascending.
inline std::vector<double> symmetric_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        }
        if (off < 1e-28) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double app = a[p][p];
                const double aqq = a[q][q];
                const double apq = a[p][q];
                a[p][p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[q][q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[p][q] = a[q][p] = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = a[p][k] = c * akp - s * akq;
                    a[k][q] = a[q][k] = s * akp + c * akq;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t k = 0; k < n; ++k) eig[k] = a[k][k];
    std::sort(eig.begin(), eig.end());
    return eig;
}

inline double chi_square_stat(const std::vector<long long>& counts,
                              const std::vector<double>& probs) {
    long long total = 0;
    for (const long long c : counts) total += c;
    double stat = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double expected = static_cast<double>(total) * probs[k];
        const double diff = static_cast<double>(counts[k]) - expected;
        stat += diff * diff / expected;
    }
    return stat;
}

/// Upper 0.001 critical values of the chi-square distribution (table values).
inline double chi2_crit_001(int dof) {
    switch (dof) {
        case 1: return 10.828;
        case 2: return 13.816;
        case 3: return 16.266;
        case 4: return 18.467;
        case 5: return 20.515;
        default: throw std::invalid_argument("chi2_crit_001: dof out of table");
    }
}

struct Instance {
    ScoreVector truth;
    ComparisonDataset data;
};

inline Instance random_instance(Rng& rng, const LinkModel& model, std::int32_t n, double p,
                                double m_range = 1.0, std::int32_t t = 1) {
    Instance inst;
    inst.truth = paircomp::generate_scores(n, m_range, rng);
    const auto graph = paircomp::generate_graph(n, p, t, rng);
    inst.data = paircomp::generate_dataset(inst.truth, graph, model, rng);
    return inst;
}

inline Instance random_connected_instance(Rng& rng, const LinkModel& model, std::int32_t n,
                                          double p, double m_range = 1.0,
                                          std::int32_t t = 1) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Instance inst = random_instance(rng, model, n, p, m_range, t);
        if (!inst.data.empty() && paircomp::check_condition1(inst.data).holds) return inst;
    }
    throw std::runtime_error("random_connected_instance: no connected instance found");
}

/// Nested grid search for the n = 3 MLE over (v2, v3) starting from
/// [-6, 6]^2, shrinking the box around the argmax until the resolution drops
/// below 1e-4.
inline std::pair<double, double> grid_search_mle_n3(const ComparisonDataset& dataset,
                                                    const LinkModel& model) {
    ScoreVector v;
    v.u = {0.0, 0.0, 0.0};
    double c2 = 0.0;
    double c3 = 0.0;
    double half = 6.0;
    for (;;) {
        const double step = half / 20.0;
        double best_l = -std::numeric_limits<double>::infinity();
        double best2 = c2;
        double best3 = c3;
        for (int a = -20; a <= 20; ++a) {
            for (int b = -20; b <= 20; ++b) {
                v.u[1] = c2 + step * a;
                v.u[2] = c3 + step * b;
                const double l = paircomp::log_likelihood(dataset, model, v);
                if (l > best_l) {
                    best_l = l;
                    best2 = v.u[1];
                    best3 = v.u[2];
                }
            }
        }
        c2 = best2;
        c3 = best3;
        if (step <= 5e-5) break;
        half = 2.0 * step;
    }
    return {c2, c3};
}

}  // namespace testutil
