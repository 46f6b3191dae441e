#pragma once

#include <cmath>
#include <stdexcept>

#include "paircomp/dataset.hpp"
#include "paircomp/model.hpp"
#include "paircomp/rng.hpp"

namespace paircomp {

/// Latent scores: i.i.d. Uniform[-M/2, M/2], then anchored at u[0] = 0.
/// The anchoring shift leaves all score differences unchanged, so the
/// dynamic range max |u_i - u_j| stays at most M.
inline ScoreVector generate_scores(std::int32_t n, double m_range, Rng& rng) {
    if (n < 2) throw std::invalid_argument("generate_scores: n must be >= 2");
    if (!(m_range > 0.0)) throw std::invalid_argument("generate_scores: M must be positive");
    ScoreVector sv;
    sv.u.resize(static_cast<std::size_t>(n));
    for (auto& v : sv.u) v = rng.uniform(-0.5 * m_range, 0.5 * m_range);
    sv.anchor();
    return sv;
}

namespace detail {

// Maps a linear index k to the k-th unordered pair (i, j), i < j, in
// lexicographic order over an n-vertex set.
inline void pair_from_index(std::int64_t k, std::int32_t n, std::int32_t& i,
                            std::int32_t& j) {
    const double nn = static_cast<double>(n);
    double guess = std::floor(
        ((2.0 * nn - 1.0) - std::sqrt((2.0 * nn - 1.0) * (2.0 * nn - 1.0) - 8.0 * static_cast<double>(k))) /
        2.0);
    auto row_start = [n](std::int64_t r) {
        return r * (2 * static_cast<std::int64_t>(n) - r - 1) / 2;
    };
    auto r = static_cast<std::int64_t>(guess);
    while (r > 0 && row_start(r) > k) --r;
    while (row_start(r + 1) <= k) ++r;
    i = static_cast<std::int32_t>(r);
    j = static_cast<std::int32_t>(k - row_start(r) + r + 1);
}

}  // namespace detail

/// Comparison multiplicities: each unordered pair independently Bin(T, p).
/// Pairs are visited by geometric skipping over the event "at least one
/// comparison" (probability 1 - (1-p)^T), then the multiplicity is drawn
/// from the conditional binomial; the joint law is exactly pairwise Bin(T, p).
inline ComparisonGraph generate_graph(std::int32_t n, double p, std::int32_t t_max,
                                      Rng& rng) {
    if (n < 2) throw std::invalid_argument("generate_graph: n must be >= 2");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("generate_graph: p must be in [0,1]");
    if (t_max < 1) throw std::invalid_argument("generate_graph: T must be >= 1");

    ComparisonGraph graph;
    graph.n = n;
    graph.max_per_pair = t_max;
    graph.p_provenance = p;

    const std::int64_t n_pairs = static_cast<std::int64_t>(n) * (n - 1) / 2;
    const double q = -std::expm1(static_cast<double>(t_max) * std::log1p(-p));
    if (q <= 0.0) return graph;

    // conditional pmf of Bin(T, p) given >= 1 success
    std::vector<double> cond_cdf(static_cast<std::size_t>(t_max), 0.0);
    if (p >= 1.0) {
        // Bin(T, 1) is the point mass at T
        cond_cdf[static_cast<std::size_t>(t_max - 1)] = 1.0;
    } else {
        double pmf = std::pow(1.0 - p, t_max);
        double acc = 0.0;
        for (std::int32_t k = 1; k <= t_max; ++k) {
            pmf *= (static_cast<double>(t_max - k + 1) / k) * (p / (1.0 - p));
            acc += pmf / q;
            cond_cdf[static_cast<std::size_t>(k - 1)] = acc;
        }
    }

    std::int64_t pos = 0;
    while (pos < n_pairs) {
        const std::int64_t skip = rng.geometric_skip(q);
        if (skip < 0 || pos + skip >= n_pairs) break;
        pos += skip;
        std::int32_t i, j;
        detail::pair_from_index(pos, n, i, j);
        const double u = rng.uniform();
        std::int32_t mult = t_max;
        for (std::int32_t k = 1; k <= t_max; ++k) {
            if (u < cond_cdf[static_cast<std::size_t>(k - 1)]) {
                mult = k;
                break;
            }
        }
        graph.pairs.push_back({i, j, mult});
        ++pos;
    }
    return graph;
}

/// Draws the comparison outcomes: multiplicity-many independent draws from
/// f(.; u_i - u_j) for every pair of the graph, in pair order.
inline ComparisonDataset generate_dataset(const ScoreVector& scores,
                                          const ComparisonGraph& graph,
                                          const LinkModel& model, Rng& rng) {
    if (static_cast<std::size_t>(graph.n) != scores.size()) {
        throw std::invalid_argument("generate_dataset: graph and scores disagree on n");
    }
    ComparisonDataset dataset;
    dataset.n = graph.n;
    dataset.model_provenance = ModelSpec{model.name, model.params};
    dataset.records.reserve(static_cast<std::size_t>(graph.total_comparisons()));
    for (const auto& pc : graph.pairs) {
        const double y = scores.u[static_cast<std::size_t>(pc.i)] -
                         scores.u[static_cast<std::size_t>(pc.j)];
        for (std::int32_t t = 0; t < pc.count; ++t) {
            dataset.records.push_back({pc.i, pc.j, sample_outcome(model, y, rng)});
        }
    }
    return dataset;
}

}  // namespace paircomp
