#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "paircomp/dataset.hpp"
#include "paircomp/existence.hpp"
#include "paircomp/model.hpp"

namespace paircomp {

struct FitOptions {
    double gradient_tol = 1e-8;        // infinity norm over free coordinates
    int max_iterations = 200;
    double divergence_bound = 50.0;    // on the infinity norm of the iterate
    double backtrack_factor = 0.5;
    double sufficient_increase = 1e-4;
    double cg_rel_tol = 1e-10;
    // Convergence additionally requires the last accepted step to be small
    // relative to the iterate; a vanishing gradient alone cannot distinguish
    // a maximizer from a likelihood whose supremum sits at infinity.
    double convergence_step_tol = 1e-3;
    bool precheck_existence = true;
    TiePolicy tie_policy = TiePolicy::bidirectional;
    std::optional<std::vector<double>> initial;  // warm start, first entry 0
    bool track_objective = false;
};

enum class FitStatus { converged, max_iterations, diverged, nonexistent_blocked };

inline const char* to_string(FitStatus s) {
    switch (s) {
        case FitStatus::converged: return "converged";
        case FitStatus::max_iterations: return "max_iterations";
        case FitStatus::diverged: return "diverged";
        case FitStatus::nonexistent_blocked: return "nonexistent_blocked";
    }
    return "unknown";
}

struct FitResult {
    ScoreVector estimate;
    double log_likelihood = 0.0;
    double grad_inf_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    FitStatus status = FitStatus::max_iterations;
    std::vector<double> objective_history;  // filled when track_objective
};

namespace detail {

// Records of one pair aggregated: distinct outcomes with multiplicities.
struct PairBlock {
    std::int32_t i = 0;
    std::int32_t j = 0;
    std::vector<std::pair<double, std::int32_t>> outcomes;
    std::int64_t total = 0;
};

inline std::vector<PairBlock> build_pair_blocks(const ComparisonDataset& dataset) {
    const auto pair_less = [](const ComparisonRecord& a, const ComparisonRecord& b) {
        return a.i < b.i || (a.i == b.i && a.j < b.j);
    };
    // generated datasets arrive pair-sorted; avoid the copy in that case
    const std::vector<ComparisonRecord>* source = &dataset.records;
    std::vector<ComparisonRecord> resorted;
    if (!std::is_sorted(source->begin(), source->end(), pair_less)) {
        resorted = dataset.records;
        std::sort(resorted.begin(), resorted.end(), pair_less);
        source = &resorted;
    }
    std::vector<PairBlock> blocks;
    for (const auto& rec : *source) {
        if (blocks.empty() || blocks.back().i != rec.i || blocks.back().j != rec.j) {
            blocks.push_back({rec.i, rec.j, {}, 0});
        }
        auto& blk = blocks.back();
        blk.outcomes.emplace_back(rec.outcome, 1);
        blk.total++;
    }
    // canonical order inside each block: outcomes ascending, merged counts
    for (auto& blk : blocks) {
        std::sort(blk.outcomes.begin(), blk.outcomes.end());
        std::size_t keep = 0;
        for (std::size_t k = 0; k < blk.outcomes.size(); ++k) {
            if (k > 0 && blk.outcomes[k].first == blk.outcomes[keep - 1].first) {
                blk.outcomes[keep - 1].second += blk.outcomes[k].second;
            } else {
                blk.outcomes[keep++] = blk.outcomes[k];
            }
        }
        blk.outcomes.resize(keep);
    }
    return blocks;
}

inline double blocks_log_likelihood(const std::vector<PairBlock>& blocks,
                                    const LinkModel& model,
                                    const std::vector<double>& v) {
    double total = 0.0;
    for (const auto& blk : blocks) {
        const double y = v[static_cast<std::size_t>(blk.i)] - v[static_cast<std::size_t>(blk.j)];
        for (const auto& [x, count] : blk.outcomes) {
            total += static_cast<double>(count) * model.log_density_fn(x, y);
        }
    }
    return total;
}

}  // namespace detail

/// l(v) = sum over records of log f(x_ij; v_i - v_j).
inline double log_likelihood(const ComparisonDataset& dataset, const LinkModel& model,
                             const ScoreVector& v) {
    if (v.size() != static_cast<std::size_t>(dataset.n)) {
        throw std::invalid_argument("log_likelihood: score vector length mismatch");
    }
    double total = 0.0;
    for (const auto& rec : dataset.records) {
        total += model.log_density_fn(rec.outcome, v.u[static_cast<std::size_t>(rec.i)] -
                                                       v.u[static_cast<std::size_t>(rec.j)]);
    }
    return total;
}

/// Gradient of l: the i-th entry sums g over records incident to i, evaluated
/// from i's perspective (records are stored i < j; the j side uses the
/// reflection g(x; y) = -g(-x; -y)).
inline std::vector<double> gradient(const ComparisonDataset& dataset,
                                    const LinkModel& model, const ScoreVector& v) {
    if (v.size() != static_cast<std::size_t>(dataset.n)) {
        throw std::invalid_argument("gradient: score vector length mismatch");
    }
    std::vector<double> grad(v.size(), 0.0);
    for (const auto& rec : dataset.records) {
        const double y = v.u[static_cast<std::size_t>(rec.i)] - v.u[static_cast<std::size_t>(rec.j)];
        const double g = model.score_fn(rec.outcome, y);
        grad[static_cast<std::size_t>(rec.i)] += g;
        grad[static_cast<std::size_t>(rec.j)] -= g;
    }
    return grad;
}

/// The Hessian of l: a negated weighted graph Laplacian. Off-diagonal
/// H_ij = -sum of g2 over the pair's records (positive), diagonal
/// H_ii = sum of g2 over incident records (negative); rows sum to zero.
struct SparseHessian {
    std::int32_t n = 0;
    std::vector<double> diag;
    struct Entry {
        std::int32_t i;
        std::int32_t j;
        double value;
    };
    std::vector<Entry> off_diag;  // i < j

    std::vector<std::vector<double>> to_dense() const {
        std::vector<std::vector<double>> m(static_cast<std::size_t>(n),
                                           std::vector<double>(static_cast<std::size_t>(n), 0.0));
        for (std::int32_t k = 0; k < n; ++k) {
            m[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] =
                diag[static_cast<std::size_t>(k)];
        }
        for (const auto& e : off_diag) {
            m[static_cast<std::size_t>(e.i)][static_cast<std::size_t>(e.j)] = e.value;
            m[static_cast<std::size_t>(e.j)][static_cast<std::size_t>(e.i)] = e.value;
        }
        return m;
    }
};

inline SparseHessian hessian(const ComparisonDataset& dataset, const LinkModel& model,
                             const ScoreVector& v) {
    if (v.size() != static_cast<std::size_t>(dataset.n)) {
        throw std::invalid_argument("hessian: score vector length mismatch");
    }
    SparseHessian h;
    h.n = dataset.n;
    h.diag.assign(v.size(), 0.0);
    for (const auto& blk : detail::build_pair_blocks(dataset)) {
        const double y = v.u[static_cast<std::size_t>(blk.i)] - v.u[static_cast<std::size_t>(blk.j)];
        double g2_sum = 0.0;
        for (const auto& [x, count] : blk.outcomes) {
            g2_sum += static_cast<double>(count) * model.score_slope_fn(x, y);
        }
        h.diag[static_cast<std::size_t>(blk.i)] += g2_sum;
        h.diag[static_cast<std::size_t>(blk.j)] += g2_sum;
        h.off_diag.push_back({blk.i, blk.j, -g2_sum});
    }
    return h;
}

namespace detail {

// Solves (reduced Laplacian) * x = b over the free coordinates 1..n-1 by
// preconditioned CG with a Jacobi preconditioner. `weights` holds one
// positive weight per block; the anchor row/column is grounded out.
inline std::vector<double> cg_reduced_laplacian(const std::vector<PairBlock>& blocks,
                                                const std::vector<double>& weights,
                                                const std::vector<double>& b,
                                                std::size_t n, double rel_tol) {
    const std::size_t free_n = n - 1;
    std::vector<double> diag(n, 0.0);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        diag[static_cast<std::size_t>(blocks[k].i)] += weights[k];
        diag[static_cast<std::size_t>(blocks[k].j)] += weights[k];
    }
    auto matvec = [&](const std::vector<double>& x, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const auto i = static_cast<std::size_t>(blocks[k].i);
            const auto j = static_cast<std::size_t>(blocks[k].j);
            const double w = weights[k];
            const double xi = (i == 0) ? 0.0 : x[i - 1];
            const double xj = x[j - 1];  // j >= 1 always since i < j
            if (i != 0) out[i - 1] += w * (xi - xj);
            out[j - 1] += w * (xj - xi);
        }
    };

    std::vector<double> x(free_n, 0.0), r(b), z(free_n), p(free_n), ap(free_n);
    double b_norm2 = 0.0;
    for (double val : b) b_norm2 += val * val;
    if (b_norm2 == 0.0) return x;
    const double stop = rel_tol * rel_tol * b_norm2;

    auto precondition = [&](const std::vector<double>& rr, std::vector<double>& zz) {
        for (std::size_t k = 0; k < free_n; ++k) {
            const double d = diag[k + 1];
            zz[k] = d > 0.0 ? rr[k] / d : rr[k];
        }
    };
    precondition(r, z);
    p = z;
    double rz = 0.0;
    for (std::size_t k = 0; k < free_n; ++k) rz += r[k] * z[k];

    const std::size_t max_iter = 10 * n + 100;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        matvec(p, ap);
        double pap = 0.0;
        for (std::size_t k = 0; k < free_n; ++k) pap += p[k] * ap[k];
        if (pap <= 0.0) break;  // matrix not PD (disconnected graph): bail out
        const double alpha = rz / pap;
        double r_norm2 = 0.0;
        for (std::size_t k = 0; k < free_n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
            r_norm2 += r[k] * r[k];
        }
        if (r_norm2 <= stop) break;
        precondition(r, z);
        double rz_new = 0.0;
        for (std::size_t k = 0; k < free_n; ++k) rz_new += r[k] * z[k];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < free_n; ++k) p[k] = z[k] + beta * p[k];
    }
    return x;
}

}  // namespace detail

/// Maximizes l over {v : v_1 = 0} by damped Newton: the reduced Hessian is a
/// grounded weighted Laplacian (positive definite under Condition 1), solved
/// by Jacobi-preconditioned CG; backtracking line search keeps l strictly
/// increasing. Starts from v = 0 unless a warm start is given.
inline FitResult fit_newton(const ComparisonDataset& dataset, const LinkModel& model,
                            const FitOptions& opts = {}) {
    if (dataset.empty()) throw std::invalid_argument("fit_newton: empty dataset");
    const auto n = static_cast<std::size_t>(dataset.n);

    FitResult result;
    result.estimate.u.assign(n, 0.0);
    result.estimate.anchored = true;

    if (opts.precheck_existence) {
        const ExistenceVerdict verdict = check_condition1(dataset, opts.tie_policy);
        if (!verdict.holds) {
            result.status = FitStatus::nonexistent_blocked;
            return result;
        }
    }

    const std::vector<detail::PairBlock> blocks = detail::build_pair_blocks(dataset);
    std::vector<double> v(n, 0.0);
    if (opts.initial) {
        if (opts.initial->size() != n) {
            throw std::invalid_argument("fit_newton: warm start length mismatch");
        }
        v = *opts.initial;
        v[0] = 0.0;
    }

    std::vector<double> grad(n), weights(blocks.size()), rhs(n - 1);
    double current_l = detail::blocks_log_likelihood(blocks, model, v);
    if (opts.track_objective) result.objective_history.push_back(current_l);

    auto grad_and_weights = [&]() {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const auto& blk = blocks[k];
            const double y = v[static_cast<std::size_t>(blk.i)] - v[static_cast<std::size_t>(blk.j)];
            double g_sum = 0.0;
            double g2_sum = 0.0;
            for (const auto& [x, count] : blk.outcomes) {
                g_sum += static_cast<double>(count) * model.score_fn(x, y);
                g2_sum += static_cast<double>(count) * model.score_slope_fn(x, y);
            }
            grad[static_cast<std::size_t>(blk.i)] += g_sum;
            grad[static_cast<std::size_t>(blk.j)] -= g_sum;
            weights[k] = -g2_sum;
        }
    };
    auto grad_inf = [&]() {
        double worst = 0.0;
        for (std::size_t k = 1; k < n; ++k) worst = std::max(worst, std::fabs(grad[k]));
        return worst;
    };
    auto v_inf = [&]() {
        double worst = 0.0;
        for (double val : v) worst = std::max(worst, std::fabs(val));
        return worst;
    };

    double last_step_inf = 0.0;
    bool line_search_stalled = false;
    auto step_small = [&]() {
        return last_step_inf <= opts.convergence_step_tol * (1.0 + v_inf());
    };

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        grad_and_weights();
        result.grad_inf_norm = grad_inf();
        if (result.grad_inf_norm <= opts.gradient_tol &&
            (step_small() || line_search_stalled)) {
            result.status = FitStatus::converged;
            break;
        }
        if (v_inf() > opts.divergence_bound) {
            result.status = FitStatus::diverged;
            break;
        }

        for (std::size_t k = 1; k < n; ++k) rhs[k - 1] = grad[k];
        std::vector<double> dir =
            detail::cg_reduced_laplacian(blocks, weights, rhs, n, opts.cg_rel_tol);
        double slope = 0.0;
        for (std::size_t k = 1; k < n; ++k) slope += grad[k] * dir[k - 1];
        if (!(slope > 0.0) || !std::isfinite(slope)) {
            dir.assign(rhs.begin(), rhs.end());  // fall back to steepest ascent
            slope = 0.0;
            for (double g : rhs) slope += g * g;
        }

        // the Armijo test allows roundoff of the likelihood sum, otherwise the
        // final Newton steps (whose true gain is below one ulp of l) stall
        const double noise = 1e-12 * (1.0 + std::fabs(current_l));
        double alpha = 1.0;
        bool accepted = false;
        std::vector<double> trial(v);
        for (int bt = 0; bt < 64; ++bt) {
            for (std::size_t k = 1; k < n; ++k) trial[k] = v[k] + alpha * dir[k - 1];
            const double trial_l = detail::blocks_log_likelihood(blocks, model, trial);
            if (std::isfinite(trial_l) &&
                trial_l >= current_l + opts.sufficient_increase * alpha * slope - noise) {
                v.swap(trial);
                current_l = trial_l;
                accepted = true;
                last_step_inf = 0.0;
                for (std::size_t k = 0; k + 1 < n; ++k) {
                    last_step_inf = std::max(last_step_inf, std::fabs(alpha * dir[k]));
                }
                break;
            }
            alpha *= opts.backtrack_factor;
        }
        result.iterations = iter + 1;
        if (!accepted) {
            line_search_stalled = true;  // cannot move; the gradient check decides
            break;
        }
        if (opts.track_objective) result.objective_history.push_back(current_l);
    }

    if (result.status != FitStatus::converged && result.status != FitStatus::diverged) {
        grad_and_weights();
        result.grad_inf_norm = grad_inf();
        if (result.grad_inf_norm <= opts.gradient_tol &&
            (step_small() || line_search_stalled)) {
            result.status = FitStatus::converged;
        } else if (v_inf() > opts.divergence_bound) {
            result.status = FitStatus::diverged;
        } else {
            result.status = FitStatus::max_iterations;
        }
    }
    result.estimate.u = v;
    result.estimate.u[0] = 0.0;
    result.estimate.anchored = true;
    result.log_likelihood = detail::blocks_log_likelihood(blocks, model, v);
    return result;
}

/// Hunter's MM iteration for the Bradley-Terry family (binary outcomes),
/// kept as an independent cross-check of the Newton path. Works on the
/// positive weights gamma_i = e^{v_i}, renormalized so gamma_1 = 1.
inline FitResult fit_mm_bt(const ComparisonDataset& dataset, const FitOptions& opts = {}) {
    if (dataset.empty()) throw std::invalid_argument("fit_mm_bt: empty dataset");
    for (const auto& rec : dataset.records) {
        if (rec.outcome != 1.0 && rec.outcome != -1.0) {
            throw std::invalid_argument("fit_mm_bt: dataset is not binary Bradley-Terry");
        }
    }
    const LinkModel bt = make_model("bt");
    const auto n = static_cast<std::size_t>(dataset.n);

    FitResult result;
    result.estimate.u.assign(n, 0.0);
    result.estimate.anchored = true;

    if (opts.precheck_existence) {
        const ExistenceVerdict verdict = check_condition1(dataset, opts.tie_policy);
        if (!verdict.holds) {
            result.status = FitStatus::nonexistent_blocked;
            return result;
        }
    }

    const std::vector<detail::PairBlock> blocks = detail::build_pair_blocks(dataset);
    std::vector<double> wins(n, 0.0);
    for (const auto& rec : dataset.records) {
        if (rec.outcome > 0.0) {
            wins[static_cast<std::size_t>(rec.i)] += 1.0;
        } else {
            wins[static_cast<std::size_t>(rec.j)] += 1.0;
        }
    }

    std::vector<double> gamma(n, 1.0), denom(n), v(n, 0.0);
    ScoreVector sv;
    sv.anchored = true;

    auto current_grad_inf = [&]() {
        sv.u = v;
        const std::vector<double> grad = gradient(dataset, bt, sv);
        double worst = 0.0;
        for (std::size_t k = 1; k < n; ++k) worst = std::max(worst, std::fabs(grad[k]));
        return worst;
    };

    if (opts.track_objective) {
        sv.u = v;
        result.objective_history.push_back(log_likelihood(dataset, bt, sv));
    }
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        result.grad_inf_norm = current_grad_inf();
        if (result.grad_inf_norm <= opts.gradient_tol) {
            result.status = FitStatus::converged;
            break;
        }
        std::fill(denom.begin(), denom.end(), 0.0);
        for (const auto& blk : blocks) {
            const auto i = static_cast<std::size_t>(blk.i);
            const auto j = static_cast<std::size_t>(blk.j);
            const double share = static_cast<double>(blk.total) / (gamma[i] + gamma[j]);
            denom[i] += share;
            denom[j] += share;
        }
        for (std::size_t k = 0; k < n; ++k) {
            gamma[k] = denom[k] > 0.0 ? wins[k] / denom[k] : gamma[k];
        }
        const double anchor = gamma[0];
        double v_worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            gamma[k] /= anchor;
            v[k] = std::log(gamma[k]);
            v_worst = std::max(v_worst, std::fabs(v[k]));
        }
        result.iterations = iter + 1;
        if (opts.track_objective) {
            sv.u = v;
            result.objective_history.push_back(log_likelihood(dataset, bt, sv));
        }
        if (!std::isfinite(v_worst) || v_worst > opts.divergence_bound) {
            result.status = FitStatus::diverged;
            break;
        }
    }
    if (result.status != FitStatus::converged && result.status != FitStatus::diverged) {
        result.grad_inf_norm = current_grad_inf();
        result.status = result.grad_inf_norm <= opts.gradient_tol ? FitStatus::converged
                                                                  : FitStatus::max_iterations;
    }
    result.estimate.u = v;
    result.estimate.u[0] = 0.0;
    result.estimate.anchored = true;
    sv.u = result.estimate.u;
    result.log_likelihood = log_likelihood(dataset, bt, sv);
    return result;
}

/// max_i |estimate_i - truth_i|; both vectors must be anchored (first
/// component exactly 0) and of equal length.
inline double linf_error(const ScoreVector& estimate, const ScoreVector& truth) {
    if (estimate.size() != truth.size()) {
        throw std::invalid_argument("linf_error: length mismatch");
    }
    if (!estimate.anchored || !truth.anchored || estimate.u.empty() ||
        estimate.u[0] != 0.0 || truth.u[0] != 0.0) {
        throw std::invalid_argument("linf_error: inputs must be anchored (first component 0)");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < estimate.size(); ++k) {
        worst = std::max(worst, std::fabs(estimate.u[k] - truth.u[k]));
    }
    return worst;
}

}  // namespace paircomp
