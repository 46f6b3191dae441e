#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "paircomp/estimator.hpp"
#include "paircomp/math.hpp"
#include "paircomp/model.hpp"

namespace paircomp {

/// A model family entered into selection: its spec plus which threshold
/// parameters are estimated rather than fixed. The parameter count used by
/// the information criteria is (n－1) free scores plus the free thresholds.
struct CandidateModel {
    ModelSpec spec;
    std::vector<std::string> free_thresholds;

    std::int64_t parameter_count(std::int32_t n) const {
        return static_cast<std::int64_t>(n) - 1 +
               static_cast<std::int64_t>(free_thresholds.size());
    }
};

/// AIC = 2k - 2 l(u-hat); BIC = k log(m) - 2 l(u-hat), with m the number of
/// comparison records. Requires a converged fit.
inline std::pair<double, double> information_criteria(const ComparisonDataset& dataset,
                                                      const LinkModel& /*model*/,
                                                      const FitResult& fit,
                                                      std::int64_t k) {
    if (fit.status != FitStatus::converged) {
        throw std::invalid_argument("information_criteria: fit did not converge");
    }
    const double m = static_cast<double>(dataset.size());
    const double aic = 2.0 * static_cast<double>(k) - 2.0 * fit.log_likelihood;
    const double bic = static_cast<double>(k) * std::log(m) - 2.0 * fit.log_likelihood;
    return {aic, bic};
}

struct ThresholdFit {
    FitResult fit;
    std::map<std::string, double> params;  // all model parameters after fitting
    std::vector<double> sweep_objectives;  // l after each alternation sweep
};

namespace detail {

struct ThresholdDomain {
    double lo;  // in the transformed (searched) coordinate
    double hi;
    std::function<double(double)> to_param;
    double start;  // default starting parameter value
};

inline ThresholdDomain threshold_domain(const std::string& model_name,
                                        const std::string& param) {
    // Search in a log-style coordinate so golden section sees a well-scaled
    // unimodal profile; ranges are generous for desk-scale data.
    if (param == "tau" || (param == "theta" && model_name == "davidson") ||
        param == "sigma") {
        return {std::log(0.02), std::log(50.0), [](double t) { return std::exp(t); }, 1.0};
    }
    if (param == "theta") {  // rao_kupper: theta > 1
        return {std::log(1e-3), std::log(100.0),
                [](double t) { return 1.0 + std::exp(t); }, 2.0};
    }
    throw std::invalid_argument("no threshold domain for parameter '" + param + "'");
}

}  // namespace detail

/// Fits scores and free thresholds by alternating maximization: a Newton
/// score fit with thresholds fixed, then a golden-section sweep over each
/// free threshold with scores fixed. Each half-step increases l, so the
/// alternation ascends monotonically.
inline ThresholdFit fit_with_thresholds(const ComparisonDataset& dataset,
                                        const CandidateModel& candidate,
                                        const FitOptions& opts = {}) {
    std::map<std::string, double> params = candidate.spec.params;
    for (const auto& name : candidate.free_thresholds) {
        if (!params.count(name)) {
            params[name] = detail::threshold_domain(candidate.spec.name, name).start;
        }
    }

    if (candidate.free_thresholds.empty()) {
        LinkModel model = make_model(candidate.spec.name, params);
        return {fit_newton(dataset, model, opts), params, {}};
    }

    ThresholdFit out;
    FitOptions sweep_opts = opts;
    const std::vector<detail::PairBlock> blocks = detail::build_pair_blocks(dataset);
    const int max_sweeps = 40;
    double previous_l = -std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        LinkModel model = make_model(candidate.spec.name, params);
        out.fit = fit_newton(dataset, model, sweep_opts);
        if (out.fit.status == FitStatus::nonexistent_blocked ||
            out.fit.status == FitStatus::diverged) {
            out.params = params;
            return out;
        }
        sweep_opts.initial = out.fit.estimate.u;  // warm-start later sweeps
        sweep_opts.precheck_existence = false;    // already established

        double max_param_move = 0.0;
        for (const auto& name : candidate.free_thresholds) {
            const auto dom = detail::threshold_domain(candidate.spec.name, name);
            auto profile = [&](double t) {
                auto trial_params = params;
                trial_params[name] = dom.to_param(t);
                const LinkModel trial = make_model(candidate.spec.name, trial_params);
                return detail::blocks_log_likelihood(blocks, trial, out.fit.estimate.u);
            };
            const double best_t = golden_section_max(profile, dom.lo, dom.hi, 1e-9);
            const double new_value = dom.to_param(best_t);
            max_param_move = std::max(max_param_move, std::fabs(new_value - params[name]));
            params[name] = new_value;
        }

        const LinkModel updated = make_model(candidate.spec.name, params);
        ScoreVector sv = out.fit.estimate;
        const double l_now = log_likelihood(dataset, updated, sv);
        out.sweep_objectives.push_back(l_now);
        const bool scores_stationary = out.fit.status == FitStatus::converged;
        if (scores_stationary && max_param_move < 1e-7 &&
            l_now - previous_l < 1e-10 * (1.0 + std::fabs(l_now)) && sweep > 0) {
            break;
        }
        previous_l = l_now;
    }
    // final score polish under the settled thresholds
    LinkModel model = make_model(candidate.spec.name, params);
    out.fit = fit_newton(dataset, model, sweep_opts);
    out.params = params;
    return out;
}

struct LoocvResult {
    double mean_error = 0.0;
    std::int64_t skipped = 0;
    std::int64_t evaluated = 0;
    std::vector<std::pair<std::size_t, double>> per_record;  // (record index, error)
};

struct LoocvOptions {
    FitOptions fit;
    int refit_iteration_cap = 25;  // warm-started refits
    bool exact_refits = false;     // test-only: cold start, uncapped
};

/// Leave-one-out cross-validation with cross-entropy error. A record is
/// skipped when removing it strands one of its subjects (no remaining
/// records) or breaks Condition 1 on the remainder; otherwise the scores are
/// refit on the remainder (warm-started from the full-data optimum, with
/// thresholds frozen at their full-data estimates) and the negative log
/// predicted probability of the held-out outcome is accumulated.
inline LoocvResult loocv(const ComparisonDataset& dataset, const CandidateModel& candidate,
                         const LoocvOptions& opts = {},
                         const ThresholdFit* precomputed_full = nullptr) {
    const ThresholdFit full =
        precomputed_full ? *precomputed_full : fit_with_thresholds(dataset, candidate, opts.fit);
    if (full.fit.status != FitStatus::converged) {
        throw std::runtime_error("loocv: full-data fit did not converge");
    }
    const LinkModel model = make_model(candidate.spec.name, full.params);

    std::vector<std::int32_t> degree(static_cast<std::size_t>(dataset.n), 0);
    for (const auto& rec : dataset.records) {
        degree[static_cast<std::size_t>(rec.i)]++;
        degree[static_cast<std::size_t>(rec.j)]++;
    }

    FitOptions refit_opts = opts.fit;
    refit_opts.precheck_existence = false;  // the skip rule already checks it
    if (opts.exact_refits) {
        refit_opts.initial.reset();
    } else {
        refit_opts.initial = full.fit.estimate.u;
        refit_opts.max_iterations = opts.refit_iteration_cap;
    }

    LoocvResult result;
    double error_sum = 0.0;
    ComparisonDataset remainder;
    remainder.n = dataset.n;
    for (std::size_t r = 0; r < dataset.records.size(); ++r) {
        const auto& held = dataset.records[r];
        if (degree[static_cast<std::size_t>(held.i)] <= 1 ||
            degree[static_cast<std::size_t>(held.j)] <= 1) {
            result.skipped++;
            continue;
        }
        remainder.records.clear();
        remainder.records.reserve(dataset.records.size() - 1);
        for (std::size_t s = 0; s < dataset.records.size(); ++s) {
            if (s != r) remainder.records.push_back(dataset.records[s]);
        }
        if (!check_condition1(remainder, opts.fit.tie_policy).holds) {
            result.skipped++;
            continue;
        }
        const FitResult refit = fit_newton(remainder, model, refit_opts);
        const double y = refit.estimate.u[static_cast<std::size_t>(held.i)] -
                         refit.estimate.u[static_cast<std::size_t>(held.j)];
        const double err = -model.log_density_fn(held.outcome, y);
        error_sum += err;
        result.per_record.emplace_back(r, err);
        result.evaluated++;
    }
    if (result.evaluated == 0) {
        throw std::runtime_error("loocv: every record was skipped");
    }
    result.mean_error = error_sum / static_cast<double>(result.evaluated);
    return result;
}

struct CandidateReport {
    CandidateModel candidate;
    bool ok = false;
    std::string failure;
    std::map<std::string, double> fitted_params;
    double log_likelihood = 0.0;
    std::int64_t parameter_count = 0;
    double aic = 0.0;
    double bic = 0.0;
    double loocv_error = 0.0;
    std::int64_t loocv_skipped = 0;
};

struct SelectionReport {
    std::vector<CandidateReport> candidates;
    int winner_aic = -1;
    int winner_bic = -1;
    int winner_loocv = -1;
};

/// Fits every candidate, computes AIC/BIC/LOOCV, and declares per-criterion
/// winners (argmin over candidates that fit cleanly).
inline SelectionReport compare_models(const ComparisonDataset& dataset,
                                      const std::vector<CandidateModel>& candidates,
                                      const LoocvOptions& opts = {}) {
    if (candidates.size() < 2) {
        throw std::invalid_argument("compare_models: need at least 2 candidates");
    }
    SelectionReport report;
    for (const auto& candidate : candidates) {
        CandidateReport row;
        row.candidate = candidate;
        try {
            const ThresholdFit fitted = fit_with_thresholds(dataset, candidate, opts.fit);
            if (fitted.fit.status != FitStatus::converged) {
                throw std::runtime_error(std::string("fit status: ") +
                                         to_string(fitted.fit.status));
            }
            row.fitted_params = fitted.params;
            row.log_likelihood = fitted.fit.log_likelihood;
            row.parameter_count = candidate.parameter_count(dataset.n);
            const LinkModel model = make_model(candidate.spec.name, fitted.params);
            const auto [aic, bic] =
                information_criteria(dataset, model, fitted.fit, row.parameter_count);
            row.aic = aic;
            row.bic = bic;
            const LoocvResult cv = loocv(dataset, candidate, opts, &fitted);
            row.loocv_error = cv.mean_error;
            row.loocv_skipped = cv.skipped;
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.failure = e.what();
        }
        report.candidates.push_back(std::move(row));
    }
    auto pick = [&](auto key) {
        int best = -1;
        for (int c = 0; c < static_cast<int>(report.candidates.size()); ++c) {
            const auto& row = report.candidates[static_cast<std::size_t>(c)];
            if (!row.ok) continue;
            if (best < 0 || key(row) < key(report.candidates[static_cast<std::size_t>(best)])) {
                best = c;
            }
        }
        return best;
    };
    report.winner_aic = pick([](const CandidateReport& r) { return r.aic; });
    report.winner_bic = pick([](const CandidateReport& r) { return r.bic; });
    report.winner_loocv = pick([](const CandidateReport& r) { return r.loocv_error; });
    return report;
}

}  // namespace paircomp
