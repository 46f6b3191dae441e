#pragma once

#include <atomic>
#include <charconv>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "paircomp/estimator.hpp"
#include "paircomp/existence.hpp"
#include "paircomp/math.hpp"
#include "paircomp/selection.hpp"
#include "paircomp/simulate.hpp"
#include "paircomp/theory.hpp"

namespace paircomp {

enum class ExperimentKind { convergence, dynamic_range, selection, existence_sweep };
enum class Regime { dense, mid, sparse, connectivity, explicit_p };
enum class MRule { fixed, half_loglog, two_loglog };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::convergence;
    std::vector<std::int32_t> n_values;
    Regime regime = Regime::sparse;
    double explicit_p = 0.5;           // used when regime == explicit_p
    std::vector<double> p_grid;        // existence_sweep
    MRule m_rule = MRule::fixed;
    std::vector<MRule> m_rules;        // dynamic_range; defaults to all three
    double m_fixed = 1.0;
    ModelSpec model;                   // generating model
    std::vector<CandidateModel> candidates;  // selection; defaulted when empty
    std::int32_t t_max = 1;
    std::int32_t replications = 30;
    std::uint64_t base_seed = 1;
    int workers = 0;                   // execution detail; 0 = hardware count
    std::string out_dir;               // execution detail; empty = no files
};

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::convergence: return "convergence";
        case ExperimentKind::dynamic_range: return "dynamic_range";
        case ExperimentKind::selection: return "selection";
        case ExperimentKind::existence_sweep: return "existence_sweep";
    }
    return "unknown";
}

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::dense: return "dense";
        case Regime::mid: return "mid";
        case Regime::sparse: return "sparse";
        case Regime::connectivity: return "connectivity";
        case Regime::explicit_p: return "explicit";
    }
    return "unknown";
}

inline const char* to_string(MRule r) {
    switch (r) {
        case MRule::fixed: return "fixed";
        case MRule::half_loglog: return "half_loglog";
        case MRule::two_loglog: return "two_loglog";
    }
    return "unknown";
}

inline double resolve_p(const ExperimentConfig& config, std::int32_t n) {
    switch (config.regime) {
        case Regime::dense: return schedule(n).p_dense;
        case Regime::mid: return schedule(n).p_mid;
        case Regime::sparse: return schedule(n).p_sparse;
        case Regime::connectivity: return schedule(n).p_connectivity;
        case Regime::explicit_p: return config.explicit_p;
    }
    throw std::logic_error("unreachable regime");
}

inline double resolve_m(const ExperimentConfig& config, MRule rule, std::int32_t n) {
    switch (rule) {
        case MRule::fixed: return config.m_fixed;
        case MRule::half_loglog: return schedule(n).m_half_loglog;
        case MRule::two_loglog: return schedule(n).m_two_loglog;
    }
    throw std::logic_error("unreachable M rule");
}

namespace detail {

// Runs fn(0..count-1) on a small thread pool. Each task owns its slot in the
// result containers, so output never depends on scheduling.
inline void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t thread_count = workers > 0
                                   ? static_cast<std::size_t>(workers)
                                   : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    thread_count = std::min(thread_count, count);
    if (thread_count <= 1) {
        for (std::size_t k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= count) return;
            try {
                fn(k);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline std::string csv_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void validate_common(const ExperimentConfig& config) {
    if (config.replications < 1) {
        throw std::invalid_argument("experiment config: replications must be >= 1");
    }
    for (const std::int32_t n : config.n_values) {
        if (n < 3) throw std::invalid_argument("experiment config: n values must be >= 3");
    }
    if (config.n_values.empty()) {
        throw std::invalid_argument("experiment config: at least one n value required");
    }
    if (config.t_max < 1) throw std::invalid_argument("experiment config: T must be >= 1");
}

}  // namespace detail

struct ConvergenceRow {
    std::int32_t n = 0;
    double p = 0.0;
    double m = 0.0;
    std::int32_t replication = 0;
    std::uint64_t seed = 0;
    FitStatus status = FitStatus::max_iterations;
    double linf_error = 0.0;  // meaningful only when converged
    int iterations = 0;
};

struct ConvergenceSummary {
    std::int32_t n = 0;
    double p = 0.0;
    double m = 0.0;
    std::int32_t replications = 0;
    std::int32_t converged = 0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double nonexistence_fraction = 0.0;  // blocked or diverged fits
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    std::vector<ConvergenceSummary> summary;
};

namespace detail {

struct ConvergenceCell {
    std::int32_t n;
    double p;
    double m;
};

inline ConvergenceResult run_convergence_cells(const ExperimentConfig& config,
                                               const std::vector<ConvergenceCell>& cells) {
    const auto reps = static_cast<std::size_t>(config.replications);
    const std::size_t total = cells.size() * reps;
    ConvergenceResult result;
    result.rows.resize(total);

    const LinkModel model = make_model(config.model);
    parallel_for(total, config.workers, [&](std::size_t task) {
        const auto& cell = cells[task / reps];
        const auto rep = static_cast<std::int32_t>(task % reps);
        const std::uint64_t seed = stream_seed(config.base_seed, task);
        Rng rng(seed);
        ConvergenceRow row;
        row.n = cell.n;
        row.p = cell.p;
        row.m = cell.m;
        row.replication = rep;
        row.seed = seed;
        const ScoreVector truth = generate_scores(cell.n, cell.m, rng);
        const ComparisonGraph graph = generate_graph(cell.n, cell.p, config.t_max, rng);
        const ComparisonDataset dataset = generate_dataset(truth, graph, model, rng);
        if (dataset.empty()) {
            row.status = FitStatus::nonexistent_blocked;
        } else {
            const FitResult fit = fit_newton(dataset, model);
            row.status = fit.status;
            row.iterations = fit.iterations;
            if (fit.status == FitStatus::converged) {
                row.linf_error = linf_error(fit.estimate, truth);
            }
        }
        result.rows[task] = row;
    });

    for (std::size_t c = 0; c < cells.size(); ++c) {
        ConvergenceSummary s;
        s.n = cells[c].n;
        s.p = cells[c].p;
        s.m = cells[c].m;
        s.replications = config.replications;
        std::vector<double> errors;
        std::int32_t nonexistent = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            const auto& row = result.rows[c * reps + r];
            if (row.status == FitStatus::converged) {
                errors.push_back(row.linf_error);
            } else if (row.status == FitStatus::nonexistent_blocked ||
                       row.status == FitStatus::diverged) {
                nonexistent++;
            }
        }
        s.converged = static_cast<std::int32_t>(errors.size());
        s.nonexistence_fraction =
            static_cast<double>(nonexistent) / static_cast<double>(config.replications);
        if (!errors.empty()) {
            std::sort(errors.begin(), errors.end());
            s.q1 = quantile_type7(errors, 0.25);
            s.median = quantile_type7(errors, 0.5);
            s.q3 = quantile_type7(errors, 0.75);
        }
        result.summary.push_back(s);
    }
    return result;
}

}  // namespace detail

/// Convergence experiment: for every n, generate scores/graph/outcomes,
/// precheck Condition 1, fit, and record the infinity-norm error. Blocked
/// and diverged fits are counted but excluded from the quartiles.
inline ConvergenceResult run_convergence(const ExperimentConfig& config) {
    detail::validate_common(config);
    std::vector<detail::ConvergenceCell> cells;
    for (const std::int32_t n : config.n_values) {
        cells.push_back({n, resolve_p(config, n), resolve_m(config, config.m_rule, n)});
    }
    return detail::run_convergence_cells(config, cells);
}

/// Dynamic-range experiment: the same pipeline with M varying per rule at a
/// fixed p; the summary is keyed by (n, M).
inline ConvergenceResult run_dynamic_range(const ExperimentConfig& config) {
    detail::validate_common(config);
    std::vector<MRule> rules = config.m_rules;
    if (rules.empty()) rules = {MRule::fixed, MRule::half_loglog, MRule::two_loglog};
    std::vector<detail::ConvergenceCell> cells;
    for (const std::int32_t n : config.n_values) {
        for (const MRule rule : rules) {
            cells.push_back({n, resolve_p(config, n), resolve_m(config, rule, n)});
        }
    }
    return detail::run_convergence_cells(config, cells);
}

struct SelectionSeedRow {
    std::int32_t seed_index = 0;
    std::uint64_t seed = 0;
    std::string candidate;
    bool generating = false;
    bool ok = false;
    double aic = 0.0;
    double bic = 0.0;
    double loocv = 0.0;
    std::int64_t loocv_skipped = 0;
    std::string failure;
};

struct SelectionAggregate {
    std::string candidate;
    bool generating = false;
    std::int32_t ok_count = 0;
    double mean_aic = 0.0;
    double mean_bic = 0.0;
    double mean_loocv = 0.0;
    std::int32_t wins_aic = 0;
    std::int32_t wins_bic = 0;
    std::int32_t wins_loocv = 0;
};

struct SelectionBatchResult {
    std::vector<SelectionSeedRow> rows;          // seed-major, candidate-minor
    std::vector<SelectionAggregate> aggregates;  // per candidate
};

inline std::vector<CandidateModel> default_selection_candidates() {
    CandidateModel general_bt;
    general_bt.spec = {"general_bt_bo3", {}};
    CandidateModel clm4;
    clm4.spec = {"clm4", {}};
    clm4.free_thresholds = {"tau"};
    return {general_bt, clm4};
}

/// Selection batch: per seed, generate data from the configured model, run
/// compare_models over the candidates, then aggregate mean criteria and
/// per-criterion win counts.
inline SelectionBatchResult run_selection_batch(const ExperimentConfig& config) {
    detail::validate_common(config);
    if (config.n_values.size() != 1) {
        throw std::invalid_argument("selection experiment: exactly one n value expected");
    }
    const std::int32_t n = config.n_values[0];
    const double p = resolve_p(config, n);
    const double m_range = resolve_m(config, config.m_rule, n);
    const std::vector<CandidateModel> candidates =
        config.candidates.empty() ? default_selection_candidates() : config.candidates;
    const LinkModel generator = make_model(config.model);

    const auto reps = static_cast<std::size_t>(config.replications);
    std::vector<SelectionReport> reports(reps);
    std::vector<std::uint64_t> seeds(reps);
    std::vector<std::string> seed_failures(reps);
    detail::parallel_for(reps, config.workers, [&](std::size_t task) {
        seeds[task] = stream_seed(config.base_seed, task);
        Rng rng(seeds[task]);
        try {
            const ScoreVector truth = generate_scores(n, m_range, rng);
            const ComparisonGraph graph = generate_graph(n, p, config.t_max, rng);
            const ComparisonDataset dataset = generate_dataset(truth, graph, generator, rng);
            reports[task] = compare_models(dataset, candidates);
        } catch (const std::exception& e) {
            seed_failures[task] = e.what();
        }
    });

    SelectionBatchResult result;
    std::vector<SelectionAggregate> aggs(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        aggs[c].candidate = candidates[c].spec.name;
        aggs[c].generating = candidates[c].spec.name == config.model.name;
    }
    for (std::size_t task = 0; task < reps; ++task) {
        const auto& report = reports[task];
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            SelectionSeedRow row;
            row.seed_index = static_cast<std::int32_t>(task);
            row.seed = seeds[task];
            row.candidate = candidates[c].spec.name;
            row.generating = aggs[c].generating;
            if (!seed_failures[task].empty()) {
                row.failure = seed_failures[task];
            } else if (c < report.candidates.size()) {
                const auto& cand = report.candidates[c];
                row.ok = cand.ok;
                row.failure = cand.failure;
                if (cand.ok) {
                    row.aic = cand.aic;
                    row.bic = cand.bic;
                    row.loocv = cand.loocv_error;
                    row.loocv_skipped = cand.loocv_skipped;
                    aggs[c].ok_count++;
                    aggs[c].mean_aic += cand.aic;
                    aggs[c].mean_bic += cand.bic;
                    aggs[c].mean_loocv += cand.loocv_error;
                }
            }
            result.rows.push_back(std::move(row));
        }
        if (seed_failures[task].empty()) {
            if (report.winner_aic >= 0) aggs[static_cast<std::size_t>(report.winner_aic)].wins_aic++;
            if (report.winner_bic >= 0) aggs[static_cast<std::size_t>(report.winner_bic)].wins_bic++;
            if (report.winner_loocv >= 0) {
                aggs[static_cast<std::size_t>(report.winner_loocv)].wins_loocv++;
            }
        }
    }
    for (auto& agg : aggs) {
        if (agg.ok_count > 0) {
            agg.mean_aic /= agg.ok_count;
            agg.mean_bic /= agg.ok_count;
            agg.mean_loocv /= agg.ok_count;
        }
        result.aggregates.push_back(agg);
    }
    return result;
}

struct ExistenceSweepRow {
    std::int32_t n = 0;
    double p = 0.0;
    std::int32_t seed_index = 0;
    std::uint64_t seed = 0;
    bool holds = false;
};

struct ExistenceSweepCell {
    std::int32_t n = 0;
    double p = 0.0;
    std::int32_t replications = 0;
    double fraction_holds = 0.0;
};

struct ExistenceSweepResult {
    std::vector<ExistenceSweepRow> rows;
    std::vector<ExistenceSweepCell> cells;
};

/// Monte-Carlo fraction of seeds on which Condition 1 holds, per (n, p).
inline ExistenceSweepResult run_existence_sweep(const ExperimentConfig& config) {
    detail::validate_common(config);
    if (config.p_grid.empty()) {
        throw std::invalid_argument("existence sweep: p_grid must be nonempty");
    }
    const LinkModel model = make_model(config.model);
    struct Cell {
        std::int32_t n;
        double p;
        double m;
    };
    std::vector<Cell> cells;
    for (const std::int32_t n : config.n_values) {
        for (const double p : config.p_grid) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw std::invalid_argument("existence sweep: p values must be in [0,1]");
            }
            cells.push_back({n, p, resolve_m(config, config.m_rule, n)});
        }
    }
    const auto reps = static_cast<std::size_t>(config.replications);
    const std::size_t total = cells.size() * reps;
    ExistenceSweepResult result;
    result.rows.resize(total);
    detail::parallel_for(total, config.workers, [&](std::size_t task) {
        const auto& cell = cells[task / reps];
        ExistenceSweepRow row;
        row.n = cell.n;
        row.p = cell.p;
        row.seed_index = static_cast<std::int32_t>(task % reps);
        row.seed = stream_seed(config.base_seed, task);
        Rng rng(row.seed);
        const ScoreVector truth = generate_scores(cell.n, cell.m, rng);
        const ComparisonGraph graph = generate_graph(cell.n, cell.p, config.t_max, rng);
        const ComparisonDataset dataset = generate_dataset(truth, graph, model, rng);
        row.holds = dataset.empty() ? false : check_condition1(dataset).holds;
        result.rows[task] = row;
    });
    for (std::size_t c = 0; c < cells.size(); ++c) {
        ExistenceSweepCell cell;
        cell.n = cells[c].n;
        cell.p = cells[c].p;
        cell.replications = config.replications;
        std::int32_t holds_count = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            if (result.rows[c * reps + r].holds) holds_count++;
        }
        cell.fraction_holds =
            static_cast<double>(holds_count) / static_cast<double>(config.replications);
        result.cells.push_back(cell);
    }
    return result;
}

}  // namespace paircomp
