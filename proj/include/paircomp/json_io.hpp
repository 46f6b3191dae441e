#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "paircomp/existence.hpp"
#include "paircomp/harness.hpp"
#include "paircomp/ingest.hpp"
#include "paircomp/selection.hpp"
#include "paircomp/theory.hpp"

namespace paircomp {

using json = nlohmann::json;

inline json to_json(const ModelSpec& spec) {
    json params = json::object();
    for (const auto& [key, value] : spec.params) params[key] = value;
    return json{{"name", spec.name}, {"params", params}};
}

inline ModelSpec model_spec_from_json(const json& j) {
    if (!j.is_object() || !j.contains("name")) {
        throw std::invalid_argument("model spec JSON must be an object with a 'name'");
    }
    ModelSpec spec;
    spec.name = j.at("name").get<std::string>();
    if (j.contains("params")) {
        for (const auto& [key, value] : j.at("params").items()) {
            spec.params[key] = value.get<double>();
        }
    }
    return spec;
}

inline json to_json(const FitResult& fit) {
    return json{{"estimate", fit.estimate.u},
                {"log_likelihood", fit.log_likelihood},
                {"grad_inf_norm", fit.grad_inf_norm},
                {"iterations", fit.iterations},
                {"status", to_string(fit.status)}};
}

inline json to_json(const ExistenceVerdict& verdict) {
    json witness = json::array();
    for (const std::int32_t v : verdict.witness) witness.push_back(v + 1);  // 1-based ids
    return json{{"holds", verdict.holds},
                {"witness", witness},
                {"component_count", verdict.component_count},
                {"tie_policy", verdict.tie_policy == TiePolicy::bidirectional
                                   ? "bidirectional"
                                   : "ignore"}};
}

inline json to_json(const ConstantsBundle& bundle) {
    json j{{"C1", bundle.c1},
           {"C3", bundle.c3},
           {"C4", bundle.c4},
           {"M", bundle.m_range},
           {"grid_step", bundle.grid_step},
           {"rate_form", bundle.rate_form == ConstantsBundle::RateForm::bounded_c2
                             ? "bounded_c2"
                             : "subgaussian_c5"}};
    if (bundle.c2_bounded) {
        j["C2"] = bundle.c2;
    } else {
        j["C2"] = "unbounded";
    }
    if (bundle.c5) j["C5"] = *bundle.c5;
    return j;
}

inline json to_json(const CandidateModel& candidate) {
    return json{{"model", to_json(candidate.spec)}, {"free", candidate.free_thresholds}};
}

inline CandidateModel candidate_from_json(const json& j) {
    CandidateModel candidate;
    candidate.spec = model_spec_from_json(j.at("model"));
    if (j.contains("free")) {
        for (const auto& name : j.at("free")) {
            candidate.free_thresholds.push_back(name.get<std::string>());
        }
    }
    return candidate;
}

inline std::vector<CandidateModel> candidates_from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("candidates JSON must be an array");
    std::vector<CandidateModel> out;
    for (const auto& item : j) out.push_back(candidate_from_json(item));
    return out;
}

inline json to_json(const SelectionReport& report) {
    json candidates = json::array();
    for (const auto& row : report.candidates) {
        json params = json::object();
        for (const auto& [key, value] : row.fitted_params) params[key] = value;
        candidates.push_back(json{{"name", row.candidate.spec.name},
                                  {"ok", row.ok},
                                  {"failure", row.failure},
                                  {"fitted_params", params},
                                  {"log_likelihood", row.log_likelihood},
                                  {"parameter_count", row.parameter_count},
                                  {"aic", row.aic},
                                  {"bic", row.bic},
                                  {"loocv", row.loocv_error},
                                  {"loocv_skipped", row.loocv_skipped}});
    }
    auto winner_name = [&](int idx) -> json {
        if (idx < 0) return nullptr;
        return report.candidates[static_cast<std::size_t>(idx)].candidate.spec.name;
    };
    return json{{"candidates", candidates},
                {"winner_aic", winner_name(report.winner_aic)},
                {"winner_bic", winner_name(report.winner_bic)},
                {"winner_loocv", winner_name(report.winner_loocv)}};
}

inline json to_json(const SubjectIndex& index) {
    return json{{"subjects", index.names}};
}

namespace detail {

inline ExperimentKind kind_from_string(const std::string& s) {
    if (s == "convergence") return ExperimentKind::convergence;
    if (s == "dynamic_range") return ExperimentKind::dynamic_range;
    if (s == "selection") return ExperimentKind::selection;
    if (s == "existence_sweep") return ExperimentKind::existence_sweep;
    throw std::invalid_argument("unknown experiment kind: " + s);
}

inline Regime regime_from_string(const std::string& s) {
    if (s == "dense") return Regime::dense;
    if (s == "mid") return Regime::mid;
    if (s == "sparse") return Regime::sparse;
    if (s == "connectivity") return Regime::connectivity;
    if (s == "explicit") return Regime::explicit_p;
    throw std::invalid_argument("unknown regime: " + s);
}

inline MRule m_rule_from_string(const std::string& s) {
    if (s == "fixed") return MRule::fixed;
    if (s == "half_loglog") return MRule::half_loglog;
    if (s == "two_loglog") return MRule::two_loglog;
    throw std::invalid_argument("unknown M rule: " + s);
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig config;
    try {
        config.kind = detail::kind_from_string(j.at("kind").get<std::string>());
        config.n_values = j.at("n").get<std::vector<std::int32_t>>();
        if (j.contains("regime")) {
            config.regime = detail::regime_from_string(j.at("regime").get<std::string>());
        }
        if (j.contains("p")) {
            config.explicit_p = j.at("p").get<double>();
            if (!j.contains("regime")) config.regime = Regime::explicit_p;
        }
        if (j.contains("p_grid")) config.p_grid = j.at("p_grid").get<std::vector<double>>();
        if (j.contains("m_rule")) {
            config.m_rule = detail::m_rule_from_string(j.at("m_rule").get<std::string>());
        }
        if (j.contains("m_rules")) {
            for (const auto& rule : j.at("m_rules")) {
                config.m_rules.push_back(detail::m_rule_from_string(rule.get<std::string>()));
            }
        }
        if (j.contains("m_fixed")) config.m_fixed = j.at("m_fixed").get<double>();
        config.model = model_spec_from_json(j.at("model"));
        if (j.contains("candidates")) {
            config.candidates = candidates_from_json(j.at("candidates"));
        }
        if (j.contains("T")) config.t_max = j.at("T").get<std::int32_t>();
        if (j.contains("replications")) {
            config.replications = j.at("replications").get<std::int32_t>();
        }
        if (j.contains("seed")) config.base_seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("workers")) config.workers = j.at("workers").get<int>();
        if (j.contains("out")) config.out_dir = j.at("out").get<std::string>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("experiment config: ") + e.what());
    }
    return config;
}

/// The config echo written next to experiment outputs. Execution details
/// (workers, output directory) are excluded: outputs depend only on the
/// experiment identity (config, seed).
inline json experiment_config_echo(const ExperimentConfig& config) {
    json j{{"kind", to_string(config.kind)},
           {"n", config.n_values},
           {"regime", to_string(config.regime)},
           {"m_rule", to_string(config.m_rule)},
           {"m_fixed", config.m_fixed},
           {"model", to_json(config.model)},
           {"T", config.t_max},
           {"replications", config.replications},
           {"seed", config.base_seed},
           {"rng", kRngName},
           {"score_convention",
            "components uniform on [-M/2, M/2], anchored at subject 1 (support width M)"}};
    if (config.regime == Regime::explicit_p) j["p"] = config.explicit_p;
    if (!config.p_grid.empty()) j["p_grid"] = config.p_grid;
    if (!config.m_rules.empty()) {
        json rules = json::array();
        for (const MRule rule : config.m_rules) rules.push_back(to_string(rule));
        j["m_rules"] = rules;
    }
    if (!config.candidates.empty()) {
        json cands = json::array();
        for (const auto& c : config.candidates) cands.push_back(to_json(c));
        j["candidates"] = cands;
    }
    return j;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline void write_echo(const ExperimentConfig& config, const std::filesystem::path& dir) {
    write_text_file(dir / "config_echo.json", experiment_config_echo(config).dump(2) + "\n");
}

}  // namespace detail

inline void write_outputs(const ExperimentConfig& config, const ConvergenceResult& result,
                          const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    std::string rows = "n,p,M,replication,seed,linf_error,iterations,status\n";
    for (const auto& row : result.rows) {
        rows += std::to_string(row.n) + ',' + detail::csv_double(row.p) + ',' +
                detail::csv_double(row.m) + ',' + std::to_string(row.replication) + ',' +
                std::to_string(row.seed) + ',';
        if (row.status == FitStatus::converged) rows += detail::csv_double(row.linf_error);
        rows += ',' + std::to_string(row.iterations) + ',' + to_string(row.status) + '\n';
    }
    detail::write_text_file(dir / "rows.csv", rows);

    std::string summary = "n,p,M,replications,converged,q1,median,q3,nonexistence_fraction\n";
    for (const auto& s : result.summary) {
        summary += std::to_string(s.n) + ',' + detail::csv_double(s.p) + ',' +
                   detail::csv_double(s.m) + ',' + std::to_string(s.replications) + ',' +
                   std::to_string(s.converged) + ',';
        if (s.converged > 0) {
            summary += detail::csv_double(s.q1) + ',' + detail::csv_double(s.median) + ',' +
                       detail::csv_double(s.q3);
        } else {
            summary += ",,";
        }
        summary += ',' + detail::csv_double(s.nonexistence_fraction) + '\n';
    }
    detail::write_text_file(dir / "summary.csv", summary);
    detail::write_echo(config, dir);
}

inline void write_outputs(const ExperimentConfig& config, const SelectionBatchResult& result,
                          const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    std::string rows =
        "seed_index,seed,candidate,generating,ok,aic,bic,loocv,loocv_skipped,failure\n";
    for (const auto& row : result.rows) {
        rows += std::to_string(row.seed_index) + ',' + std::to_string(row.seed) + ',' +
                row.candidate + ',' + (row.generating ? "1" : "0") + ',' +
                (row.ok ? "1" : "0") + ',';
        if (row.ok) {
            rows += detail::csv_double(row.aic) + ',' + detail::csv_double(row.bic) + ',' +
                    detail::csv_double(row.loocv) + ',' + std::to_string(row.loocv_skipped);
        } else {
            rows += ",,,";
        }
        rows += ',' + detail::csv_escape(row.failure) + '\n';
    }
    detail::write_text_file(dir / "rows.csv", rows);

    std::string summary =
        "candidate,generating,ok_count,mean_aic,mean_bic,mean_loocv,wins_aic,wins_bic,wins_loocv\n";
    for (const auto& agg : result.aggregates) {
        summary += agg.candidate + ',' + (agg.generating ? "1" : "0") + ',' +
                   std::to_string(agg.ok_count) + ',' + detail::csv_double(agg.mean_aic) + ',' +
                   detail::csv_double(agg.mean_bic) + ',' + detail::csv_double(agg.mean_loocv) +
                   ',' + std::to_string(agg.wins_aic) + ',' + std::to_string(agg.wins_bic) + ',' +
                   std::to_string(agg.wins_loocv) + '\n';
    }
    detail::write_text_file(dir / "summary.csv", summary);
    detail::write_echo(config, dir);
}

inline void write_outputs(const ExperimentConfig& config, const ExistenceSweepResult& result,
                          const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    std::string rows = "n,p,seed_index,seed,holds\n";
    for (const auto& row : result.rows) {
        rows += std::to_string(row.n) + ',' + detail::csv_double(row.p) + ',' +
                std::to_string(row.seed_index) + ',' + std::to_string(row.seed) + ',' +
                (row.holds ? "1" : "0") + '\n';
    }
    detail::write_text_file(dir / "rows.csv", rows);

    std::string summary = "n,p,replications,fraction_holds\n";
    for (const auto& cell : result.cells) {
        summary += std::to_string(cell.n) + ',' + detail::csv_double(cell.p) + ',' +
                   std::to_string(cell.replications) + ',' +
                   detail::csv_double(cell.fraction_holds) + '\n';
    }
    detail::write_text_file(dir / "summary.csv", summary);
    detail::write_echo(config, dir);
}

/// Runs the configured experiment and, when the config names an output
/// directory, writes rows.csv / summary.csv / config_echo.json there.
inline void run_experiment(const ExperimentConfig& config) {
    switch (config.kind) {
        case ExperimentKind::convergence: {
            const ConvergenceResult result = run_convergence(config);
            if (!config.out_dir.empty()) write_outputs(config, result, config.out_dir);
            return;
        }
        case ExperimentKind::dynamic_range: {
            const ConvergenceResult result = run_dynamic_range(config);
            if (!config.out_dir.empty()) write_outputs(config, result, config.out_dir);
            return;
        }
        case ExperimentKind::selection: {
            const SelectionBatchResult result = run_selection_batch(config);
            if (!config.out_dir.empty()) write_outputs(config, result, config.out_dir);
            return;
        }
        case ExperimentKind::existence_sweep: {
            const ExistenceSweepResult result = run_existence_sweep(config);
            if (!config.out_dir.empty()) write_outputs(config, result, config.out_dir);
            return;
        }
    }
}

}  // namespace paircomp
