#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "paircomp/estimator.hpp"
#include "paircomp/existence.hpp"
#include "paircomp/harness.hpp"
#include "paircomp/ingest.hpp"
#include "paircomp/json_io.hpp"
#include "paircomp/selection.hpp"
#include "paircomp/simulate.hpp"
#include "paircomp/theory.hpp"

namespace {

using paircomp::json;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open JSON file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

// --model accepts inline JSON ({"name": ...}) or a path to a JSON file.
paircomp::ModelSpec parse_model_arg(const std::string& arg) {
    if (!arg.empty() && arg.front() == '{') {
        try {
            return paircomp::model_spec_from_json(json::parse(arg));
        } catch (const json::exception& e) {
            throw std::invalid_argument(std::string("bad inline model JSON: ") + e.what());
        }
    }
    return paircomp::model_spec_from_json(load_json_file(arg));
}

paircomp::TiePolicy parse_ties(const std::string& s) {
    if (s == "bidirectional") return paircomp::TiePolicy::bidirectional;
    if (s == "ignore") return paircomp::TiePolicy::ignore;
    throw std::invalid_argument("--ties must be 'bidirectional' or 'ignore'");
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << j.dump(2) << "\n";
    }
}

void print_selection_table(const paircomp::SelectionReport& report, std::ostream& os) {
    os << "candidate            k        AIC          BIC          LOOCV      skipped\n";
    for (const auto& row : report.candidates) {
        char line[160];
        if (row.ok) {
            std::snprintf(line, sizeof(line), "%-20s %-8lld %-12.2f %-12.2f %-10.4f %lld\n",
                          row.candidate.spec.name.c_str(),
                          static_cast<long long>(row.parameter_count), row.aic, row.bic,
                          row.loocv_error, static_cast<long long>(row.loocv_skipped));
        } else {
            std::snprintf(line, sizeof(line), "%-20s unfit: %s\n",
                          row.candidate.spec.name.c_str(), row.failure.c_str());
        }
        os << line;
    }
    auto name = [&](int idx) {
        return idx < 0 ? std::string("-")
                       : report.candidates[static_cast<std::size_t>(idx)].candidate.spec.name;
    };
    os << "winners: AIC=" << name(report.winner_aic) << " BIC=" << name(report.winner_bic)
       << " LOOCV=" << name(report.winner_loocv) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"paircomp: general pairwise-comparison models, MLE fitting and experiments"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic comparison dataset");
    std::string sim_model = R"({"name":"bt"})";
    std::int32_t sim_n = 100;
    double sim_p = 0.5;
    std::int32_t sim_t = 1;
    double sim_m = 1.0;
    std::uint64_t sim_seed = 1;
    std::string sim_out = ".";
    bool sim_scores = false;
    bool sim_graph = false;
    simulate->add_option("--model", sim_model, "model spec JSON (inline or file)");
    simulate->add_option("--n", sim_n, "number of subjects")->required();
    simulate->add_option("--p", sim_p, "comparison rate p")->required();
    simulate->add_option("--T", sim_t, "max comparisons per pair");
    simulate->add_option("--M", sim_m, "dynamic range of the scores");
    simulate->add_option("--seed", sim_seed, "RNG seed");
    simulate->add_option("--out", sim_out, "output directory");
    simulate->add_flag("--emit-scores", sim_scores, "also write scores.json");
    simulate->add_flag("--emit-graph", sim_graph, "also write graph.json");
    simulate->callback([&]() {
        const paircomp::LinkModel model = paircomp::make_model(parse_model_arg(sim_model));
        paircomp::Rng rng(sim_seed);
        const paircomp::ScoreVector scores = paircomp::generate_scores(sim_n, sim_m, rng);
        const paircomp::ComparisonGraph graph =
            paircomp::generate_graph(sim_n, sim_p, sim_t, rng);
        paircomp::ComparisonDataset dataset =
            paircomp::generate_dataset(scores, graph, model, rng);
        dataset.seed_provenance = sim_seed;
        std::filesystem::create_directories(sim_out);
        const auto dir = std::filesystem::path(sim_out);
        paircomp::write_dataset_csv(dataset, (dir / "dataset.csv").string());
        if (sim_scores) {
            emit(json{{"u", scores.u}, {"anchored", scores.anchored}},
                 (dir / "scores.json").string());
        }
        if (sim_graph) {
            json pairs = json::array();
            for (const auto& pc : graph.pairs) {
                pairs.push_back(json::array({pc.i + 1, pc.j + 1, pc.count}));
            }
            emit(json{{"n", graph.n}, {"T", graph.max_per_pair}, {"p", graph.p_provenance},
                      {"pairs", pairs}},
                 (dir / "graph.json").string());
        }
        std::cout << json{{"out", sim_out},
                          {"records", dataset.records.size()},
                          {"seed", sim_seed},
                          {"model", paircomp::to_json(paircomp::ModelSpec{model.name, model.params})}}
                         .dump(2)
                  << "\n";
    });

    // ---- fit ----
    auto* fit_cmd = app.add_subcommand("fit", "fit the MLE of the latent scores");
    std::string fit_data, fit_model, fit_out, fit_solver = "newton", fit_ties = "bidirectional";
    double fit_tol = 1e-8;
    int fit_max_iters = 200;
    bool fit_no_precheck = false;
    fit_cmd->add_option("--data", fit_data, "dataset CSV")->required();
    fit_cmd->add_option("--model", fit_model, "model spec JSON (inline or file)")->required();
    fit_cmd->add_option("--solver", fit_solver, "newton|mm (mm: Bradley-Terry only)");
    fit_cmd->add_option("--tol", fit_tol, "gradient tolerance (infinity norm)");
    fit_cmd->add_option("--max-iters", fit_max_iters, "iteration cap");
    fit_cmd->add_option("--ties", fit_ties, "tie policy: bidirectional|ignore");
    fit_cmd->add_flag("--no-precheck", fit_no_precheck, "skip the Condition 1 precheck");
    fit_cmd->add_option("--out", fit_out, "write the FitResult JSON here instead of stdout");
    fit_cmd->callback([&]() {
        const paircomp::ComparisonDataset dataset = paircomp::read_dataset_csv(fit_data);
        const paircomp::LinkModel model = paircomp::make_model(parse_model_arg(fit_model));
        paircomp::FitOptions opts;
        opts.gradient_tol = fit_tol;
        opts.max_iterations = fit_max_iters;
        opts.precheck_existence = !fit_no_precheck;
        opts.tie_policy = parse_ties(fit_ties);
        paircomp::FitResult result;
        if (fit_solver == "newton") {
            result = paircomp::fit_newton(dataset, model, opts);
        } else if (fit_solver == "mm") {
            result = paircomp::fit_mm_bt(dataset, opts);
        } else {
            throw std::invalid_argument("--solver must be 'newton' or 'mm'");
        }
        emit(paircomp::to_json(result), fit_out);
    });

    // ---- check ----
    auto* check_cmd = app.add_subcommand("check", "check Condition 1 (unique MLE existence)");
    std::string check_data, check_ties = "bidirectional";
    check_cmd->add_option("--data", check_data, "dataset CSV")->required();
    check_cmd->add_option("--ties", check_ties, "tie policy: bidirectional|ignore");
    check_cmd->callback([&]() {
        const paircomp::ComparisonDataset dataset = paircomp::read_dataset_csv(check_data);
        emit(paircomp::to_json(paircomp::check_condition1(dataset, parse_ties(check_ties))), "");
    });

    // ---- theory ----
    auto* theory_cmd = app.add_subcommand("theory", "theoretical constants and Delta_n");
    std::string theory_model;
    double theory_m = 1.0;
    std::int64_t theory_n = 0;
    double theory_p = 0.0;
    theory_cmd->add_option("--model", theory_model, "model spec JSON (inline or file)")->required();
    theory_cmd->add_option("--M", theory_m, "dynamic range M")->required();
    theory_cmd->add_option("--n", theory_n, "subject count (enables Delta_n)");
    theory_cmd->add_option("--p", theory_p, "comparison rate (enables Delta_n)");
    theory_cmd->callback([&]() {
        const paircomp::LinkModel model = paircomp::make_model(parse_model_arg(theory_model));
        const paircomp::ConstantsBundle bundle = paircomp::constants(model, theory_m);
        json out = paircomp::to_json(bundle);
        if (theory_n > 0 && theory_p > 0.0) {
            out["delta_n"] = paircomp::delta_n(bundle, theory_n, theory_p);
            out["existence_rate_term"] =
                paircomp::existence_rate_term(theory_n, theory_p, bundle.c1);
            out["n"] = theory_n;
            out["p"] = theory_p;
        }
        emit(out, "");
    });

    // ---- select ----
    auto* select_cmd = app.add_subcommand("select", "model selection via AIC/BIC/LOOCV");
    std::string select_data, select_candidates, select_out;
    select_cmd->add_option("--data", select_data, "dataset CSV")->required();
    select_cmd->add_option("--candidates", select_candidates, "candidate list JSON file")
        ->required();
    select_cmd->add_option("--out", select_out, "write the SelectionReport JSON here");
    select_cmd->callback([&]() {
        const paircomp::ComparisonDataset dataset = paircomp::read_dataset_csv(select_data);
        const std::vector<paircomp::CandidateModel> candidates =
            paircomp::candidates_from_json(load_json_file(select_candidates));
        const paircomp::SelectionReport report = paircomp::compare_models(dataset, candidates);
        if (select_out.empty()) {
            emit(paircomp::to_json(report), "");
            print_selection_table(report, std::cerr);
        } else {
            emit(paircomp::to_json(report), select_out);
            print_selection_table(report, std::cout);
        }
    });

    // ---- ingest ----
    auto* ingest_cmd = app.add_subcommand("ingest", "load and clean real match data");
    std::string ingest_in, ingest_format = "atp_csv", ingest_out = ".";
    bool ingest_keep_bo5 = false;
    bool ingest_no_clean = false;
    ingest_cmd->add_option("--in", ingest_in, "raw match CSV")->required();
    ingest_cmd->add_option("--format", ingest_format, "atp_csv|generic_csv");
    ingest_cmd->add_option("--out", ingest_out, "output directory");
    ingest_cmd->add_flag("--keep-bo5", ingest_keep_bo5, "do not drop winner-sets-3 rows");
    ingest_cmd->add_flag("--no-clean", ingest_no_clean, "skip the never-win/never-lose cleanup");
    ingest_cmd->callback([&]() {
        paircomp::MatchFormat format;
        if (ingest_format == "atp_csv") {
            format = paircomp::MatchFormat::atp_csv;
        } else if (ingest_format == "generic_csv") {
            format = paircomp::MatchFormat::generic_csv;
        } else {
            throw std::invalid_argument("--format must be 'atp_csv' or 'generic_csv'");
        }
        const paircomp::LoadReport loaded =
            paircomp::load_matches(ingest_in, format, !ingest_keep_bo5);
        paircomp::SubjectIndex index = paircomp::SubjectIndex::build(loaded.matches);
        paircomp::ComparisonDataset dataset = paircomp::to_dataset(loaded.matches, index);

        json info{{"kept", loaded.counts.kept},
                  {"dropped_incomplete", loaded.counts.dropped_incomplete},
                  {"dropped_bo5", loaded.counts.dropped_bo5},
                  {"rejected_lines", loaded.rejected.size()}};
        std::int64_t removed_subjects = 0;
        if (!ingest_no_clean) {
            const paircomp::CleanResult cleaned = paircomp::clean_never_win_lose(dataset);
            removed_subjects = static_cast<std::int64_t>(cleaned.removed.size());
            paircomp::SubjectIndex survivors;
            for (std::size_t v = 0; v < index.names.size(); ++v) {
                if (cleaned.old_to_new[v] >= 0) {
                    survivors.ids[index.names[v]] = cleaned.old_to_new[v];
                    survivors.names.push_back(index.names[v]);
                }
            }
            dataset = cleaned.dataset;
            index = std::move(survivors);
        }
        info["removed_subjects"] = removed_subjects;
        info["subjects"] = index.size();
        info["records"] = dataset.records.size();
        if (dataset.n >= 2 && !dataset.empty()) {
            info["condition1"] = paircomp::to_json(paircomp::check_condition1(dataset));
        } else {
            info["condition1"] = nullptr;
        }
        std::filesystem::create_directories(ingest_out);
        const auto dir = std::filesystem::path(ingest_out);
        paircomp::write_dataset_csv(dataset, (dir / "dataset.csv").string());
        emit(paircomp::to_json(index), (dir / "index.json").string());
        std::cout << info.dump(2) << "\n";
    });

    // ---- experiment ----
    auto* exp_cmd = app.add_subcommand("experiment", "run a configured experiment batch");
    std::string exp_config;
    std::int64_t exp_seed = -1;
    int exp_workers = -1;
    std::string exp_out;
    exp_cmd->add_option("--config", exp_config, "experiment config JSON")->required();
    exp_cmd->add_option("--seed", exp_seed, "override the config seed");
    exp_cmd->add_option("--workers", exp_workers, "override the worker count");
    exp_cmd->add_option("--out", exp_out, "override the output directory");
    exp_cmd->callback([&]() {
        paircomp::ExperimentConfig config =
            paircomp::experiment_config_from_json(load_json_file(exp_config));
        if (exp_seed >= 0) config.base_seed = static_cast<std::uint64_t>(exp_seed);
        if (exp_workers >= 0) config.workers = exp_workers;
        if (!exp_out.empty()) config.out_dir = exp_out;
        if (config.out_dir.empty()) {
            throw std::invalid_argument("experiment: an output directory is required");
        }
        paircomp::run_experiment(config);
        std::cout << json{{"out", config.out_dir}, {"kind", to_string(config.kind)}}.dump(2)
                  << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
