#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "paircomp/estimator.hpp"
#include "test_util.hpp"

using namespace paircomp;

namespace {

ComparisonDataset make_dataset(std::int32_t n, std::vector<ComparisonRecord> records) {
    ComparisonDataset d;
    d.n = n;
    d.records = std::move(records);
    return d;
}

ScoreVector scores_of(std::vector<double> u) {
    ScoreVector sv;
    sv.u = std::move(u);
    sv.anchored = !sv.u.empty() && sv.u[0] == 0.0;
    return sv;
}

}  // namespace

TEST_CASE("log_likelihood basics") {
    const LinkModel bt = make_model("bt");

    SECTION("empty record list sums to zero") {
        const auto d = make_dataset(2, {});
        CHECK(log_likelihood(d, bt, scores_of({0.0, 0.0})) == 0.0);
    }

    SECTION("one record at equal scores") {
        const auto d = make_dataset(2, {{0, 1, 1.0}});
        CHECK(log_likelihood(d, bt, scores_of({0.0, 0.0})) ==
              Catch::Approx(std::log(0.5)).margin(1e-12));
    }

    SECTION("translation invariance") {
        Rng rng(51);
        const auto inst = testutil::random_instance(rng, bt, 20, 0.4);
        ScoreVector v;
        v.u.resize(20);
        for (auto& x : v.u) x = rng.uniform(-1.0, 1.0);
        const double base = log_likelihood(inst.data, bt, v);
        for (int k = 0; k < 5; ++k) {
            const double c = rng.uniform(-5.0, 5.0);
            ScoreVector shifted = v;
            for (auto& x : shifted.u) x += c;
            CHECK(log_likelihood(inst.data, bt, shifted) ==
                  Catch::Approx(base).epsilon(1e-12));
        }
    }

    SECTION("dimension mismatch throws") {
        const auto d = make_dataset(3, {{0, 1, 1.0}});
        CHECK_THROWS_AS(log_likelihood(d, bt, scores_of({0.0, 0.0})), std::invalid_argument);
        CHECK_THROWS_AS(gradient(d, bt, scores_of({0.0, 0.0})), std::invalid_argument);
        CHECK_THROWS_AS(hessian(d, bt, scores_of({0.0, 0.0})), std::invalid_argument);
    }
}

TEST_CASE("gradient matches central finite differences") {
    Rng rng(52);
    for (const char* name : {"bt", "davidson", "clm4"}) {
        const LinkModel model = name == std::string("bt")
                                    ? make_model("bt")
                                    : (name == std::string("davidson")
                                           ? make_model("davidson", {{"theta", 1.2}})
                                           : make_model("clm4", {{"tau", 2.0}}));
        const auto inst = testutil::random_instance(rng, model, 20, 0.4);
        ScoreVector v;
        v.u.resize(20);
        for (auto& x : v.u) x = rng.uniform(-0.8, 0.8);
        const std::vector<double> grad = gradient(inst.data, model, v);
        const double h = 1e-5;
        for (std::size_t k = 0; k < v.u.size(); ++k) {
            ScoreVector up = v;
            ScoreVector dn = v;
            up.u[k] += h;
            dn.u[k] -= h;
            const double fd = (log_likelihood(inst.data, model, up) -
                               log_likelihood(inst.data, model, dn)) /
                              (2.0 * h);
            CHECK(std::fabs(grad[k] - fd) <= 1e-6 * (1.0 + std::fabs(grad[k])));
        }
    }
}

TEST_CASE("hessian is a negated weighted Laplacian") {
    Rng rng(53);
    const LinkModel bt = make_model("bt");
    const auto inst = testutil::random_instance(rng, bt, 15, 0.5);
    ScoreVector v;
    v.u.resize(15);
    for (auto& x : v.u) x = rng.uniform(-0.6, 0.6);
    const SparseHessian h = hessian(inst.data, bt, v);
    const auto dense = h.to_dense();

    SECTION("row sums vanish (translation invariance)") {
        for (const auto& row : dense) {
            CHECK(std::fabs(std::accumulate(row.begin(), row.end(), 0.0)) <= 1e-10);
        }
    }

    SECTION("negative semidefinite with strictly negative second eigenvalue when connected") {
        const auto eig = testutil::symmetric_eigenvalues(dense);
        CHECK(eig.back() <= 1e-10);  // all eigenvalues below zero up to roundoff
        if (check_condition1(inst.data).holds) {
            CHECK(eig[eig.size() - 2] < 0.0);
        }
    }

    SECTION("off-diagonal entries are positive (g2 < 0)") {
        for (const auto& entry : h.off_diag) CHECK(entry.value > 0.0);
    }
}

TEST_CASE("closed-form MLE cases") {
    const LinkModel bt = make_model("bt");

    SECTION("two subjects with win counts (1, 3)") {
        const auto d =
            make_dataset(2, {{0, 1, 1.0}, {0, 1, -1.0}, {0, 1, -1.0}, {0, 1, -1.0}});
        const FitResult fit = fit_newton(d, bt);
        REQUIRE(fit.status == FitStatus::converged);
        CHECK(std::fabs(fit.estimate.u[1] - std::log(3.0)) <= 1e-8);
        CHECK(fit.estimate.u[0] == 0.0);
    }

    SECTION("Normal single observation: u2 = -x exactly") {
        const LinkModel normal = make_model("normal", {{"sigma", 1.0}});
        const auto d = make_dataset(2, {{0, 1, 0.7}});
        FitOptions opts;
        opts.precheck_existence = false;  // Condition 1 is sufficient, not necessary here
        const FitResult fit = fit_newton(d, normal, opts);
        REQUIRE(fit.status == FitStatus::converged);
        CHECK(std::fabs(fit.estimate.u[1] - (-0.7)) <= 1e-8);
    }

    SECTION("fully symmetric 3-cycle lands on zero") {
        const auto d = make_dataset(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, -1.0}});
        const FitResult fit = fit_newton(d, bt);
        REQUIRE(fit.status == FitStatus::converged);
        for (const double v : fit.estimate.u) CHECK(std::fabs(v) <= 1e-8);
    }

    SECTION("empty dataset refused") {
        CHECK_THROWS_AS(fit_newton(make_dataset(2, {}), bt), std::invalid_argument);
    }
}

TEST_CASE("fit_newton invariants") {
    const LinkModel davidson = make_model("davidson", {{"theta", 1.0}});
    Rng rng(54);

    SECTION("monotone ascent and stationarity") {
        const auto inst = testutil::random_connected_instance(rng, davidson, 25, 0.4);
        FitOptions opts;
        opts.track_objective = true;
        const FitResult fit = fit_newton(inst.data, davidson, opts);
        REQUIRE(fit.status == FitStatus::converged);
        REQUIRE(fit.objective_history.size() >= 2);
        for (std::size_t k = 1; k < fit.objective_history.size(); ++k) {
            const double prev = fit.objective_history[k - 1];
            CHECK(fit.objective_history[k] > prev - 1e-10 * (1.0 + std::fabs(prev)));
        }
        // stationarity from scratch via the public gradient
        const std::vector<double> grad = gradient(inst.data, davidson, fit.estimate);
        for (std::size_t k = 1; k < grad.size(); ++k) CHECK(std::fabs(grad[k]) <= 1e-8);
    }

    SECTION("flip equivariance: negating outcomes negates the estimate") {
        const auto inst = testutil::random_connected_instance(rng, davidson, 20, 0.5);
        auto flipped = inst.data;
        for (auto& rec : flipped.records) rec.outcome = -rec.outcome;
        const FitResult a = fit_newton(inst.data, davidson);
        const FitResult b = fit_newton(flipped, davidson);
        REQUIRE(a.status == FitStatus::converged);
        REQUIRE(b.status == FitStatus::converged);
        for (std::size_t k = 0; k < a.estimate.size(); ++k) {
            CHECK(std::fabs(a.estimate.u[k] + b.estimate.u[k]) <= 1e-8);
        }
    }

    SECTION("permutation equivariance with subject 1 fixed") {
        const LinkModel bt = make_model("bt");
        const auto inst = testutil::random_connected_instance(rng, bt, 12, 0.5);
        // permutation: keep 0, rotate 1..11
        std::vector<std::int32_t> perm(12);
        perm[0] = 0;
        for (std::int32_t k = 1; k < 12; ++k) perm[static_cast<std::size_t>(k)] = (k % 11) + 1;
        ComparisonDataset relabeled;
        relabeled.n = 12;
        for (const auto& rec : inst.data.records) {
            const std::int32_t pi = perm[static_cast<std::size_t>(rec.i)];
            const std::int32_t pj = perm[static_cast<std::size_t>(rec.j)];
            if (pi < pj) {
                relabeled.records.push_back({pi, pj, rec.outcome});
            } else {
                relabeled.records.push_back({pj, pi, -rec.outcome});
            }
        }
        const FitResult a = fit_newton(inst.data, bt);
        const FitResult b = fit_newton(relabeled, bt);
        REQUIRE(a.status == FitStatus::converged);
        REQUIRE(b.status == FitStatus::converged);
        for (std::size_t k = 0; k < 12; ++k) {
            CHECK(std::fabs(b.estimate.u[static_cast<std::size_t>(perm[k])] - a.estimate.u[k]) <=
                  1e-10);
        }
    }

    SECTION("doubling every record leaves the optimum unchanged") {
        const LinkModel bt = make_model("bt");
        const auto inst = testutil::random_connected_instance(rng, bt, 15, 0.5);
        auto doubled = inst.data;
        doubled.records.insert(doubled.records.end(), inst.data.records.begin(),
                               inst.data.records.end());
        const FitResult a = fit_newton(inst.data, bt);
        const FitResult b = fit_newton(doubled, bt);
        CHECK(linf_error(b.estimate, a.estimate) <= 1e-8);
    }

    SECTION("warm start length mismatch throws") {
        const auto d = make_dataset(2, {{0, 1, 1.0}, {0, 1, -1.0}});
        FitOptions opts;
        opts.initial = std::vector<double>{0.0};
        CHECK_THROWS_AS(fit_newton(d, make_model("bt"), opts), std::invalid_argument);
    }
}

TEST_CASE("n=3 estimates match the nested grid-search oracle") {
    Rng rng(55);
    const LinkModel bt = make_model("bt");
    const LinkModel davidson = make_model("davidson", {{"theta", 1.0}});
    int exercised = 0;
    for (int trial = 0; trial < 60 && exercised < 12; ++trial) {
        const LinkModel& model = trial % 2 == 0 ? bt : davidson;
        const auto inst = testutil::random_instance(rng, model, 3, 0.9, 1.0, 3);
        if (inst.data.empty() || !check_condition1(inst.data).holds) continue;
        const FitResult fit = fit_newton(inst.data, model);
        if (fit.status != FitStatus::converged) continue;
        // keep oracle boxes honest: skip near-degenerate optima outside [-5,5]
        if (std::fabs(fit.estimate.u[1]) > 5.0 || std::fabs(fit.estimate.u[2]) > 5.0) continue;
        const auto [v2, v3] = testutil::grid_search_mle_n3(inst.data, model);
        CHECK(std::fabs(fit.estimate.u[1] - v2) <= 1e-3);
        CHECK(std::fabs(fit.estimate.u[2] - v3) <= 1e-3);
        ++exercised;
    }
    CHECK(exercised == 12);
}

TEST_CASE("MM solver for Bradley-Terry") {
    const LinkModel bt = make_model("bt");

    SECTION("two-subject closed form") {
        const auto d =
            make_dataset(2, {{0, 1, 1.0}, {0, 1, -1.0}, {0, 1, -1.0}, {0, 1, -1.0}});
        FitOptions opts;
        opts.max_iterations = 20000;
        const FitResult fit = fit_mm_bt(d, opts);
        REQUIRE(fit.status == FitStatus::converged);
        CHECK(std::fabs(fit.estimate.u[1] - std::log(3.0)) <= 1e-6);
    }

    SECTION("symmetric cycle lands on zero") {
        const auto d = make_dataset(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, -1.0}});
        FitOptions opts;
        opts.max_iterations = 20000;
        const FitResult fit = fit_mm_bt(d, opts);
        REQUIRE(fit.status == FitStatus::converged);
        for (const double v : fit.estimate.u) CHECK(std::fabs(v) <= 1e-8);
    }

    SECTION("monotone ascent along the MM iterations") {
        Rng rng(56);
        const auto inst = testutil::random_connected_instance(rng, bt, 20, 0.4);
        FitOptions opts;
        opts.max_iterations = 20000;
        opts.track_objective = true;
        const FitResult fit = fit_mm_bt(inst.data, opts);
        REQUIRE(fit.status == FitStatus::converged);
        for (std::size_t k = 1; k < fit.objective_history.size(); ++k) {
            const double prev = fit.objective_history[k - 1];
            CHECK(fit.objective_history[k] > prev - 1e-10 * (1.0 + std::fabs(prev)));
        }
    }

    SECTION("agrees with Newton on random connected instances") {
        Rng rng(57);
        for (int trial = 0; trial < 10; ++trial) {
            const auto inst = testutil::random_connected_instance(rng, bt, 50, 0.3);
            const FitResult newton = fit_newton(inst.data, bt);
            FitOptions opts;
            opts.max_iterations = 50000;
            const FitResult mm = fit_mm_bt(inst.data, opts);
            REQUIRE(newton.status == FitStatus::converged);
            REQUIRE(mm.status == FitStatus::converged);
            CHECK(linf_error(mm.estimate, newton.estimate) <= 1e-6);
        }
    }

    SECTION("refuses non-binary datasets") {
        const auto ties = make_dataset(2, {{0, 1, 0.0}, {0, 1, 1.0}});
        CHECK_THROWS_AS(fit_mm_bt(ties), std::invalid_argument);
    }
}

TEST_CASE("linf_error") {
    CHECK(linf_error(scores_of({0.0, 1.0}), scores_of({0.0, 1.0})) == 0.0);
    CHECK(linf_error(scores_of({0.0, 1.2, -0.3}), scores_of({0.0, 1.0, 0.1})) ==
          Catch::Approx(0.4).margin(1e-12));

    ScoreVector unanchored;
    unanchored.u = {0.5, 1.0};
    unanchored.anchored = false;
    CHECK_THROWS_AS(linf_error(unanchored, scores_of({0.0, 1.0})), std::invalid_argument);
    CHECK_THROWS_AS(linf_error(scores_of({0.0, 1.0}), scores_of({0.0, 1.0, 2.0})),
                    std::invalid_argument);
}
