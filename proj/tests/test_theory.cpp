#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "paircomp/math.hpp"
#include "paircomp/model.hpp"
#include "paircomp/theory.hpp"

using namespace paircomp;

TEST_CASE("global_discrepancy closed forms") {
    const LinkModel bt = make_model("bt");
    CHECK(global_discrepancy(bt, 0.0) == Catch::Approx(0.5).margin(1e-12));
    CHECK(global_discrepancy(bt, 1.0) == Catch::Approx(logistic(1.0)).margin(1e-12));
    CHECK(global_discrepancy(make_model("davidson", {{"theta", 1.0}}), 0.0) ==
          Catch::Approx(2.0 / 3.0).margin(1e-12));
    CHECK_THROWS_AS(global_discrepancy(bt, -0.5), std::invalid_argument);

    // Normal: closed form against an independent quadrature of the density
    const LinkModel normal = make_model("normal", {{"sigma", 1.0}});
    const double by_quadrature =
        integrate([&](double x) { return normal.density(x, 1.0); }, 0.0, 20.0, 1e-12);
    CHECK(global_discrepancy(normal, 1.0) == Catch::Approx(by_quadrature).margin(1e-9));
    CHECK(global_discrepancy(normal, 1.0) == Catch::Approx(normal_cdf(1.0)).margin(1e-12));
}

TEST_CASE("global_discrepancy is nondecreasing in M for every built-in") {
    const std::vector<LinkModel> models = {
        make_model("bt"),
        make_model("thurstone_mosteller"),
        make_model("rao_kupper", {{"theta", 2.0}}),
        make_model("davidson", {{"theta", 1.0}}),
        make_model("normal", {{"sigma", 1.0}}),
        make_model("general_bt_bo3"),
        make_model("clm4", {{"tau", 2.5}})};
    for (const auto& model : models) {
        double previous = 0.0;
        for (double m = 0.0; m <= 4.0 + 1e-9; m += 0.25) {
            const double c1 = global_discrepancy(model, m);
            CHECK(c1 >= 0.5 - 1e-12);
            CHECK(c1 <= 1.0 + 1e-12);
            CHECK(c1 >= previous - 1e-12);
            previous = c1;
        }
    }
}

TEST_CASE("constants match the Bradley-Terry closed forms") {
    const LinkModel bt = make_model("bt");

    SECTION("M = 1 spot values") {
        const ConstantsBundle bundle = constants(bt, 1.0);
        CHECK(bundle.c1 == Catch::Approx(logistic(1.0)).margin(1e-9));
        CHECK(bundle.c2 == Catch::Approx(logistic(1.0)).margin(1e-6));
        CHECK(bundle.c3 == Catch::Approx(0.25).margin(1e-9));
        CHECK(bundle.c4 ==
              Catch::Approx(logistic(2.0) * (1.0 - logistic(2.0))).margin(1e-6));
        CHECK(bundle.c2_bounded);
        CHECK(bundle.rate_form == ConstantsBundle::RateForm::bounded_c2);
    }

    SECTION("closed forms across M in [0.5, 5]") {
        for (double m = 0.5; m <= 5.0 + 1e-9; m += 0.5) {
            const ConstantsBundle bundle = constants(bt, m);
            CHECK(std::fabs(bundle.c2 - logistic(m)) < 1e-4);
            CHECK(std::fabs(bundle.c3 - 0.25) < 1e-4);
            CHECK(std::fabs(bundle.c4 - logistic_deriv(m + 1.0)) < 1e-4);
        }
    }

    SECTION("bundle invariants") {
        for (double m : {0.0, 1.0, 3.0}) {
            const ConstantsBundle bundle = constants(bt, m);
            CHECK(bundle.c4 <= bundle.c3 + 1e-12);
            CHECK(bundle.c4 > 0.0);
            CHECK(bundle.c2 >= 0.0);
        }
    }
}

TEST_CASE("constants for the Normal model report exact curvature and C5") {
    const LinkModel normal = make_model("normal", {{"sigma", 1.0}});
    const ConstantsBundle bundle = constants(normal, 2.0);
    CHECK_FALSE(bundle.c2_bounded);
    CHECK(std::isinf(bundle.c2));
    CHECK(bundle.c3 == 1.0);
    CHECK(bundle.c4 == 1.0);
    REQUIRE(bundle.c5.has_value());
    CHECK(*bundle.c5 == Catch::Approx(std::sqrt(8.0 / 3.0)).margin(1e-6));
    CHECK(bundle.rate_form == ConstantsBundle::RateForm::subgaussian_c5);

    const LinkModel normal2 = make_model("normal", {{"sigma", 2.0}});
    const ConstantsBundle bundle2 = constants(normal2, 1.0);
    CHECK(bundle2.c3 == 0.25);
    CHECK(bundle2.c4 == 0.25);
    REQUIRE(bundle2.c5.has_value());
    CHECK(*bundle2.c5 == Catch::Approx(0.5 * std::sqrt(8.0 / 3.0)).margin(1e-6));
}

TEST_CASE("constants for Davidson match a dense-grid oracle") {
    const LinkModel davidson = make_model("davidson", {{"theta", 1.0}});
    const ConstantsBundle bundle = constants(davidson, 0.0);
    double oracle_c3 = 0.0;
    double oracle_c4 = std::numeric_limits<double>::infinity();
    for (double y = -1.0; y <= 1.0 + 1e-12; y += 1e-4) {
        const double a = std::fabs(davidson.score_slope_fn(1.0, y));
        oracle_c3 = std::max(oracle_c3, a);
        oracle_c4 = std::min(oracle_c4, a);
    }
    CHECK(bundle.c3 == Catch::Approx(oracle_c3).margin(1e-6));
    CHECK(bundle.c4 == Catch::Approx(oracle_c4).margin(1e-6));
    CHECK(bundle.c4 > 0.0);
}

TEST_CASE("sub_gaussian_norm: exact Normal solution and bounded-score bounds") {
    // Exact: g(X_y, y) ~ N(0, 1/sigma^2); E exp(Z^2/t^2) = 2 at t = sqrt(8/3)/sigma
    CHECK(sub_gaussian_norm(make_model("normal", {{"sigma", 1.0}}), 3.0) ==
          Catch::Approx(std::sqrt(8.0 / 3.0)).margin(1e-6));
    CHECK(sub_gaussian_norm(make_model("normal", {{"sigma", 2.0}}), 1.0) ==
          Catch::Approx(0.5 * std::sqrt(8.0 / 3.0)).margin(1e-6));

    // Bounded scores: sqrt(E g^2) <= psi2 <= sup|g| / sqrt(log 2)
    const LinkModel bt = make_model("bt");
    const double c5 = sub_gaussian_norm(bt, 1.0);
    const double c2 = constants(bt, 1.0).c2;
    double second_moment_at_zero = 0.0;
    for (double x : {-1.0, 1.0}) {
        const double g = bt.score_fn(x, 0.0);
        second_moment_at_zero += bt.density(x, 0.0) * g * g;
    }
    CHECK(c5 >= std::sqrt(second_moment_at_zero) - 1e-9);
    CHECK(c5 <= c2 / std::sqrt(std::log(2.0)) + 1e-9);
    CHECK(c5 > 0.0);
}

TEST_CASE("delta_n formula arithmetic and shape") {
    ConstantsBundle unit;
    unit.c1 = 0.75;
    unit.c2 = unit.c3 = unit.c4 = 1.0;
    unit.c2_bounded = true;

    SECTION("direct arithmetic at n=10000, p=0.1") {
        const double log_n = std::log(10000.0);
        const double expected = std::sqrt(log_n / 1000.0) * (log_n / std::log(1000.0));
        const double delta = delta_n(unit, 10000, 0.1);
        CHECK(delta == Catch::Approx(expected).margin(1e-12));
        CHECK(delta == Catch::Approx(0.12797).margin(1e-4));
    }

    SECTION("strictly decreasing in p for np > e") {
        double previous = std::numeric_limits<double>::infinity();
        for (double p : {0.001, 0.003, 0.01, 0.05, 0.2, 0.6, 1.0}) {
            const double delta = delta_n(unit, 5000, p);
            CHECK(delta < previous);
            previous = delta;
        }
    }

    SECTION("vanishes as n grows at fixed p") {
        double previous = std::numeric_limits<double>::infinity();
        for (std::int64_t n = 100; n <= 1638400; n *= 4) {
            const double delta = delta_n(unit, n, 0.3);
            CHECK(delta < previous);
            previous = delta;
        }
        CHECK(delta_n(unit, 1638400, 0.3) < 0.02);
    }

    SECTION("error paths") {
        CHECK_THROWS_AS(delta_n(unit, 2, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(delta_n(unit, 1000, 0.0005), std::invalid_argument);  // np <= 1
        CHECK_THROWS_AS(delta_n(unit, 1000, 1.5), std::invalid_argument);
        ConstantsBundle unbounded = unit;
        unbounded.c2_bounded = false;
        unbounded.c5.reset();
        CHECK_THROWS_AS(delta_n(unbounded, 1000, 0.5), std::logic_error);
        unbounded.c5 = 2.0;
        CHECK(delta_n(unbounded, 1000, 0.5) ==
              Catch::Approx(2.0 * delta_n(unit, 1000, 0.5)).margin(1e-12));
    }

    SECTION("BT constant product scales like e^{2M}: ratio in [1, 4]") {
        const LinkModel bt = make_model("bt");
        for (double m : {1.0, 2.0, 3.0, 4.0}) {
            const ConstantsBundle bundle = constants(bt, m);
            const double ratio =
                bundle.c2 * bundle.c3 / (bundle.c4 * bundle.c4) / std::exp(2.0 * m);
            INFO("M=" << m << " ratio=" << ratio);
            CHECK(ratio >= 1.0);
            CHECK(ratio <= 4.0);
            // closed-form oracle for the same quantity
            const double closed = logistic(m) * 0.25 / std::pow(logistic_deriv(m + 1.0), 2) /
                                  std::exp(2.0 * m);
            CHECK(ratio == Catch::Approx(closed).epsilon(1e-3));
        }
    }
}

TEST_CASE("existence_rate_term") {
    CHECK(existence_rate_term(2000, 0.220, 0.7311) == Catch::Approx(0.05515).margin(1e-4));
    CHECK(existence_rate_term(1000, 0.5, 0.5) ==
          Catch::Approx(std::log(1000.0) / (500.0 * std::log(2.0))).margin(1e-12));
    CHECK(std::isinf(existence_rate_term(1000, 0.5, 1.0)));
    CHECK(existence_rate_term(1000, 0.5, 0.999999) > 1e4 * existence_rate_term(1000, 0.5, 0.75));
    CHECK_THROWS_AS(existence_rate_term(1, 0.5, 0.75), std::invalid_argument);
    CHECK_THROWS_AS(existence_rate_term(1000, 0.0, 0.75), std::invalid_argument);
    CHECK_THROWS_AS(existence_rate_term(1000, 0.5, 0.4), std::invalid_argument);
}

TEST_CASE("schedule matches the reference table to 3 decimals") {
    struct Cell {
        std::int64_t n;
        double p_mid;
        double p_sparse;
        double m_half;
        double m_two;
    };
    const Cell table[] = {
        {2000, 0.469, 0.220, 1.014, 4.057},
        {4000, 0.378, 0.143, 1.058, 4.231},
        {6000, 0.331, 0.110, 1.082, 4.327},
        {8000, 0.301, 0.091, 1.098, 4.392},
        {10000, 0.280, 0.078, 1.110, 4.441},
        {12000, 0.263, 0.069, 1.120, 4.480},
    };
    for (const auto& cell : table) {
        const Schedule s = schedule(cell.n);
        INFO("n=" << cell.n);
        CHECK(std::fabs(s.p_mid - cell.p_mid) <= 5e-4);
        CHECK(std::fabs(s.p_sparse - cell.p_sparse) <= 5e-4);
        CHECK(std::fabs(s.m_half_loglog - cell.m_half) <= 5e-4);
        CHECK(std::fabs(s.m_two_loglog - cell.m_two) <= 5e-4);
        CHECK(s.p_dense == 0.5);
        CHECK(s.m_unit == 1.0);
        CHECK(s.p_connectivity ==
              Catch::Approx(std::log(static_cast<double>(cell.n)) / cell.n).margin(1e-12));
    }
    // expected per-subject comparison counts for the n=2000 row
    CHECK(std::round(schedule(2000).p_sparse * 1999) == 439.0);
    CHECK(std::round(schedule(2000).p_mid * 1999) == 937.0);
    CHECK_THROWS_AS(schedule(2), std::invalid_argument);
}
