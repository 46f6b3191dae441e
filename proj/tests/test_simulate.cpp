#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "paircomp/simulate.hpp"
#include "test_util.hpp"

using namespace paircomp;

TEST_CASE("generate_scores anchors and bounds the dynamic range") {
    Rng rng(11);
    const ScoreVector sv = generate_scores(5000, 1.0, rng);
    REQUIRE(sv.anchored);
    CHECK(sv.u[0] == 0.0);
    double lo = 0.0;
    double hi = 0.0;
    for (const double v : sv.u) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi - lo <= 1.0);  // M = 1

    SECTION("sample variance matches the uniform law") {
        Rng rng2(12);
        const ScoreVector big = generate_scores(100000, 2.0, rng2);
        double mean = 0.0;
        for (const double v : big.u) mean += v;
        mean /= static_cast<double>(big.size());
        double var = 0.0;
        for (const double v : big.u) var += (v - mean) * (v - mean);
        var /= static_cast<double>(big.size() - 1);
        CHECK(std::fabs(var - 1.0 / 3.0) < 0.02 * (1.0 / 3.0));  // M^2/12 = 1/3
    }

    CHECK_THROWS_AS(generate_scores(1, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(generate_scores(10, 0.0, rng), std::invalid_argument);
}

TEST_CASE("pair_from_index enumerates unordered pairs lexicographically") {
    for (const std::int32_t n : {3, 5, 17}) {
        std::int64_t k = 0;
        for (std::int32_t i = 0; i < n; ++i) {
            for (std::int32_t j = i + 1; j < n; ++j) {
                std::int32_t pi, pj;
                paircomp::detail::pair_from_index(k, n, pi, pj);
                CHECK(pi == i);
                CHECK(pj == j);
                ++k;
            }
        }
    }
}

TEST_CASE("generate_graph edge cases and law") {
    Rng rng(21);

    SECTION("p = 0 has no edges; p = 1, T = 2 fills every pair") {
        CHECK(generate_graph(100, 0.0, 3, rng).pairs.empty());
        const ComparisonGraph full = generate_graph(30, 1.0, 2, rng);
        CHECK(full.pairs.size() == 30 * 29 / 2);
        for (const auto& pc : full.pairs) CHECK(pc.count == 2);
    }

    SECTION("mean degree is about 439 at n=2000, p=0.220") {
        double degree_sum = 0.0;
        const int seeds = 20;
        for (int s = 0; s < seeds; ++s) {
            Rng r(1000 + s);
            const ComparisonGraph g = generate_graph(2000, 0.220, 1, r);
            degree_sum += 2.0 * static_cast<double>(g.total_comparisons()) / 2000.0;
        }
        const double mean_degree = degree_sum / seeds;
        CHECK(std::fabs(mean_degree - 439.0) < 0.05 * 439.0);
    }

    SECTION("total multiplicity matches T p n(n-1)/2 at n=200, T=3, p=0.1") {
        double total = 0.0;
        const int seeds = 200;
        for (int s = 0; s < seeds; ++s) {
            Rng r(5000 + s);
            total += static_cast<double>(generate_graph(200, 0.1, 3, r).total_comparisons());
        }
        const double expected = 3.0 * 0.1 * 200.0 * 199.0 / 2.0;
        CHECK(std::fabs(total / seeds - expected) < 0.02 * expected);
    }

    SECTION("per-pair multiplicity law is Bin(T, p) (chi-square on one pair)") {
        std::vector<long long> counts(4, 0);
        const int reps = 200000;
        for (int s = 0; s < reps; ++s) {
            Rng r(90000 + s);
            const ComparisonGraph g = generate_graph(2, 0.3, 3, r);
            const int mult = g.pairs.empty() ? 0 : g.pairs[0].count;
            counts[static_cast<std::size_t>(mult)]++;
        }
        const double q = 0.7;
        const std::vector<double> probs = {q * q * q, 3 * 0.3 * q * q, 3 * 0.09 * q, 0.027};
        CHECK(testutil::chi_square_stat(counts, probs) < testutil::chi2_crit_001(3));
    }

    SECTION("degree concentration at n=2000, p=0.22") {
        const double np = 2000.0 * 0.22;
        const double z = 4.0 * std::sqrt(std::log(2000.0) / np);
        int good_seeds = 0;
        for (int s = 0; s < 100; ++s) {
            Rng r(777 + s);
            const ComparisonGraph g = generate_graph(2000, 0.22, 1, r);
            std::vector<int> degree(2000, 0);
            for (const auto& pc : g.pairs) {
                degree[static_cast<std::size_t>(pc.i)] += pc.count;
                degree[static_cast<std::size_t>(pc.j)] += pc.count;
            }
            bool ok = true;
            for (const int d : degree) {
                if (d < (1.0 - z) * np || d > (1.0 + z) * np) {
                    ok = false;
                    break;
                }
            }
            if (ok) good_seeds++;
        }
        CHECK(good_seeds >= 99);
    }

    CHECK_THROWS_AS(generate_graph(1, 0.5, 1, rng), std::invalid_argument);
    CHECK_THROWS_AS(generate_graph(10, 1.5, 1, rng), std::invalid_argument);
    CHECK_THROWS_AS(generate_graph(10, 0.5, 0, rng), std::invalid_argument);
}

TEST_CASE("generate_dataset draws outcomes from f(.; u_i - u_j)") {
    const LinkModel bt = make_model("bt");

    SECTION("equal scores give a balanced coin") {
        ScoreVector sv;
        sv.u = {0.0, 0.0};
        sv.anchored = true;
        ComparisonGraph g;
        g.n = 2;
        g.max_per_pair = 100000;
        g.pairs = {{0, 1, 100000}};
        Rng rng(31);
        const ComparisonDataset d = generate_dataset(sv, g, bt, rng);
        long long wins = 0;
        for (const auto& rec : d.records) wins += rec.outcome > 0 ? 1 : 0;
        CHECK(std::fabs(static_cast<double>(wins) / 100000.0 - 0.5) < 0.005);
    }

    SECTION("Normal per-pair mean tracks the score difference") {
        const LinkModel normal = make_model("normal", {{"sigma", 1.0}});
        ScoreVector sv;
        sv.u = {0.0, -0.8};
        sv.anchored = true;
        ComparisonGraph g;
        g.n = 2;
        g.max_per_pair = 10000;
        g.pairs = {{0, 1, 10000}};
        Rng rng(32);
        const ComparisonDataset d = generate_dataset(sv, g, normal, rng);
        double mean = 0.0;
        for (const auto& rec : d.records) mean += rec.outcome;
        mean /= static_cast<double>(d.records.size());
        CHECK(std::fabs(mean - 0.8) < 0.05);
    }

    SECTION("empty graph gives an empty record list") {
        ScoreVector sv;
        sv.u = {0.0, 0.3, -0.1};
        ComparisonGraph g;
        g.n = 3;
        Rng rng(33);
        CHECK(generate_dataset(sv, g, bt, rng).records.empty());
    }

    SECTION("graph/scores length mismatch is rejected") {
        ScoreVector sv;
        sv.u = {0.0, 0.1};
        ComparisonGraph g;
        g.n = 3;
        Rng rng(34);
        CHECK_THROWS_AS(generate_dataset(sv, g, bt, rng), std::invalid_argument);
    }
}

TEST_CASE("identical seeds give byte-identical datasets") {
    const LinkModel davidson = make_model("davidson", {{"theta", 1.0}});
    auto render = [&]() {
        Rng rng(904);
        const ScoreVector sv = generate_scores(80, 1.0, rng);
        const ComparisonGraph g = generate_graph(80, 0.3, 2, rng);
        const ComparisonDataset d = generate_dataset(sv, g, davidson, rng);
        std::ostringstream out;
        write_dataset_csv(d, out);
        return out.str();
    };
    const std::string a = render();
    const std::string b = render();
    CHECK(a == b);
    CHECK(a.find("i,j,outcome\n") == 0);
}

TEST_CASE("replication streams have no shared prefixes") {
    const std::uint64_t base = 424242;
    std::set<std::pair<std::uint64_t, std::uint64_t>> prefixes;
    for (std::uint64_t r = 0; r < 64; ++r) {
        Rng rng(base, r);
        const std::uint64_t first = rng.next_u64();
        const std::uint64_t second = rng.next_u64();
        CHECK(prefixes.emplace(first, second).second);  // all 2-prefixes distinct
    }
    // and distinct base seeds do not collide on stream 0 either
    std::set<std::uint64_t> firsts;
    for (std::uint64_t b = 0; b < 64; ++b) {
        Rng rng(b, 0);
        CHECK(firsts.insert(rng.next_u64()).second);
    }
}
