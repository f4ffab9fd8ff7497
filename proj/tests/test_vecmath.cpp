#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "garpp/rng.hpp"
#include "garpp/vec_ops.hpp"
#include "oracles.hpp"

using garpp::GradientVector;

namespace {

std::vector<GradientVector> random_vectors(std::size_t n, std::size_t d, std::uint64_t seed,
                                           double scale = 5.0) {
    garpp::Rng rng(seed);
    std::vector<GradientVector> vs(n, GradientVector(d));
    for (auto& v : vs) {
        for (auto& x : v) x = scale * (2.0 * rng.uniform01() - 1.0);
    }
    return vs;
}

}  // namespace

TEST_CASE("l2_distance_sq basics") {
    CHECK(garpp::l2_distance_sq({7.0, -3.0}, {7.0, -3.0}) == 0.0);
    CHECK(garpp::l2_distance_sq({0.0, 0.0}, {3.0, 4.0}) == 25.0);
    CHECK(garpp::l2_distance_sq({1.0}, {4.0}) == 9.0);
}

TEST_CASE("l2_distance_sq matches per-component accumulation") {
    const auto vs = random_vectors(2, 16, 101);
    const double got = garpp::l2_distance_sq(vs[0], vs[1]);
    const double want = oracle::sqdist(vs[0], vs[1]);
    CHECK_THAT(got, Catch::Matchers::WithinRel(want, 1e-12));
}

TEST_CASE("l2_distance_sq rejects mismatched dimensions with both sizes named") {
    try {
        garpp::l2_distance_sq({1.0, 2.0}, {1.0, 2.0, 3.0});
        FAIL("expected precondition_error");
    } catch (const garpp::precondition_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);
    }
}

TEST_CASE("average midpoint and idempotence") {
    const std::vector<GradientVector> pair{{1.0, 1.0}, {3.0, 3.0}};
    CHECK(garpp::average(pair) == GradientVector{2.0, 2.0});

    const std::vector<GradientVector> same(4, GradientVector{0.5, -2.25, 7.0});
    CHECK(garpp::average(same) == GradientVector{0.5, -2.25, 7.0});
}

TEST_CASE("average matches per-coordinate sum oracle") {
    const auto vs = random_vectors(5, 8, 202);
    const GradientVector got = garpp::average(vs);
    const oracle::Vec want = oracle::mean_rows(vs);
    for (std::size_t j = 0; j < got.size(); ++j) {
        CHECK_THAT(got[j], Catch::Matchers::WithinRel(want[j], 1e-12));
    }
}

TEST_CASE("average rejects empty and mismatched input") {
    CHECK_THROWS_AS(garpp::average(std::vector<GradientVector>{}), garpp::precondition_error);
    const std::vector<GradientVector> bad{{1.0, 2.0}, {1.0}};
    CHECK_THROWS_AS(garpp::average(bad), garpp::precondition_error);
}

TEST_CASE("coordinate_median odd, even, identical") {
    const std::vector<GradientVector> odd{{1.0}, {2.0}, {9.0}};
    CHECK(garpp::coordinate_median(odd) == GradientVector{2.0});

    const std::vector<GradientVector> even{{1.0}, {3.0}};
    CHECK(garpp::coordinate_median(even) == GradientVector{2.0});

    const std::vector<GradientVector> same(6, GradientVector{-4.0, 0.25});
    CHECK(garpp::coordinate_median(same) == GradientVector{-4.0, 0.25});

    CHECK_THROWS_AS(garpp::coordinate_median(std::vector<GradientVector>{}),
                    garpp::precondition_error);
}

TEST_CASE("coordinate_median matches the sort oracle") {
    for (std::size_t n : {3u, 4u, 7u, 10u}) {
        const auto vs = random_vectors(n, 6, 300 + n);
        CHECK(garpp::coordinate_median(vs) == oracle::median_rows(vs));
    }
}

TEST_CASE("select_k_closest examples") {
    const std::vector<double> values{1.0, 5.0, 9.0};
    CHECK(garpp::select_k_closest(values, 4.0, 2) == std::vector<std::size_t>{0, 1});

    const std::vector<double> ties{2.0, 2.0, 2.0};
    CHECK(garpp::select_k_closest(ties, 2.0, 2) == std::vector<std::size_t>{0, 1});

    CHECK(garpp::select_k_closest(values, 0.0, 3) == std::vector<std::size_t>{0, 1, 2});
    CHECK_THROWS_AS(garpp::select_k_closest(values, 0.0, 4), garpp::precondition_error);
}

TEST_CASE("select_k_closest excludes nothing closer than what it keeps") {
    garpp::Rng rng(777);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t len = 2 + rng.below(10);
        std::vector<double> values(len);
        for (auto& v : values) v = 10.0 * (2.0 * rng.uniform01() - 1.0);
        const double center = 10.0 * (2.0 * rng.uniform01() - 1.0);
        const std::size_t k = 1 + rng.below(len);
        const auto picked = garpp::select_k_closest(values, center, k);

        REQUIRE(picked.size() == k);
        CHECK(std::is_sorted(picked.begin(), picked.end()));
        double worst_kept = 0.0;
        std::vector<bool> kept(len, false);
        for (std::size_t i : picked) {
            kept[i] = true;
            worst_kept = std::max(worst_kept, std::abs(values[i] - center));
        }
        for (std::size_t i = 0; i < len; ++i) {
            if (!kept[i]) CHECK(std::abs(values[i] - center) >= worst_kept);
        }
    }
}

TEST_CASE("average and coordinate_median are permutation invariant") {
    garpp::Rng rng(888);
    for (int trial = 0; trial < 50; ++trial) {
        auto vs = random_vectors(7, 5, 9000 + static_cast<std::uint64_t>(trial));
        const GradientVector avg = garpp::average(vs);
        const GradientVector med = garpp::coordinate_median(vs);
        std::mt19937_64 shuf(trial);
        std::shuffle(vs.begin(), vs.end(), shuf);
        const GradientVector avg2 = garpp::average(vs);
        const GradientVector med2 = garpp::coordinate_median(vs);
        for (std::size_t j = 0; j < avg.size(); ++j) {
            CHECK_THAT(avg2[j], Catch::Matchers::WithinRel(avg[j], 1e-12) ||
                                    Catch::Matchers::WithinAbs(avg[j], 1e-12));
            CHECK(med2[j] == med[j]);
        }
    }
}

TEST_CASE("average and coordinate_median commute with affine maps") {
    garpp::Rng rng(999);
    for (int trial = 0; trial < 50; ++trial) {
        const auto vs = random_vectors(6, 4, 5000 + static_cast<std::uint64_t>(trial));
        const double c = 0.1 + 3.0 * rng.uniform01();
        GradientVector t(4);
        for (auto& x : t) x = 4.0 * (2.0 * rng.uniform01() - 1.0);

        auto transformed = vs;
        for (auto& v : transformed) {
            for (std::size_t j = 0; j < v.size(); ++j) v[j] = c * v[j] + t[j];
        }
        const GradientVector avg = garpp::average(vs);
        const GradientVector avgT = garpp::average(transformed);
        const GradientVector med = garpp::coordinate_median(vs);
        const GradientVector medT = garpp::coordinate_median(transformed);
        for (std::size_t j = 0; j < avg.size(); ++j) {
            CHECK_THAT(avgT[j], Catch::Matchers::WithinAbs(c * avg[j] + t[j], 1e-9));
            CHECK_THAT(medT[j], Catch::Matchers::WithinAbs(c * med[j] + t[j], 1e-9));
        }
    }
}

TEST_CASE("ensure_finite flags the offending index") {
    GradientVector v{1.0, std::numeric_limits<double>::infinity()};
    try {
        garpp::ensure_finite(v, "test vector");
        FAIL("expected format_error");
    } catch (const garpp::format_error& e) {
        CHECK(std::string(e.what()).find("index 1") != std::string::npos);
    }
}
