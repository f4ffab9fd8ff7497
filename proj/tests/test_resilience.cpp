#include <catch2/catch_amalgamated.hpp>

#include "garpp/resilience.hpp"

using garpp::AttackKind;
using garpp::AttackSpec;
using garpp::Decision;
using garpp::EtaVariant;
using garpp::GradientVector;
using garpp::Rule;

TEST_CASE("eta at n = 11, f = 2, m = 7") {
    // lemma form: sqrt(2 * (9 + 46/7)); derivation form: sqrt(2 * (9 + 46/5))
    CHECK_THAT(garpp::eta(11, 2, 7, EtaVariant::lemma_statement),
               Catch::Matchers::WithinRel(std::sqrt(2.0 * (9.0 + 46.0 / 7.0)), 1e-15));
    CHECK_THAT(garpp::eta(11, 2, 7, EtaVariant::lemma_statement),
               Catch::Matchers::WithinAbs(5.5806, 1e-4));
    CHECK_THAT(garpp::eta(11, 2, 7, EtaVariant::proof_body),
               Catch::Matchers::WithinRel(std::sqrt(2.0 * (9.0 + 46.0 / 5.0)), 1e-15));
    CHECK_THAT(garpp::eta(11, 2, 7, EtaVariant::proof_body),
               Catch::Matchers::WithinAbs(6.0332, 1e-4));
}

TEST_CASE("eta collapses to sqrt(2n) at f = 0 and grows with f") {
    for (EtaVariant v : {EtaVariant::lemma_statement, EtaVariant::proof_body}) {
        CHECK_THAT(garpp::eta(11, 0, 9, v),
                   Catch::Matchers::WithinRel(std::sqrt(22.0), 1e-15));
        double prev = 0.0;
        for (int f = 0; f <= 3; ++f) {
            const double e = garpp::eta(11, f, 6, v);
            CHECK(e > prev);
            prev = e;
        }
    }
}

TEST_CASE("eta rejects impossible parameters") {
    CHECK_THROWS_AS(garpp::eta(11, 2, 0, EtaVariant::lemma_statement),
                    garpp::precondition_error);
    CHECK_THROWS_AS(garpp::eta(11, 2, 8, EtaVariant::lemma_statement),
                    garpp::precondition_error);
    // n - 2f - 2 <= 0
    CHECK_THROWS_AS(garpp::eta(8, 3, 1, EtaVariant::proof_body), garpp::precondition_error);
}

TEST_CASE("variance condition arithmetic") {
    const auto zero_noise = garpp::check_variance_condition(5.0, 100, 0.0, 4.0);
    CHECK(zero_noise.holds);
    CHECK(zero_noise.sin_alpha == 0.0);

    //ference value: 5 * sqrt(100) * 0.1 = 5 >= 4
    const auto too_noisy = garpp::check_variance_condition(5.0, 100, 0.1, 4.0);
    CHECK(!too_noisy.holds);
    CHECK(!too_noisy.alpha_defined);

    // boundary equality is not strict inequality
    const auto boundary = garpp::check_variance_condition(1.0, 1, 2.0, 2.0);
    CHECK(!boundary.holds);
}

TEST_CASE("weak condition with no failures and no noise is exact") {
    GradientVector g{0.6, -0.8};  // unit norm
    AttackSpec none;
    const auto est = garpp::estimate_weak_condition(Rule::multi_krum, 11, 0, none, g, 0.0, 200, 5);
    CHECK(est.decision == Decision::pass);
    CHECK_THAT(est.inner_product_lhs, Catch::Matchers::WithinRel(1.0, 1e-12));
    CHECK(est.halfwidth == 0.0);
    CHECK(est.alpha == 0.0);
    CHECK_THAT(est.bound_rhs, Catch::Matchers::WithinRel(1.0, 1e-12));
    CHECK(est.moment_r2 > 0.0);
}

TEST_CASE("averaging fails the weak condition under a strong reversed attack") {
    GradientVector g(20, 1.0 / std::sqrt(20.0));
    AttackSpec reversed{AttackKind::reversed, {{"scale", 10.0}}};
    const auto est =
        garpp::estimate_weak_condition(Rule::average, 11, 2, reversed, g, 0.01, 400, 5);
    CHECK(est.decision == Decision::fail);
    CHECK(est.inner_product_lhs < 0.0);

    const auto robust =
        garpp::estimate_weak_condition(Rule::multi_krum, 11, 2, reversed, g, 0.01, 400, 5);
    CHECK(robust.decision == Decision::pass);
}

TEST_CASE("weak condition is indeterminate when sin(alpha) >= 1") {
    GradientVector g(100, 0.1);
    AttackSpec none;
    const auto est = garpp::estimate_weak_condition(Rule::multi_krum, 11, 2, none, g, 0.5, 100, 1);
    CHECK(est.decision == Decision::indeterminate);
    CHECK(!est.alpha_defined);
    CHECK(std::isnan(est.alpha));
}

TEST_CASE("weak condition estimates are reproducible bit for bit") {
    GradientVector g(10, 1.0 / std::sqrt(10.0));
    AttackSpec lie{AttackKind::little_is_enough, {{"z", 1.5}}};
    const auto a = garpp::estimate_weak_condition(Rule::multi_bulyan, 11, 2, lie, g, 0.02, 300, 77);
    const auto b = garpp::estimate_weak_condition(Rule::multi_bulyan, 11, 2, lie, g, 0.02, 300, 77);
    CHECK(a.inner_product_lhs == b.inner_product_lhs);
    CHECK(a.halfwidth == b.halfwidth);
    CHECK(a.moment_r4 == b.moment_r4);
    CHECK(a.decision == b.decision);
}

TEST_CASE("estimate_weak_condition rejects tiny trial counts") {
    GradientVector g{1.0};
    AttackSpec none;
    CHECK_THROWS_AS(garpp::estimate_weak_condition(Rule::average, 5, 0, none, g, 0.0, 10, 1),
                    garpp::precondition_error);
}

TEST_CASE("leeway is zero when every worker agrees") {
    GradientVector g(8, 0.25);
    AttackSpec none;
    const auto rep = garpp::leeway_check(Rule::median, 9, 0, none, g, 0.0, 100, 3);
    for (double v : rep.per_coordinate) CHECK(v == 0.0);
    CHECK(rep.max_coordinate == 0.0);
}

TEST_CASE("median leeway under noise stays within the honest spread") {
    const int d = 16;
    GradientVector g(d, 1.0 / 4.0);
    const double sigma = 0.05;
    AttackSpec none;
    const auto rep = garpp::leeway_check(Rule::median, 9, 0, none, g, sigma, 500, 3);
    CHECK(rep.max_coordinate > 0.0);
    // The aggregate never leaves the per-coordinate envelope, so the gap to
    // the nearest worker is within a few noise widths.
    CHECK(rep.max_coordinate < 6.0 * sigma);
}

TEST_CASE("leeway scaling fits an exponent over the dimension sweep") {
    AttackSpec lie{AttackKind::little_is_enough, {{"z", 3.0}}};
    const std::vector<int> dims{16, 64, 256};
    const auto scaling =
        garpp::leeway_scaling(Rule::multi_bulyan, 11, 2, lie, 0.1, 200, 9, dims);
    REQUIRE(scaling.dims.size() == 3);
    REQUIRE(scaling.max_leeway.size() == 3);
    for (double v : scaling.max_leeway) CHECK(v > 0.0);
    CHECK(scaling.fitted_exponent < 0.0);

    CHECK_THROWS_AS(
        garpp::leeway_scaling(Rule::median, 9, 0, lie, 0.1, 200, 9, std::vector<int>{16, 64}),
        garpp::precondition_error);
}
