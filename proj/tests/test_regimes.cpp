#include <cmath>

#include "doctest.h"
#include "implab/regimes.hpp"

using namespace implab;

TEST_CASE("alpha_of exact values") {
    CHECK(alpha_of(3.0) == 1.0);
    CHECK(alpha_of(1.4) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(alpha_of(5.0 / 3.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(alpha_of(1.0), DomainError);
    CHECK_THROWS_AS(alpha_of(0.5), DomainError);
}

TEST_CASE("lambda_star closed forms") {
    CHECK(lambda_star(1.4) == doctest::Approx((7.0 - std::sqrt(5.0)) / 4.0).epsilon(1e-14));
    // both branches agree at gamma = 5/3
    double g = 5.0 / 3.0;
    double s = 1.0 + std::sqrt(2.0 / (g - 1.0));
    double branch1 = 1.0 + 2.0 / (s * s);
    double branch2 = (3.0 * g - 1.0) / (2.0 + std::sqrt(3.0) * (g - 1.0));
    CHECK(std::abs(branch1 - branch2) < 1e-14);
    CHECK(lambda_star(g) == doctest::Approx(3.0 - std::sqrt(3.0)).epsilon(1e-14));
    // limit toward gamma = 1
    CHECK(lambda_star(1.0 + 1e-10) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK_THROWS_AS(lambda_star(1.0), DomainError);
}

TEST_CASE("delta_star closed forms and limits") {
    CHECK(delta_star(1.4) ==
          doctest::Approx(0.25 * 2.4 - 0.5 * std::sqrt(0.8)).epsilon(1e-14));
    double g = 5.0 / 3.0;
    double b1 = 0.25 * (g + 1.0) - 0.5 * std::sqrt(2.0 * (g - 1.0));
    double b2 = (1.0 - (2.0 * std::sqrt(3.0) - 3.0) * g) / (2.0 * (3.0 - std::sqrt(3.0)));
    CHECK(std::abs(b1 - b2) < 1e-12);
    CHECK(delta_star(g) ==
          doctest::Approx(2.0 / 3.0 - 1.0 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(delta_star(1.0 + 1e-8) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(delta_star(gamma_upper() - 1e-8) == doctest::Approx(0.0).epsilon(1e-3));
    CHECK_THROWS_AS(delta_star(2.5), DomainError);
}

TEST_CASE("threshold identity delta* = (L*(g+1)-2g)/(2(L*-1))") {
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        double g = 1.0 + (gamma_upper() - 1.0) * (i + 0.5) / 500.0;
        if (std::abs(g - 5.0 / 3.0) < 1e-6) continue;
        double ls = lambda_star(g);
        double id = (ls * (g + 1.0) - 2.0 * g) / (2.0 * (ls - 1.0));
        worst = std::max(worst, std::abs(delta_star(g) - id));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("dissipation constants") {
    auto d = dissipation_constants(1.4, 0.1, 1.19);
    CHECK(d.delta_dis == doctest::Approx(0.9 * 0.19 / 0.2 - 0.81).epsilon(1e-12));
    CHECK(d.c_dis > 0.0);
    // closes at equality on the threshold
    double ls = lambda_star(1.4), ds = delta_star(1.4);
    CHECK(std::abs(dissipation_constants(1.4, ds, ls).delta_dis) < 1e-12);
    // delta -> 1 limit collapses to lambda - 2 (delta=1 itself is out of range)
    CHECK(dissipation_constants(1.4, 1.0 - 1e-12, 1.19).delta_dis ==
          doctest::Approx(1.19 - 2.0).epsilon(1e-9));
    CHECK_THROWS_AS(dissipation_constants(1.4, -0.1, 1.19), DomainError);
}

TEST_CASE("delta_dis zero-crossing in delta at lambda_star") {
    double g = 1.4, ls = lambda_star(g), ds = delta_star(g);
    double prev = 1e30;
    for (int i = 0; i <= 20; ++i) {
        double delta = 0.01 + (0.49 - 0.01) * i / 20.0;
        double v = dissipation_constants(g, delta, ls).delta_dis;
        CHECK(v < prev);  // strictly decreasing in delta
        prev = v;
        if (delta < ds) CHECK(v > 0.0);
        if (delta > ds + 1e-12) CHECK(v < 0.0);
    }
}

TEST_CASE("check_regime") {
    auto r1 = check_regime(1.4, 0.1, 1.19);
    CHECK(r1.condition_p1);
    auto r2 = check_regime(1.4, 0.2, 1.19);
    CHECK_FALSE(r2.condition_p2);
    auto r3 = check_regime(2.2, 0.01, 1.1);
    CHECK_FALSE(r3.condition_p1);
    CHECK_FALSE(r3.condition_p2);
    CHECK(r3.notes.find("no admissible regime") != std::string::npos);
    auto r4 = check_regime(1.5, 0.05);
    CHECK(r4.exceptional_set == "unknown");
}

TEST_CASE("molecule model thresholds") {
    CHECK(molecule_model_threshold(0.0) ==
          doctest::Approx(7.0 - 4.0 * std::sqrt(2.0)).epsilon(1e-10));
    CHECK(molecule_model_threshold(0.5) == doctest::Approx(1.0 + 2.0 / 9.0).epsilon(1e-10));
    CHECK(molecule_model_threshold(2.0) ==
          doctest::Approx(1.0 + (22.0 - 4.0 * std::sqrt(10.0)) / 81.0).epsilon(1e-10));
    CHECK_THROWS_AS(molecule_model_threshold(-1.0), DomainError);
}

TEST_CASE("GasModel invariants") {
    auto m = GasModel::make(1.4, 0.1, 1.19, 1.0, 0.0);
    CHECK(m.valid());
    CHECK(m.alpha == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(m.delta_dis == doctest::Approx(0.045).epsilon(1e-12));
    CHECK_THROWS_AS(GasModel::make(1.4, 0.1, 1.19, -1.0, 0.0), DomainError);
    CHECK_THROWS_AS(GasModel::make(1.4, 0.1, 1.19, 1.0, -1.0), DomainError);
}
