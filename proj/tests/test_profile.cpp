#include "implab/profile.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"

using namespace implab;

namespace {

const ShootResult& shot_75() {
    static ShootResult s = shoot_lambda(1.4, 3, 1e-10);
    return s;
}

const GasModel& model_75() {
    static GasModel m = GasModel::make(1.4, 0.0, shot_75().lambda);
    return m;
}

const ProfileTable& table_75() {
    static ProfileTable t = reconstruct(shot_75(), model_75());
    return t;
}

}  // namespace

TEST_CASE("reconstruct: gauge, positivity and sonic node") {
    const auto& t = table_75();
    CHECK(t.size() >= 4096);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t.r[i] > t.r[i - 1]);
    double min_q = 1e300;
    for (double q : t.q_bar) min_q = std::min(min_q, q);
    CHECK(min_q > 0.0);

    // r -> 0 limit recovers the gauge Q_bar(0) = 1 and U_cal/r -> U1
    CHECK(t.q_bar.front() == doctest::Approx(1.0).epsilon(1e-6));
    double u1 = -(t.model.lambda - 1.0) / (3.0 * t.model.alpha);
    CHECK(t.u_cal.front() / t.r.front() == doctest::Approx(u1).epsilon(1e-6));

    // straddle pair hugs the sonic radius and matches r * Q_hat(P_s)
    const auto& sonic = shot_75().sonic;
    double r_lo = t.r[t.sonic_lo], r_hi = t.r[t.sonic_lo + 1];
    CHECK(r_lo < t.r_sonic);
    CHECK(r_hi > t.r_sonic);
    CHECK(r_hi / r_lo < 1.0 + 1e-5);
    CHECK(t.q_bar[t.sonic_lo] ==
          doctest::Approx(r_lo * sonic.location.q_hat).epsilon(1e-5));
    CHECK(t.u_cal[t.sonic_lo] ==
          doctest::Approx(r_lo * sonic.location.u_hat).epsilon(1e-5));
}

TEST_CASE("reconstruct: far-field decay slope is 1 - lambda") {
    const auto& t = table_75();
    double lo = t.r.back() / 10.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.r[i] < lo) continue;
        double x = std::log(t.r[i]), y = std::log(t.q_bar[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y; ++n;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(1.0 - t.model.lambda).epsilon(0.01));
}

TEST_CASE("reconstruct: stored derivatives match a 4th-order difference") {
    const auto& t = table_75();
    // uniform-in-log interior stretches away from the inserted straddle pair;
    // d q_bar / d xi = r * d q_bar / d r.  The residual must both be small and
    // shrink like h^4 when the stencil is refined (stride 2 vs stride 1).
    auto worst_at_stride = [&](std::size_t k) {
        double worst = 0.0;
        for (std::size_t i = 2 * k; i + 2 * k < t.size(); ++i) {
            double r = t.r[i];
            if (r < 0.3 || r > 100.0) continue;
            if (i + 2 * k + 2 >= t.sonic_lo && i <= t.sonic_lo + 2 * k + 1) continue;
            std::size_t a = i - 2 * k, b = i - k, c = i + k, d = i + 2 * k;
            double h = std::log(t.r[c] / t.r[i]);
            if (std::abs(std::log(t.r[i] / t.r[b]) - h) > 1e-12) continue;
            if (std::abs(std::log(t.r[d] / t.r[c]) - h) > 1e-12) continue;
            if (std::abs(std::log(t.r[b] / t.r[a]) - h) > 1e-12) continue;
            double fd = (-t.q_bar[d] + 8.0 * t.q_bar[c] - 8.0 * t.q_bar[b] +
                         t.q_bar[a]) /
                        (12.0 * h);
            double rel = std::abs(fd - r * t.dq_bar[i]) / std::abs(r * t.dq_bar[i]);
            worst = std::max(worst, rel);
        }
        return worst;
    };
    double w1 = worst_at_stride(1);
    double w2 = worst_at_stride(2);
    CHECK(w1 < 1e-5);
    CHECK(w2 / w1 > 8.0);   // 4th-order truncation: factor 16 expected
    CHECK(w2 / w1 < 32.0);
}

TEST_CASE("reconstruct: phase-plane round trip") {
    const auto& t = table_75();
    // mapping back through Q_hat = Q_bar / r must land on the orbit: the
    // Emden residual d q_hat / d xi - N_Q / D vanishes along the table
    const auto& m = t.model;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        double r = t.r[i];
        if (r < 0.15 || r > 1000.0) continue;
        EmdenPoint p{t.q_bar[i] / r, t.u_cal[i] / r};
        auto rhs = emden_rhs(p, m);
        if (std::abs(rhs.d) < 1e-3) continue;
        // d q_hat / d xi from the stored physical derivative
        double dq_dxi = r * t.dq_bar[i] - t.q_bar[i];
        CHECK(std::abs(dq_dxi / r - rhs.n_q / rhs.d) < 1e-6);
    }
}

TEST_CASE("steady_residual: exact, perturbed, and zero profiles") {
    const auto& t = table_75();
    auto res = steady_residual(t);
    CHECK(res.res_q <= 1e-7);
    CHECK(res.res_u <= 1e-7);

    // bump q_bar at the node where the equations are most sensitive to it
    const auto& m = t.model;
    std::size_t pick = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i == t.sonic_lo || i == t.sonic_lo + 1) continue;
        double s1 = std::abs((m.lambda - 1.0) +
                             m.alpha * (t.du_cal[i] + 2.0 * t.u_cal[i] / t.r[i]));
        double s2 = std::abs(m.alpha * t.dq_bar[i]);
        if (std::max(s1, s2) > best) {
            best = std::max(s1, s2);
            pick = i;
        }
    }
    ProfileTable bumped = t;
    bumped.q_bar[pick] += 1e-3;
    auto res2 = steady_residual(bumped);
    CHECK(std::max(res2.res_q, res2.res_u) >= 1e-4);

    ProfileTable zero = t;
    for (auto& v : zero.q_bar) v = 0.0;
    for (auto& v : zero.u_cal) v = 0.0;
    for (auto& v : zero.dq_bar) v = 0.0;
    for (auto& v : zero.du_cal) v = 0.0;
    auto res0 = steady_residual(zero);
    CHECK(res0.res_q == 0.0);
    CHECK(res0.res_u == 0.0);
}

TEST_CASE("verify_properties: margins, limits, sabotage") {
    const auto& t = table_75();
    auto rep = verify_properties(t);
    CHECK(rep.min_q_bar > 0.0);
    CHECK(rep.radial_margin > 0.0);
    CHECK(rep.angular_margin > 0.0);
    CHECK(rep.farfield_margin > 0.0);
    CHECK(rep.eta_tilde ==
          std::min({rep.radial_margin, rep.angular_margin, rep.farfield_margin}));
    CHECK(rep.decay_exp_q == doctest::Approx(1.0 - t.model.lambda).epsilon(0.01));
    CHECK(rep.decay_exp_u == doctest::Approx(1.0 - t.model.lambda).epsilon(0.01));
    CHECK(rep.deriv_decay_exp ==
          doctest::Approx(-t.model.lambda).epsilon(0.02));
    CHECK(rep.decay_c_hat < 1e3);

    // r -> 0 limit of the angular margin is 1 + U1
    double u1 = -(t.model.lambda - 1.0) / (3.0 * t.model.alpha);
    double ang0 = 1.0 + t.u_cal.front() / t.r.front() -
                  t.model.alpha * std::abs(t.dq_bar.front());
    CHECK(ang0 == doctest::Approx(1.0 + u1).epsilon(1e-4));

    ProfileTable bad = t;
    for (auto& v : bad.u_cal) v *= -30.0;
    for (auto& v : bad.du_cal) v *= -30.0;
    CHECK_THROWS_WITH_AS(verify_properties(bad),
                         doctest::Contains("radial repulsivity"), ProfileError);
}

TEST_CASE("save/load: lossless round trip") {
    ProfileTable t = table_75();
    t.eta_tilde = verify_properties(t).eta_tilde;
    std::string path = (std::filesystem::temp_directory_path() /
                        "implab_profile_roundtrip.csv").string();
    save_profile(t, path);
    ProfileTable u = load_profile(path);
    REQUIRE(u.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(u.r[i] == t.r[i]);
        CHECK(u.q_bar[i] == t.q_bar[i]);
        CHECK(u.u_cal[i] == t.u_cal[i]);
        CHECK(u.dq_bar[i] == t.dq_bar[i]);
        CHECK(u.du_cal[i] == t.du_cal[i]);
    }
    CHECK(u.model.gamma == t.model.gamma);
    CHECK(u.model.lambda == t.model.lambda);
    CHECK(u.q0_gauge == t.q0_gauge);
    CHECK(u.eta_tilde == t.eta_tilde);
    CHECK(u.r_sonic == t.r_sonic);
    CHECK(u.sonic_lo == t.sonic_lo);
    CHECK(u.origin_q_coeffs == t.origin_q_coeffs);
    CHECK(u.origin_u_coeffs == t.origin_u_coeffs);
    std::filesystem::remove(path);
}

TEST_CASE("load_profile: rejects inconsistent and truncated files") {
    std::string good = (std::filesystem::temp_directory_path() /
                        "implab_profile_good.csv").string();
    save_profile(table_75(), good);

    // header alpha contradicting gamma
    {
        std::ifstream in(good);
        std::string bad = (std::filesystem::temp_directory_path() /
                           "implab_profile_bad_alpha.csv").string();
        std::ofstream out(bad);
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("# alpha=", 0) == 0) line = "# alpha=0.3";
            out << line << "\n";
        }
        out.close();
        CHECK_THROWS_WITH_AS(load_profile(bad),
                             doctest::Contains("contradicts gamma"), ProfileError);
        std::filesystem::remove(bad);
    }

    // truncated data row -> parse error naming the line
    {
        std::ifstream in(good);
        std::string bad = (std::filesystem::temp_directory_path() /
                           "implab_profile_truncated.csv").string();
        std::ofstream out(bad);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line) && n < 100) {
            ++n;
            if (n == 100) line = line.substr(0, line.find(',') + 3);
            out << line << "\n";
        }
        out.close();
        CHECK_THROWS_WITH_AS(load_profile(bad), doctest::Contains("line 100"),
                             ProfileError);
        std::filesystem::remove(bad);
    }
    std::filesystem::remove(good);
}
