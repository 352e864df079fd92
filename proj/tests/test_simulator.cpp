#include "implab/simulator.hpp"

#include <cmath>

#include "doctest.h"

using namespace implab;

namespace {

const ShootResult& shot_75() {
    static ShootResult s = shoot_lambda(1.4, 3, 1e-10);
    return s;
}

const ProfileTable& table_75() {
    static ProfileTable t =
        reconstruct(shot_75(), GasModel::make(1.4, 0.0, shot_75().lambda));
    return t;
}

RadialState uniform_state(Frame frame, std::size_t n, double r_max,
                          double a_val, double b_val) {
    RadialState s;
    s.frame = frame;
    s.h = r_max / (double)(n - 1);
    s.r.resize(n);
    s.field_a.assign(n, a_val);
    s.field_b.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.r[i] = s.h * (double)i;
        s.field_b[i] = b_val * s.r[i];  // odd; b_val = 0 gives rest state
    }
    return s;
}

}  // namespace

TEST_CASE("rhs_eulerian: constant rest state has zero right-hand side") {
    auto m = GasModel::make(1.4, 0.1, 1.15, 1e-3, 1e-4);
    auto s = uniform_state(Frame::eulerian, 257, 4.0, 0.8, 0.0);
    auto rhs = rhs_eulerian(s, m, true);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(rhs.da[i] == 0.0);
        CHECK(std::abs(rhs.db[i]) < 1e-13);
    }
    s.field_a[100] = -1.0;
    CHECK_THROWS_AS(rhs_eulerian(s, m), SimError);
}

TEST_CASE("radial viscous reductions match a 3-D Cartesian stencil") {
    // u(x) = f(|x|) x/|x|, c(x) = g(|x|); the radial reductions of the Lame
    // operator and of grad c . stress must agree with 3-D finite differences
    double a1 = 0.7, a2 = 0.3;
    auto f = [](double r) { return r * std::exp(-r * r); };
    auto g = [](double r) { return std::exp(-r * r) + 0.5; };
    auto u = [&](double x, double y, double z, int j) {
        double r = std::sqrt(x * x + y * y + z * z);
        if (r == 0.0) return 0.0;
        double comp = (j == 0) ? x : (j == 1) ? y : z;
        return f(r) * comp / r;
    };
    double p = 0.7, h = 2e-3;
    auto d2c = [&](int j, int k) {
        // second partial of u_x
        auto ux = [&](double x, double y, double z) { return u(x, y, z, 0); };
        double e[3] = {0, 0, 0};
        if (j == k) {
            double dj[3] = {0, 0, 0};
            dj[j] = h;
            return (ux(p + dj[0], dj[1], dj[2]) - 2.0 * ux(p, 0, 0) +
                    ux(p - dj[0], -dj[1], -dj[2])) /
                   (h * h);
        }
        double dj[3] = {0, 0, 0}, dk[3] = {0, 0, 0};
        dj[j] = h;
        dk[k] = h;
        (void)e;
        return (ux(p + dj[0] + dk[0], dj[1] + dk[1], dj[2] + dk[2]) -
                ux(p + dj[0] - dk[0], dj[1] - dk[1], dj[2] - dk[2]) -
                ux(p - dj[0] + dk[0], -dj[1] + dk[1], -dj[2] + dk[2]) +
                ux(p - dj[0] - dk[0], -dj[1] - dk[1], -dj[2] - dk[2])) /
               (4.0 * h * h);
    };
    double lap_ux = d2c(0, 0) + d2c(1, 1) + d2c(2, 2);
    // grad(div u)_x via central difference of div u
    auto divu = [&](double x, double y, double z) {
        double s = 0.0;
        double d[3][3] = {{h, 0, 0}, {0, h, 0}, {0, 0, h}};
        for (int k = 0; k < 3; ++k)
            s += (u(x + d[k][0], y + d[k][1], z + d[k][2], k) -
                  u(x - d[k][0], y - d[k][1], z - d[k][2], k)) /
                 (2.0 * h);
        return s;
    };
    double grad_div_x = (divu(p + h, 0, 0) - divu(p - h, 0, 0)) / (2.0 * h);
    double lame_cart = a1 * lap_ux + (a1 + a2) * grad_div_x;

    double fp = (1.0 - 2.0 * p * p) * std::exp(-p * p);
    double fpp = (-6.0 * p + 4.0 * p * p * p) * std::exp(-p * p);
    double lame_rad =
        (2.0 * a1 + a2) * (fpp + 2.0 * fp / p - 2.0 * f(p) / (p * p));
    CHECK(lame_cart == doctest::Approx(lame_rad).epsilon(1e-5));

    // grad c . (2 a1 D(u) + a2 div u I), x-component on the axis
    auto gradc = [&](int k) {
        auto c3 = [&](double x, double y, double z) {
            return g(std::sqrt(x * x + y * y + z * z));
        };
        double d[3] = {0, 0, 0};
        d[k] = h;
        return (c3(p + d[0], d[1], d[2]) - c3(p - d[0], -d[1], -d[2])) /
               (2.0 * h);
    };
    auto du = [&](int comp, int dir) {  // d u_comp / d x_dir at p
        double d[3] = {0, 0, 0};
        d[dir] = h;
        return (u(p + d[0], d[1], d[2], comp) - u(p - d[0], -d[1], -d[2], comp)) /
               (2.0 * h);
    };
    double div_p = divu(p, 0, 0);
    double tensor_cart = 0.0;
    for (int k = 0; k < 3; ++k) {
        double Dkx = 0.5 * (du(k, 0) + du(0, k));
        double Tkx = 2.0 * a1 * Dkx + ((k == 0) ? a2 * div_p : 0.0);
        tensor_cart += gradc(k) * Tkx;
    }
    double gp = -2.0 * p * std::exp(-p * p);
    double tensor_rad = gp * (2.0 * a1 * fp + a2 * (fp + 2.0 * f(p) / p));
    CHECK(tensor_cart == doctest::Approx(tensor_rad).epsilon(1e-5));
}

TEST_CASE("rhs_eulerian: delta = 1 coefficient is density-independent") {
    auto m = GasModel::make(1.4, 1.0, 1.15, 1e-3, 0.0);
    auto mk = [&](double cval) {
        auto s = uniform_state(Frame::eulerian, 257, 4.0, cval, 0.0);
        for (std::size_t i = 0; i < s.size(); ++i)
            s.field_b[i] = -0.05 * s.r[i] * std::exp(-s.r[i] * s.r[i]);
        return s;
    };
    std::vector<double> f1, f2;
    rhs_eulerian(mk(0.5), m, true, &f1);
    rhs_eulerian(mk(2.0), m, true, &f2);
    double sup = 0.0;
    for (std::size_t i = 0; i < f1.size(); ++i)
        sup = std::max(sup, std::abs(f1[i] - f2[i]));
    CHECK(sup < 1e-15);
    // and the viscous contribution is nonzero
    double amp = 0.0;
    for (double v : f1) amp = std::max(amp, std::abs(v));
    CHECK(amp > 1e-8);
}

TEST_CASE("rhs_selfsim: profile is steady to discretization error") {
    const auto& t = table_75();
    const auto& m = t.model;
    auto sup_rhs = [&](std::size_t n) {
        auto s = state_from_profile(t, Frame::selfsim, 0.0, n, 10.0);
        auto rhs = rhs_selfsim(s, m, 0.0, false);
        double sup = 0.0;
        // interior only: the boundary nodes lack the far-field closure
        for (std::size_t i = 0; i + 4 < s.size(); ++i)
            sup = std::max(sup, std::max(std::abs(rhs.da[i]), std::abs(rhs.db[i])));
        return sup;
    };
    double e1 = sup_rhs(1025), e2 = sup_rhs(2049);
    CHECK(e1 < 1e-3);
    CHECK(e1 / e2 > 8.0);
}

TEST_CASE("rhs_selfsim: constant far-field law and frozen fdis scaling") {
    auto m = GasModel::make(1.4, 0.1, 1.15, 1e-6, 0.0);
    auto s = uniform_state(Frame::selfsim, 129, 3.0, 0.7, 0.0);
    auto rhs = rhs_selfsim(s, m, 0.3, true);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(rhs.da[i] == doctest::Approx(-(m.lambda - 1.0) * 0.7).epsilon(1e-12));
        CHECK(std::abs(rhs.db[i]) < 1e-13);
    }

    // frozen state: fdis scales exactly by e^{-delta_dis * dtau}
    const auto& t = table_75();
    auto m2 = GasModel::make(1.4, 0.1, t.model.lambda, 1e-8, 0.0);
    auto sp = state_from_profile(t, Frame::selfsim, 0.0, 513, 8.0);
    std::vector<double> fa, fb;
    rhs_selfsim(sp, m2, 1.0, true, &fa);
    rhs_selfsim(sp, m2, 1.5, true, &fb);
    double ratio = std::exp(-m2.delta_dis * 0.5);
    for (std::size_t i = 1; i < sp.size(); ++i) {
        if (std::abs(fa[i]) < 1e-18) continue;
        CHECK(fb[i] / fa[i] == doctest::Approx(ratio).epsilon(1e-12));
    }
    // delta_dis < 0 here, so the dissipative prefactor grows along tau
    CHECK(m2.delta_dis < 0.0);
    CHECK(std::abs(ratio) > 1.0);
}

TEST_CASE("step: constant state is an exact fixed point") {
    auto m = GasModel::make(1.4, 0.1, 1.15, 1e-5, 0.0);
    SimConfig cfg;
    cfg.model = m;
    cfg.frame = Frame::eulerian;
    cfg.n_cells = 128;
    cfg.r_max = 4.0;
    cfg.farfield_cbar = 0.8;
    auto s = uniform_state(Frame::eulerian, 129, 4.0, 0.8, 0.0);
    for (int k = 0; k < 10; ++k) step(s, 1e-3, cfg);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s.field_a[i] == doctest::Approx(0.8).epsilon(1e-14));
        CHECK(std::abs(s.field_b[i]) < 1e-14);
    }
}

TEST_CASE("step: self-convergence order at least 3 on smooth data") {
    auto m = GasModel::make(1.4, 0.1, 1.12, 1e-9, 0.0);
    auto init = [&](std::size_t n) {
        auto s = uniform_state(Frame::selfsim, n, 5.0, 1.0, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double r = s.r[i];
            s.field_a[i] = 1.0 + 0.1 * std::exp(-r * r);
            s.field_b[i] = -0.1 * r * std::exp(-r * r);
        }
        return s;
    };
    SimConfig cfg;
    cfg.model = m;
    cfg.frame = Frame::selfsim;
    cfg.r_max = 5.0;
    cfg.viscous = false;
    cfg.farfield_relax = false;
    cfg.cfl = 0.4;
    auto advance = [&](RadialState s) {
        // fixed dt tied to the coarsest grid so time discretization matches
        double dt = 1e-3;
        for (int k = 0; k < 200; ++k) step(s, dt, cfg);
        return s;
    };
    auto s1 = advance(init(129));
    auto s2 = advance(init(257));
    auto s3 = advance(init(513));
    auto err = [&](const RadialState& coarse, const RadialState& fine,
                   std::size_t stride) {
        double e = 0.0;
        for (std::size_t i = 0; i + 4 < coarse.size(); ++i)
            e = std::max(e, std::abs(coarse.field_a[i] - fine.field_a[i * stride]));
        return e;
    };
    double e12 = err(s1, s3, 4);
    double e23 = err(s2, s3, 2);
    CHECK(e12 / e23 > 8.0);  // one refinement step at 4th-order spatial accuracy
}

TEST_CASE("run: steady profile preservation and positivity") {
    const auto& t = table_75();
    SimConfig cfg;
    cfg.model = t.model;
    cfg.frame = Frame::selfsim;
    cfg.n_cells = 512;
    cfg.r_max = 10.0;
    cfg.viscous = false;
    cfg.time_end = 1.0;
    cfg.output_cadence = 0.25;
    cfg.cutoffs.r0 = 5.0;
    auto s0 = state_from_profile(t, Frame::selfsim, 0.0, 513, 10.0);
    auto init = s0;
    auto series = run(cfg, std::move(s0), &t);
    CHECK(series.termination == "time-end");
    double drift = 0.0, min_q = 1e300;
    for (std::size_t i = 0; i < series.final_state.size(); ++i) {
        drift = std::max(drift, std::abs(series.final_state.field_a[i] -
                                         init.field_a[i]));
        min_q = std::min(min_q, series.final_state.field_a[i]);
    }
    CHECK(drift < 1e-3);
    CHECK(min_q > 1e-6);
    CHECK(series.records.size() >= 5);
    for (std::size_t k = 1; k < series.records.size(); ++k)
        CHECK(series.records[k].time > series.records[k - 1].time);
}

TEST_CASE("run: growing dissipative prefactor when delta_dis < 0") {
    const auto& t = table_75();
    auto m = GasModel::make(1.4, 0.1, t.model.lambda, 1e-10, 0.0);
    REQUIRE(m.delta_dis < 0.0);
    SimConfig cfg;
    cfg.model = m;
    cfg.frame = Frame::selfsim;
    cfg.n_cells = 512;
    cfg.r_max = 10.0;
    cfg.viscous = true;
    cfg.time_end = 1.0;
    cfg.output_cadence = 0.1;
    cfg.cutoffs.r0 = 5.0;
    auto series = run(cfg, state_from_profile(t, Frame::selfsim, 0.0, 513, 10.0), &t);
    CHECK(series.records.back().fdis_sup > series.records.front().fdis_sup);
}

TEST_CASE("weighted_energy: constant state and analytic oracle") {
    CutoffSet flat;
    flat.r0 = 1e6;  // phi = 1 over the whole grid
    auto s = uniform_state(Frame::selfsim, 513, 8.0, 1.3, 0.0);
    CHECK(weighted_energy(s, flat, 1) < 1e-20);

    for (std::size_t i = 0; i < s.size(); ++i) {
        double r = s.r[i];
        s.field_a[i] = std::sin(r) * std::exp(-r * r / 9.0) + 2.0;
        s.field_b[i] = 0.0;
    }
    double ana = 0.0;
    {
        std::size_t m = 200001;
        double hh = 8.0 / (double)(m - 1), prev = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double r = hh * (double)i;
            double w = std::exp(-r * r / 9.0);
            double d = std::cos(r) * w + std::sin(r) * (-2.0 * r / 9.0) * w;
            double g = d * d * 4.0 * M_PI * r * r;
            if (i) ana += 0.5 * (g + prev) * hh;
            prev = g;
        }
    }
    CHECK(weighted_energy(s, flat, 1) == doctest::Approx(ana).epsilon(1e-4));

    // profile energy is grid-stable within 1%
    const auto& t = table_75();
    CutoffSet cut;
    cut.r0 = 5.0;
    double ea = weighted_energy(state_from_profile(t, Frame::selfsim, 0, 1025, 10.0),
                                cut, 2);
    double eb = weighted_energy(state_from_profile(t, Frame::selfsim, 0, 2049, 10.0),
                                cut, 2);
    CHECK(ea == doctest::Approx(eb).epsilon(0.01));
}

TEST_CASE("perturbation_diagnostics: zero at the cutoff profile, bump probe") {
    const auto& t = table_75();
    CutoffSet cut;
    cut.r0 = 5.0;
    double tau = 5.0;  // e^tau/2 far beyond the grid: X_hat = 1 everywhere
    auto s = state_from_profile(t, Frame::selfsim, tau, 513, 10.0);
    auto rec = perturbation_diagnostics(s, t, cut, tau);
    CHECK(rec.sup_q < 1e-12);
    CHECK(rec.sup_u < 1e-12);
    CHECK(rec.env_lo > 0.0);

    s.field_a[100] += 1e-3;
    auto rec2 = perturbation_diagnostics(s, t, cut, tau);
    CHECK(rec2.sup_q == doctest::Approx(1e-3).epsilon(1e-9));
}

TEST_CASE("mass conservation in an inviscid reflecting Eulerian run") {
    const auto& t = table_75();
    auto m = GasModel::make(1.4, 0.1, t.model.lambda, 1e-9, 0.0);
    auto frame = SelfSimFrame::make(0.1, t.model.lambda);
    CutoffSet set;
    set.r0 = 50.0;
    auto data = build_initial_data(t, m, frame, set, 0.2, 513, 1.2);
    auto s = state_from_initial_data(data, m.alpha);
    auto mass = [&](const RadialState& st) {
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < st.size(); ++i) {
            double g0 = rho_from_c(st.field_a[i], m.alpha) * st.r[i] * st.r[i];
            double g1 = rho_from_c(st.field_a[i + 1], m.alpha) * st.r[i + 1] *
                        st.r[i + 1];
            sum += 0.5 * (g0 + g1) * st.h;
        }
        return sum;
    };
    double m0 = mass(s);
    SimConfig cfg;
    cfg.model = m;
    cfg.frame = Frame::eulerian;
    cfg.n_cells = 512;
    cfg.r_max = 1.2;
    cfg.viscous = false;
    cfg.farfield_relax = false;
    cfg.time_end = 0.02;
    cfg.output_cadence = 0.01;
    cfg.cutoffs.r0 = 50.0;
    auto series = run(cfg, std::move(s), nullptr);
    CHECK(std::abs(mass(series.final_state) - m0) / m0 < 1e-3);
}

TEST_CASE("fit_exponents: synthetic power law and exponential rate") {
    DiagnosticsSeries series;
    double T = 0.37;
    for (int i = 0; i < 60; ++i) {
        DiagnosticsRecord r;
        r.time = 0.36 * (double)i / 59.0;
        r.rho_origin = std::pow(T - r.time, -0.8);
        series.records.push_back(r);
    }
    auto m = GasModel::make(1.4, 0.1, 1.15, 1e-6, 0.0);
    auto rep = fit_exponents(series, m, Frame::eulerian);
    CHECK(rep.rho_slope == doctest::Approx(-0.8).epsilon(1e-6));
    CHECK(rep.t_eff == doctest::Approx(T).epsilon(1e-5));
    CHECK(rep.decades > 1.0);

    DiagnosticsSeries es;
    for (int i = 0; i < 50; ++i) {
        DiagnosticsRecord r;
        r.time = 3.0 * (double)i / 49.0;
        r.fdis_sup = 3.0 * std::exp(-0.045 * r.time);
        r.sup_ptb_q = 1e-3 * std::exp(-0.2 * r.time);
        es.records.push_back(r);
    }
    auto rep2 = fit_exponents(es, m, Frame::selfsim);
    CHECK(rep2.fdis_rate == doctest::Approx(-0.045).epsilon(1e-8));
    CHECK(rep2.ptb_rate == doctest::Approx(-0.2).epsilon(1e-8));

    DiagnosticsSeries empty;
    CHECK_THROWS_AS(fit_exponents(empty, m, Frame::eulerian), SimError);
}
