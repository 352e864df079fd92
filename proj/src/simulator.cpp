#include "implab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace implab {

std::string to_string(Frame f) {
    return f == Frame::eulerian ? "eulerian" : "selfsim";
}

namespace {

double ghost(const std::vector<double>& f, long i, int parity) {
    return i >= 0 ? f[(std::size_t)i] : parity * f[(std::size_t)(-i)];
}

// first derivative: 4th-order central, parity ghosts below r = 0,
// one-sided 4th-order closures at the top
std::vector<double> d1(const std::vector<double>& f, double h, int parity) {
    std::size_t n = f.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i + 2 < n && i < n; ++i) {
        if (i + 2 >= n) break;
        long k = (long)i;
        out[i] = (ghost(f, k - 2, parity) - 8.0 * ghost(f, k - 1, parity) +
                  8.0 * f[i + 1] - f[i + 2]) /
                 (12.0 * h);
    }
    if (n >= 5) {
        std::size_t i = n - 2;
        out[i] = (3.0 * f[i + 1] + 10.0 * f[i] - 18.0 * f[i - 1] +
                  6.0 * f[i - 2] - f[i - 3]) /
                 (12.0 * h);
        i = n - 1;
        out[i] = (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] -
                  16.0 * f[i - 3] + 3.0 * f[i - 4]) /
                 (12.0 * h);
    }
    return out;
}

// second derivative: 4th-order central interior, biased closures at the top
std::vector<double> d2(const std::vector<double>& f, double h, int parity) {
    std::size_t n = f.size();
    std::vector<double> out(n);
    double h2 = 12.0 * h * h;
    for (std::size_t i = 0; i + 2 < n; ++i) {
        long k = (long)i;
        out[i] = (-ghost(f, k - 2, parity) + 16.0 * ghost(f, k - 1, parity) -
                  30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) /
                 h2;
    }
    if (n >= 5) {
        std::size_t i = n - 2;
        out[i] = (11.0 * f[i + 1] - 20.0 * f[i] + 6.0 * f[i - 1] +
                  4.0 * f[i - 2] - f[i - 3]) /
                 h2;
        i = n - 1;
        out[i] = (35.0 * f[i] - 104.0 * f[i - 1] + 114.0 * f[i - 2] -
                  56.0 * f[i - 3] + 11.0 * f[i - 4]) /
                 h2;
    }
    return out;
}

void check_positive(const RadialState& s) {
    for (double v : s.field_a)
        if (!(v > 0.0))
            throw SimError("non-positive-density at time " +
                           std::to_string(s.time));
}

}  // namespace

RhsOut rhs_eulerian(const RadialState& s, const GasModel& model, bool viscous,
                    std::vector<double>* fdis) {
    check_positive(s);
    const std::size_t n = s.size();
    const double al = model.alpha, h = s.h;
    const auto& a = s.field_a;
    const auto& b = s.field_b;
    auto ap = d1(a, h, +1);
    auto bp = d1(b, h, -1);
    RhsOut out;
    out.da.resize(n);
    out.db.resize(n);
    if (fdis) fdis->assign(n, 0.0);

    std::vector<double> bpp;
    double kpre = 0.0, e1 = 0.0, e2 = 0.0;
    if (viscous) {
        bpp = d2(b, h, -1);
        kpre = std::pow(al, (model.delta - 1.0) / al);
        e1 = (model.delta - 1.0) / al;
        e2 = (model.delta - 1.0 - al) / al;
    }

    // origin: u/r -> du(0), all odd terms vanish
    out.da[0] = -al * a[0] * 3.0 * bp[0];
    out.db[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        double r = s.r[i];
        out.da[i] = -b[i] * ap[i] - al * a[i] * (bp[i] + 2.0 * b[i] / r);
        double acc = -b[i] * bp[i] - al * a[i] * ap[i];
        if (viscous) {
            double lap = bpp[i] + 2.0 * bp[i] / r - 2.0 * b[i] / (r * r);
            double visc =
                kpre * std::pow(a[i], e1) * (2.0 * model.a1 + model.a2) * lap +
                (model.delta / al) * kpre * std::pow(a[i], e2) * ap[i] *
                    (2.0 * model.a1 * bp[i] +
                     model.a2 * (bp[i] + 2.0 * b[i] / r));
            acc += visc;
            if (fdis) (*fdis)[i] = visc;
        }
        out.db[i] = acc;
    }
    return out;
}

RhsOut rhs_selfsim(const RadialState& s, const GasModel& model, double tau,
                   bool viscous, std::vector<double>* fdis) {
    check_positive(s);
    const std::size_t n = s.size();
    const double al = model.alpha, L = model.lambda, h = s.h;
    const auto& a = s.field_a;
    const auto& b = s.field_b;
    auto ap = d1(a, h, +1);
    auto bp = d1(b, h, -1);
    RhsOut out;
    out.da.resize(n);
    out.db.resize(n);
    if (fdis) fdis->assign(n, 0.0);

    std::vector<double> bpp;
    double pref = 0.0, e1 = 0.0, e2 = 0.0;
    if (viscous) {
        bpp = d2(b, h, -1);
        pref = model.c_dis * std::exp(-model.delta_dis * tau);
        e1 = (model.delta - 1.0) / al;
        e2 = (model.delta - 1.0 - al) / al;
    }

    out.da[0] = -(L - 1.0) * a[0] - al * a[0] * 3.0 * bp[0];
    out.db[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        double r = s.r[i];
        out.da[i] = -(L - 1.0) * a[i] - (r + b[i]) * ap[i] -
                    al * a[i] * (bp[i] + 2.0 * b[i] / r);
        double acc = -(L - 1.0) * b[i] - (r + b[i]) * bp[i] - al * a[i] * ap[i];
        if (viscous) {
            double lap = bpp[i] + 2.0 * bp[i] / r - 2.0 * b[i] / (r * r);
            double bracket =
                std::pow(a[i], e1) * (2.0 * model.a1 + model.a2) * lap +
                (model.delta / al) * std::pow(a[i], e2) * ap[i] *
                    (2.0 * model.a1 * bp[i] +
                     model.a2 * (bp[i] + 2.0 * b[i] / r));
            acc += pref * bracket;
            if (fdis) (*fdis)[i] = pref * bracket;
        }
        out.db[i] = acc;
    }
    return out;
}

double suggest_dt(const RadialState& s, const SimConfig& cfg) {
    const double al = cfg.model.alpha;
    double speed = 0.0, amax = 0.0, amin = 1e300;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double adv = (s.frame == Frame::eulerian)
                         ? std::abs(s.field_b[i])
                         : std::abs(s.r[i] + s.field_b[i]);
        speed = std::max(speed, adv + al * s.field_a[i]);
        amax = std::max(amax, s.field_a[i]);
        amin = std::min(amin, s.field_a[i]);
    }
    double dt = cfg.cfl * s.h / std::max(speed, 1e-300);
    if (cfg.viscous) {
        double e1 = (cfg.model.delta - 1.0) / al;
        // the exponent is typically negative: the coefficient peaks at min a
        double apeak = std::max(std::pow(amax, e1), std::pow(amin, e1));
        double nu = (2.0 * cfg.model.a1 + cfg.model.a2) * apeak;
        if (s.frame == Frame::eulerian)
            nu *= std::pow(al, e1);
        else
            nu *= cfg.model.c_dis * std::exp(-cfg.model.delta_dis * s.time);
        if (nu > 0.0) dt = std::min(dt, cfg.cfl * s.h * s.h / (2.0 * nu));
    }
    return dt;
}

namespace {

// physics + sponge right-hand side at a stage
RhsOut stage_rhs(const RadialState& s, const SimConfig& cfg) {
    RhsOut rhs = (s.frame == Frame::eulerian)
                     ? rhs_eulerian(s, cfg.model, cfg.viscous)
                     : rhs_selfsim(s, cfg.model, s.time, cfg.viscous);
    if (!cfg.farfield_relax) return rhs;
    bool have_cbar = !std::isnan(cfg.farfield_cbar);
    bool have_ref = cfg.sponge_ref_a.size() == s.size();
    if (!have_cbar && !have_ref) return rhs;

    double r_max = s.r.back();
    double r_s = 0.9 * r_max;
    double width = r_max - r_s;
    double speed = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double adv = (s.frame == Frame::eulerian)
                         ? std::abs(s.field_b[i])
                         : std::abs(s.r[i] + s.field_b[i]);
        speed = std::max(speed, adv + cfg.model.alpha * s.field_a[i]);
    }
    double sigma = 2.0 * speed / width;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.r[i] <= r_s) continue;
        double w = (s.r[i] - r_s) / width;
        double rate = sigma * w * w;
        double ta, tb;
        if (have_cbar) {
            ta = (s.frame == Frame::eulerian)
                     ? cfg.farfield_cbar
                     : cfg.model.lambda * cfg.farfield_cbar *
                           std::exp(-(cfg.model.lambda - 1.0) * s.time);
            tb = 0.0;
        } else {
            ta = cfg.sponge_ref_a[i];
            tb = cfg.sponge_ref_b[i];
        }
        rhs.da[i] -= rate * (s.field_a[i] - ta);
        rhs.db[i] -= rate * (s.field_b[i] - tb);
    }
    return rhs;
}

}  // namespace

void step(RadialState& s, double dt, const SimConfig& cfg) {
    if (!(dt > 0.0)) throw SimError("step: non-positive dt");
    RadialState y0 = s;

    RhsOut k1 = stage_rhs(s, cfg);
    RadialState y1 = s;
    for (std::size_t i = 0; i < s.size(); ++i) {
        y1.field_a[i] = y0.field_a[i] + dt * k1.da[i];
        y1.field_b[i] = y0.field_b[i] + dt * k1.db[i];
    }
    y1.time = y0.time + dt;

    RhsOut k2 = stage_rhs(y1, cfg);
    RadialState y2 = s;
    for (std::size_t i = 0; i < s.size(); ++i) {
        y2.field_a[i] = 0.75 * y0.field_a[i] +
                        0.25 * (y1.field_a[i] + dt * k2.da[i]);
        y2.field_b[i] = 0.75 * y0.field_b[i] +
                        0.25 * (y1.field_b[i] + dt * k2.db[i]);
    }
    y2.time = y0.time + 0.5 * dt;

    RhsOut k3 = stage_rhs(y2, cfg);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s.field_a[i] = (y0.field_a[i] +
                        2.0 * (y2.field_a[i] + dt * k3.da[i])) / 3.0;
        s.field_b[i] = (y0.field_b[i] +
                        2.0 * (y2.field_b[i] + dt * k3.db[i])) / 3.0;
    }
    s.time = y0.time + dt;
    s.field_b[0] = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!std::isfinite(s.field_a[i]) || !std::isfinite(s.field_b[i]))
            throw SimError("nan-detected at time " + std::to_string(s.time));
}

double weighted_energy(const RadialState& s, const CutoffSet& cutoffs,
                       int k_surrogate) {
    if (k_surrogate < 1 || k_surrogate > 3)
        throw SimError("weighted_energy: k_surrogate must be 1..3");
    std::vector<double> va = s.field_a, vb = s.field_b;
    int pa = +1, pb = -1;
    for (int k = 0; k < k_surrogate; ++k) {
        va = d1(va, s.h, pa);
        vb = d1(vb, s.h, pb);
        pa = -pa;
        pb = -pb;
    }
    double sum = 0.0;
    std::vector<double> g(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double w = std::pow(cutoffs.phi(s.r[i]), (double)k_surrogate);
        g[i] = (va[i] * va[i] + vb[i] * vb[i]) * w * 4.0 * M_PI * s.r[i] * s.r[i];
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
        sum += 0.5 * (g[i] + g[i + 1]) * s.h;
    return sum;
}

PerturbationRecord perturbation_diagnostics(const RadialState& s,
                                            const ProfileTable& profile,
                                            const CutoffSet& cutoffs,
                                            double tau) {
    PerturbationRecord rec;
    std::size_t n = s.size();
    std::vector<double> ptb_q(n), ptb_u(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto ps = eval_profile(profile, s.r[i]);
        double cut = cutoffs.x_hat(tau, s.r[i]);
        ptb_q[i] = s.field_a[i] - cut * ps.q_bar;
        ptb_u[i] = s.field_b[i] - cut * ps.u_cal;
        rec.sup_q = std::max(rec.sup_q, std::abs(ptb_q[i]));
        rec.sup_u = std::max(rec.sup_u, std::abs(ptb_u[i]));
    }
    auto dq_tot = d1(s.field_a, s.h, +1);
    auto dq_ptb = d1(ptb_q, s.h, +1);
    double L = profile.model.lambda;
    rec.env_lo = 1e300;
    rec.env_hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = s.r[i] / cutoffs.r0;
        double br = std::sqrt(1.0 + z * z);
        rec.weighted_grad_sup =
            std::max(rec.weighted_grad_sup,
                     std::pow(br, L) * (std::abs(dq_ptb[i]) + std::abs(dq_tot[i])));
        double env = s.field_a[i] * std::pow(br, L - 1.0);
        rec.env_lo = std::min(rec.env_lo, env);
        rec.env_hi = std::max(rec.env_hi, env);
    }
    return rec;
}

namespace {

DiagnosticsRecord make_record(const RadialState& s, const SimConfig& cfg,
                              const ProfileTable* profile) {
    DiagnosticsRecord rec;
    rec.time = s.time;
    std::vector<double> fd;
    if (s.frame == Frame::eulerian)
        rhs_eulerian(s, cfg.model, cfg.viscous, &fd);
    else
        rhs_selfsim(s, cfg.model, s.time, cfg.viscous, &fd);
    for (double v : fd) rec.fdis_sup = std::max(rec.fdis_sup, std::abs(v));
    if (profile && s.frame == Frame::selfsim) {
        auto p = perturbation_diagnostics(s, *profile, cfg.cutoffs, s.time);
        rec.sup_ptb_q = p.sup_q;
        rec.sup_ptb_u = p.sup_u;
    }
    rec.e_k = weighted_energy(s, cfg.cutoffs, cfg.k_surrogate);
    double L = cfg.model.lambda;
    rec.min_q_env = 1e300;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double z = s.r[i] / cfg.cutoffs.r0;
        rec.min_q_env = std::min(
            rec.min_q_env, s.field_a[i] * std::pow(1.0 + z * z, 0.5 * (L - 1.0)));
        rec.max_q = std::max(rec.max_q, s.field_a[i]);
    }
    rec.rho_origin = rho_from_c(s.field_a[0], cfg.model.alpha);
    return rec;
}

}  // namespace

DiagnosticsSeries run(const SimConfig& cfg_in, RadialState initial,
                      const ProfileTable* profile) {
    if (!cfg_in.valid()) throw SimError("run: invalid configuration");
    if (initial.size() < 5) throw SimError("run: initial state too small");
    SimConfig cfg = cfg_in;
    if (std::isnan(cfg.farfield_cbar) && cfg.sponge_ref_a.empty()) {
        cfg.sponge_ref_a = initial.field_a;
        cfg.sponge_ref_b = initial.field_b;
    }
    DiagnosticsSeries out;
    out.frame = initial.frame;
    out.model = cfg.model;
    out.n_cells = initial.size() - 1;
    out.cfl = cfg.cfl;

    RadialState s = std::move(initial);
    double next_out = s.time;
    try {
        while (true) {
            if (s.time >= next_out - 1e-13) {
                out.records.push_back(make_record(s, cfg, profile));
                next_out += cfg.output_cadence;
            }
            if (s.time >= cfg.time_end - 1e-13) {
                out.termination = "time-end";
                break;
            }
            if (s.frame == Frame::eulerian &&
                rho_from_c(s.field_a[0], cfg.model.alpha) >= cfg.max_density) {
                out.termination = "max-density";
                break;
            }
            double dt = suggest_dt(s, cfg);
            if (dt < cfg.min_dt) {
                out.termination = "min-dt";
                break;
            }
            dt = std::min({dt, next_out - s.time, cfg.time_end - s.time});
            dt = std::max(dt, 0.25 * cfg.min_dt);
            step(s, dt, cfg);
        }
    } catch (const SimError& e) {
        throw SimError(std::string(e.what()) + " (run aborted at time " +
                       std::to_string(s.time) + ")");
    }
    // make sure the terminal state is recorded
    if (out.records.empty() || out.records.back().time < s.time - 1e-13)
        out.records.push_back(make_record(s, cfg, profile));
    out.final_state = std::move(s);
    return out;
}

void save_diagnostics(const DiagnosticsSeries& d, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw SimError("save_diagnostics: cannot open " + path);
    char buf[64];
    auto g17 = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    // FNV-1a over the configuration scalars
    std::uint64_t hash = 1469598103934665603ull;
    auto mix = [&](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char c : bytes) {
            hash ^= c;
            hash *= 1099511628211ull;
        }
    };
    mix(d.model.gamma);
    mix(d.model.delta);
    mix(d.model.lambda);
    mix((double)d.n_cells);
    mix(d.cfl);
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)hash);
    f << "# config-hash=" << buf << ", gamma=" << g17(d.model.gamma)
      << ", delta=" << g17(d.model.delta) << ", lambda=" << g17(d.model.lambda)
      << ", frame=" << to_string(d.frame) << ", n_cells=" << d.n_cells
      << ", cfl=" << g17(d.cfl) << "\n";
    f << "time,sup_ptb_q,sup_ptb_u,e_k,min_q_env,max_q,fdis_sup,rho_origin\n";
    for (const auto& r : d.records)
        f << g17(r.time) << "," << g17(r.sup_ptb_q) << "," << g17(r.sup_ptb_u)
          << "," << g17(r.e_k) << "," << g17(r.min_q_env) << "," << g17(r.max_q)
          << "," << g17(r.fdis_sup) << "," << g17(r.rho_origin) << "\n";
    f << "# reason=" << d.termination << "\n";
    if (!f) throw SimError("save_diagnostics: write failure on " + path);
}

namespace {

struct LinFit {
    double slope;
    double sse;
};

LinFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    double n = (double)x.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double icpt = (sy - slope * sx) / n;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - slope * x[i] - icpt;
        sse += e * e;
    }
    return {slope, sse};
}

}  // namespace

FitReport fit_exponents(const DiagnosticsSeries& series, const GasModel& model,
                        Frame frame) {
    FitReport rep;
    const auto& rr = series.records;
    if (frame == Frame::eulerian) {
        std::vector<double> t, lr;
        for (const auto& r : rr)
            if (r.rho_origin > 0.0) {
                t.push_back(r.time);
                lr.push_back(std::log(r.rho_origin));
            }
        if (t.size() < 8) throw SimError("fit_exponents: insufficient data");
        double t_last = t.back();
        double span = t_last - t.front();
        // joint 1-parameter fit of the effective blow-up time
        auto sse_at = [&](double T) {
            std::vector<double> x(t.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                x[i] = std::log(T - t[i]);
            return fit_line(x, lr);
        };
        double lo = t_last + 1e-12 * (1.0 + span), hi = t_last + 2.0 * span;
        for (int it = 0; it < 200; ++it) {
            double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (sse_at(m1).sse < sse_at(m2).sse)
                hi = m2;
            else
                lo = m1;
        }
        double T = 0.5 * (lo + hi);
        rep.t_eff = T;
        rep.rho_slope = sse_at(T).slope;
        rep.rho_slope_target = -(1.0 - 1.0 / model.lambda) / model.alpha;
        rep.decades = std::log10((T - t.front()) / (T - t_last));
        return rep;
    }
    // self-similar: exponential-rate fits vs tau
    if (rr.size() < 4 || rr.back().time - rr.front().time < 0.5)
        throw SimError("fit_exponents: insufficient data");
    std::vector<double> tf, lf, tp, lp;
    for (const auto& r : rr) {
        if (r.fdis_sup > 0.0) {
            tf.push_back(r.time);
            lf.push_back(std::log(r.fdis_sup));
        }
        if (r.sup_ptb_q > 0.0) {
            tp.push_back(r.time);
            lp.push_back(std::log(r.sup_ptb_q));
        }
    }
    if (tf.size() >= 4) rep.fdis_rate = fit_line(tf, lf).slope;
    rep.fdis_rate_target = -model.delta_dis;
    if (tp.size() >= 4) rep.ptb_rate = fit_line(tp, lp).slope;
    return rep;
}

RadialState state_from_profile(const ProfileTable& profile, Frame frame,
                               double time0, std::size_t n, double r_max) {
    if (n < 5 || !(r_max > 0.0))
        throw SimError("state_from_profile: invalid grid");
    RadialState s;
    s.frame = frame;
    s.time = time0;
    s.h = r_max / (double)(n - 1);
    s.r.resize(n);
    s.field_a.resize(n);
    s.field_b.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.r[i] = s.h * (double)i;
        auto ps = eval_profile(profile, s.r[i]);
        s.field_a[i] = ps.q_bar;
        s.field_b[i] = ps.u_cal;
    }
    s.field_b[0] = 0.0;
    return s;
}

RadialState state_from_initial_data(const RadialInitialData& data,
                                    double alpha) {
    if (data.r.size() < 5) throw SimError("state_from_initial_data: too small");
    RadialState s;
    s.frame = Frame::eulerian;
    s.time = 0.0;
    s.h = data.r[1] - data.r[0];
    s.r = data.r;
    s.field_a.resize(data.r.size());
    for (std::size_t i = 0; i < data.r.size(); ++i)
        s.field_a[i] = c_from_rho(data.rho0[i], alpha);
    s.field_b = data.u0;
    return s;
}

}  // namespace implab
