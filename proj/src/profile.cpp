#include "implab/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace implab {

namespace {

// cubic Hermite on [xa, xb] with endpoint values and derivatives
double hermite(double x, double xa, double xb, double ya, double yb, double ma,
               double mb) {
    double h = xb - xa;
    double t = (x - xa) / h;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * ya + (t3 - 2 * t2 + t) * h * ma +
           (-2 * t3 + 3 * t2) * yb + (t3 - t2) * h * mb;
}

struct Branch {
    const std::vector<TrajectorySample>* samples;
    // phase point at real coordinate xi by Hermite interpolation with exact
    // ODE derivatives at the sample endpoints
    EmdenPoint at(double xi, const GasModel& m) const {
        const auto& s = *samples;
        auto it = std::lower_bound(
            s.begin(), s.end(), xi,
            [](const TrajectorySample& smp, double v) { return smp.xi < v; });
        if (it == s.begin()) return s.front().point;
        if (it == s.end()) return s.back().point;
        const auto& b = *it;
        const auto& a = *(it - 1);
        if (b.xi - a.xi < 1e-14) return a.point;
        auto ra = emden_rhs(a.point, m);
        auto rb = emden_rhs(b.point, m);
        double q = hermite(xi, a.xi, b.xi, a.point.q_hat, b.point.q_hat,
                           ra.n_q / ra.d, rb.n_q / rb.d);
        double u = hermite(xi, a.xi, b.xi, a.point.u_hat, b.point.u_hat,
                           ra.n_u / ra.d, rb.n_u / rb.d);
        return {q, u};
    }
};

// inverts xi(sigma) of the sonic expansion by Newton iteration
double sigma_of_xi(const SonicExpansion& sx, double xi) {
    double sigma = (xi - sx.xi_center) / sx.xi_coeffs[0];
    for (int it = 0; it < 8; ++it) {
        double f = sx.eval_xi(sigma) - xi;
        double d = 0.0, p = 1.0;
        for (std::size_t k = 0; k < sx.xi_coeffs.size(); ++k) {
            d += (double)(k + 1) * sx.xi_coeffs[k] * p;
            p *= sigma;
        }
        sigma -= f / d;
    }
    return sigma;
}

void expansion_deriv(const SonicExpansion& sx, double sigma, double& dq_dxi,
                     double& du_dxi) {
    double dq = 0.0, du = 0.0, dxi = 0.0, p = 1.0;
    for (std::size_t k = 0; k < sx.q_coeffs.size(); ++k) {
        double f = (double)(k + 1) * p;
        dq += f * sx.q_coeffs[k];
        du += f * sx.u_coeffs[k];
        dxi += f * sx.xi_coeffs[k];
        p *= sigma;
    }
    dq_dxi = dq / dxi;
    du_dxi = du / dxi;
}

}  // namespace

ProfileTable reconstruct(const ShootResult& shot, const GasModel& model,
                         const GridSpec& grid) {
    if (grid.n < 16 || !(grid.r_min < grid.r_max))
        throw ProfileError("reconstruct: invalid grid spec");
    const double xi_s = shot.sonic.xi;
    const double r_s = std::exp(xi_s);

    // coverage: the origin series takes over below r_switch; the outgoing
    // trajectory must reach past r_max
    if (std::log(grid.r_switch) < shot.trajectory_in.samples.front().xi)
        throw ProfileError("reconstruct: incoming trajectory does not reach the "
                           "series switchover radius (gap)");
    if (std::log(grid.r_max) > shot.trajectory_out.samples.back().xi)
        throw ProfileError("reconstruct: outgoing trajectory does not cover the "
                           "requested grid (gap)");

    SonicExpansion sx = sonic_expansion(shot.sonic, model,
                                        manifold_order(shot.sonic, 6));
    // the sonic Taylor data bridges the sample gap around xi_s
    double gap_lo = xi_s - shot.trajectory_in.samples.back().xi;
    double gap_hi = shot.trajectory_out.samples.front().xi - xi_s;
    double window = std::max({1e-4, 2.0 * gap_lo, 2.0 * gap_hi});

    // log grid plus an exact straddle pair at the sonic radius
    std::vector<double> rg;
    rg.reserve(grid.n + 2);
    double lmin = std::log(grid.r_min), lmax = std::log(grid.r_max);
    for (std::size_t i = 0; i < grid.n; ++i)
        rg.push_back(std::exp(lmin + (lmax - lmin) * i / (grid.n - 1)));
    double straddle = 5e-7;
    rg.push_back(std::exp(xi_s - straddle));
    rg.push_back(std::exp(xi_s + straddle));
    std::sort(rg.begin(), rg.end());
    rg.erase(std::unique(rg.begin(), rg.end()), rg.end());

    OriginExpansion series = p0_expansion(model, shot.q0_gauge, 8);
    Branch in{&shot.trajectory_in.samples};
    Branch out_b{&shot.trajectory_out.samples};

    ProfileTable tab;
    tab.model = model;
    tab.q0_gauge = shot.q0_gauge;
    tab.r_sonic = r_s;
    tab.generator_tol = 1e-11;
    tab.origin_q_coeffs = series.q_coeffs;
    tab.origin_u_coeffs = series.u_coeffs;
    tab.r = rg;
    tab.q_bar.resize(rg.size());
    tab.u_cal.resize(rg.size());
    tab.dq_bar.resize(rg.size());
    tab.du_cal.resize(rg.size());

    for (std::size_t i = 0; i < rg.size(); ++i) {
        double r = rg[i];
        double xi = std::log(r);
        double q, u, dq_dxi, du_dxi;
        if (r < grid.r_switch) {
            tab.q_bar[i] = series.eval_q(r);
            tab.u_cal[i] = series.eval_u(r);
            tab.dq_bar[i] = series.eval_dq(r);
            tab.du_cal[i] = series.eval_du(r);
            continue;
        }
        if (std::abs(xi - xi_s) <= window) {
            double sigma = sigma_of_xi(sx, xi);
            EmdenPoint p = sx.eval(sigma);
            q = p.q_hat;
            u = p.u_hat;
            expansion_deriv(sx, sigma, dq_dxi, du_dxi);
        } else {
            EmdenPoint p = (xi < xi_s) ? in.at(xi, model) : out_b.at(xi, model);
            q = p.q_hat;
            u = p.u_hat;
            auto rhs = emden_rhs(p, model);
            if (std::abs(rhs.d) > 1e-6) {
                dq_dxi = rhs.n_q / rhs.d;
                du_dxi = rhs.n_u / rhs.d;
            } else {
                double sigma = sigma_of_xi(sx, xi);
                expansion_deriv(sx, sigma, dq_dxi, du_dxi);
            }
        }
        tab.q_bar[i] = r * q;
        tab.u_cal[i] = r * u;
        tab.dq_bar[i] = q + dq_dxi;   // d(r Q_hat)/dr with xi = ln r
        tab.du_cal[i] = u + du_dxi;
    }

    tab.sonic_lo = (std::size_t)(std::lower_bound(rg.begin(), rg.end(), r_s) -
                                 rg.begin()) - 1;
    return tab;
}

ProfileSample eval_profile(const ProfileTable& p, double r) {
    if (!(r >= 0.0)) throw ProfileError("eval_profile: negative radius");
    const auto& rg = p.r;
    if (r <= rg.front()) {
        // origin series: q_bar = sum Q_k r^{2k}, u_cal = sum U_k r^{2k+1}
        double q = 0.0, dq = 0.0, u = 0.0, du = 0.0;
        double even = 1.0;  // r^{2k}
        for (std::size_t k = 0; k < p.origin_q_coeffs.size(); ++k) {
            q += p.origin_q_coeffs[k] * even;
            if (k > 0)
                dq += 2.0 * (double)k * p.origin_q_coeffs[k] * even / (r > 0.0 ? r : 1.0);
            even *= r * r;
        }
        even = 1.0;
        for (std::size_t k = 0; k < p.origin_u_coeffs.size(); ++k) {
            u += p.origin_u_coeffs[k] * even * r;
            du += (double)(2 * k + 1) * p.origin_u_coeffs[k] * even;
            even *= r * r;
        }
        if (r == 0.0) dq = 0.0;
        return {q, u, dq, du};
    }
    if (r >= rg.back()) {
        // r^{1-lambda} tail anchored at the last node
        double e = 1.0 - p.model.lambda;
        double s = std::pow(r / rg.back(), e);
        double q = p.q_bar.back() * s;
        double u = p.u_cal.back() * s;
        return {q, u, e * q / r, e * u / r};
    }
    auto it = std::lower_bound(rg.begin(), rg.end(), r);
    std::size_t j = (std::size_t)(it - rg.begin());
    std::size_t i = j - 1;
    double xa = rg[i], xb = rg[j];
    auto h = [&](double ya, double yb, double ma, double mb, double& val,
                 double& der) {
        double hh = xb - xa, t = (r - xa) / hh;
        double t2 = t * t, t3 = t2 * t;
        val = (2 * t3 - 3 * t2 + 1) * ya + (t3 - 2 * t2 + t) * hh * ma +
              (-2 * t3 + 3 * t2) * yb + (t3 - t2) * hh * mb;
        der = ((6 * t2 - 6 * t) * ya + (3 * t2 - 4 * t + 1) * hh * ma +
               (-6 * t2 + 6 * t) * yb + (3 * t2 - 2 * t) * hh * mb) /
              hh;
    };
    ProfileSample out;
    h(p.q_bar[i], p.q_bar[j], p.dq_bar[i], p.dq_bar[j], out.q_bar, out.dq_bar);
    h(p.u_cal[i], p.u_cal[j], p.du_cal[i], p.du_cal[j], out.u_cal, out.du_cal);
    return out;
}

SteadyResidual steady_residual(const ProfileTable& p) {
    const double a = p.model.alpha, L = p.model.lambda;
    SteadyResidual out;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i == p.sonic_lo || i == p.sonic_lo + 1) continue;
        double r = p.r[i], q = p.q_bar[i], u = p.u_cal[i];
        double dq = p.dq_bar[i], du = p.du_cal[i];
        double r1 = (L - 1.0) * q + (r + u) * dq + a * q * (du + 2.0 * u / r);
        double r2 = (L - 1.0) * u + (r + u) * du + a * q * dq;
        out.res_q = std::max(out.res_q, std::abs(r1));
        out.res_u = std::max(out.res_u, std::abs(r2));
    }
    return out;
}

namespace {

// least-squares slope of ln|y| vs ln r over the final decade of the grid
double decade_slope(const std::vector<double>& r, const std::vector<double>& y) {
    double r_lo = r.back() / 10.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < r_lo || y[i] == 0.0) continue;
        double x = std::log(r[i]), v = std::log(std::abs(y[i]));
        sx += x;
        sy += v;
        sxx += x * x;
        sxy += x * v;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

PropertyReport verify_properties(const ProfileTable& p) {
    const double a = p.model.alpha, L = p.model.lambda;
    PropertyReport rep;
    rep.min_q_bar = 1e300;
    rep.radial_margin = 1e300;
    rep.angular_margin = 1e300;
    rep.farfield_margin = 1e300;
    double r_min_q = 0, r_rad = 0, r_ang = 0, r_far = 0;
    double c_hat = 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double r = p.r[i], q = p.q_bar[i], u = p.u_cal[i];
        double dq = p.dq_bar[i], du = p.du_cal[i];
        if (q < rep.min_q_bar) {
            rep.min_q_bar = q;
            r_min_q = r;
        }
        double rad = 1.0 + du - a * std::abs(dq);
        if (rad < rep.radial_margin) {
            rep.radial_margin = rad;
            r_rad = r;
        }
        double ang = 1.0 + u / r - a * std::abs(dq);
        if (ang < rep.angular_margin) {
            rep.angular_margin = ang;
            r_ang = r;
        }
        if (r > 1.0) {
            double far = (r + u - a * q) / (r - 1.0);
            if (far < rep.farfield_margin) {
                rep.farfield_margin = far;
                r_far = r;
            }
        }
        double w = std::pow(1.0 + r * r, 0.5 * (1.0 - L));
        if (q > 0.0) c_hat = std::max({c_hat, q / w, w / q});
    }
    rep.decay_exp_q = decade_slope(p.r, p.q_bar);
    rep.decay_exp_u = decade_slope(p.r, p.u_cal);
    rep.deriv_decay_exp = decade_slope(p.r, p.dq_bar);
    rep.decay_c_hat = c_hat;
    rep.eta_tilde =
        std::min({rep.radial_margin, rep.angular_margin, rep.farfield_margin});

    auto fail = [](const char* name, double r_at, double val) {
        std::ostringstream os;
        os << "verify_properties: " << name << " violated at r = " << r_at
           << " (value " << val << ")";
        throw ProfileError(os.str());
    };
    if (!(rep.min_q_bar > 0.0)) fail("positivity of Q_bar", r_min_q, rep.min_q_bar);
    if (!(rep.radial_margin > 0.0))
        fail("radial repulsivity 1 + dU - alpha |dQ|", r_rad, rep.radial_margin);
    if (!(rep.angular_margin > 0.0))
        fail("angular repulsivity 1 + U/r - alpha |dQ|", r_ang, rep.angular_margin);
    if (!(rep.farfield_margin > 0.0))
        fail("far-field margin (r + U - alpha Q)/(r - 1)", r_far,
             rep.farfield_margin);
    return rep;
}

void save_profile(const ProfileTable& p, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ProfileError("save_profile: cannot open " + path);
    char buf[64];
    auto g17 = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    f << "# gamma=" << g17(p.model.gamma) << "\n";
    f << "# lambda=" << g17(p.model.lambda) << "\n";
    f << "# alpha=" << g17(p.model.alpha) << "\n";
    f << "# q0_gauge=" << g17(p.q0_gauge) << "\n";
    f << "# eta_tilde=" << g17(p.eta_tilde) << "\n";
    f << "# generator_tol=" << g17(p.generator_tol) << "\n";
    f << "# r_sonic=" << g17(p.r_sonic) << "\n";
    f << "# sonic_lo=" << p.sonic_lo << "\n";
    auto coeff_list = [&](const std::vector<double>& c) {
        std::string s;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (i) s += ",";
            s += g17(c[i]);
        }
        return s;
    };
    f << "# origin_q=" << coeff_list(p.origin_q_coeffs) << "\n";
    f << "# origin_u=" << coeff_list(p.origin_u_coeffs) << "\n";
    f << "# columns=r,q_bar,u_cal,dq_bar,du_cal\n";
    for (std::size_t i = 0; i < p.size(); ++i)
        f << g17(p.r[i]) << "," << g17(p.q_bar[i]) << "," << g17(p.u_cal[i]) << ","
          << g17(p.dq_bar[i]) << "," << g17(p.du_cal[i]) << "\n";
    if (!f) throw ProfileError("save_profile: write failure on " + path);
}

ProfileTable load_profile(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ProfileError("load_profile: cannot open " + path);
    ProfileTable p;
    double gamma = 0.0, lambda = 0.0, alpha = -1.0;
    std::string line;
    std::size_t lineno = 0;
    auto parse_error = [&](const std::string& why) {
        throw ProfileError("load_profile: " + why + " at line " +
                           std::to_string(lineno));
    };
    auto parse_list = [&](const std::string& s) {
        std::vector<double> out;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) parse_error("bad number '" + tok + "'");
        }
        return out;
    };
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(2, eq - 2);
            std::string val = line.substr(eq + 1);
            try {
                if (key == "gamma") gamma = std::stod(val);
                else if (key == "lambda") lambda = std::stod(val);
                else if (key == "alpha") alpha = std::stod(val);
                else if (key == "q0_gauge") p.q0_gauge = std::stod(val);
                else if (key == "eta_tilde") p.eta_tilde = std::stod(val);
                else if (key == "generator_tol") p.generator_tol = std::stod(val);
                else if (key == "r_sonic") p.r_sonic = std::stod(val);
                else if (key == "sonic_lo") p.sonic_lo = (std::size_t)std::stoul(val);
                else if (key == "origin_q") p.origin_q_coeffs = parse_list(val);
                else if (key == "origin_u") p.origin_u_coeffs = parse_list(val);
            } catch (const std::invalid_argument&) {
                parse_error("bad value for key '" + key + "'");
            }
            continue;
        }
        double v[5];
        std::stringstream ss(line);
        std::string tok;
        int k = 0;
        while (std::getline(ss, tok, ',')) {
            if (k >= 5) parse_error("too many fields");
            std::size_t used = 0;
            try {
                v[k++] = std::stod(tok, &used);
            } catch (const std::invalid_argument&) {
                parse_error("bad number '" + tok + "'");
            }
            if (used != tok.size()) parse_error("trailing junk '" + tok + "'");
        }
        if (k != 5) parse_error("expected 5 comma-separated fields, got " +
                                std::to_string(k));
        p.r.push_back(v[0]);
        p.q_bar.push_back(v[1]);
        p.u_cal.push_back(v[2]);
        p.dq_bar.push_back(v[3]);
        p.du_cal.push_back(v[4]);
    }
    if (p.r.empty()) throw ProfileError("load_profile: no data rows in " + path);
    if (!(gamma > 1.0) || !(lambda > 1.0))
        throw ProfileError("load_profile: missing gamma/lambda header");
    if (std::abs(alpha_of(gamma) - alpha) > 1e-12)
        throw ProfileError("load_profile: header alpha contradicts gamma");
    p.model = GasModel::make(gamma, 0.0, lambda);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i > 0 && !(p.r[i] > p.r[i - 1]))
            throw ProfileError("load_profile: grid not strictly increasing at row " +
                               std::to_string(i));
        if (!(p.q_bar[i] > 0.0))
            throw ProfileError("load_profile: non-positive q_bar at row " +
                               std::to_string(i));
    }
    return p;
}

}  // namespace implab
