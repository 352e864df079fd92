#include "implab/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace implab {

SelfSimFrame SelfSimFrame::make(double T, double lambda) {
    if (!(T > 0.0)) throw TransformError("SelfSimFrame: T must be positive");
    if (!(lambda > 1.0)) throw TransformError("SelfSimFrame: lambda must exceed 1");
    SelfSimFrame f;
    f.T = T;
    f.lambda = lambda;
    f.tau0 = -std::log(T) / lambda;
    return f;
}

std::pair<double, double> to_selfsim(const SelfSimFrame& f, double t,
                                     double x_radius) {
    if (!(t < f.T)) throw TransformError("to_selfsim: t must be below T");
    double rem = f.T - t;
    return {-std::log(rem) / f.lambda, x_radius * std::pow(rem, -1.0 / f.lambda)};
}

std::pair<double, double> from_selfsim(const SelfSimFrame& f, double tau,
                                       double y_radius) {
    double rem = std::exp(-f.lambda * tau);
    return {f.T - rem, y_radius * std::pow(rem, 1.0 / f.lambda)};
}

double selfsim_prefactor(const SelfSimFrame& f, double t) {
    if (!(t < f.T)) throw TransformError("selfsim_prefactor: t must be below T");
    return std::pow(f.T - t, 1.0 / f.lambda - 1.0) / f.lambda;
}

FieldPair rescale_fields(const SelfSimFrame& f, double t, int direction,
                         const FieldPair& in) {
    double pref = selfsim_prefactor(f, t);
    if (direction == +1) return {in.a * pref, in.b * pref};
    if (direction == -1) return {in.a / pref, in.b / pref};
    throw TransformError("rescale_fields: direction must be +1 or -1");
}

double rho_from_c(double c, double alpha) {
    return std::pow(alpha * c, 1.0 / alpha);
}

double c_from_rho(double rho, double alpha) {
    return std::pow(rho, alpha) / alpha;
}

namespace {

// C-infinity smoothstep: 0 for s <= 0, 1 for s >= 1, strictly increasing
double smoothstep(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    double a = std::exp(-1.0 / s);
    double b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

}  // namespace

double CutoffSet::chi_x(double x_radius) const {
    return smoothstep(2.0 - 2.0 * std::abs(x_radius));
}

double CutoffSet::x_hat(double tau, double y_radius) const {
    return chi_x(std::exp(-tau) * y_radius);
}

double CutoffSet::chi1(double s) const {
    return smoothstep(3.0 - 2.0 * std::abs(s) / c0);
}

double CutoffSet::chi2(double s) const {
    return smoothstep(5.0 - 2.0 * std::abs(s) / c0);
}

namespace {

// log-log quintic bridge for phi on [R0, 4R0]: value/slope/curvature match
// the flat inner branch at s=0 and the power-law outer branch at s=1
struct PhiBridge {
    double a, b, c;
    PhiBridge(double g1, double m1)
        : a(10.0 * g1 - 4.0 * m1), b(7.0 * m1 - 15.0 * g1), c(6.0 * g1 - 3.0 * m1) {}
    double g(double s) const { return ((c * s + b) * s + a) * s * s * s; }
    double dg(double s) const { return ((5.0 * c * s + 4.0 * b) * s + 3.0 * a) * s * s; }
};

}  // namespace

double CutoffSet::phi(double y_radius) const {
    double r = std::abs(y_radius);
    if (r <= r0) return 1.0;
    double e = 2.0 * (1.0 - eta);
    if (r >= 4.0 * r0) return std::pow(r, e) / (2.0 * std::pow(r0, e));
    double g1 = e * std::log(4.0) - std::log(2.0);
    double m1 = e * std::log(4.0);
    PhiBridge br(g1, m1);
    double s = std::log(r / r0) / std::log(4.0);
    return std::exp(br.g(s));
}

double CutoffSet::dphi(double y_radius) const {
    double r = std::abs(y_radius);
    if (r <= r0) return 0.0;
    double e = 2.0 * (1.0 - eta);
    if (r >= 4.0 * r0) return e * phi(r) / r;
    double g1 = e * std::log(4.0) - std::log(2.0);
    double m1 = e * std::log(4.0);
    PhiBridge br(g1, m1);
    double s = std::log(r / r0) / std::log(4.0);
    return std::exp(br.g(s)) * br.dg(s) / (r * std::log(4.0));
}

CutoffValues eval_cutoffs(const CutoffSet& set, double tau, double radius) {
    if (!set.valid()) throw TransformError("eval_cutoffs: invalid cutoff set");
    return {set.chi_x(radius), set.x_hat(tau, radius), set.chi1(radius),
            set.chi2(radius), set.phi(radius), set.dphi(radius)};
}

double calibrate_r0(const ProfileTable& profile, double nu0) {
    if (!(nu0 > 0.0)) throw TransformError("calibrate_r0: nu0 must be positive");
    double target = 2.0 * nu0;
    // inside the table: first node where q_bar drops below the target
    for (std::size_t i = 0; i < profile.size(); ++i)
        if (profile.q_bar[i] <= target) return profile.r[i];
    // invert the power-law tail q_bar ~ q_N (r / r_N)^{1 - lambda}
    double e = 1.0 - profile.model.lambda;
    return profile.r.back() *
           std::pow(target / profile.q_bar.back(), 1.0 / e);
}

namespace {

// smooth maximum: >= max(a, b), equal to it away from the crossover
double smooth_max(double a, double b, double width) {
    double d = a - b;
    return 0.5 * (a + b + std::sqrt(d * d + 4.0 * width * width));
}

}  // namespace

RadialInitialData build_initial_data(const ProfileTable& profile,
                                     const GasModel& model,
                                     const SelfSimFrame& frame,
                                     const CutoffSet& set, double floor_nu1,
                                     std::size_t n, double x_max,
                                     const RadialPerturbation* pert) {
    if (!(floor_nu1 > 0.0))
        throw TransformError("build_initial_data: floor_nu1 must be positive");
    if (!set.valid()) throw TransformError("build_initial_data: invalid cutoff set");
    if (n < 16 || !(x_max > 0.0))
        throw TransformError("build_initial_data: invalid grid");
    const double alpha = model.alpha;
    const double pref = selfsim_prefactor(frame, 0.0);  // 1 / (Lambda T^{1-1/Lambda})
    const double scale_y = std::pow(frame.T, -1.0 / frame.lambda);

    RadialInitialData out;
    out.T = frame.T;
    out.lambda = frame.lambda;
    out.gamma = model.gamma;
    out.delta = model.delta;
    out.nu1 = floor_nu1;
    if (pert) out.perturbation_desc = pert->description;
    out.r.resize(n);
    out.rho0.resize(n);
    out.u0.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        double x = x_max * (double)i / (double)(n - 1);
        double y = x * scale_y;
        auto ps = eval_profile(profile, y);
        double cut = set.chi_x(x);
        double core_q = cut * ps.q_bar + (pert && pert->dq ? pert->dq(y) : 0.0);
        double core_u = cut * ps.u_cal + (pert && pert->du ? pert->du(y) : 0.0);
        double z = y / set.r0;
        double floor_q =
            0.5 * floor_nu1 * std::pow(1.0 + z * z, 0.5 * (1.0 - frame.lambda));
        if (floor_q >= core_q && x <= 0.5) out.floor_dominates_core = true;
        double q0 = smooth_max(core_q, floor_q, 0.1 * floor_q);
        out.r[i] = x;
        out.rho0[i] = rho_from_c(pref * q0, alpha);
        out.u0[i] = pref * core_u;
    }
    out.u0[0] = 0.0;
    return out;
}

void save_initial_data(const RadialInitialData& d, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw TransformError("save_initial_data: cannot open " + path);
    char buf[64];
    auto g17 = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    f << "# T=" << g17(d.T) << "\n";
    f << "# lambda=" << g17(d.lambda) << "\n";
    f << "# gamma=" << g17(d.gamma) << "\n";
    f << "# delta=" << g17(d.delta) << "\n";
    f << "# nu1=" << g17(d.nu1) << "\n";
    if (!d.perturbation_desc.empty())
        f << "# perturbation=" << d.perturbation_desc << "\n";
    f << "# columns=r,rho0,u0\n";
    for (std::size_t i = 0; i < d.r.size(); ++i)
        f << g17(d.r[i]) << "," << g17(d.rho0[i]) << "," << g17(d.u0[i]) << "\n";
    if (!f) throw TransformError("save_initial_data: write failure on " + path);
}

std::pair<double, double> rescaled_observables(
    const SelfSimFrame& frame, double alpha, double t,
    const std::vector<double>& r_grid, const std::vector<double>& rho,
    const std::vector<double>& u, double y_probe) {
    if (!(t < frame.T)) throw TransformError("rescaled_observables: t >= T");
    double rem = frame.T - t;
    double x = y_probe * std::pow(rem, 1.0 / frame.lambda);
    if (r_grid.size() < 4 || x < r_grid.front() || x > r_grid.back())
        throw TransformError("rescaled_observables: probe outside grid");
    // 4-point Lagrange interpolation on the (uniform or smooth) grid
    auto it = std::lower_bound(r_grid.begin(), r_grid.end(), x);
    std::size_t j = (std::size_t)(it - r_grid.begin());
    std::size_t i0 = (j >= 2) ? j - 2 : 0;
    i0 = std::min(i0, r_grid.size() - 4);
    auto interp = [&](const std::vector<double>& f) {
        double s = 0.0;
        for (std::size_t a = i0; a < i0 + 4; ++a) {
            double w = 1.0;
            for (std::size_t b = i0; b < i0 + 4; ++b)
                if (b != a) w *= (x - r_grid[b]) / (r_grid[a] - r_grid[b]);
            s += w * f[a];
        }
        return s;
    };
    double amp = frame.lambda * std::pow(rem, 1.0 - 1.0 / frame.lambda);
    double lhs_q = std::pow(amp / alpha, 1.0 / alpha) * interp(rho);
    double lhs_u = amp * interp(u);
    return {lhs_q, lhs_u};
}

}  // namespace implab
