#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "implab/gas_model.hpp"
#include "implab/phase_portrait.hpp"

namespace implab {

struct ProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Physical-space self-similar profile sampled on a log grid: Q_bar(r) and
/// the radial velocity profile U_cal(r) (the vector field is
/// U(y) = U_cal(r) y / r), together with exact first derivatives.
struct ProfileTable {
    GasModel model;
    double q0_gauge = 1.0;
    double r_sonic = 0.0;       ///< sonic radius e^{xi_s}
    double eta_tilde = 0.0;     ///< verified repulsivity margin (set by verify)
    double generator_tol = 0.0; ///< integrator tolerance used to build the table
    std::vector<double> r;      ///< strictly increasing log-spaced grid
    std::vector<double> q_bar;
    std::vector<double> u_cal;
    std::vector<double> dq_bar;
    std::vector<double> du_cal;
    std::vector<double> origin_q_coeffs;  ///< Q_bar = sum Q_{2k} r^{2k}
    std::vector<double> origin_u_coeffs;  ///< U_cal = sum U_{2k+1} r^{2k+1}
    std::size_t sonic_lo = 0;   ///< index of the grid node just below r_sonic

    std::size_t size() const { return r.size(); }
};

struct GridSpec {
    double r_min = 1e-4;
    double r_max = 1e4;
    std::size_t n = 4096;
    double r_switch = 0.1;  ///< below this radius the origin series is used
};

/// Maps the phase-plane connection back to physical space:
/// Q_bar(r) = r Q_hat(ln r), U_cal(r) = r U_hat(ln r), with the origin series
/// below grid.r_switch and the sonic Taylor data across the sonic radius.
/// Derivatives come from the ODE relations, not numerical differentiation.
ProfileTable reconstruct(const ShootResult& shot, const GasModel& model,
                         const GridSpec& grid = {});

/// Maximum absolute residuals of the steady profile system over the grid,
/// excluding the straddle pair adjacent to the sonic radius.
struct SteadyResidual {
    double res_q = 0.0;
    double res_u = 0.0;
};
SteadyResidual steady_residual(const ProfileTable& profile);

/// Quantitative report of the profile inequalities and decay rates.
struct PropertyReport {
    double min_q_bar = 0.0;        ///< positivity margin
    double decay_exp_q = 0.0;      ///< fitted log-log slope of Q_bar, last decade
    double decay_exp_u = 0.0;      ///< fitted log-log slope of |U_cal|, last decade
    double decay_c_hat = 0.0;      ///< two-sided decay constant for Q_bar
    double deriv_decay_exp = 0.0;  ///< fitted slope of |dQ_bar/dr|, last decade
    double radial_margin = 0.0;    ///< min 1 + dU_cal - alpha |dQ_bar|
    double angular_margin = 0.0;   ///< min 1 + U_cal/r - alpha |dQ_bar|
    double farfield_margin = 0.0;  ///< min over r>1 of (r + U_cal - alpha Q_bar)/(r-1)
    double eta_tilde = 0.0;        ///< min of the three margins
};

/// Computes the report and throws ProfileError naming the first violated
/// inequality (and its grid radius) if any margin is non-positive.
PropertyReport verify_properties(const ProfileTable& profile);

/// Pointwise profile evaluation between grid nodes: cubic Hermite using the
/// stored exact derivatives, the origin series below the first node, and the
/// r^{1-lambda} power-law tail above the last node.
struct ProfileSample {
    double q_bar;
    double u_cal;
    double dq_bar;
    double du_cal;
};
ProfileSample eval_profile(const ProfileTable& profile, double r);

/// Text serialization: "# key=value" header lines, then CSV rows
/// r,q_bar,u_cal,dq_bar,du_cal with 17 significant digits.
void save_profile(const ProfileTable& profile, const std::string& path);
ProfileTable load_profile(const std::string& path);

}  // namespace implab
