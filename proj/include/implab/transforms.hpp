#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "implab/gas_model.hpp"
#include "implab/profile.hpp"

namespace implab {

struct TransformError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Self-similar frame attached to a prescribed blow-up time T:
/// tau = -ln(T - t) / lambda, y = x (T - t)^{-1/lambda}.
struct SelfSimFrame {
    double T = 0.0;
    double lambda = 0.0;
    double tau0 = 0.0;  ///< -ln(T) / lambda

    static SelfSimFrame make(double T, double lambda);
};

std::pair<double, double> to_selfsim(const SelfSimFrame& f, double t,
                                     double x_radius);
std::pair<double, double> from_selfsim(const SelfSimFrame& f, double tau,
                                       double y_radius);

/// Amplitude factor of the self-similar ansatz:
/// c = prefactor * Q and u = prefactor * U at matched coordinates.
double selfsim_prefactor(const SelfSimFrame& f, double t);

struct FieldPair {
    double a = 0.0;  ///< c or Q
    double b = 0.0;  ///< u or U
};

/// direction +1 maps (Q, U) -> (c, u); -1 maps back.
FieldPair rescale_fields(const SelfSimFrame& f, double t, int direction,
                         const FieldPair& in);

/// Sound-speed variable <-> density: c = rho^alpha / alpha.
double rho_from_c(double c, double alpha);
double c_from_rho(double rho, double alpha);

/// Cutoff family and the far-field weight:
///  - chi_x: = 1 on |x| <= 1/2, supported in B(0,1), |grad| <= 10
///  - chi1:  = 1 on |s| <= C0, supported in [-3C0/2, 3C0/2]
///  - chi2:  = 1 on |s| <= 2C0, supported in [-5C0/2, 5C0/2], > 0 inside
///  - phi:   = 1 on |y| <= R0, = |y|^{2(1-eta)} / (2 R0^{2(1-eta)}) on
///           |y| >= 4R0, C^1 monotone quintic log-log blend between.
struct CutoffSet {
    double c0 = 10.0;   ///< truncation scale C0 (> 1)
    double r0 = 5.0;    ///< weight scale R0 (> 0)
    double eta = 0.5;   ///< weight exponent in (0, 1)

    bool valid() const { return c0 > 1.0 && r0 > 0.0 && eta > 0.0 && eta < 1.0; }

    double chi_x(double x_radius) const;
    double x_hat(double tau, double y_radius) const;
    double chi1(double s) const;
    double chi2(double s) const;
    double phi(double y_radius) const;
    double dphi(double y_radius) const;
};

struct CutoffValues {
    double chi_x;
    double x_hat;
    double chi1;
    double chi2;
    double phi;
    double dphi;
};

CutoffValues eval_cutoffs(const CutoffSet& set, double tau, double radius);

/// Radius where the profile has decayed to 2 nu0 (power-law inverted from the
/// table tail; may far exceed the tabulated range).
double calibrate_r0(const ProfileTable& profile, double nu0);

struct RadialPerturbation {
    std::function<double(double)> dq;  ///< added to X_hat * Q_bar, in y
    std::function<double(double)> du;
    std::string description;
};

struct RadialInitialData {
    std::vector<double> r;     ///< uniform grid from 0
    std::vector<double> rho0;  ///< strictly positive density
    std::vector<double> u0;    ///< radial velocity, u0(0) = 0
    double T = 0.0;
    double lambda = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    double nu1 = 0.0;                  ///< density floor parameter
    bool floor_dominates_core = false; ///< floor binds inside |x| <= 1/2
    std::string perturbation_desc;
};

/// Well-prepared initial data: c0(x) proportional to a smooth-max of the
/// cutoff profile and the nu1/2 floor, rho0 = (alpha c0)^{1/alpha}.
RadialInitialData build_initial_data(const ProfileTable& profile,
                                     const GasModel& model,
                                     const SelfSimFrame& frame,
                                     const CutoffSet& set, double floor_nu1,
                                     std::size_t n = 4097, double x_max = 1.2,
                                     const RadialPerturbation* pert = nullptr);

void save_initial_data(const RadialInitialData& data, const std::string& path);

/// Rescaled pointwise observables at a fixed self-similar radius y:
/// first = (alpha^{-1} lambda (T-t)^{1-1/lambda})^{1/alpha} rho(t, x(y)),
/// second = lambda (T-t)^{1-1/lambda} u(t, x(y)); on the exact self-similar
/// solution these equal (Q_bar(y)^{1/alpha}, U_cal(y)).
std::pair<double, double> rescaled_observables(
    const SelfSimFrame& frame, double alpha, double t,
    const std::vector<double>& r_grid, const std::vector<double>& rho,
    const std::vector<double>& u, double y_probe);

}  // namespace implab
