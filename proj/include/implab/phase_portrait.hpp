#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "implab/gas_model.hpp"

namespace implab {

struct EmdenPoint {
    double q_hat = 0.0;
    double u_hat = 0.0;
};

struct EmdenRhs {
    double n_q;
    double n_u;
    double d;
};

/// Polynomial right-hand side of the Emden autonomous system and the sonic
/// discriminant D = (1 + u)^2 - alpha^2 q^2.
EmdenRhs emden_rhs(const EmdenPoint& p, const GasModel& model);

/// Jacobian of (N_Q, N_U) with respect to (q_hat, u_hat).
std::array<std::array<double, 2>, 2> emden_jacobian(const EmdenPoint& p,
                                                    const GasModel& model);

enum class EventKind {
    sonic_crossing,
    u_hat_hits_minus_one,
    blow_up,
    reached_p0_asymptote,
    reached_pinf_neighborhood,
    reached_sonic_point,
};

std::string to_string(EventKind k);

struct TrajectorySample {
    double s;    ///< desingularized pseudo-time
    double xi;   ///< xi = log r
    EmdenPoint point;
};

struct TrajectoryEvent {
    EventKind kind;
    std::size_t sample_index;
};

struct PhaseTrajectory {
    std::vector<TrajectorySample> samples;
    std::vector<TrajectoryEvent> events;
    int direction = +1;
};

struct SonicPointData {
    EmdenPoint location;
    double xi = 0.0;                      ///< xi at P_s (set by the shooting)
    std::array<double, 2> jac_eigenvalues{};  // ordered: [0] belongs to nu_minus
    std::array<double, 2> nu_minus{};
    std::array<double, 2> nu_plus{};
    std::array<double, 3> residuals{};    // |D|, |N_Q|, |N_U|
    int multiplicity = 1;                 ///< sign changes found on the sonic line
};

/// Locates the sonic point on the branch 1 + u = alpha q > 0 of {D = 0}
/// and computes the eigen-structure of the desingularized Jacobian there.
SonicPointData sonic_point(const GasModel& model);

struct EventSpec {
    bool stop_on_sonic_crossing = false;
    bool stop_on_pinf = false;
    double pinf_radius = 1e-7;            ///< |(q,u)| threshold for P_infty
    bool stop_near_point = false;
    EmdenPoint near_point;
    double near_radius = 0.0;
    double xi_min = -1e30, xi_max = 1e30; ///< stop when xi leaves this range
    double blow_up_norm = 1e9;
    std::size_t max_steps = 2000000;
    double max_sample_dxi = 0.02;         ///< dense-output subdivision cap
};

/// Integrates the desingularized field (dq/ds, du/ds, dxi/ds) =
/// direction * (N_Q, N_U, D) from (start, xi0) until a stop event.
PhaseTrajectory integrate_desingularized(const EmdenPoint& start, double xi0,
                                         int direction, const GasModel& model,
                                         const EventSpec& stops, double tol = 1e-11);

/// Taylor coefficients of the profile at the origin: q_coeffs[k] multiplies
/// r^{2k} in Q and u_coeffs[k] multiplies r^{2k+1} in the radial velocity.
struct OriginExpansion {
    std::vector<double> q_coeffs;
    std::vector<double> u_coeffs;
    double eval_q(double r) const;
    double eval_u(double r) const;
    double eval_dq(double r) const;
    double eval_du(double r) const;
};

OriginExpansion p0_expansion(const GasModel& model, double q_star, int order);

/// Local invariant-curve expansion of the smooth orbit through the sonic
/// point: (q, u, xi)(sigma) as Taylor series in the arc parameter sigma
/// aligned with nu_minus.
struct SonicExpansion {
    std::vector<double> q_coeffs;   // q(sigma) = q_s + sum_k q_coeffs[k] sigma^k, k>=1
    std::vector<double> u_coeffs;
    std::vector<double> xi_coeffs;  // xi(sigma) - xi_s
    EmdenPoint center;
    double xi_center = 0.0;
    EmdenPoint eval(double sigma) const;
    double eval_xi(double sigma) const;
};

SonicExpansion sonic_expansion(const SonicPointData& sonic, const GasModel& model,
                               int order);

/// Largest expansion order <= want whose recursion stays away from the
/// resonances k * lambda_slow = lambda_fast.
int manifold_order(const SonicPointData& sonic, int want);

struct ShootResult {
    double lambda = 0.0;
    double mismatch = 0.0;          ///< signed sonic-line miss at the returned lambda
    PhaseTrajectory trajectory_in;  ///< P0 asymptote -> sonic point
    PhaseTrajectory trajectory_out; ///< sonic point -> P_infty neighborhood
    SonicPointData sonic;
    int achieved_match_order = 0;
    double q0_gauge = 1.0;
};

struct ShootError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Selects lambda inside the bracket so that the orbit launched from the P0
/// asymptote hits the sonic point, then verifies tangency to nu_minus and
/// Taylor-matches the incoming and outgoing branches there.
ShootResult shoot_lambda(double gamma, std::pair<double, double> bracket,
                         int match_order = 4, double tol = 1e-10);

/// Same with the default bracket (1 + 1e-3, lambda_star(gamma) - 1e-9).
ShootResult shoot_lambda(double gamma, int match_order = 4, double tol = 1e-10);

}  // namespace implab
