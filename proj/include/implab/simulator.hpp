#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "implab/gas_model.hpp"
#include "implab/profile.hpp"
#include "implab/transforms.hpp"

namespace implab {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Frame { eulerian, selfsim };

std::string to_string(Frame f);

/// Radial state on a uniform grid r_i = i h, i = 0..n-1.
/// field_a is c (Eulerian) or Q (self-similar), positive; field_b is the
/// radial velocity u or U, odd at the origin (field_b[0] = 0).
struct RadialState {
    Frame frame = Frame::selfsim;
    double time = 0.0;  ///< t or tau
    double h = 0.0;
    std::vector<double> r;
    std::vector<double> field_a;
    std::vector<double> field_b;

    std::size_t size() const { return r.size(); }
};

struct SimConfig {
    GasModel model;
    Frame frame = Frame::selfsim;
    std::size_t n_cells = 1024;
    double r_max = 0.0;
    double cfl = 0.4;
    bool viscous = true;
    double time_end = 0.0;
    double max_density = std::numeric_limits<double>::infinity();
    double min_dt = 1e-12;
    /// Far-field state: if set, the sponge relaxes toward the constant state
    /// c_bar (Eulerian) or Q*(tau) = lambda c_bar e^{-(lambda-1) tau}
    /// (self-similar).  If NaN the sponge holds the initial boundary values.
    double farfield_cbar = std::numeric_limits<double>::quiet_NaN();
    bool farfield_relax = true;  ///< false: reflecting/one-sided boundary only
    double output_cadence = 0.05;
    int k_surrogate = 1;  ///< weighted-energy derivative order, 1..3
    CutoffSet cutoffs;
    /// Sponge anchor when farfield_cbar is NaN; run() fills these from the
    /// initial state.  Empty + NaN c_bar disables field relaxation.
    std::vector<double> sponge_ref_a;
    std::vector<double> sponge_ref_b;

    bool valid() const {
        return model.valid() && n_cells >= 64 && r_max > 0.0 && cfl > 0.0 &&
               cfl <= 1.0 && k_surrogate >= 1 && k_surrogate <= 3;
    }
};

struct RhsOut {
    std::vector<double> da;
    std::vector<double> db;
};

/// Spatial right-hand sides (4th-order central interior, parity ghosts at
/// r = 0, one-sided closures at r_max).  No sponge terms.
RhsOut rhs_eulerian(const RadialState& s, const GasModel& model,
                    bool viscous = true, std::vector<double>* fdis = nullptr);
/// Self-similar system with the exponentially decaying dissipative term; if
/// fdis is non-null it receives the pointwise dissipative contribution to db.
RhsOut rhs_selfsim(const RadialState& s, const GasModel& model, double tau,
                   bool viscous = true, std::vector<double>* fdis = nullptr);

/// Advective and viscous stability limits combined.
double suggest_dt(const RadialState& s, const SimConfig& cfg);

/// One SSP-RK3 step in place, including the far-field sponge.
void step(RadialState& s, double dt, const SimConfig& cfg);

struct DiagnosticsRecord {
    double time = 0.0;
    double sup_ptb_q = 0.0;   ///< sup |Q - X_hat Q_bar| (self-similar + profile)
    double sup_ptb_u = 0.0;
    double e_k = 0.0;         ///< weighted energy surrogate
    double min_q_env = 0.0;   ///< min field_a <r/R0>^{lambda-1}
    double max_q = 0.0;
    double fdis_sup = 0.0;    ///< sup |dissipative term| (viscous accel, Eulerian)
    double rho_origin = 0.0;  ///< (alpha field_a(0))^{1/alpha}
};

struct DiagnosticsSeries {
    std::vector<DiagnosticsRecord> records;
    std::string termination;  ///< "time-end", "max-density", or "min-dt"
    Frame frame = Frame::selfsim;
    GasModel model;
    std::size_t n_cells = 0;
    double cfl = 0.0;
    RadialState final_state;
};

DiagnosticsSeries run(const SimConfig& cfg, RadialState initial,
                      const ProfileTable* profile = nullptr);

/// Diagnostics CSV with a reproducibility header and a final "# reason=" line.
void save_diagnostics(const DiagnosticsSeries& series, const std::string& path);

struct PerturbationRecord {
    double sup_q = 0.0;
    double sup_u = 0.0;
    double weighted_grad_sup = 0.0;  ///< sup <r/R0>^lambda (|dQ~| + |dQ|)
    double env_lo = 0.0;             ///< min Q <r/R0>^{lambda-1}
    double env_hi = 0.0;             ///< max Q <r/R0>^{lambda-1}
};

PerturbationRecord perturbation_diagnostics(const RadialState& s,
                                            const ProfileTable& profile,
                                            const CutoffSet& cutoffs,
                                            double tau);

/// Radial quadrature of (|d^K a|^2 + |d^K b|^2) phi^K 4 pi r^2 dr
/// (trapezoidal; K-th derivatives by repeated 4th-order differencing).
double weighted_energy(const RadialState& s, const CutoffSet& cutoffs,
                       int k_surrogate);

struct FitReport {
    double rho_slope = std::numeric_limits<double>::quiet_NaN();
    double rho_slope_target = std::numeric_limits<double>::quiet_NaN();
    double t_eff = std::numeric_limits<double>::quiet_NaN();
    double decades = 0.0;  ///< decades of (t_eff - t) covered by the fit
    double fdis_rate = std::numeric_limits<double>::quiet_NaN();
    double fdis_rate_target = std::numeric_limits<double>::quiet_NaN();
    double ptb_rate = std::numeric_limits<double>::quiet_NaN();
};

/// Eulerian: joint (T_eff, slope) fit of log rho(t,0) vs log(T_eff - t);
/// self-similar: rate fits of log ||F_dis|| and log sup|Q~| vs tau.
FitReport fit_exponents(const DiagnosticsSeries& series, const GasModel& model,
                        Frame frame);

/// Samplers for initial states.
RadialState state_from_profile(const ProfileTable& profile, Frame frame,
                               double time0, std::size_t n, double r_max);
RadialState state_from_initial_data(const RadialInitialData& data, double alpha);

}  // namespace implab
