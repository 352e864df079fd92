#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace implab {

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Scalar parameters of the degenerate-viscosity gas model together with the
/// self-similar scaling exponent and the derived dissipation constants.
struct GasModel {
    double gamma = 0.0;   ///< adiabatic exponent, > 1
    double alpha = 0.0;   ///< (gamma - 1) / 2
    double delta = 0.0;   ///< viscosity exponent, >= 0
    double a1 = 0.0;      ///< shear viscosity constant, > 0
    double a2 = 0.0;      ///< bulk viscosity constant, 2 a1 + 3 a2 >= 0
    double lambda = 0.0;  ///< self-similar scaling exponent, > 1

    double c_dis = 0.0;
    double delta_dis = 0.0;

    static GasModel make(double gamma, double delta, double lambda,
                         double a1 = 1.0, double a2 = 0.0);

    bool valid() const {
        return gamma > 1.0 && std::abs(alpha - 0.5 * (gamma - 1.0)) < 1e-15 &&
               delta >= 0.0 && a1 > 0.0 && 2.0 * a1 + 3.0 * a2 >= 0.0 && lambda > 1.0;
    }
};

double alpha_of(double gamma);
double lambda_star(double gamma);
double delta_star(double gamma);

struct DissipationConstants {
    double c_dis;
    double delta_dis;
};
DissipationConstants dissipation_constants(double gamma, double delta, double lambda);

}  // namespace implab
