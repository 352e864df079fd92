#pragma once

#include <optional>
#include <string>

#include "implab/gas_model.hpp"

namespace implab {

/// Admissibility report for a parameter triple (gamma, delta, lambda).
///
/// Membership of gamma in the countable exceptional set is not decidable
/// from the closed forms, so condition_p2 only checks the delta range and
/// the report carries an explanatory note.
struct RegimeReport {
    double gamma = 0.0;
    std::optional<double> delta;
    std::optional<double> lambda;
    double lambda_star = 0.0;
    double delta_star = 0.0;  // NaN when gamma is outside (1, 1 + 2/sqrt(3))
    std::optional<double> delta_dis;
    bool condition_p1 = false;
    bool condition_p2 = false;
    std::string exceptional_set = "unknown";
    std::string notes;
};

/// Upper bound of the gamma interval (1, 1 + 2/sqrt(3)) where delta_star is defined.
double gamma_upper();

RegimeReport check_regime(double gamma, std::optional<double> delta = std::nullopt,
                          std::optional<double> lambda = std::nullopt);

/// Admissibility bound for gamma in the cut-off inverse power force model
/// delta = (1/2 + b)(gamma - 1): the gamma where that line meets delta_star.
double molecule_model_threshold(double b);

}  // namespace implab
