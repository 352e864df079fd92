#include "implab/regimes.hpp"

#include <cmath>
#include <limits>

#include "implab/rootfind.hpp"

namespace implab {

double alpha_of(double gamma) {
    if (gamma <= 1.0) throw DomainError("alpha_of: gamma must exceed 1");
    return 0.5 * (gamma - 1.0);
}

double gamma_upper() { return 1.0 + 2.0 / std::sqrt(3.0); }

double lambda_star(double gamma) {
    if (gamma <= 1.0) throw DomainError("lambda_star: gamma must exceed 1");
    if (gamma < 5.0 / 3.0) {
        double s = 1.0 + std::sqrt(2.0 / (gamma - 1.0));
        return 1.0 + 2.0 / (s * s);
    }
    return (3.0 * gamma - 1.0) / (2.0 + std::sqrt(3.0) * (gamma - 1.0));
}

double delta_star(double gamma) {
    if (gamma <= 1.0 || gamma >= gamma_upper())
        throw DomainError("delta_star: gamma must lie in (1, 1 + 2/sqrt(3))");
    if (gamma < 5.0 / 3.0)
        return 0.25 * (gamma + 1.0) - 0.5 * std::sqrt(2.0 * (gamma - 1.0));
    return (1.0 - (2.0 * std::sqrt(3.0) - 3.0) * gamma) / (2.0 * (3.0 - std::sqrt(3.0)));
}

DissipationConstants dissipation_constants(double gamma, double delta, double lambda) {
    if (gamma <= 1.0) throw DomainError("dissipation_constants: gamma must exceed 1");
    if (lambda <= 1.0) throw DomainError("dissipation_constants: lambda must exceed 1");
    if (delta < 0.0 || delta > 1.0)
        throw DomainError("dissipation_constants: delta must lie in [0, 1]");
    double alpha = alpha_of(gamma);
    DissipationConstants out;
    out.c_dis = std::pow(alpha, (delta - 1.0) / alpha) *
                std::pow(lambda, (1.0 - delta + alpha) / alpha);
    out.delta_dis = (1.0 - delta) * (lambda - 1.0) / alpha + (lambda - 2.0);
    return out;
}

GasModel GasModel::make(double gamma, double delta, double lambda, double a1, double a2) {
    GasModel m;
    m.gamma = gamma;
    m.alpha = alpha_of(gamma);
    m.delta = delta;
    m.a1 = a1;
    m.a2 = a2;
    m.lambda = lambda;
    if (!(a1 > 0.0) || 2.0 * a1 + 3.0 * a2 < 0.0)
        throw DomainError("GasModel: need a1 > 0 and 2 a1 + 3 a2 >= 0");
    auto d = dissipation_constants(gamma, delta, lambda);
    m.c_dis = d.c_dis;
    m.delta_dis = d.delta_dis;
    return m;
}

RegimeReport check_regime(double gamma, std::optional<double> delta,
                          std::optional<double> lambda) {
    if (gamma <= 1.0) throw DomainError("check_regime: gamma must exceed 1");
    RegimeReport rep;
    rep.gamma = gamma;
    rep.delta = delta;
    rep.lambda = lambda;
    rep.lambda_star = lambda_star(gamma);
    bool gamma_in_range = gamma < gamma_upper();
    rep.delta_star = gamma_in_range ? delta_star(gamma)
                                    : std::numeric_limits<double>::quiet_NaN();
    if (!gamma_in_range)
        rep.notes += "gamma >= 1 + 2/sqrt(3); no admissible regime; ";
    if (delta && lambda) {
        if (*lambda > 1.0 && *delta >= 0.0 && *delta < 1.0) {
            rep.delta_dis = dissipation_constants(gamma, *delta, *lambda).delta_dis;
        } else {
            rep.notes += "delta or lambda outside (P1) evaluation range; ";
        }
    }
    if (delta) {
        rep.condition_p1 = gamma_in_range && *delta > 0.0 && *delta < 0.5 &&
                           rep.delta_dis && *rep.delta_dis > 0.0;
        // gamma-membership in the exceptional set is only known to exclude
        // 7/5 and 5/3; everything else stays "unknown" by design.
        rep.condition_p2 = gamma_in_range && *delta > 0.0 && *delta < rep.delta_star;
        if (gamma == 1.4 || gamma == 5.0 / 3.0)
            rep.exceptional_set = "excluded";
        else
            rep.notes += "condition (P2) assumes gamma avoids the countable exceptional set (membership unknown); ";
    } else {
        rep.notes += "delta not supplied; condition flags not evaluated; ";
    }
    return rep;
}

double molecule_model_threshold(double b) {
    if (b < 0.0) throw DomainError("molecule_model_threshold: b must be nonnegative");
    auto f = [b](double gamma) {
        return (0.5 + b) * (gamma - 1.0) - delta_star(gamma);
    };
    double lo = 1.0 + 1e-12;
    double hi = 5.0 / 3.0 - 1e-12;
    if (std::signbit(f(lo)) == std::signbit(f(hi)))
        throw RootfindError("molecule_model_threshold: no crossing on (1, 5/3)");
    return find_root(f, lo, hi, 1e-15);
}

}  // namespace implab
