#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace implab {

struct RootfindError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bracketed scalar root finding: bisection with secant acceleration.
// Requires f(a) and f(b) of opposite sign. Keeps the bracket valid at
// every step, so it cannot diverge even when the secant step misbehaves.
inline double find_root(const std::function<double(double)>& f, double a, double b,
                        double xtol = 1e-14, double ftol = 0.0, int max_iter = 200) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (std::signbit(fa) == std::signbit(fb))
        throw RootfindError("find_root: bracket [" + std::to_string(a) + ", " +
                            std::to_string(b) + "] does not straddle a root");
    for (int it = 0; it < max_iter; ++it) {
        double mid = 0.5 * (a + b);
        double x = mid;
        // secant candidate, accepted only if it lands inside the bracket
        double denom = fb - fa;
        if (denom != 0.0) {
            double s = b - fb * (b - a) / denom;
            if (s > std::min(a, b) && s < std::max(a, b)) x = s;
        }
        double fx = f(x);
        if (fx == 0.0 || std::abs(b - a) < xtol * (1.0 + std::abs(x)) ||
            (ftol > 0.0 && std::abs(fx) < ftol))
            return x;
        if (std::signbit(fx) == std::signbit(fa)) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace implab
