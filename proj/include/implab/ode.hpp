#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace implab {

struct OdeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dormand--Prince 5(4) embedded pair with the standard quartic dense output.
// Small fixed-dimension states only; this project never integrates more than
// a handful of components adaptively.
template <std::size_t N>
class DormandPrince54 {
  public:
    using State = std::array<double, N>;
    using Rhs = std::function<void(double, const State&, State&)>;

    struct StepRecord {
        double s0, s1;           // accepted step interval in the independent variable
        State y0, y1;
        State k1, k3, k4, k5, k6, k7;  // stage derivatives for dense output
    };

    explicit DormandPrince54(Rhs rhs, double rtol = 1e-11, double atol = 1e-13)
        : rhs_(std::move(rhs)), rtol_(rtol), atol_(atol) {}

    // Integrates from (s, y) until stop(s, y) returns true at an accepted
    // step endpoint, the event function changes sign, or the step budget is
    // exhausted. Event roots are located by bisection on the dense output.
    // Returns true if the event fired; the event state is left in (s, y).
    struct Result {
        bool event_hit = false;
        bool stopped = false;  // stop predicate triggered
        std::vector<StepRecord> steps;
    };

    Result integrate(double& s, State& y,
                     const std::function<double(double, const State&)>& event,
                     const std::function<bool(double, const State&)>& stop,
                     double h_init = 1e-4, double h_max = 1.0,
                     std::size_t max_steps = 2000000) {
        Result res;
        double h = h_init;
        State k1;
        rhs_(s, y, k1);
        double ev_prev = event ? event(s, y) : 0.0;
        for (std::size_t n = 0; n < max_steps; ++n) {
            for (std::size_t i = 0; i < N; ++i)
                if (!std::isfinite(y[i])) throw OdeError("non-finite state");
            StepRecord rec;
            double err;
            if (!try_step(s, y, k1, h, rec, err)) {
                h *= std::max(0.2, 0.9 * std::pow(1.0 / err, 0.2));
                if (h < 1e-300) throw OdeError("step size underflow");
                continue;
            }
            // accepted
            double s_new = rec.s1;
            State y_new = rec.y1;
            if (event) {
                double ev_new = event(s_new, y_new);
                if (ev_prev != 0.0 && std::signbit(ev_new) != std::signbit(ev_prev)) {
                    // bisection on the dense output
                    double a = rec.s0, b = s_new;
                    for (int it = 0; it < 200 && (b - a) > 1e-16 * (std::abs(b) + 1.0); ++it) {
                        double mid = 0.5 * (a + b);
                        State ym = dense_eval(rec, mid);
                        double em = event(mid, ym);
                        if (em == 0.0) { a = b = mid; break; }
                        if (std::signbit(em) == std::signbit(ev_prev)) a = mid; else b = mid;
                    }
                    s = 0.5 * (a + b);
                    y = dense_eval(rec, s);
                    res.steps.push_back(rec);
                    res.event_hit = true;
                    return res;
                }
                ev_prev = ev_new;
            }
            s = s_new;
            y = y_new;
            k1 = rec.k7;  // FSAL
            res.steps.push_back(rec);
            if (stop && stop(s, y)) {
                res.stopped = true;
                return res;
            }
            double fac = 0.9 * std::pow(1.0 / std::max(err, 1e-30), 0.2);
            h = std::min(h * std::min(5.0, std::max(0.2, fac)), h_max);
        }
        throw OdeError("step budget exceeded");
    }

    // Dense-output evaluation inside an accepted step.
    static State dense_eval(const StepRecord& r, double s) {
        double h = r.s1 - r.s0;
        double th = (s - r.s0) / h;
        double th1 = 1.0 - th;
        // Hairer-Norsett-Wanner continuous extension coefficients
        State y;
        for (std::size_t i = 0; i < N; ++i) {
            double ydiff = r.y1[i] - r.y0[i];
            double bspl = h * r.k1[i] - ydiff;
            double rcont1 = r.y0[i];
            double rcont2 = ydiff;
            double rcont3 = bspl;
            double rcont4 = ydiff - h * r.k7[i] - bspl;
            double rcont5 = h * (d1 * r.k1[i] + d3 * r.k3[i] + d4 * r.k4[i] +
                                 d5 * r.k5[i] + d6 * r.k6[i] + d7 * r.k7[i]);
            y[i] = rcont1 + th * (rcont2 + th1 * (rcont3 + th * (rcont4 + th1 * rcont5)));
        }
        return y;
    }

  private:
    bool try_step(double s, const State& y, const State& k1, double& h,
                  StepRecord& rec, double& err) {
        State k2, k3, k4, k5, k6, k7, yt;
        auto axpy = [&](const std::array<double, 6>& a, int nst, State& out) {
            const State* ks[6] = {&k1, &k2, &k3, &k4, &k5, &k6};
            for (std::size_t i = 0; i < N; ++i) {
                double acc = y[i];
                for (int j = 0; j < nst; ++j) acc += h * a[j] * (*ks[j])[i];
                out[i] = acc;
            }
        };
        axpy({1.0 / 5}, 1, yt);
        rhs_(s + h / 5, yt, k2);
        axpy({3.0 / 40, 9.0 / 40}, 2, yt);
        rhs_(s + 3 * h / 10, yt, k3);
        axpy({44.0 / 45, -56.0 / 15, 32.0 / 9}, 3, yt);
        rhs_(s + 4 * h / 5, yt, k4);
        axpy({19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729}, 4, yt);
        rhs_(s + 8 * h / 9, yt, k5);
        axpy({9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656}, 5,
             yt);
        rhs_(s + h, yt, k6);
        axpy({35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}, 6,
             yt);
        rhs_(s + h, yt, k7);  // FSAL: yt is the 5th-order solution
        err = 0.0;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        for (std::size_t i = 0; i < N; ++i) {
            double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                             e6 * k6[i] + e7 * k7[i]);
            double sc = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(yt[i]));
            err = std::max(err, std::abs(ei) / sc);
        }
        if (!std::isfinite(err)) {
            err = 1e10;  // forces the caller's maximal shrink factor
            return false;
        }
        if (err > 1.0) return false;
        rec.s0 = s;
        rec.s1 = s + h;
        rec.y0 = y;
        rec.y1 = yt;
        rec.k1 = k1;
        rec.k3 = k3;
        rec.k4 = k4;
        rec.k5 = k5;
        rec.k6 = k6;
        rec.k7 = k7;
        return true;
    }

    static constexpr double d1 = -12715105075.0 / 11282082432.0;
    static constexpr double d3 = 87487479700.0 / 32700410799.0;
    static constexpr double d4 = -10690763975.0 / 1880347072.0;
    static constexpr double d5 = 701980252875.0 / 199316789632.0;
    static constexpr double d6 = -1453857185.0 / 822651844.0;
    static constexpr double d7 = 69997945.0 / 29380423.0;

    Rhs rhs_;
    double rtol_, atol_;
};

}  // namespace implab
