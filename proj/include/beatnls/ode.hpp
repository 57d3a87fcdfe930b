#pragma once

// Dormand-Prince 5(4) with PI-free standard step control. State type must
// support +, scalar *, and a caller supplied error norm.

#include <algorithm>
#include <cmath>
#include <functional>

#include "beatnls/errors.hpp"

namespace beat {

struct OdeOptions {
    double rtol = 1e-12;
    double atol = 1e-14;
    double h0 = 0.0;  // 0: pick from interval length
    long max_steps = 2'000'000;
};

template <class State, class Rhs, class ErrNorm>
State dopri5(Rhs&& f, double t0, double t1, State y, ErrNorm&& err_norm, const OdeOptions& opt = {}) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double span = t1 - t0;
    if (span == 0.0) return y;
    const double dir = span > 0 ? 1.0 : -1.0;
    double h = opt.h0 > 0 ? opt.h0 * dir : span / 100.0;
    double t = t0;
    State k1 = f(t, y);
    long steps = 0;
    while (dir * (t1 - t) > 0) {
        if (++steps > opt.max_steps) throw ConvergenceError("dopri5: step budget exhausted");
        if (dir * (t + h - t1) > 0) h = t1 - t;
        State k2 = f(t + c2 * h, y + (h * a21) * k1);
        State k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        State k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        State k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        State k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        State y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        State k7 = f(t + h, y5);
        State e = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double err = err_norm(e, y, y5, opt.rtol, opt.atol);
        if (!std::isfinite(err)) throw ConvergenceError("dopri5: non-finite error estimate");
        if (err <= 1.0) {
            t += h;
            y = std::move(y5);
            k1 = std::move(k7);
        }
        double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= fac;
        if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(t))) throw ConvergenceError("dopri5: step size underflow");
    }
    return y;
}

}  // namespace beat
