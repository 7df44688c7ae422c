#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "pmlab/error.hpp"

namespace pmlab {

// Brent's zeroin: inverse quadratic interpolation and secant steps, falling
// back to bisection whenever the interpolated step is not safely inside the bracket.
template <class F>
RootResult brent_root(F&& f, double lo, double hi, double tolerance, int max_iterations) {
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return {a, fa, 0};
    if (fb == 0.0) return {b, fb, 0};
    if ((fa > 0.0) == (fb > 0.0)) throw Error(ErrorCode::NoSignChange, "function has the same sign at both ends");

    double c = a, fc = fa;
    double d = b - a, e = d;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int iter = 1; iter <= max_iterations; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * eps * std::fabs(b) + 0.5 * tolerance;
        const double m = 0.5 * (c - b);
        if (std::fabs(m) <= tol || fb == 0.0) return {b, fb, iter};

        if (std::fabs(e) >= tol && std::fabs(fa) > std::fabs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qa = fa / fc, r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::fabs(tol * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += std::fabs(d) > tol ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
    }
    return {b, fb, max_iterations};
}

}  // namespace pmlab
