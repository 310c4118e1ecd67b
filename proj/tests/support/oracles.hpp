#pragma once

// Brute-force reference computations kept independent of the library's
// solution paths; tests compare the two routes.

#include <cmath>
#include <functional>
#include <vector>

namespace qifc::oracles {

// dense uniform-grid sign-change count of f on [lo, hi]
inline int sign_changes(const std::function<double(double)>& f, double lo,
                        double hi, long n) {
    int changes = 0;
    double prev = f(lo);
    for (long k = 1; k < n; ++k) {
        const double x = lo + (hi - lo) * static_cast<double>(k) /
                                  static_cast<double>(n - 1);
        const double cur = f(x);
        if ((prev < 0) != (cur < 0)) ++changes;
        prev = cur;
    }
    return changes;
}

// central-difference Jacobian of a planar vector field
inline std::array<double, 4> fd_jacobian2(
    const std::function<std::array<double, 2>(double, double)>& f, double x,
    double y, double h) {
    const auto fxp = f(x + h, y), fxm = f(x - h, y);
    const auto fyp = f(x, y + h), fym = f(x, y - h);
    return {(fxp[0] - fxm[0]) / (2 * h), (fyp[0] - fym[0]) / (2 * h),
            (fxp[1] - fxm[1]) / (2 * h), (fyp[1] - fym[1]) / (2 * h)};
}

// eigenvalues of [[a,b],[c,d]] returned as (re1, im1, re2, im2)
inline std::array<double, 4> eig2(double a, double b, double c, double d) {
    const double tr = a + d;
    const double det = a * d - b * c;
    const double disc = 0.25 * tr * tr - det;
    if (disc >= 0) {
        const double root = std::sqrt(disc);
        return {0.5 * tr + root, 0.0, 0.5 * tr - root, 0.0};
    }
    const double im = std::sqrt(-disc);
    return {0.5 * tr, im, 0.5 * tr, -im};
}

}  // namespace qifc::oracles
