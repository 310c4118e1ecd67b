#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qifc/util.hpp"

namespace qifc {

// rhs(t, y, dydt); y and dydt have the same fixed dimension.
using OdeRhs = std::function<void(double, std::span<const double>, std::span<double>)>;

// optional per-step validator; may throw IntegrationError (e.g. rate positivity)
using StepValidator = std::function<void(double, std::span<const double>)>;

enum class OdeMethod { rk4, heun, rkf45 };

struct Trajectory {
    std::vector<double> t;
    std::vector<double> y;  // row-major, dim columns
    std::size_t dim = 0;

    std::size_t rows() const { return t.size(); }
    std::span<const double> row(std::size_t i) const {
        return {y.data() + i * dim, dim};
    }
    std::vector<double> column(std::size_t j) const {
        std::vector<double> c(rows());
        for (std::size_t i = 0; i < rows(); ++i) c[i] = y[i * dim + j];
        return c;
    }
};

struct AdaptiveStats {
    long accepted = 0;
    long rejected = 0;
};

struct IntegrateOptions {
    OdeMethod method = OdeMethod::rk4;
    double dt = 1e-3;          // fixed-step size (rk4/heun); initial guess for rkf45
    double rtol = 1e-8;        // rkf45
    double atol = 1e-10;       // rkf45
    double min_dt = 1e-14;     // rkf45 underflow guard
    StepValidator validator;   // optional
};

namespace detail {

inline void check_finite(double t, std::span<const double> y) {
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!std::isfinite(y[i]))
            throw IntegrationError("nonfinite state", t, static_cast<long>(i));
}

}  // namespace detail

// Integrate y' = f(t, y) over [t0, t1], producing dense output at the evenly
// spaced user grid t0 + k*out_dt (the final point t1 is always included).
// For rkf45 the grid values are cubic-Hermite interpolants of accepted steps.
Trajectory integrate_ode(const OdeRhs& rhs, std::span<const double> y0,
                         double t0, double t1, double out_dt,
                         const IntegrateOptions& opts,
                         AdaptiveStats* stats = nullptr);

// single fixed step, exposed for reuse by other modules
void rk4_step(const OdeRhs& rhs, double t, double dt, std::span<double> y);
void heun_step(const OdeRhs& rhs, double t, double dt, std::span<double> y);

}  // namespace qifc
