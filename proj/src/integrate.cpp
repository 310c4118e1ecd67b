#include "qifc/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qifc {

namespace {

struct Work {
    std::vector<double> k1, k2, k3, k4, k5, k6, tmp;
    void resize(std::size_t n) {
        k1.resize(n); k2.resize(n); k3.resize(n);
        k4.resize(n); k5.resize(n); k6.resize(n);
        tmp.resize(n);
    }
};

thread_local Work work;

}  // namespace

void rk4_step(const OdeRhs& rhs, double t, double dt, std::span<double> y) {
    const std::size_t n = y.size();
    work.resize(n);
    auto& k1 = work.k1;
    auto& k2 = work.k2;
    auto& k3 = work.k3;
    auto& k4 = work.k4;
    auto& tmp = work.tmp;

    rhs(t, y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    rhs(t + 0.5 * dt, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    rhs(t + 0.5 * dt, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
    rhs(t + dt, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

void heun_step(const OdeRhs& rhs, double t, double dt, std::span<double> y) {
    const std::size_t n = y.size();
    work.resize(n);
    auto& k1 = work.k1;
    auto& k2 = work.k2;
    auto& tmp = work.tmp;

    rhs(t, y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k1[i];
    rhs(t + dt, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) y[i] += 0.5 * dt * (k1[i] + k2[i]);
}

namespace {

// Fehlberg 4(5) pair.
bool rkf45_try_step(const OdeRhs& rhs, double t, double dt, std::span<double> y,
                    double rtol, double atol, double& err_ratio) {
    const std::size_t n = y.size();
    work.resize(n);
    auto& k1 = work.k1;
    auto& k2 = work.k2;
    auto& k3 = work.k3;
    auto& k4 = work.k4;
    auto& k5 = work.k5;
    auto& k6 = work.k6;
    auto& tmp = work.tmp;

    rhs(t, y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * (0.25 * k1[i]);
    rhs(t + 0.25 * dt, tmp, k2);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + dt * (3.0 / 32 * k1[i] + 9.0 / 32 * k2[i]);
    rhs(t + 3.0 / 8 * dt, tmp, k3);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + dt * (1932.0 / 2197 * k1[i] - 7200.0 / 2197 * k2[i] +
                              7296.0 / 2197 * k3[i]);
    rhs(t + 12.0 / 13 * dt, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + dt * (439.0 / 216 * k1[i] - 8.0 * k2[i] +
                              3680.0 / 513 * k3[i] - 845.0 / 4104 * k4[i]);
    rhs(t + dt, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + dt * (-8.0 / 27 * k1[i] + 2.0 * k2[i] -
                              3544.0 / 2565 * k3[i] + 1859.0 / 4104 * k4[i] -
                              11.0 / 40 * k5[i]);
    rhs(t + 0.5 * dt, tmp, k6);

    double max_ratio = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y5 = y[i] + dt * (16.0 / 135 * k1[i] + 6656.0 / 12825 * k3[i] +
                                       28561.0 / 56430 * k4[i] - 9.0 / 50 * k5[i] +
                                       2.0 / 55 * k6[i]);
        const double y4 = y[i] + dt * (25.0 / 216 * k1[i] + 1408.0 / 2565 * k3[i] +
                                       2197.0 / 4104 * k4[i] - 0.2 * k5[i]);
        const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5));
        max_ratio = std::max(max_ratio, std::abs(y5 - y4) / sc);
        tmp[i] = y5;
    }
    err_ratio = max_ratio;
    if (max_ratio <= 1.0) {
        std::copy(tmp.begin(), tmp.end(), y.begin());
        return true;
    }
    return false;
}

void hermite_eval(double t, double ta, double tb, std::span<const double> ya,
                  std::span<const double> fa, std::span<const double> yb,
                  std::span<const double> fb, std::span<double> out) {
    const double h = tb - ta;
    const double s = (t - ta) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = h00 * ya[i] + h10 * h * fa[i] + h01 * yb[i] + h11 * h * fb[i];
}

}  // namespace

Trajectory integrate_ode(const OdeRhs& rhs, std::span<const double> y0,
                         double t0, double t1, double out_dt,
                         const IntegrateOptions& opts, AdaptiveStats* stats) {
    if (t1 < t0) throw std::invalid_argument("integrate_ode: t1 < t0");
    if (out_dt <= 0) throw std::invalid_argument("integrate_ode: out_dt must be > 0");
    const std::size_t n = y0.size();

    Trajectory traj;
    traj.dim = n;
    std::vector<double> y(y0.begin(), y0.end());
    auto record = [&](double t, std::span<const double> yy) {
        traj.t.push_back(t);
        traj.y.insert(traj.y.end(), yy.begin(), yy.end());
    };
    record(t0, y);
    if (t1 == t0) return traj;

    if (opts.method == OdeMethod::rk4 || opts.method == OdeMethod::heun) {
        if (opts.dt <= 0) throw std::invalid_argument("integrate_ode: dt must be > 0");
        const long nsteps = std::max(1L, std::lround((t1 - t0) / opts.dt));
        const double dt = (t1 - t0) / static_cast<double>(nsteps);
        const long out_every =
            std::max(1L, std::lround(out_dt / dt));
        for (long k = 0; k < nsteps; ++k) {
            const double t = t0 + dt * static_cast<double>(k);
            if (opts.method == OdeMethod::rk4)
                rk4_step(rhs, t, dt, y);
            else
                heun_step(rhs, t, dt, y);
            const double tn = t0 + dt * static_cast<double>(k + 1);
            detail::check_finite(tn, y);
            if (opts.validator) opts.validator(tn, y);
            if ((k + 1) % out_every == 0 || k + 1 == nsteps) record(tn, y);
        }
        return traj;
    }

    // rkf45 with dense output on the user grid
    std::vector<double> ya(n), fa(n), fb(n), yi(n);
    double dt = opts.dt > 0 ? opts.dt : out_dt;
    double t = t0;
    double next_out = t0 + out_dt;
    rhs(t, y, fa);
    while (t < t1) {
        dt = std::min(dt, t1 - t);
        std::copy(y.begin(), y.end(), ya.begin());
        double err_ratio = 0.0;
        const bool ok = rkf45_try_step(rhs, t, dt, y, opts.rtol, opts.atol, err_ratio);
        if (!ok) {
            if (stats) stats->rejected++;
            dt *= std::max(0.1, 0.9 * std::pow(err_ratio, -0.25));
            if (dt < opts.min_dt)
                throw IntegrationError("rkf45 step-size underflow", t, -1);
            std::copy(ya.begin(), ya.end(), y.begin());
            continue;
        }
        if (stats) stats->accepted++;
        const double t_new = t + dt;
        detail::check_finite(t_new, y);
        if (opts.validator) opts.validator(t_new, y);
        rhs(t_new, y, fb);
        while (next_out <= t_new + 1e-12 * std::abs(t_new) && next_out <= t1) {
            hermite_eval(std::min(next_out, t_new), t, t_new, ya, fa, y, fb, yi);
            record(next_out, yi);
            next_out += out_dt;
        }
        t = t_new;
        std::swap(fa, fb);
        const double grow = err_ratio > 0 ? 0.9 * std::pow(err_ratio, -0.2) : 5.0;
        dt *= std::clamp(grow, 0.2, 5.0);
    }
    if (traj.t.back() < t1 - 1e-12 * std::abs(t1)) record(t1, y);
    return traj;
}

}  // namespace qifc
