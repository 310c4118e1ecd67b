#include "qifc/theta_cell.hpp"

#include <numbers>
#include <stdexcept>

namespace qifc {

void ThetaCell::step(double dt, NetIntegrator method) {
    const double t = state_.t;
    const double x = dt / p_.tau_s;
    const double decay =
        method == NetIntegrator::euler ? 1.0 - x : 1.0 - x + 0.5 * x * x;

    const double th0 = state_.theta;
    double th1;
    if (method == NetIntegrator::euler) {
        th1 = th0 + dt * theta_rhs(th0, input_at(t, state_.s));
    } else {
        const double k1 = theta_rhs(th0, input_at(t, state_.s));
        const double k2 =
            theta_rhs(th0 + dt * k1, input_at(t + dt, state_.s * decay));
        th1 = th0 + 0.5 * dt * (k1 + k2);
    }
    state_.s *= decay;

    const double thr = p_.theta_threshold;
    if (th0 < thr && th1 >= thr) {
        const double frac = (thr - th0) / (th1 - th0);
        state_.spike_times.push_back(t + frac * dt);
        state_.s += p_.kappa();
    }
    // wrap at pi: V -> +infinity reappears at -infinity
    if (th1 >= std::numbers::pi) th1 -= 2.0 * std::numbers::pi;
    state_.theta = th1;
    state_.t = t + dt;
}

CellTrace ThetaCell::integrate(double t1, double dt, double record_dt,
                               NetIntegrator method) {
    CellTrace trace;
    const double t0 = state_.t;
    if (t1 <= t0) return trace;
    const long nsteps = std::max(1L, std::lround((t1 - t0) / dt));
    const double h = (t1 - t0) / static_cast<double>(nsteps);
    const long every =
        record_dt > 0 ? std::max(1L, std::lround(record_dt / h)) : 0;
    auto record = [&]() {
        trace.t.push_back(state_.t);
        trace.v.push_back(theta_inverse(state_.theta));
        trace.s.push_back(state_.s);
        trace.K.push_back(p_.eta +
                          drive_scale_ * f_.A * std::sin(f_.eps * state_.t));
    };
    if (every) record();
    for (long k = 0; k < nsteps; ++k) {
        step(h, method);
        if (!std::isfinite(state_.theta))
            throw IntegrationError("nonfinite theta", state_.t, 0);
        if (every && ((k + 1) % every == 0 || k + 1 == nsteps)) record();
    }
    return trace;
}

void ThetaCell::spin_up(double duration, double dt) {
    const double saved = drive_scale_;
    drive_scale_ = 0.0;
    const long nsteps = std::max(1L, std::lround(duration / dt));
    for (long k = 0; k < nsteps; ++k) step(duration / nsteps);
    drive_scale_ = saved;
    state_.t = 0.0;
    state_.spike_times.clear();
}

}  // namespace qifc
