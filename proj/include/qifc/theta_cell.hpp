#pragma once

#include <cmath>
#include <vector>

#include "qifc/network.hpp"
#include "qifc/params.hpp"

namespace qifc {

// Tangent half-angle form of a single self-coupled cell. Voltage maps to
// theta = 2 atan(V); the cell fires when theta crosses the threshold from
// below (default pi, i.e. V -> infinity), the gate jumps, and theta wraps.
inline double theta_transform(double v) { return 2.0 * std::atan(v); }
inline double theta_inverse(double theta) { return std::tan(0.5 * theta); }

inline double theta_rhs(double theta, double total_input) {
    const double c = std::cos(theta);
    return 1.0 - c + (1.0 + c) * total_input;
}

struct ThetaCellParams {
    double eta = 0.0;
    double J = 0.0;
    double tau_s = 0.3;
    JumpConvention jump = JumpConvention::literal;
    double theta_threshold = std::numbers::pi;  // pi/2 reproduces the
                                                // finite-voltage event variant
    // calibrated per-spike gate increment; 0 derives it from the convention
    double jump_amplitude = 0.0;
    double kappa() const {
        if (jump_amplitude > 0.0) return jump_amplitude;
        return jump == JumpConvention::meanfield ? 1.0 / tau_s : 1.0;
    }
};

struct ThetaCellState {
    double t = 0.0;
    double theta = 0.0;
    double s = 0.0;
    std::vector<double> spike_times;
};

struct CellTrace {
    std::vector<double> t, v, s, K;
};

class ThetaCell {
  public:
    ThetaCell(ThetaCellParams p, ForcingParams f) : p_(p), f_(f) {
        state_.theta = theta_transform(rest_voltage_guess());
    }

    ThetaCellState& state() { return state_; }
    const ThetaCellState& state() const { return state_; }
    const ThetaCellParams& params() const { return p_; }
    const ForcingParams& forcing() const { return f_; }

    void set_drive_scale(double sc) { drive_scale_ = sc; }

    void step(double dt, NetIntegrator method = NetIntegrator::heun);

    // record_dt <= 0 disables trace recording
    CellTrace integrate(double t1, double dt, double record_dt,
                        NetIntegrator method = NetIntegrator::heun);

    // relax with frozen drive (I = 0), then rewind clock and clear spikes
    void spin_up(double duration, double dt);

    double rest_voltage_guess() const {
        return p_.eta < 0 ? -std::sqrt(-p_.eta) : 0.0;
    }

  private:
    double input_at(double t, double s) const {
        return p_.eta + drive_scale_ * f_.A * std::sin(f_.eps * t) + p_.J * s;
    }

    ThetaCellParams p_;
    ForcingParams f_;
    ThetaCellState state_;
    double drive_scale_ = 1.0;
};

}  // namespace qifc
