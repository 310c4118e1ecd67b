#include "qifc/meanfield.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qifc/sampling.hpp"

namespace qifc {

namespace {

constexpr double kPi = std::numbers::pi;

// Shared single-population kernel; multipop with p = 1 must produce
// identical derivatives, so both paths route their synaptic drive through
// the same expression (syn_v carries j_tilde*s resp. the coupling sum).
inline void population_kernel(double r, double v, double s, double syn_v,
                              double input, double delta, double gamma_tilde,
                              double c, double tau_s, double& dr, double& dv,
                              double& ds) {
    dr = delta / kPi + 2.0 * r * v + gamma_tilde * s;
    dv = v * v - c * r * r + syn_v + input;
    ds = (-s + r) / tau_s;
}

}  // namespace

void mpr_rhs(std::span<const double> y, std::span<double> dy,
             const GeneralMfParams& p, const ForcingParams& f, Convention conv) {
    const double c = conv == Convention::pi2 ? kPi * kPi : kPi;
    population_kernel(y[kIdxR], y[kIdxV], y[kIdxS], p.j_tilde() * y[kIdxS],
                      y[kIdxK], p.delta, p.gamma_tilde(), c, p.tau_s, dy[kIdxR],
                      dy[kIdxV], dy[kIdxS]);
    dy[kIdxK] = f.eps * y[kIdxQ];
    dy[kIdxQ] = -f.eps * (y[kIdxK] - f.eta_bar);
}

void sparse_heuristic_rhs(std::span<const double> y, std::span<double> dy,
                          const SparseParams& p) {
    const double sqrtM = std::sqrt(static_cast<double>(p.M));
    const double r = y[kIdxR], v = y[kIdxV], s = y[kIdxS];
    dy[kIdxR] = p.delta / kPi + 2.0 * r * v + p.J * p.delta_gamma * s / kPi;
    dy[kIdxV] = v * v + sqrtM * (y[kIdxK] + p.J * s) - (kPi * r) * (kPi * r);
    dy[kIdxS] = (-s + r) / p.tau_s;
    dy[kIdxK] = p.forcing.eps * y[kIdxQ];
    dy[kIdxQ] = -p.forcing.eps * (y[kIdxK] - p.forcing.eta_bar);
}

void multipop_rhs(std::span<const double> y, std::span<double> dy,
                  const MultiPopParams& p, Convention conv) {
    const int np = p.p;
    const std::size_t expect = 3 * static_cast<std::size_t>(np) + 2;
    if (y.size() != expect || dy.size() != expect)
        throw std::invalid_argument("multipop_rhs: state dimension mismatch");
    const double c = conv == Convention::pi2 ? kPi * kPi : kPi;
    const double K = y[3 * np], Q = y[3 * np + 1];
    for (int i = 0; i < np; ++i) {
        const double r = y[3 * i], v = y[3 * i + 1], s = y[3 * i + 2];
        double coupling = p.J_tilde[i * np] * y[kIdxS];
        for (int j = 1; j < np; ++j) coupling += p.J_tilde[i * np + j] * y[3 * j + 2];
        const double input = (i == p.forced) ? K : p.eta_bar[i];
        population_kernel(r, v, s, coupling, input, p.delta[i], p.gamma_tilde[i], c,
                          p.tau_s[i], dy[3 * i], dy[3 * i + 1], dy[3 * i + 2]);
    }
    dy[3 * np] = p.forcing.eps * Q;
    dy[3 * np + 1] = -p.forcing.eps * (K - p.forcing.eta_bar);
}

OdeRhs make_mpr_rhs(const GeneralMfParams& p, const ForcingParams& f, Convention conv) {
    return [p, f, conv](double, std::span<const double> y, std::span<double> dy) {
        mpr_rhs(y, dy, p, f, conv);
    };
}

OdeRhs make_sparse_heuristic_rhs(const SparseParams& p) {
    return [p](double, std::span<const double> y, std::span<double> dy) {
        sparse_heuristic_rhs(y, dy, p);
    };
}

OdeRhs make_multipop_rhs(const MultiPopParams& p, Convention conv) {
    return [p, conv](double, std::span<const double> y, std::span<double> dy) {
        multipop_rhs(y, dy, p, conv);
    };
}

StepValidator rate_positivity_validator(std::vector<std::size_t> rate_indices) {
    return [idx = std::move(rate_indices)](double t, std::span<const double> y) {
        for (std::size_t i : idx)
            if (!(y[i] > 0.0))
                throw IntegrationError("firing rate left the positive cone", t,
                                       static_cast<long>(i));
    };
}

MeanFieldState sheet_initial_state(const ManifoldGeometry& geo, const ForcingParams& f,
                                   Sheet sheet) {
    MeanFieldState st;
    st.K = f.eta_bar;
    st.Q = f.A;
    st.v = geo.sheet_point(f.eta_bar, sheet);
    st.r = manifold_rate(geo.psi_params, st.v);
    st.s = st.r;
    return st;
}

double default_mf_dt(double tau_s, double eps) {
    return std::min(tau_s / 20.0, 1e-3 / eps);
}

MfRun run_forced_meanfield(const OdeRhs& rhs, const ManifoldGeometry& geo,
                           const ForcingParams& f, Sheet start_sheet,
                           const IntegrateOptions& opts, double out_dt,
                           int transient_periods, int eval_periods) {
    const MeanFieldState st = sheet_initial_state(geo, f, start_sheet);
    const double y0[5] = {st.r, st.v, st.s, st.K, st.Q};
    const double T = ForcingParams_period(f);
    const double t1 = T * static_cast<double>(transient_periods + eval_periods);

    MfRun run;
    run.traj = integrate_ode(rhs, y0, 0.0, t1, out_dt, opts);
    run.eval_t0 = T * static_cast<double>(transient_periods);
    run.eval_t1 = t1;
    std::size_t i = 0;
    while (i + 1 < run.traj.rows() && run.traj.t[i] < run.eval_t0) ++i;
    run.eval_start = i;
    return run;
}

}  // namespace qifc
