#include "qifc/mf_routes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qifc {

MfSystem make_mf_system(const GeneralMfParams& params, double eps, Convention conv) {
    params.validate();
    MfSystem sys;
    sys.params = params;
    sys.eps = eps;
    sys.conv = conv;
    sys.geo = find_folds(PsiParams::generalized(params, conv));
    sys.opts.method = OdeMethod::rk4;
    sys.opts.dt = default_mf_dt(params.tau_s, eps);
    sys.opts.validator = rate_positivity_validator({kIdxR});
    sys.out_dt = std::max(sys.opts.dt, 2e-4 / eps);
    return sys;
}

MfOrbit run_mf_orbit(const MfSystem& sys, double A, SheetSide start,
                     int eval_periods_override) {
    ForcingParams f;
    f.A = A;
    f.eps = sys.eps;
    f.eta_bar = sys.params.eta_bar;
    const Sheet sheet = start == SheetSide::down ? Sheet::lower : Sheet::upper;
    const int eval_p =
        eval_periods_override > 0 ? eval_periods_override : sys.eval_periods;
    const double anchor = start == SheetSide::up ? 0.25 : 0.75;

    MfOrbit orb;
    orb.period = f.period();
    const MeanFieldState st = sheet_initial_state(sys.geo, f, sheet);
    const double y0[5] = {st.r, st.v, st.s, st.K, st.Q};
    const double t_eval0 = orb.period * (sys.transient_periods + anchor);
    const double t1 = t_eval0 + orb.period * eval_p;
    orb.traj = integrate_ode(make_mpr_rhs(sys.params, f, sys.conv), y0, 0.0, t1,
                             sys.out_dt, sys.opts);
    std::size_t i = 0;
    while (i + 1 < orb.traj.rows() && orb.traj.t[i] < t_eval0) ++i;
    orb.eval_start = i;
    orb.eval = {t_eval0, t1};
    return orb;
}

Trajectory slice_trajectory(const Trajectory& traj, TimeWindow window) {
    Trajectory out;
    out.dim = traj.dim;
    for (std::size_t i = 0; i < traj.rows(); ++i) {
        if (traj.t[i] < window.t0 || traj.t[i] > window.t1) continue;
        out.t.push_back(traj.t[i]);
        const auto row = traj.row(i);
        out.y.insert(out.y.end(), row.begin(), row.end());
    }
    return out;
}

OrbitFate mf_orbit_fate(const MfSystem& sys, double A, SheetSide start) {
    const MfOrbit orb = run_mf_orbit(sys, A, start);
    return classify_meanfield_orbit(orb.traj, orb.eval_start, sys.geo, sys.classify);
}

RouteSample mf_route_sample(const MfSystem& sys, double A, SheetSide start) {
    const MfOrbit orb = run_mf_orbit(sys, A, start, 2);
    const Trajectory w1 = slice_trajectory(
        orb.traj, {orb.eval.t0, orb.eval.t0 + orb.period});
    const Trajectory w2 = slice_trajectory(
        orb.traj, {orb.eval.t0 + orb.period, orb.eval.t1});
    if (w1.rows() < 3 || w2.rows() < 3)
        throw std::runtime_error("route sample produced no classifiable period");
    const OrbitFate f1 = classify_meanfield_orbit(w1, 0, sys.geo, sys.classify);
    const OrbitFate f2 = classify_meanfield_orbit(w2, 0, sys.geo, sys.classify);

    RouteSample rs;
    rs.A = A;
    rs.first_period = f1;
    rs.start_matches = f1.start_sheet == start;
    rs.sustained_burst =
        f1.burst && f2.burst && f2.start_sheet == start;
    return rs;
}

FateEvaluator mf_fate_evaluator(const MfSystem& sys, SheetSide start) {
    return [&sys, start](double A) { return mf_orbit_fate(sys, A, start); };
}

namespace {

struct BranchWindows {
    double bisect_lo, bisect_hi;   // primary threshold bracket
    double sweep_lo, sweep_hi;     // secondary sweep range
};

}  // namespace

RouteReport analyze_mf_routes(const MfSystem& sys, double bisect_tol,
                              int secondary_samples) {
    const ManifoldGeometry& geo = sys.geo;
    const double eta_bar = sys.params.eta_bar;
    const ScenarioResult sc = scenario_classify(eta_bar, geo);

    const bool down_primary =
        sc.scenario == ScenarioCase::I || sc.scenario == ScenarioCase::II;
    const double span = std::abs(geo.eta_minus - geo.eta_plus);

    auto build_branch = [&](SheetSide start, bool primary) {
        RouteBranchInput in;
        in.start = start;
        const Sheet sheet = start == SheetSide::down ? Sheet::lower : Sheet::upper;
        in.exists = geo.sheet_exists_at(eta_bar, sheet);
        if (!in.exists) return in;

        // amplitude at which the drive first reaches the sheet-terminating fold
        const double A_cross = start == SheetSide::down ? geo.eta_minus - eta_bar
                                                        : eta_bar - geo.eta_plus;
        if (primary) {
            double lo = std::max(0.25 * A_cross, A_cross - 0.3 * span);
            double hi = A_cross + 0.7 * span;
            in.threshold = threshold_bisect(mf_fate_evaluator(sys, start), lo, hi,
                                            bisect_tol);
            // recurrence probes above threshold
            const double As = in.threshold->A_star;
            for (double A : {As + std::max(10 * bisect_tol, 0.02 * As),
                             As + 0.1 * As}) {
                in.samples.push_back(mf_route_sample(sys, A, start));
            }
        } else {
            const double hi = 0.95 * A_cross + 0.35 * span;
            const double lo = 0.2 * A_cross;
            for (int i = 0; i < secondary_samples; ++i) {
                const double A =
                    lo + (hi - lo) * i / std::max(1, secondary_samples - 1);
                in.samples.push_back(mf_route_sample(sys, A, start));
            }
        }
        return in;
    };

    RouteBranchInput down = build_branch(SheetSide::down, down_primary);
    RouteBranchInput up = build_branch(SheetSide::up, !down_primary);
    return route_classify(sc.scenario, down, up);
}

CellRun run_forced_cell(const ThetaCellParams& cp, const ForcingParams& fp,
                        double dt, int transient_periods, int eval_periods,
                        double record_dt, double spin_time) {
    ThetaCell cell(cp, fp);
    cell.spin_up(spin_time, dt);
    CellRun run;
    run.period = fp.period();
    const double t1 = run.period * (transient_periods + eval_periods);
    run.trace = cell.integrate(t1, dt, record_dt);
    run.spikes = cell.state().spike_times;
    run.eval = {run.period * transient_periods, t1};
    return run;
}

}  // namespace qifc
