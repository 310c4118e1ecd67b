#pragma once

#include "qifc/meanfield.hpp"
#include "qifc/sweep.hpp"

namespace qifc {

// A forced mean-field configuration with everything fixed except the drive
// amplitude; the sweep/bisection layers vary A through these helpers.
struct MfSystem {
    GeneralMfParams params;
    double eps = 0.05;
    Convention conv = Convention::pi2;
    ManifoldGeometry geo;
    IntegrateOptions opts;
    double out_dt = 0.05;
    int transient_periods = 1;
    int eval_periods = 1;
    MfClassifyOptions classify;
};

MfSystem make_mf_system(const GeneralMfParams& params, double eps,
                        Convention conv = Convention::pi2);

struct MfOrbit {
    Trajectory traj;
    std::size_t eval_start = 0;
    TimeWindow eval;
    double period = 0.0;
};

// The evaluation window is phase-anchored on top of the transient discard:
// up-starts at phase pi/2 (drive maximum, orbit settled on the upper sheet),
// down-starts at 3pi/2. This keeps post-jump focus ringing away from the
// window boundaries.
MfOrbit run_mf_orbit(const MfSystem& sys, double A, SheetSide start,
                     int eval_periods_override = 0);

Trajectory slice_trajectory(const Trajectory& traj, TimeWindow window);

OrbitFate mf_orbit_fate(const MfSystem& sys, double A, SheetSide start);

// first-period fate plus recurrence bookkeeping (two evaluation periods)
RouteSample mf_route_sample(const MfSystem& sys, double A, SheetSide start);

FateEvaluator mf_fate_evaluator(const MfSystem& sys, SheetSide start);

// Scenario, thresholds, and branch structure for one eta_bar, with bracket
// windows derived from the fold geometry.
RouteReport analyze_mf_routes(const MfSystem& sys, double bisect_tol = 1e-6,
                              int secondary_samples = 9);

struct CellRun {
    CellTrace trace;
    std::vector<double> spikes;
    TimeWindow eval;
    double period = 0.0;
};

// Spin the cell to its unforced attractor (rest or tonic), then drive it.
CellRun run_forced_cell(const ThetaCellParams& cp, const ForcingParams& fp,
                        double dt, int transient_periods, int eval_periods,
                        double record_dt, double spin_time = 60.0);

}  // namespace qifc
