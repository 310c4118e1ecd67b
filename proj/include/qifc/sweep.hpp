#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qifc/integrate.hpp"
#include "qifc/manifold.hpp"
#include "qifc/network.hpp"
#include "qifc/theta_cell.hpp"
#include "qifc/util.hpp"

namespace qifc {

enum class SheetSide { down, up };

inline std::string to_string(SheetSide s) { return s == SheetSide::down ? "down" : "up"; }

struct OrbitFate {
    SheetSide start_sheet = SheetSide::down;
    SheetSide end_sheet = SheetSide::down;
    double canard_time = 0.0;  // time within the repelling-sheet tube
    bool burst = false;        // crossed to the opposite sheet

    std::string label() const {
        return to_string(start_sheet) + "-" + to_string(end_sheet);
    }
};

// ---- mean-field orbit classification ---------------------------------------

struct MfClassifyOptions {
    double rho = 0.0;       // tube radius in K; 0 -> 0.05 * |eta_+ - eta_-|
    double settle_time = 0.0;  // landing must persist this long; 0 -> 2% of window
    // fast-jump exclusion for the canard clock: motion inside the repelling
    // zone counts as canard when within the tube or slower than this |dv/dt|;
    // 0 -> 20 * (repelling v-width) / window length
    double slow_speed = 0.0;
};

// Trajectory columns are the (r, v, s, K, Q) layout of meanfield.hpp.
// start/end sheets come from v against the fold voltages. canard_time is the
// dwell inside the repelling zone while tracking the slow manifold; near the
// folds the true orbit lags the eps = 0 sheet by O(eps^(2/3)), so the rho
// tube is complemented by a slow-speed test that still rejects fast jumps.
OrbitFate classify_meanfield_orbit(const Trajectory& traj, std::size_t first_row,
                                   const ManifoldGeometry& geo,
                                   const MfClassifyOptions& opts = {});

// per forcing period, for multi-period fate sequences
std::vector<OrbitFate> classify_meanfield_periods(const Trajectory& traj,
                                                  const ManifoldGeometry& geo,
                                                  double period,
                                                  const MfClassifyOptions& opts = {});

// ---- network orbit classification ------------------------------------------

struct NetClassifySpec {
    // voltage-landing mode (dense nets): sheet from smoothed winsorized mean
    double v_up_landing = 0.0;
    double v_down_landing = 0.0;
    bool use_voltage = true;
    // rate mode (sparse nets and generally): burst when the binned rate
    // exceeds r_burst for at least t_dwell
    double r_burst = 0.0;
    double t_dwell = 0.0;
    bool use_rate = false;
    double smooth_window = 1.0;
};

// defaults per the burst-classifier conventions: r_burst = 10x baseline,
// t_dwell = 2 tau_s
NetClassifySpec default_net_classify_spec(double baseline_rate, double tau_s);

OrbitFate classify_network_orbit(const NetTrajectory& traj, TimeWindow eval,
                                 const NetClassifySpec& spec);

// ---- single-cell classification --------------------------------------------

struct CellClassifyResult {
    OrbitFate fate;
    long spike_count = 0;
};

// Down-start cells: burst iff the cell fires in the window. Up-start cells:
// burst iff firing pauses for longer than max_quiet_gap.
CellClassifyResult classify_cell_orbit(const CellTrace& trace,
                                       const std::vector<double>& spike_times,
                                       TimeWindow eval, SheetSide start,
                                       double max_quiet_gap, double rho);

// ---- threshold bisection -----------------------------------------------------

using FateEvaluator = std::function<OrbitFate(double A)>;

struct ThresholdResult {
    double A_star = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double tol = 0.0;
    OrbitFate fate_lo;
    OrbitFate fate_hi;
    int evaluations = 0;
};

// Bisects the burst flag over [A_lo, A_hi]; throws if the endpoint fates agree.
ThresholdResult threshold_bisect(const FateEvaluator& eval, double A_lo, double A_hi,
                                 double tol_A);

// ---- branch tracing ----------------------------------------------------------

enum class BranchMeasure { inv_snorm, delta_r };

struct BranchSample {
    double A = 0.0;
    double measure = 0.0;
    OrbitFate fate;
    int depth = 0;  // 0 = coarse grid
};

struct SweepBranch {
    std::vector<BranchSample> samples;  // ascending in A
    BranchMeasure measure = BranchMeasure::inv_snorm;
};

using BranchEvaluator = std::function<BranchSample(double A)>;

// Coarse grid plus dyadic refinement wherever the measure jump between
// neighbours exceeds 5x the median jump.
SweepBranch branch_trace(const BranchEvaluator& eval, double A_lo, double A_hi,
                         int n_coarse, int refine_depth, BranchMeasure measure);

// smallest A-interval containing the requested fraction of total variation
struct VariationWindow {
    double a_lo = 0.0, a_hi = 0.0;
    double fraction = 0.0;
    double relative_width = 0.0;
};
VariationWindow concentration_window(const SweepBranch& branch, double fraction);

// ---- burst measures ----------------------------------------------------------

struct BurstMeasures {
    double snorm = 0.0;      // trapezoid integral of s over the window
    double inv_snorm = 0.0;  // +inf sentinel when snorm == 0
    double delta_r = 0.0;    // max r - min r over the window
};

BurstMeasures burst_measures(const std::vector<double>& t,
                             const std::vector<double>& s,
                             const std::vector<double>& r, TimeWindow window);

// ---- route taxonomy ----------------------------------------------------------

struct RouteSample {
    double A = 0.0;
    OrbitFate first_period;
    bool start_matches = true;    // post-transient orbit still starts on its sheet
    bool sustained_burst = false; // burst fate recurs in the following period
};

struct RouteBranchInput {
    SheetSide start = SheetSide::down;
    bool exists = false;  // a start point on this sheet exists at K = eta_bar
    std::vector<RouteSample> samples;  // ascending in A
    std::optional<ThresholdResult> threshold;
};

struct BranchReport {
    bool exists = false;
    bool continuous_route = false;
    std::optional<ThresholdResult> threshold;
    bool interrupted = false;  // branch collapses onto the other family
    std::optional<double> termination_A;
};

struct RouteReport {
    ScenarioCase scenario = ScenarioCase::I;
    BranchReport down_branch;
    BranchReport up_branch;
    std::vector<std::string> anomalies;  // inconsistent fates are flagged, not hidden
};

RouteReport route_classify(ScenarioCase scenario, const RouteBranchInput& down,
                           const RouteBranchInput& up);

}  // namespace qifc
