#include "qifc/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "qifc/meanfield.hpp"

namespace qifc {

namespace {

SheetSide side_of(Sheet sh, double v, const ManifoldGeometry& geo) {
    if (sh == Sheet::lower) return SheetSide::down;
    if (sh == Sheet::upper) return SheetSide::up;
    // inside the repelling zone: nearest fold decides
    const double dm = std::abs(v - geo.fold_minus().v);
    const double dp = std::abs(v - geo.fold_plus().v);
    return dm <= dp ? SheetSide::down : SheetSide::up;
}

}  // namespace

OrbitFate classify_meanfield_orbit(const Trajectory& traj, std::size_t first_row,
                                   const ManifoldGeometry& geo,
                                   const MfClassifyOptions& opts) {
    if (!geo.has_folds())
        throw std::runtime_error("orbit classification requires a folded manifold");
    if (traj.rows() < first_row + 3)
        throw std::invalid_argument("trajectory too short to classify");

    const double v_minus = geo.fold_minus().v;
    const double v_plus = geo.fold_plus().v;
    const double rho =
        opts.rho > 0 ? opts.rho : 0.05 * std::abs(geo.eta_plus - geo.eta_minus);
    const double window_len = traj.t.back() - traj.t[first_row];
    const double settle =
        opts.settle_time > 0 ? opts.settle_time : 0.02 * window_len;
    const double slow_speed = opts.slow_speed > 0
                                  ? opts.slow_speed
                                  : 20.0 * (v_plus - v_minus) / window_len;

    auto sheet_at = [&](std::size_t i) {
        const double v = traj.row(i)[kIdxV];
        if (v <= v_minus) return Sheet::lower;
        if (v >= v_plus) return Sheet::upper;
        return Sheet::repelling;
    };

    OrbitFate fate;
    fate.start_sheet =
        side_of(sheet_at(first_row), traj.row(first_row)[kIdxV], geo);

    // slow-manifold dwell inside the repelling zone
    double canard = 0.0;
    for (std::size_t i = first_row; i + 1 < traj.rows(); ++i) {
        if (sheet_at(i) != Sheet::repelling) continue;
        const auto row = traj.row(i);
        const auto next = traj.row(i + 1);
        const double dt = traj.t[i + 1] - traj.t[i];
        const bool in_tube =
            std::abs(row[kIdxK] + psi(geo.psi_params, row[kIdxV])) < rho;
        const bool slow =
            dt > 0 && std::abs(next[kIdxV] - row[kIdxV]) / dt < slow_speed;
        if (in_tube || slow) canard += dt;
    }
    fate.canard_time = canard;

    // first passage: entering the repelling zone and landing persistently
    std::size_t i = first_row;
    while (i < traj.rows() && sheet_at(i) != Sheet::repelling) ++i;
    if (i == traj.rows()) {
        fate.end_sheet = fate.start_sheet;
        fate.burst = false;
        return fate;
    }
    std::optional<SheetSide> landing;
    while (i < traj.rows() && !landing) {
        while (i < traj.rows() && sheet_at(i) == Sheet::repelling) ++i;
        if (i == traj.rows()) break;
        const Sheet cand = sheet_at(i);
        const double t_land = traj.t[i];
        std::size_t j = i;
        while (j < traj.rows() && sheet_at(j) == cand) ++j;
        const double persisted =
            (j < traj.rows() ? traj.t[j] : traj.t.back()) - t_land;
        if (persisted >= settle || j == traj.rows())
            landing = side_of(cand, traj.row(i)[kIdxV], geo);
        else
            i = j;
    }
    fate.end_sheet = landing.value_or(fate.start_sheet);
    fate.burst = fate.end_sheet != fate.start_sheet;
    return fate;
}

std::vector<OrbitFate> classify_meanfield_periods(const Trajectory& traj,
                                                  const ManifoldGeometry& geo,
                                                  double period,
                                                  const MfClassifyOptions& opts) {
    std::vector<OrbitFate> fates;
    if (traj.rows() < 2) return fates;
    const double t_front = traj.t.front();
    const double span = traj.t.back() - t_front;
    const long n_periods = std::lround(span / period);
    std::size_t row = 0;
    for (long k = 0; k < n_periods; ++k) {
        const double t0 = t_front + period * static_cast<double>(k);
        const double t1 =
            std::min(t_front + period * static_cast<double>(k + 1), traj.t.back());
        if (t1 - t0 < 0.5 * period) break;
        while (row < traj.rows() && traj.t[row] < t0) ++row;
        Trajectory slice;
        slice.dim = traj.dim;
        std::size_t r = row;
        while (r < traj.rows() && traj.t[r] <= t1 + 1e-9 * period) {
            slice.t.push_back(traj.t[r]);
            auto rr = traj.row(r);
            slice.y.insert(slice.y.end(), rr.begin(), rr.end());
            ++r;
        }
        if (slice.rows() >= 3)
            fates.push_back(classify_meanfield_orbit(slice, 0, geo, opts));
    }
    return fates;
}

NetClassifySpec default_net_classify_spec(double baseline_rate, double tau_s) {
    NetClassifySpec spec;
    spec.use_voltage = false;
    spec.use_rate = true;
    spec.r_burst = 10.0 * baseline_rate;
    spec.t_dwell = 2.0 * tau_s;
    return spec;
}

OrbitFate classify_network_orbit(const NetTrajectory& traj, TimeWindow eval,
                                 const NetClassifySpec& spec) {
    if (traj.t.size() < 3) throw std::invalid_argument("trajectory too short");
    const std::vector<double> v_smooth =
        moving_average(traj.v_mean_w, traj.t, spec.smooth_window);
    const std::vector<double> r_smooth =
        moving_average(traj.rate, traj.t, spec.smooth_window);

    std::size_t i0 = 0;
    while (i0 + 1 < traj.t.size() && traj.t[i0] < eval.t0) ++i0;

    OrbitFate fate;
    if (spec.use_voltage) {
        const double mid = 0.5 * (spec.v_up_landing + spec.v_down_landing);
        fate.start_sheet = v_smooth[i0] >= mid ? SheetSide::up : SheetSide::down;
    } else {
        fate.start_sheet =
            r_smooth[i0] >= spec.r_burst ? SheetSide::up : SheetSide::down;
    }

    auto sustained = [&](auto&& pred) {
        double run_start = -1.0;
        for (std::size_t i = i0; i < traj.t.size() && traj.t[i] <= eval.t1; ++i) {
            if (pred(i)) {
                if (run_start < 0) run_start = traj.t[i];
                if (traj.t[i] - run_start >= spec.t_dwell) return true;
            } else {
                run_start = -1.0;
            }
        }
        return false;
    };

    bool crossed = false;
    if (fate.start_sheet == SheetSide::down) {
        if (spec.use_voltage)
            crossed = sustained([&](std::size_t i) {
                return v_smooth[i] >= spec.v_up_landing;
            });
        if (!crossed && spec.use_rate)
            crossed = sustained([&](std::size_t i) {
                return r_smooth[i] >= spec.r_burst;
            });
    } else {
        if (spec.use_voltage)
            crossed = sustained([&](std::size_t i) {
                return v_smooth[i] <= spec.v_down_landing;
            });
        if (!crossed && spec.use_rate)
            crossed = sustained([&](std::size_t i) {
                return r_smooth[i] <= 0.1 * spec.r_burst;
            });
    }
    fate.end_sheet = crossed ? (fate.start_sheet == SheetSide::down ? SheetSide::up
                                                                    : SheetSide::down)
                             : fate.start_sheet;
    fate.burst = crossed;
    return fate;
}

CellClassifyResult classify_cell_orbit(const CellTrace& trace,
                                       const std::vector<double>& spike_times,
                                       TimeWindow eval, SheetSide start,
                                       double max_quiet_gap, double rho) {
    CellClassifyResult res;
    res.fate.start_sheet = start;

    std::vector<double> in_window;
    for (double ts : spike_times)
        if (eval.contains(ts)) in_window.push_back(ts);
    res.spike_count = static_cast<long>(in_window.size());

    bool burst = false;
    if (start == SheetSide::down) {
        burst = !in_window.empty();
    } else {
        double max_gap = in_window.empty() ? eval.length() : in_window.front() - eval.t0;
        for (std::size_t i = 1; i < in_window.size(); ++i)
            max_gap = std::max(max_gap, in_window[i] - in_window[i - 1]);
        if (!in_window.empty())
            max_gap = std::max(max_gap, eval.t1 - in_window.back());
        burst = max_gap > max_quiet_gap;
    }
    res.fate.burst = burst;
    res.fate.end_sheet = burst ? (start == SheetSide::down ? SheetSide::up
                                                           : SheetSide::down)
                               : start;

    // canard tube: near the repelling half-parabola V = +sqrt(-K)
    double canard = 0.0;
    for (std::size_t i = 0; i + 1 < trace.t.size(); ++i) {
        if (!eval.contains(trace.t[i])) continue;
        const double v = trace.v[i], K = trace.K[i];
        if (v > 0.0 && K < 0.0 && std::abs(K + v * v) < rho)
            canard += trace.t[i + 1] - trace.t[i];
    }
    res.fate.canard_time = canard;
    return res;
}

ThresholdResult threshold_bisect(const FateEvaluator& eval, double A_lo, double A_hi,
                                 double tol_A) {
    if (!(A_lo < A_hi)) throw std::invalid_argument("need A_lo < A_hi");
    if (!(tol_A > 0)) throw std::invalid_argument("tol_A must be > 0");

    ThresholdResult res;
    res.tol = tol_A;
    res.fate_lo = eval(A_lo);
    res.fate_hi = eval(A_hi);
    res.evaluations = 2;
    if (res.fate_lo.burst == res.fate_hi.burst)
        throw std::runtime_error(
            "bracket endpoints share a fate (" + res.fate_lo.label() + " at lo, " +
            res.fate_hi.label() + " at hi); widen the bracket");

    double lo = A_lo, hi = A_hi;
    for (int it = 0; it < 200 && (hi - lo) > tol_A; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // double-precision floor
        const OrbitFate fm = eval(mid);
        res.evaluations++;
        if (fm.burst == res.fate_lo.burst) {
            lo = mid;
            res.fate_lo = fm;
        } else {
            hi = mid;
            res.fate_hi = fm;
        }
    }
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    res.A_star = 0.5 * (lo + hi);
    return res;
}

SweepBranch branch_trace(const BranchEvaluator& eval, double A_lo, double A_hi,
                         int n_coarse, int refine_depth, BranchMeasure measure) {
    SweepBranch branch;
    branch.measure = measure;

    std::map<double, BranchSample> samples;
    if (A_hi <= A_lo) {
        BranchSample s = eval(A_lo);
        s.A = A_lo;
        samples[A_lo] = s;
    } else {
        const int n = std::max(2, n_coarse);
        for (int i = 0; i < n; ++i) {
            const double A = A_lo + (A_hi - A_lo) * i / (n - 1);
            BranchSample s = eval(A);
            s.A = A;
            samples[A] = s;
        }
        for (int depth = 1; depth <= refine_depth; ++depth) {
            std::vector<double> jumps;
            std::vector<std::pair<double, double>> pairs;
            double prev_A = 0.0, prev_m = 0.0;
            bool first = true;
            for (const auto& [A, s] : samples) {
                if (!first) {
                    jumps.push_back(std::abs(s.measure - prev_m));
                    pairs.emplace_back(prev_A, A);
                }
                prev_A = A;
                prev_m = s.measure;
                first = false;
            }
            if (jumps.empty()) break;
            std::vector<double> sorted = jumps;
            std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                             sorted.end());
            const double median = sorted[sorted.size() / 2];
            bool refined = false;
            for (std::size_t k = 0; k < jumps.size(); ++k) {
                if (jumps[k] > 5.0 * median && jumps[k] > 0.0) {
                    const double mid = 0.5 * (pairs[k].first + pairs[k].second);
                    if (samples.count(mid)) continue;
                    BranchSample s = eval(mid);
                    s.A = mid;
                    s.depth = depth;
                    samples[mid] = s;
                    refined = true;
                }
            }
            if (!refined) break;
        }
    }
    for (auto& [A, s] : samples) branch.samples.push_back(s);
    return branch;
}

VariationWindow concentration_window(const SweepBranch& branch, double fraction) {
    VariationWindow w;
    const auto& s = branch.samples;
    if (s.size() < 2) return w;
    std::vector<double> cum(s.size(), 0.0);
    for (std::size_t i = 1; i < s.size(); ++i)
        cum[i] = cum[i - 1] + std::abs(s[i].measure - s[i - 1].measure);
    const double tv = cum.back();
    if (tv <= 0) return w;

    double best_width = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = s.size() - 1;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            if (cum[j] - cum[i] >= fraction * tv) {
                if (s[j].A - s[i].A < best_width) {
                    best_width = s[j].A - s[i].A;
                    bi = i;
                    bj = j;
                }
                break;
            }
        }
    }
    w.a_lo = s[bi].A;
    w.a_hi = s[bj].A;
    w.fraction = tv > 0 ? (cum[bj] - cum[bi]) / tv : 0.0;
    const double mid = 0.5 * std::abs(w.a_lo + w.a_hi);
    w.relative_width = mid > 0 ? best_width / mid : best_width;
    return w;
}

BurstMeasures burst_measures(const std::vector<double>& t,
                             const std::vector<double>& s,
                             const std::vector<double>& r, TimeWindow window) {
    if (t.size() < 2) throw std::invalid_argument("trajectory too short");
    if (window.t0 < t.front() - 1e-9 || window.t1 > t.back() + 1e-9)
        throw std::invalid_argument("measure window outside the trajectory span");

    BurstMeasures m;
    double rmin = std::numeric_limits<double>::infinity();
    double rmax = -rmin;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const double a = std::max(t[i], window.t0);
        const double b = std::min(t[i + 1], window.t1);
        if (b <= a) continue;
        // trapezoid on the clipped interval, linear interpolation at the edges
        const double h = t[i + 1] - t[i];
        auto lerp = [&](const std::vector<double>& y, double tt) {
            const double u = (tt - t[i]) / h;
            return y[i] + u * (y[i + 1] - y[i]);
        };
        m.snorm += 0.5 * (lerp(s, a) + lerp(s, b)) * (b - a);
        if (!r.empty() && window.contains(t[i])) {
            rmin = std::min(rmin, r[i]);
            rmax = std::max(rmax, r[i]);
        }
    }
    if (!r.empty() && rmax >= rmin) m.delta_r = rmax - rmin;
    m.inv_snorm = m.snorm == 0.0 ? std::numeric_limits<double>::infinity()
                                 : 1.0 / m.snorm;
    return m;
}

RouteReport route_classify(ScenarioCase scenario, const RouteBranchInput& down,
                           const RouteBranchInput& up) {
    RouteReport rep;
    rep.scenario = scenario;

    auto analyze = [&](const RouteBranchInput& in, bool is_primary) {
        BranchReport br;
        br.exists = in.exists;
        if (!in.exists) return br;
        br.threshold = in.threshold;
        if (is_primary) {
            if (in.threshold) {
                const bool ok_fates = !in.threshold->fate_lo.burst &&
                                      in.threshold->fate_hi.burst;
                // the burst must be recurrent for a genuine route to bursting
                bool sustained_past = false;
                for (const auto& sm : in.samples)
                    if (sm.A >= in.threshold->A_star && sm.sustained_burst)
                        sustained_past = true;
                br.continuous_route = ok_fates && sustained_past;
                if (!ok_fates)
                    rep.anomalies.push_back("primary branch endpoints do not bracket a burst");
                if (!sustained_past)
                    rep.anomalies.push_back("primary branch bursts are not recurrent");
            } else {
                rep.anomalies.push_back("primary branch lacks a threshold bracket");
            }
        } else {
            // interruption: alive at low A, collapsed onto the other family
            // at higher A, never a sustained burst along the way
            bool alive_low = false, collapsed = false, sustained = false;
            for (const auto& sm : in.samples) {
                if (sm.start_matches && !sm.first_period.burst && !collapsed)
                    alive_low = true;
                if (!sm.start_matches) {
                    collapsed = true;
                    if (!br.termination_A) br.termination_A = sm.A;
                }
                if (sm.sustained_burst) sustained = true;
            }
            br.interrupted = alive_low && collapsed && !sustained;
            if (sustained)
                rep.anomalies.push_back(
                    "secondary branch shows sustained bursting, contradicting the scenario");
        }
        return br;
    };

    const bool down_primary =
        scenario == ScenarioCase::I || scenario == ScenarioCase::II;
    rep.down_branch = analyze(down, down_primary);
    rep.up_branch = analyze(up, !down_primary);

    // scenario-specific existence checks
    if (scenario == ScenarioCase::I && up.exists)
        rep.anomalies.push_back("scenario I should admit no upper-sheet start");
    if (scenario == ScenarioCase::IV && down.exists)
        rep.anomalies.push_back("scenario IV should admit no lower-sheet start");
    if ((scenario == ScenarioCase::II && !rep.up_branch.interrupted) ||
        (scenario == ScenarioCase::III && !rep.down_branch.interrupted))
        rep.anomalies.push_back("expected an interrupted secondary branch");
    return rep;
}

}  // namespace qifc
