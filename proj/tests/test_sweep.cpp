#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qifc/mf_routes.hpp"
#include "qifc/sweep.hpp"

using namespace qifc;

namespace {

MfSystem fig4_system(double eta_bar) {
    GeneralMfParams p;
    p.delta = 1.0;
    p.J = 15.0;
    p.tau_s = 0.02;
    p.eta_bar = eta_bar;
    return make_mf_system(p, 0.05);
}

}  // namespace

TEST_CASE("threshold_bisect on a synthetic classifier") {
    auto fate_at = [](double A) {
        OrbitFate f;
        f.start_sheet = SheetSide::down;
        f.burst = A > std::numbers::pi;
        f.end_sheet = f.burst ? SheetSide::up : SheetSide::down;
        return f;
    };
    const auto th = threshold_bisect(fate_at, 2.0, 4.0, 1e-9);
    CHECK(th.A_star == doctest::Approx(std::numbers::pi).epsilon(1e-8));
    CHECK(th.bracket_hi - th.bracket_lo <= 1e-9);
    CHECK_FALSE(th.fate_lo.burst);
    CHECK(th.fate_hi.burst);
    // equal fates at the endpoints are a bracket error
    CHECK_THROWS_AS(threshold_bisect(fate_at, 4.0, 5.0, 1e-6),
                    std::runtime_error);
}

TEST_CASE("no-forcing orbit stays put: down-down with zero canard time") {
    const MfSystem sys = fig4_system(-15.1);
    const auto fate = mf_orbit_fate(sys, 0.0, SheetSide::down);
    CHECK(fate.label() == "down-down");
    CHECK(fate.canard_time == 0.0);
    CHECK_FALSE(fate.burst);
}

TEST_CASE("bistable-regime mean field: down-down vs down-up across threshold") {
    const MfSystem sys = fig4_system(-15.1);
    const auto th = threshold_bisect(mf_fate_evaluator(sys, SheetSide::down),
                                     11.5, 12.5, 1e-8);
    CHECK(th.fate_lo.label() == "down-down");
    CHECK(th.fate_hi.label() == "down-up");
    CHECK(th.bracket_hi - th.bracket_lo <= 1e-8);
    // canard segments grow toward the threshold
    const auto far_lo = mf_orbit_fate(sys, 11.5, SheetSide::down);
    const auto far_hi = mf_orbit_fate(sys, 12.5, SheetSide::down);
    CHECK(th.fate_lo.canard_time > far_lo.canard_time);
    CHECK(th.fate_hi.canard_time > far_hi.canard_time);
    // local monotonicity around the threshold
    CHECK_FALSE(
        mf_orbit_fate(sys, th.A_star - 1e-7, SheetSide::down).burst);
    CHECK(mf_orbit_fate(sys, th.A_star + 1e-7, SheetSide::down).burst);
}

TEST_CASE("tonic-regime mean field: up-up vs up-down across threshold") {
    const MfSystem sys = fig4_system(5.0);
    const auto th = threshold_bisect(mf_fate_evaluator(sys, SheetSide::up),
                                     10.4, 11.2, 1e-8);
    CHECK(th.fate_lo.label() == "up-up");
    CHECK(th.fate_hi.label() == "up-down");
    CHECK(th.fate_lo.canard_time > 0.0);
    CHECK(th.fate_hi.canard_time > 0.0);
}

TEST_CASE("burst measures") {
    SUBCASE("constant gate integrates to c * window") {
        std::vector<double> t, s;
        for (int i = 0; i <= 700; ++i) {
            t.push_back(0.1 * i);
            s.push_back(0.25);
        }
        const auto m = burst_measures(t, s, {}, {0.0, 70.0});
        CHECK(m.snorm == doctest::Approx(70.0 * 0.25).epsilon(1e-12));
        CHECK(m.inv_snorm == doctest::Approx(1.0 / 17.5).epsilon(1e-12));
    }
    SUBCASE("constant rate has zero delta_r; zero gate gives the inf sentinel") {
        std::vector<double> t{0, 1, 2, 3}, s{0, 0, 0, 0}, r{1.0, 1.0, 1.0, 1.0};
        const auto m = burst_measures(t, s, r, {0.0, 3.0});
        CHECK(m.delta_r == 0.0);
        CHECK(std::isinf(m.inv_snorm));
    }
    SUBCASE("window outside the span is rejected") {
        std::vector<double> t{0, 1}, s{0, 0};
        CHECK_THROWS_AS(burst_measures(t, s, {}, {0.0, 2.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("branch_trace refines where the measure jumps") {
    // synthetic near-discontinuity at A = 0.55
    int evals = 0;
    auto eval = [&](double A) {
        ++evals;
        BranchSample s;
        s.measure = A < 0.55 ? 1.0 + 0.01 * A : 10.0 + 0.01 * A;
        s.fate.burst = A >= 0.55;
        return s;
    };
    const auto branch = branch_trace(eval, 0.0, 1.0, 11, 6, BranchMeasure::delta_r);
    CHECK(static_cast<int>(branch.samples.size()) == evals);
    CHECK(std::is_sorted(branch.samples.begin(), branch.samples.end(),
                         [](const auto& a, const auto& b) { return a.A < b.A; }));
    // refinement concentrated around the jump
    double finest = 1e300;
    for (std::size_t i = 1; i < branch.samples.size(); ++i) {
        const double gap = branch.samples[i].A - branch.samples[i - 1].A;
        if (branch.samples[i - 1].A < 0.55 && branch.samples[i].A >= 0.55)
            finest = gap;
    }
    CHECK(finest <= 0.1 / 64.0 * 1.001);  // depth-6 dyadic refinement
    const auto w = concentration_window(branch, 0.9);
    CHECK(w.relative_width < 0.01);

    // collapsed range yields a single sample
    const auto single =
        branch_trace(eval, 0.3, 0.3, 5, 3, BranchMeasure::delta_r);
    CHECK(single.samples.size() == 1);
}

TEST_CASE("branch_trace is reproducible") {
    auto eval = [&](double A) {
        BranchSample s;
        s.measure = std::sin(5 * A) + (A > 0.7 ? 4.0 : 0.0);
        return s;
    };
    const auto a = branch_trace(eval, 0.0, 1.0, 9, 4, BranchMeasure::delta_r);
    const auto b = branch_trace(eval, 0.0, 1.0, 9, 4, BranchMeasure::delta_r);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].A == b.samples[i].A);
        CHECK(a.samples[i].measure == b.samples[i].measure);
    }
}

TEST_CASE("network classifier: sustained rate crossing marks a burst") {
    NetTrajectory traj;
    for (int i = 0; i <= 1000; ++i) {
        const double t = 0.1 * i;
        traj.t.push_back(t);
        traj.v_mean.push_back(-2.0);
        traj.v_mean_w.push_back(-2.0);
        traj.s_mean.push_back(0.1);
        traj.rate.push_back(t > 40.0 && t < 70.0 ? 2.0 : 0.05);
    }
    NetClassifySpec spec = default_net_classify_spec(0.05, 0.02);
    spec.smooth_window = 0.2;
    const auto burst = classify_network_orbit(traj, {0.0, 100.0}, spec);
    CHECK(burst.label() == "down-up");
    CHECK(burst.burst);

    // a blip shorter than the dwell does not count
    NetTrajectory quiet = traj;
    for (std::size_t i = 0; i < quiet.t.size(); ++i)
        quiet.rate[i] = (quiet.t[i] > 40.0 && quiet.t[i] < 40.02) ? 2.0 : 0.05;
    spec.t_dwell = 1.0;
    spec.smooth_window = 0.01;
    const auto calm = classify_network_orbit(quiet, {0.0, 100.0}, spec);
    CHECK_FALSE(calm.burst);
}

TEST_CASE("cell classifier: spikes decide down-start fates, gaps decide up-start") {
    CellTrace trace;
    for (int i = 0; i <= 100; ++i) {
        trace.t.push_back(i * 1.0);
        trace.v.push_back(-0.5);
        trace.s.push_back(0.0);
        trace.K.push_back(-0.2);
    }
    SUBCASE("down start, no spikes: down-down") {
        const auto res = classify_cell_orbit(trace, {}, {0.0, 100.0},
                                             SheetSide::down, 25.0, 0.02);
        CHECK(res.fate.label() == "down-down");
        CHECK(res.spike_count == 0);
    }
    SUBCASE("down start with spikes: down-up") {
        const auto res = classify_cell_orbit(trace, {50.0, 51.0, 52.0},
                                             {0.0, 100.0}, SheetSide::down, 25.0,
                                             0.02);
        CHECK(res.fate.label() == "down-up");
    }
    SUBCASE("up start, regular firing: up-up") {
        std::vector<double> spikes;
        for (double t = 1.0; t < 100.0; t += 3.0) spikes.push_back(t);
        const auto res = classify_cell_orbit(trace, spikes, {0.0, 100.0},
                                             SheetSide::up, 25.0, 0.02);
        CHECK(res.fate.label() == "up-up");
    }
    SUBCASE("up start with a long quiet gap: up-down") {
        std::vector<double> spikes;
        for (double t = 1.0; t < 30.0; t += 3.0) spikes.push_back(t);
        for (double t = 70.0; t < 100.0; t += 3.0) spikes.push_back(t);
        const auto res = classify_cell_orbit(trace, spikes, {0.0, 100.0},
                                             SheetSide::up, 25.0, 0.02);
        CHECK(res.fate.label() == "up-down");
    }
}

TEST_CASE("route taxonomy across the four scenarios") {
    // runtime-friendly tolerances; the acceptance suite runs the full set
    struct Expect {
        double eta_bar;
        ScenarioCase scenario;
        bool down_exists, up_exists;
        bool interrupted_secondary;
    };
    const Expect cases[] = {
        {-6.5, ScenarioCase::I, true, false, false},
        {-5.0, ScenarioCase::II, true, true, true},
        {-3.5, ScenarioCase::III, true, true, true},
        {-2.0, ScenarioCase::IV, false, true, false},
    };
    for (const auto& c : cases) {
        CAPTURE(c.eta_bar);
        const MfSystem sys = fig4_system(c.eta_bar);
        CHECK(scenario_classify(c.eta_bar, sys.geo).scenario == c.scenario);
        const auto report = analyze_mf_routes(sys, 1e-4, 7);
        CHECK(report.scenario == c.scenario);
        CHECK(report.down_branch.exists == c.down_exists);
        CHECK(report.up_branch.exists == c.up_exists);
        const bool primary_down =
            c.scenario == ScenarioCase::I || c.scenario == ScenarioCase::II;
        const auto& primary = primary_down ? report.down_branch : report.up_branch;
        const auto& secondary = primary_down ? report.up_branch : report.down_branch;
        CHECK(primary.continuous_route);
        CHECK(secondary.interrupted == c.interrupted_secondary);
        if (c.interrupted_secondary) CHECK(secondary.termination_A.has_value());
        CHECK(report.anomalies.empty());
    }
}
