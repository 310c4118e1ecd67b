#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "qifc/manifold.hpp"
#include "qifc/meanfield.hpp"
#include "qifc/network.hpp"
#include "qifc/sampling.hpp"
#include "qifc/theta_cell.hpp"

using namespace qifc;

namespace {

QifParams cell_params(double eta, double J, double tau_s) {
    QifParams p;
    p.N = 1;
    p.J = J;
    p.tau_s = tau_s;
    p.eta_bar = eta;
    p.delta = 0.0;
    p.V_t = 100.0;
    p.V_r = -100.0;
    return p;
}

ForcingParams no_drive() {
    ForcingParams f;
    f.A = 0.0;
    f.eps = 0.05;
    return f;
}

}  // namespace

TEST_CASE("subthreshold constant input settles at the stable equilibrium") {
    // N=1, J=0, eta=-1: rest at V = -1, no spikes over [0, 100]
    DenseNetwork net = build_dense(cell_params(-1.0, 0.0, 0.1), no_drive(),
                                   EtaMode::quantile);
    NetworkSim sim(std::move(net));
    sim.state().v[0] = -0.5;
    RasterSpec spec;
    spec.record_dt = 1.0;
    const auto run = sim.integrate(100.0, 0.005, NetIntegrator::heun, spec);
    CHECK(sim.state().spike_count == 0);
    CHECK(sim.state().v[0] == doctest::Approx(-1.0).epsilon(1e-6));
    for (double r : run.traj.rate) CHECK(r == 0.0);
}

TEST_CASE("two identical neurons stay identical") {
    QifParams p = cell_params(-0.2, 6.0, 0.3);
    p.N = 2;
    DenseNetwork net = build_dense(p, no_drive(), EtaMode::quantile);
    net.eta = {0.4, 0.4};
    NetworkSim sim(std::move(net));
    sim.state().v = {0.1, 0.1};
    sim.state().s = {0.0, 0.0};
    for (int k = 0; k < 20000; ++k) sim.step(0.005, NetIntegrator::euler);
    CHECK(sim.state().v[0] == sim.state().v[1]);
    CHECK(sim.state().s[0] == sim.state().s[1]);
    CHECK(sim.state().spike_count > 0);
}

TEST_CASE("gate decay without spikes matches exp(-dt/tau) to O((dt/tau)^2)") {
    DenseNetwork net = build_dense(cell_params(-1.0, 0.0, 0.2), no_drive(),
                                   EtaMode::quantile);
    NetworkSim sim(std::move(net));
    sim.state().v[0] = -1.0;
    sim.state().s[0] = 1.0;
    const double dt = 0.01, x = dt / 0.2;
    sim.step(dt, NetIntegrator::euler);
    CHECK(std::abs(sim.state().s[0] - std::exp(-x)) < 0.6 * x * x);
    sim.state().s[0] = 1.0;
    sim.step(dt, NetIntegrator::heun);
    CHECK(std::abs(sim.state().s[0] - std::exp(-x)) < 0.2 * x * x * x);
}

TEST_CASE("literal convention: one spike raises every gate by exactly 1/N") {
    QifParams p = cell_params(5.0, 0.0, 0.3);
    p.N = 4;
    DenseNetwork net = build_dense(p, no_drive(), EtaMode::quantile,
                                   JumpConvention::literal);
    net.eta = {200.0, -1.0, -1.0, -1.0};  // only neuron 0 fires
    NetworkSim sim(std::move(net));
    sim.state().v = {99.0, -1.0, -1.0, -1.0};
    sim.state().s = {0.0, 0.0, 0.0, 0.0};
    sim.step(0.001, NetIntegrator::euler);
    REQUIRE(sim.state().spike_count == 1);
    const double decay = 1.0 - 0.001 / 0.3;
    for (double s : sim.state().s)
        CHECK(s == doctest::Approx(0.0 * decay + 0.25).epsilon(1e-15));
    // threshold/reset contract: V_t = 100 = -V_r
    CHECK(sim.state().v[0] == -100.0);
}

TEST_CASE("meanfield convention: one spike raises every gate by 1/(N tau_s)") {
    QifParams p = cell_params(5.0, 0.0, 0.25);
    p.N = 5;
    DenseNetwork net = build_dense(p, no_drive(), EtaMode::quantile,
                                   JumpConvention::meanfield);
    net.eta = {200.0, -1.0, -1.0, -1.0, -1.0};
    NetworkSim sim(std::move(net));
    sim.state().v = {99.5, -1.0, -1.0, -1.0, -1.0};
    sim.state().s.assign(5, 0.0);
    sim.step(0.001, NetIntegrator::euler);
    REQUIRE(sim.state().spike_count == 1);
    for (double s : sim.state().s)
        CHECK(s == doctest::Approx(1.0 / (5 * 0.25)).epsilon(1e-12));
}

TEST_CASE("spike log times are interpolated and nondecreasing") {
    QifParams p = cell_params(3.0, 0.0, 0.1);
    DenseNetwork net = build_dense(p, no_drive(), EtaMode::quantile);
    NetworkSim sim(std::move(net));
    sim.state().v[0] = 0.0;
    for (int k = 0; k < 60000; ++k) sim.step(0.001, NetIntegrator::heun);
    const auto& log = sim.state().spike_log;
    REQUIRE(log.size() >= 3);
    for (std::size_t i = 1; i < log.size(); ++i)
        CHECK(log[i].t >= log[i - 1].t);
    // interpolated times fall strictly inside a step, not on its boundary
    bool interior = false;
    for (const auto& ev : log) {
        const double frac = ev.t / 0.001 - std::floor(ev.t / 0.001);
        if (frac > 1e-6 && frac < 1.0 - 1e-6) interior = true;
    }
    CHECK(interior);
}

TEST_CASE("dense determinism: identical runs give bit-identical spike logs") {
    QifParams p;
    p.N = 50;
    p.J = 15.0;
    p.tau_s = 0.02;
    p.eta_bar = -2.0;
    p.delta = 1.0;
    p.seed = 99;
    ForcingParams f;
    f.A = 3.0;
    f.eps = 0.05;
    auto run_once = [&]() {
        NetworkSim sim(build_dense(p, f, EtaMode::quantile));
        init_on_down_state(sim, 0.05);
        for (int k = 0; k < 40000; ++k) sim.step(0.001, NetIntegrator::euler);
        return sim;
    };
    const auto a = run_once();
    const auto b = run_once();
    REQUIRE(a.state().spike_log.size() == b.state().spike_log.size());
    CHECK(a.state().spike_count > 0);
    for (std::size_t i = 0; i < a.state().spike_log.size(); ++i) {
        CHECK(a.state().spike_log[i].t == b.state().spike_log[i].t);
        CHECK(a.state().spike_log[i].neuron == b.state().spike_log[i].neuron);
    }
    CHECK(a.state().v == b.state().v);
    CHECK(a.state().s == b.state().s);
}

TEST_CASE("dense permutation equivariance on N = 8") {
    QifParams p;
    p.N = 8;
    p.J = 10.0;
    p.tau_s = 0.05;
    p.eta_bar = -1.0;
    p.delta = 0.8;
    ForcingParams f;
    f.A = 1.5;
    f.eps = 0.05;

    const std::array<int, 8> perm{3, 7, 1, 0, 6, 2, 5, 4};
    const auto etas = sample_cauchy_quantile(p.eta_bar, p.delta, 8);
    std::vector<double> v0{-1.0, -0.5, 0.3, -2.0, 0.9, -1.4, 0.1, -0.7};

    DenseNetwork na = build_dense(p, f, EtaMode::quantile);
    na.eta = etas;
    DenseNetwork nb = na;
    for (int i = 0; i < 8; ++i) nb.eta[perm[i]] = na.eta[i];

    NetworkSim sa(std::move(na)), sb(std::move(nb));
    for (int i = 0; i < 8; ++i) {
        sa.state().v[i] = v0[i];
        sb.state().v[perm[i]] = v0[i];
    }
    // identical initial gates: every gate receives the same dense jumps
    sa.state().s.assign(8, 0.0);
    sb.state().s.assign(8, 0.0);

    for (int k = 0; k < 30000; ++k) {
        sa.step(0.002, NetIntegrator::heun);
        sb.step(0.002, NetIntegrator::heun);
    }
    CHECK(sa.state().spike_count > 0);
    for (int i = 0; i < 8; ++i) {
        CHECK(sa.state().v[i] == sb.state().v[perm[i]]);
        CHECK(sa.state().s[i] == sb.state().s[perm[i]]);
    }
    // spike logs match under relabeling
    REQUIRE(sa.state().spike_log.size() == sb.state().spike_log.size());
    std::set<std::pair<double, int>> ea, eb;
    for (const auto& ev : sa.state().spike_log)
        ea.emplace(ev.t, perm[ev.neuron]);
    for (const auto& ev : sb.state().spike_log) eb.emplace(ev.t, ev.neuron);
    CHECK(ea == eb);
}

TEST_CASE("synaptic gates stay nonnegative") {
    QifParams p;
    p.N = 20;
    p.J = 12.0;
    p.tau_s = 0.02;
    p.eta_bar = 0.5;
    p.delta = 0.5;
    ForcingParams f;
    f.A = 2.0;
    f.eps = 0.1;
    NetworkSim sim(build_dense(p, f, EtaMode::quantile));
    sim.state().s.assign(20, 0.0);
    for (int k = 0; k < 50000; ++k) {
        sim.step(0.001, NetIntegrator::euler);
        if (k % 5000 == 0)
            for (double s : sim.state().s) CHECK(s >= 0.0);
    }
}

TEST_CASE("sparse connectivity construction") {
    SparseParams sp;
    sp.N = 400;
    sp.M = 40;
    sp.J = 1.0;
    sp.tau_s = 0.015;
    sp.eta_bar = -0.5;
    sp.delta = 1e-4;
    sp.seed = 7;

    SUBCASE("zero-width degree distribution pins gamma_i = M") {
        sp.delta_gamma = 0.0;
        const auto conn = build_sparse_connectivity(sp);
        for (auto d : conn.degree) CHECK(d == 40);
    }
    SUBCASE("rows have distinct entries in range; degrees within [0, 2M]") {
        sp.delta_gamma = 0.3;
        const auto conn = build_sparse_connectivity(sp);
        for (long i = 0; i < sp.N; ++i) {
            const auto& row = conn.pre[i];
            CHECK(static_cast<long>(row.size()) == conn.degree[i]);
            CHECK(conn.degree[i] >= 0);
            CHECK(conn.degree[i] <= 2 * sp.M);
            std::set<std::int32_t> uniq(row.begin(), row.end());
            CHECK(uniq.size() == row.size());
            for (auto j : row) {
                CHECK(j >= 0);
                CHECK(j < sp.N);
            }
        }
    }
    SUBCASE("self-connections can be forbidden") {
        sp.delta_gamma = 0.3;
        SparseBuildOptions opts;
        opts.allow_self_connections = false;
        const auto conn = build_sparse_connectivity(sp, opts);
        for (long i = 0; i < sp.N; ++i)
            for (auto j : conn.pre[i]) CHECK(j != i);
    }
    SUBCASE("sample mean of degrees is close to M") {
        SparseParams big = sp;
        big.N = 10000;
        big.M = 1000;
        big.delta_gamma = 0.3;
        const auto conn = build_sparse_connectivity(big);
        double mean = 0.0, var = 0.0;
        for (auto d : conn.degree) mean += d;
        mean /= static_cast<double>(big.N);
        for (auto d : conn.degree) var += (d - mean) * (d - mean);
        var /= static_cast<double>(big.N - 1);
        const double se = std::sqrt(var / static_cast<double>(big.N));
        CHECK(std::abs(mean - static_cast<double>(big.M)) <= 3.0 * se + 0.5);
    }
    SUBCASE("literal zero-degree mode leaves rejected draws disconnected") {
        sp.delta_gamma = 40.0;  // fat degree distribution, many rejections
        SparseBuildOptions opts;
        opts.literal_zero_degree = true;
        const auto conn = build_sparse_connectivity(sp, opts);
        const long zeros =
            std::count(conn.degree.begin(), conn.degree.end(), 0);
        CHECK(zeros > 0);
    }
    SUBCASE("same seed, same connectivity") {
        sp.delta_gamma = 0.3;
        const auto a = build_sparse_connectivity(sp);
        const auto b = build_sparse_connectivity(sp);
        CHECK(a.pre == b.pre);
    }
}

TEST_CASE("sparse incremental coupling matches direct resummation") {
    SparseParams sp;
    sp.N = 300;
    sp.M = 30;
    sp.delta_gamma = 0.3;
    sp.J = 1.0;
    sp.tau_s = 0.015;
    sp.eta_bar = -0.2;
    sp.delta = 1e-3;
    sp.seed = 5;
    sp.forcing.A = 0.55;
    sp.forcing.eps = 0.1;
    sp.forcing.eta_bar = sp.eta_bar;

    SparseNetwork net = build_sparse(sp);
    NetworkSim a(net), b(net);
    init_on_down_state(a, 0.01);
    init_on_down_state(b, 0.01);
    for (int k = 0; k < 2000; ++k) {
        a.step(7.5e-4, NetIntegrator::euler);
        b.step(7.5e-4, NetIntegrator::euler);
        if (k % 10 == 0) b.sync_coupling_from_gates();
    }
    CHECK(a.state().spike_count == b.state().spike_count);
    for (long i = 0; i < a.N(); ++i)
        CHECK(a.state().v[i] == doctest::Approx(b.state().v[i]).epsilon(1e-8));
}

TEST_CASE("rate estimation") {
    SUBCASE("empty log gives all-zero bins") {
        const auto rs = rate_estimate({}, 0.15, 100, {0.0, 1.5});
        CHECK(rs.counts.size() == 10);
        for (double r : rs.rate) CHECK(r == 0.0);
    }
    SUBCASE("N spikes in one bin give rate 1/bin_dt") {
        std::vector<SpikeEvent> log;
        for (int i = 0; i < 100; ++i) log.push_back({0.07, i});
        const auto rs = rate_estimate(log, 0.15, 100, {0.0, 0.3});
        CHECK(rs.rate[0] == doctest::Approx(1.0 / 0.15));
        CHECK(rs.rate[1] == 0.0);
        long total = 0;
        for (long c : rs.counts) total += c;
        CHECK(total == 100);
    }
}

TEST_CASE("integrate guards: dt resolution and output cap") {
    QifParams p = cell_params(-1.0, 0.0, 0.01);
    NetworkSim sim(build_dense(p, no_drive(), EtaMode::quantile));
    RasterSpec spec;
    CHECK_THROWS_AS(sim.integrate(1.0, 0.005, NetIntegrator::euler, spec),
                    std::invalid_argument);  // dt > tau_s/10
    spec.allow_coarse_dt = true;
    CHECK_NOTHROW(sim.integrate(1.0, 0.005, NetIntegrator::euler, spec));

    RasterSpec tight;
    tight.record_dt = 1e-9;
    tight.max_rows = 100;
    NetworkSim sim2(build_dense(cell_params(-1.0, 0.0, 0.1), no_drive(),
                                EtaMode::quantile));
    CHECK_THROWS_AS(sim2.integrate(1.0, 0.001, NetIntegrator::euler, tight),
                    std::runtime_error);
}

TEST_CASE("theta transform endpoints") {
    CHECK(theta_transform(0.0) == 0.0);
    CHECK(theta_transform(1e12) == doctest::Approx(std::numbers::pi).epsilon(1e-10));
    CHECK(theta_inverse(0.0) == 0.0);
    // rhs at the firing angle is insensitive to the input
    CHECK(theta_rhs(std::numbers::pi, 123.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("theta-form and V-form spike times agree within 5 dt") {
    // V-form uses the finite threshold with the transit-time hold; theta
    // passes through infinity, so spike clocks differ by the half-transit
    // 1/V_t plus, when self-coupled, a small gate-timing drift per spike.
    auto compare = [](double J, double dt, double t_end, std::size_t n_spikes) {
        const double eta = 1.0, tau_s = 0.3;
        ThetaCellParams cp;
        cp.eta = eta;
        cp.J = J;
        cp.tau_s = tau_s;
        cp.jump = JumpConvention::literal;
        ThetaCell cell(cp, no_drive());
        cell.state().theta = theta_transform(0.0);
        cell.integrate(t_end, dt, 0.0);
        const auto& t_theta = cell.state().spike_times;

        QifParams p = cell_params(eta, J, tau_s);
        DenseNetwork net = build_dense(p, no_drive(), EtaMode::quantile,
                                       JumpConvention::literal);
        NetworkSim sim(std::move(net));
        sim.set_refractory_hold(true);
        sim.state().v[0] = 0.0;
        RasterSpec spec;
        spec.record_dt = 1.0;
        sim.integrate(t_end, dt, NetIntegrator::heun, spec);
        const auto& log = sim.state().spike_log;

        REQUIRE(t_theta.size() >= n_spikes);
        REQUIRE(log.size() >= n_spikes);
        for (std::size_t k = 0; k < n_spikes; ++k)
            CHECK(std::abs(t_theta[k] - log[k].t) <= 5 * dt);
    };
    compare(0.0, 0.005, 30.0, 9);  // uncoupled: pure integrator cross-check
    compare(2.0, 0.005, 15.0, 4);  // self-coupled synapse in the loop
}

TEST_CASE("dense network tracks the mean field (coarse, small N)") {
    QifParams p;
    p.N = 2000;
    p.J = 15.0;
    p.tau_s = 0.02;
    p.eta_bar = -15.1;
    p.delta = 1.0;
    p.V_t = 100.0;
    p.V_r = -100.0;
    ForcingParams f;
    f.A = 10.0;  // strongly driven but below the canard threshold
    f.eps = 0.05;
    f.eta_bar = p.eta_bar;

    // mean-field reference
    GeneralMfParams mp;
    mp.delta = p.delta;
    mp.J = p.J;
    mp.tau_s = p.tau_s;
    mp.eta_bar = p.eta_bar;
    const auto geo = find_folds(PsiParams::generalized(mp, Convention::pi2));
    IntegrateOptions opts;
    opts.dt = 5e-4;
    const MfRun mf = run_forced_meanfield(make_mpr_rhs(mp, f, Convention::pi2),
                                          geo, f, Sheet::lower, opts, 0.05, 0, 1);

    NetworkSim sim(build_dense(p, f, EtaMode::quantile));
    init_on_down_state(sim,
                       manifold_rate(geo.psi_params,
                                     geo.sheet_point(p.eta_bar, Sheet::lower)));
    sim.spin_up(5.0, 0.001, NetIntegrator::euler);
    RasterSpec spec;
    spec.record_dt = 0.05;
    spec.keep_spike_log = false;
    const auto run = sim.integrate(f.period(), 0.001, NetIntegrator::euler, spec);

    const auto smooth = moving_average(run.traj.v_mean_w, run.traj.t, 0.5);
    double vmin = 1e300, vmax = -1e300;
    for (std::size_t i = 0; i < mf.traj.rows(); ++i) {
        vmin = std::min(vmin, mf.traj.row(i)[kIdxV]);
        vmax = std::max(vmax, mf.traj.row(i)[kIdxV]);
    }
    const double range = vmax - vmin;
    double worst = 0.0;
    for (std::size_t i = 0; i < run.traj.t.size(); ++i) {
        const double t = run.traj.t[i];
        if (t < 1.0) continue;  // settle the smoothing window
        std::size_t j = 0;
        while (j + 1 < mf.traj.rows() && mf.traj.t[j + 1] <= t) ++j;
        worst = std::max(worst, std::abs(smooth[i] - mf.traj.row(j)[kIdxV]));
    }
    CHECK(worst <= 0.10 * range);  // acceptance tightens this at N = 10^4
}
