#include "qifc/experiments.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>

#include "qifc/csvio.hpp"
#include "qifc/mf_routes.hpp"
#include "qifc/multipop.hpp"
#include "qifc/network.hpp"
#include "qifc/sampling.hpp"
#include "qifc/util.hpp"

namespace qifc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double opt_num(const json& j, const std::string& key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

std::string opt_str(const json& j, const std::string& key, const std::string& fb) {
    return j.contains(key) ? j.at(key).get<std::string>() : fb;
}

GeneralMfParams mf_params_from(const json& ex, std::uint64_t) {
    GeneralMfParams p;
    p.delta = ex.at("delta").get<double>();
    p.J = ex.at("J").get<double>();
    p.tau_s = ex.at("tau_s").get<double>();
    p.eta_bar = ex.at("eta_bar").get<double>();
    p.Gamma = opt_num(ex, "Gamma", 0.0);
    p.g = opt_num(ex, "g", 0.0);
    p.a = opt_num(ex, "a", 1.0);
    p.validate();
    return p;
}

SparseParams sparse_params_from(const json& ex, std::uint64_t seed) {
    SparseParams p;
    p.N = static_cast<long>(opt_num(ex, "N", 1000));
    p.M = static_cast<long>(opt_num(ex, "M", 100));
    p.delta_gamma = opt_num(ex, "delta_gamma", 0.3);
    p.J = ex.at("J").get<double>();
    p.tau_s = ex.at("tau_s").get<double>();
    p.eta_bar = ex.at("eta_bar").get<double>();
    p.delta = opt_num(ex, "delta", 1e-4);
    p.seed = seed;
    if (ex.contains("forcing")) {
        const json& f = ex.at("forcing");
        p.forcing.A = f.at("A").get<double>();
        p.forcing.eps = f.at("eps").get<double>();
        p.forcing.eta_bar = p.eta_bar;
    }
    p.validate();
    return p;
}

ForcingParams forcing_from(const json& ex, double default_center) {
    const json& f = ex.at("forcing");
    ForcingParams fp;
    fp.A = f.at("A").get<double>();
    fp.eps = f.at("eps").get<double>();
    fp.eta_bar = opt_num(f, "eta_bar", default_center);
    fp.validate();
    return fp;
}

json fate_to_json(const OrbitFate& f) {
    return json{{"start", to_string(f.start_sheet)},
                {"end", to_string(f.end_sheet)},
                {"label", f.label()},
                {"burst", f.burst},
                {"canard_time", f.canard_time}};
}

json threshold_to_json(const ThresholdResult& r) {
    return json{{"A_star", r.A_star},
                {"bracket_lo", r.bracket_lo},
                {"bracket_hi", r.bracket_hi},
                {"tol", r.tol},
                {"fates", json{{"lo", fate_to_json(r.fate_lo)},
                               {"hi", fate_to_json(r.fate_hi)}}},
                {"evaluations", r.evaluations}};
}

json geometry_to_json(const ManifoldGeometry& geo, double eta_bar,
                      Convention conv) {
    json folds = json::array();
    json sing = json::array();
    for (const auto& f : geo.folds) {
        folds.push_back(json{{"v", f.v},
                             {"K", f.K},
                             {"eta_label",
                              f.side == FoldSide::Fplus ? "eta_+" : "eta_-"}});
        const auto fsng =
            classify_folded_singularity(geo.psi_params, f, eta_bar);
        sing.push_back(json{{"location", to_string(f.side)},
                            {"sigma", fsng.sigma},
                            {"class", to_string(fsng.cls)}});
    }
    json j{{"convention", to_string(conv)}, {"folds", folds},
           {"singularities", sing}};
    if (geo.has_folds()) {
        j["eta_plus"] = geo.eta_plus;
        j["eta_minus"] = geo.eta_minus;
        j["eta_zero"] = geo.eta_zero;
    }
    return j;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

// ---- experiment bodies ------------------------------------------------------

void run_simulate_meanfield(const RunConfig& cfg, const fs::path& dir,
                            json& manifest) {
    const json& ex = cfg.experiment;
    const std::string model = opt_str(ex, "model", "mpr");
    const std::string sheet_name = opt_str(ex, "start_sheet", "down");
    const Sheet sheet = sheet_name == "up" ? Sheet::upper : Sheet::lower;
    const int transient = static_cast<int>(opt_num(ex, "transient_periods", 1));
    const int eval = static_cast<int>(opt_num(ex, "eval_periods", 1));

    IntegrateOptions opts;
    const std::string method = opt_str(ex, "method", "rk4");
    opts.method = method == "heun"    ? OdeMethod::heun
                  : method == "rkf45" ? OdeMethod::rkf45
                                      : OdeMethod::rk4;
    opts.validator = rate_positivity_validator({kIdxR});

    OdeRhs rhs;
    ManifoldGeometry geo;
    ForcingParams fp;
    if (model == "mpr") {
        const GeneralMfParams p = mf_params_from(ex, cfg.seed);
        fp = forcing_from(ex, p.eta_bar);
        geo = find_folds(PsiParams::generalized(p, cfg.convention));
        rhs = make_mpr_rhs(p, fp, cfg.convention);
        opts.dt = cfg.dt > 0 ? cfg.dt : default_mf_dt(p.tau_s, fp.eps);
    } else {
        SparseParams p = sparse_params_from(ex, cfg.seed);
        fp = p.forcing;
        fp.eta_bar = p.eta_bar;
        geo = find_folds(PsiParams::sparse_heuristic(p));
        rhs = make_sparse_heuristic_rhs(p);
        opts.dt = cfg.dt > 0 ? cfg.dt : default_mf_dt(p.tau_s, fp.eps);
    }
    const double record = opt_num(ex, "record_dt", std::max(opts.dt, 2e-4 / fp.eps));
    MfRun run = run_forced_meanfield(rhs, geo, fp, sheet, opts, record, transient,
                                     eval);
    write_mf_trajectory_csv(dir / "trajectory.csv", cfg.hash(), run.traj);
    manifest["outputs"].push_back("trajectory.csv");
    manifest["eval_window"] = json{{"t0", run.eval_t0}, {"t1", run.eval_t1}};
}

void run_simulate_network(const RunConfig& cfg, const fs::path& dir,
                          json& manifest) {
    const json& ex = cfg.experiment;
    const std::string net = opt_str(ex, "net", "dense");
    const double periods = opt_num(ex, "periods", 1.0);
    const double record_dt = opt_num(ex, "record_dt", 0.05);
    const double bin_dt = opt_num(ex, "bin_dt", 0.15);
    const double spin = opt_num(ex, "spin_up_time", 5.0);
    const bool keep_spikes = !ex.contains("keep_spikes") ||
                             ex.at("keep_spikes").get<bool>();
    const NetIntegrator integ = opt_str(ex, "integrator", "euler") == "heun"
                                    ? NetIntegrator::heun
                                    : NetIntegrator::euler;

    if (net == "cell-theta") {
        ThetaCellParams cp;
        cp.eta = ex.at("eta_bar").get<double>();
        cp.J = ex.at("J").get<double>();
        cp.tau_s = ex.at("tau_s").get<double>();
        cp.jump = cfg.jump;
        cp.theta_threshold = opt_num(ex, "theta_threshold", std::numbers::pi);
        ForcingParams fp = forcing_from(ex, cp.eta);
        const double dt = cfg.dt > 0 ? cfg.dt : cp.tau_s / 20.0;
        CellRun run = run_forced_cell(cp, fp, dt, 0,
                                      static_cast<int>(periods), record_dt, spin);
        CsvWriter w(dir / "trajectory.csv", cfg.hash(), {"t", "v", "s", "K"});
        for (std::size_t i = 0; i < run.trace.t.size(); ++i)
            w.row(std::array{run.trace.t[i], run.trace.v[i], run.trace.s[i],
                             run.trace.K[i]});
        std::vector<SpikeEvent> log;
        for (double t : run.spikes) log.push_back({t, 0});
        write_spike_csv(dir / "spikes.csv", cfg.hash(), log);
        manifest["outputs"] = json::array({"trajectory.csv", "spikes.csv"});
        manifest["spike_count"] = run.spikes.size();
        return;
    }

    NetRunResult res;
    double mf_rate0 = 0.0;
    if (net == "dense") {
        QifParams p;
        p.N = static_cast<long>(opt_num(ex, "N", 1000));
        p.J = ex.at("J").get<double>();
        p.tau_s = ex.at("tau_s").get<double>();
        p.eta_bar = ex.at("eta_bar").get<double>();
        p.delta = opt_num(ex, "delta", 1.0);
        p.V_t = opt_num(ex, "V_t", 100.0);
        p.V_r = opt_num(ex, "V_r", -p.V_t);
        p.seed = cfg.seed;
        p.validate();
        const EtaMode mode = opt_str(ex, "eta_mode", "quantile") == "iid"
                                 ? EtaMode::iid
                                 : EtaMode::quantile;
        ForcingParams fp = forcing_from(ex, p.eta_bar);
        DenseNetwork dn = build_dense(p, fp, mode, cfg.jump);
        if (p.delta > 0) {
            const auto geo =
                find_folds(PsiParams::mpr(p.delta, p.J, cfg.convention));
            try {
                mf_rate0 = manifold_rate(geo.psi_params,
                                         geo.sheet_point(p.eta_bar, Sheet::lower));
            } catch (const std::exception&) {
                mf_rate0 = 0.0;
            }
        }
        NetworkSim sim(std::move(dn));
        if (ex.contains("refractory_hold") && ex.at("refractory_hold").get<bool>())
            sim.set_refractory_hold(true);
        init_on_down_state(sim, mf_rate0);
        const double dt = cfg.dt > 0 ? cfg.dt : p.tau_s / 20.0;
        sim.spin_up(spin, dt, integ);
        RasterSpec spec;
        spec.record_dt = record_dt;
        spec.bin_dt = bin_dt;
        spec.keep_spike_log = keep_spikes;
        res = sim.integrate(periods * fp.period(), dt, integ, spec);
        if (keep_spikes)
            write_spike_csv(dir / "spikes.csv", cfg.hash(), sim.state().spike_log);
    } else {
        SparseParams p = sparse_params_from(ex, cfg.seed);
        const EtaMode mode =
            opt_str(ex, "eta_mode", "iid") == "quantile" ? EtaMode::quantile
                                                         : EtaMode::iid;
        SparseNetwork sn = build_sparse(p, cfg.jump, mode);
        const auto geo = find_folds(PsiParams::sparse_heuristic(p));
        try {
            mf_rate0 = manifold_rate(geo.psi_params,
                                     geo.sheet_point(p.eta_bar, Sheet::lower));
        } catch (const std::exception&) {
            mf_rate0 = 0.0;
        }
        NetworkSim sim(std::move(sn));
        init_on_down_state(sim, mf_rate0);
        const double dt = cfg.dt > 0 ? cfg.dt : p.tau_s / 20.0;
        sim.spin_up(spin, dt, integ);
        RasterSpec spec;
        spec.record_dt = record_dt;
        spec.bin_dt = bin_dt;
        spec.keep_spike_log = keep_spikes;
        res = sim.integrate(periods * p.forcing.period(), dt, integ, spec);
        if (keep_spikes)
            write_spike_csv(dir / "spikes.csv", cfg.hash(), sim.state().spike_log);
    }
    write_net_trajectory_csv(dir / "trajectory.csv", cfg.hash(), res.traj);
    write_rate_hist_csv(dir / "rate_hist.csv", cfg.hash(), res.raster);
    manifest["outputs"] = json::array({"trajectory.csv", "rate_hist.csv"});
    if (keep_spikes) manifest["outputs"].push_back("spikes.csv");
}

void run_analyze_manifold(const RunConfig& cfg, const fs::path& dir,
                          json& manifest) {
    const json& ex = cfg.experiment;
    const std::string model = opt_str(ex, "model", "mpr");
    PsiParams pp;
    if (model == "sparse-heuristic") {
        SparseParams sp;
        sp.M = static_cast<long>(opt_num(ex, "M", 1000));
        sp.N = sp.M;
        sp.delta_gamma = opt_num(ex, "delta_gamma", 0.3);
        sp.J = opt_num(ex, "J", 1.0);
        sp.delta = ex.at("delta").get<double>();
        pp = PsiParams::sparse_heuristic(sp);
    } else {
        pp = PsiParams::mpr(ex.at("delta").get<double>(),
                            opt_num(ex, "J_tilde", opt_num(ex, "J", 0.0)),
                            cfg.convention);
        pp.gamma_tilde = opt_num(ex, "gamma_tilde", 0.0);
    }
    VWindow window;
    window.lo = opt_num(ex, "v_lo", -50.0);
    window.hi = opt_num(ex, "v_hi", -1e-4);
    const int scan = static_cast<int>(opt_num(ex, "scan_points", 10000));
    const ManifoldGeometry geo = find_folds(pp, window, scan);
    const double eta_bar = opt_num(ex, "eta_bar", 0.0);

    write_json_file(dir / "geometry.json",
                    geometry_to_json(geo, eta_bar, cfg.convention));
    write_manifold_csv(dir / "S0.csv", cfg.hash(),
                       sample_manifold(geo, static_cast<int>(
                                                opt_num(ex, "n_samples", 2000))));
    manifest["outputs"] = json::array({"geometry.json", "S0.csv"});

    if (geo.has_folds()) {
        const double arc = opt_num(ex, "canard_arclength", 3.0);
        for (const Fold& f : geo.folds) {
            const auto fs_ = classify_folded_singularity(pp, f, eta_bar);
            if (fs_.cls == SingularityClass::FoldedSaddle) {
                const auto canards = singular_canards(pp, fs_, eta_bar, arc);
                const std::string name =
                    f.side == FoldSide::Fplus ? "singular_canards_Fplus.csv"
                                              : "singular_canards_Fminus.csv";
                write_canard_csv(dir / name, cfg.hash(), canards);
                manifest["outputs"].push_back(name);
            }
        }
    }
}

void run_sweep(const RunConfig& cfg, const fs::path& dir, json& manifest) {
    const json& ex = cfg.experiment;
    const std::string target = opt_str(ex, "target", "meanfield");
    const std::string mode = opt_str(ex, "mode", "bisect");
    const double A_lo = ex.at("A_lo").get<double>();
    const double A_hi = ex.at("A_hi").get<double>();
    const SheetSide start =
        opt_str(ex, "start_sheet", "down") == "up" ? SheetSide::up
                                                   : SheetSide::down;

    if (target == "meanfield") {
        GeneralMfParams p = mf_params_from(ex, cfg.seed);
        MfSystem sys = make_mf_system(p, opt_num(ex, "eps", 0.05), cfg.convention);
        if (cfg.dt > 0) sys.opts.dt = cfg.dt;
        sys.transient_periods =
            static_cast<int>(opt_num(ex, "transient_periods", 1));
        sys.eval_periods = static_cast<int>(opt_num(ex, "eval_periods", 1));
        if (mode == "bisect") {
            const auto th =
                threshold_bisect(mf_fate_evaluator(sys, start), A_lo, A_hi,
                                 opt_num(ex, "tol_A", 1e-8));
            write_json_file(dir / "threshold.json", threshold_to_json(th));
            manifest["outputs"] = json::array({"threshold.json"});
        } else {
            const BranchMeasure meas = opt_str(ex, "measure", "delta_r") ==
                                               "inv_snorm"
                                           ? BranchMeasure::inv_snorm
                                           : BranchMeasure::delta_r;
            auto eval = [&](double A) {
                const MfOrbit orb = run_mf_orbit(sys, A, start);
                BranchSample s;
                s.fate = classify_meanfield_orbit(orb.traj, orb.eval_start, sys.geo,
                                                  sys.classify);
                const auto bm = burst_measures(orb.traj.t, orb.traj.column(kIdxS),
                                               orb.traj.column(kIdxR), orb.eval);
                s.measure =
                    meas == BranchMeasure::inv_snorm ? bm.inv_snorm : bm.delta_r;
                return s;
            };
            const auto branch =
                branch_trace(eval, A_lo, A_hi,
                             static_cast<int>(opt_num(ex, "n_coarse", 25)),
                             static_cast<int>(opt_num(ex, "refine_depth", 4)), meas);
            write_branch_csv(dir / "branch.csv", cfg.hash(), branch);
            manifest["outputs"] = json::array({"branch.csv"});
        }
    } else if (target == "cell") {
        ThetaCellParams cp;
        cp.eta = ex.at("eta_bar").get<double>();
        cp.J = ex.at("J").get<double>();
        cp.tau_s = ex.at("tau_s").get<double>();
        cp.jump = cfg.jump;
        ForcingParams fp;
        fp.eps = opt_num(ex, "eps", 0.01);
        fp.eta_bar = cp.eta;
        const double dt = cfg.dt > 0 ? cfg.dt : cp.tau_s / 20.0;
        const SheetSide cell_start =
            cp.eta < 0 ? SheetSide::down : SheetSide::up;

        auto run_at = [&](double A) {
            ForcingParams f = fp;
            f.A = A;
            return run_forced_cell(cp, f, dt, 0, 1, dt * 4);
        };
        auto fate_at = [&](double A) {
            const CellRun run = run_at(A);
            return classify_cell_orbit(run.trace, run.spikes, run.eval, cell_start,
                                       0.25 * run.period, 0.1 * std::max(A, 0.05))
                .fate;
        };
        if (mode == "bisect") {
            const auto th =
                threshold_bisect(fate_at, A_lo, A_hi, opt_num(ex, "tol_A", 1e-6));
            write_json_file(dir / "threshold.json", threshold_to_json(th));
            manifest["outputs"] = json::array({"threshold.json"});
        } else {
            auto eval = [&](double A) {
                const CellRun run = run_at(A);
                BranchSample s;
                s.fate = classify_cell_orbit(run.trace, run.spikes, run.eval,
                                             cell_start, 0.25 * run.period,
                                             0.1 * std::max(A, 0.05))
                             .fate;
                const auto bm = burst_measures(run.trace.t, run.trace.s, {},
                                               run.eval);
                s.measure = bm.inv_snorm;
                return s;
            };
            const auto branch =
                branch_trace(eval, A_lo, A_hi,
                             static_cast<int>(opt_num(ex, "n_coarse", 25)),
                             static_cast<int>(opt_num(ex, "refine_depth", 5)),
                             BranchMeasure::inv_snorm);
            write_branch_csv(dir / "branch.csv", cfg.hash(), branch);
            manifest["outputs"] = json::array({"branch.csv"});
        }
    } else {
        throw std::invalid_argument("sweep target must be 'meanfield' or 'cell'");
    }
}

void run_classify_scenario(const RunConfig& cfg, const fs::path& dir,
                           json& manifest) {
    const json& ex = cfg.experiment;
    GeneralMfParams p;
    p.delta = opt_num(ex, "delta", 1.0);
    p.J = opt_num(ex, "J", 15.0);
    p.tau_s = opt_num(ex, "tau_s", 0.02);
    p.eta_bar = ex.at("eta_bar").get<double>();
    p.validate();
    MfSystem sys = make_mf_system(p, opt_num(ex, "eps", 0.05), cfg.convention);
    const auto report = analyze_mf_routes(
        sys, opt_num(ex, "bisect_tol", 1e-6),
        static_cast<int>(opt_num(ex, "secondary_samples", 9)));

    auto branch_json = [](const BranchReport& br) {
        json j{{"exists", br.exists},
               {"continuous_route", br.continuous_route},
               {"interrupted", br.interrupted}};
        if (br.threshold) j["threshold"] = threshold_to_json(*br.threshold);
        if (br.termination_A) j["termination_A"] = *br.termination_A;
        return j;
    };
    json j{{"scenario", to_string(report.scenario)},
           {"down_branch", branch_json(report.down_branch)},
           {"up_branch", branch_json(report.up_branch)},
           {"anomalies", report.anomalies}};
    write_json_file(dir / "routes.json", j);
    write_json_file(dir / "geometry.json",
                    geometry_to_json(sys.geo, p.eta_bar, cfg.convention));
    manifest["outputs"] = json::array({"routes.json", "geometry.json"});
}

void run_sparse_demo(const RunConfig& cfg, const fs::path& dir, json& manifest) {
    const json& ex = cfg.experiment;
    SparseParams p;
    p.N = static_cast<long>(opt_num(ex, "N", 2000));
    p.M = static_cast<long>(opt_num(ex, "M", 200));
    p.delta_gamma = opt_num(ex, "delta_gamma", 0.3);
    p.J = opt_num(ex, "J", 1.0);
    p.tau_s = opt_num(ex, "tau_s", 0.015);
    p.eta_bar = opt_num(ex, "eta_bar", -0.5);
    p.delta = opt_num(ex, "delta", 1e-4);
    p.seed = cfg.seed;
    p.forcing.eps = opt_num(ex, "eps", 0.1);
    p.forcing.eta_bar = p.eta_bar;
    p.validate();

    const double sqrtM = std::sqrt(static_cast<double>(p.M));
    const double lo = opt_num(ex, "A_scaled_lo", 15.5) / sqrtM;
    const double hi = opt_num(ex, "A_scaled_hi", 16.5) / sqrtM;
    const double periods = opt_num(ex, "periods", 2.0);
    const int n_coarse = static_cast<int>(opt_num(ex, "n_coarse", 9));

    // one connectivity and current sample reused across the sweep
    p.forcing.A = lo;
    SparseNetwork base = build_sparse(p, cfg.jump);
    const auto geo = find_folds(PsiParams::sparse_heuristic(p));
    const double r0 =
        manifold_rate(geo.psi_params, geo.sheet_point(p.eta_bar, Sheet::lower));
    const double r_fold_up = manifold_rate(geo.psi_params, geo.fold_plus().v);
    const double dt = cfg.dt > 0 ? cfg.dt : p.tau_s / 20.0;

    NetClassifySpec spec;
    spec.use_voltage = false;
    spec.use_rate = true;
    spec.r_burst = 1.25 * r_fold_up;
    spec.t_dwell = 2.0;
    spec.smooth_window = 0.5;

    auto eval = [&](double A) {
        SparseNetwork net = base;
        net.params.forcing.A = A;
        NetworkSim sim(std::move(net));
        init_on_down_state(sim, r0);
        sim.spin_up(5.0, dt, NetIntegrator::euler);
        RasterSpec rs;
        rs.record_dt = 0.05;
        rs.keep_spike_log = false;
        const double T = p.forcing.period();
        const auto run = sim.integrate(periods * T, dt, NetIntegrator::euler, rs);
        BranchSample s;
        s.fate = classify_network_orbit(run.traj, {T * (periods - 1.0), T * periods},
                                        spec);
        double rmax = 0.0, rmin = 1e300;
        for (std::size_t i = 0; i < run.traj.t.size(); ++i) {
            if (run.traj.t[i] < T * (periods - 1.0)) continue;
            rmax = std::max(rmax, run.traj.rate[i]);
            rmin = std::min(rmin, run.traj.rate[i]);
        }
        s.measure = rmax - rmin;
        return s;
    };
    const auto branch = branch_trace(eval, lo, hi, n_coarse, 3,
                                     BranchMeasure::delta_r);
    write_branch_csv(dir / "branch.csv", cfg.hash(), branch);
    manifest["outputs"] = json::array({"branch.csv"});
    manifest["A_scale"] = sqrtM;
}

}  // namespace

fs::path resolve_out_root(const RunConfig& cfg) {
    if (!cfg.out_root.empty()) return cfg.out_root;
    if (const char* env = std::getenv("QIFC_OUT")) return env;
    return fs::current_path();
}

RunResult run_experiment(const RunConfig& cfg) {
    RunResult res;
    const auto t_start = std::chrono::steady_clock::now();

    fs::path dir;
    try {
        validate_config(cfg);
        dir = resolve_out_root(cfg) / (to_string(cfg.kind) + "-" + cfg.hash());
        res.dir = dir;
        if (fs::exists(dir / ".lock"))
            throw std::invalid_argument("run directory " + dir.string() +
                                        " is locked by another invocation");
        fs::create_directories(dir);
        std::ofstream lock(dir / ".lock");
        lock << "pid " << ::getpid() << "\n";
    } catch (const std::exception& e) {
        res.exit_code = 3;
        res.message = e.what();
        return res;
    }

    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["config_hash"] = cfg.hash();
    manifest["seed"] = cfg.seed;
    manifest["seed_streams"] = json::array({"currents", "connectivity",
                                            "initial-state"});
    manifest["outputs"] = json::array();

    try {
        {
            std::ofstream out(dir / "config.json");
            out << cfg.canonical() << "\n";
        }
        switch (cfg.kind) {
            case ExperimentKind::simulate_meanfield:
                run_simulate_meanfield(cfg, dir, manifest);
                break;
            case ExperimentKind::simulate_network:
                run_simulate_network(cfg, dir, manifest);
                break;
            case ExperimentKind::analyze_manifold:
                run_analyze_manifold(cfg, dir, manifest);
                break;
            case ExperimentKind::sweep:
                run_sweep(cfg, dir, manifest);
                break;
            case ExperimentKind::classify_scenario:
                run_classify_scenario(cfg, dir, manifest);
                break;
            case ExperimentKind::sparse_demo:
                run_sparse_demo(cfg, dir, manifest);
                break;
        }
        manifest["status"] = "ok";
    } catch (const std::invalid_argument& e) {
        manifest["status"] = std::string("config-error: ") + e.what();
        res.exit_code = 3;
        res.message = e.what();
    } catch (const std::exception& e) {
        manifest["status"] = std::string("numerical-failure: ") + e.what();
        res.exit_code = 2;
        res.message = e.what();
    }

    const auto t_end = std::chrono::steady_clock::now();
    manifest["wall_time_s"] =
        std::chrono::duration<double>(t_end - t_start).count();
    try {
        write_json_file(dir / "manifest.json", manifest);
        fs::remove(dir / ".lock");
    } catch (const std::exception& e) {
        if (res.exit_code == 0) {
            res.exit_code = 2;
            res.message = e.what();
        }
    }
    return res;
}

RunResult emit_figure_data(const fs::path& run_dir, const std::string& figure_id) {
    RunResult res;
    res.dir = run_dir / ("figure_" + figure_id);
    try {
        if (!fs::exists(run_dir / "config.json"))
            throw std::invalid_argument("missing " +
                                        (run_dir / "config.json").string() +
                                        "; a completed run directory is required");
        const RunConfig cfg = parse_config_file(run_dir / "config.json");
        fs::create_directories(res.dir);

        if (figure_id == "orbit3d") {
            if (!fs::exists(run_dir / "trajectory.csv"))
                throw std::invalid_argument(
                    "figure orbit3d requires trajectory.csv from a "
                    "simulate-meanfield run");
            const CsvTable traj = read_csv(run_dir / "trajectory.csv");
            // rebuild the manifold from the stored config
            const json& ex = cfg.experiment;
            PsiParams pp;
            if (opt_str(ex, "model", "mpr") == "sparse-heuristic") {
                SparseParams sp = sparse_params_from(ex, cfg.seed);
                pp = PsiParams::sparse_heuristic(sp);
            } else {
                GeneralMfParams p = mf_params_from(ex, cfg.seed);
                pp = PsiParams::generalized(p, cfg.convention);
            }
            const ManifoldGeometry geo = find_folds(pp);
            write_manifold_csv(res.dir / "S0.csv", cfg.hash(),
                               sample_manifold(geo, 2000));
            {
                CsvWriter w(res.dir / "orbit.csv", cfg.hash(),
                            {"t", "v", "K", "Q", "r", "s"});
                auto col = [&](const std::string& name) {
                    for (std::size_t c = 0; c < traj.columns.size(); ++c)
                        if (traj.columns[c] == name) return c;
                    throw std::invalid_argument("trajectory.csv lacks column " +
                                                name);
                };
                const std::size_t ct = col("t"), cv = col("v"), cK = col("K"),
                                  cQ = col("Q"), cr = col("r"), cs = col("s");
                for (const auto& row : traj.rows)
                    w.row(std::array{row[ct], row[cv], row[cK], row[cQ], row[cr],
                                     row[cs]});
            }
            const double eta_bar = opt_num(ex, "eta_bar", 0.0);
            for (const Fold& f : geo.folds) {
                const auto fsng = classify_folded_singularity(pp, f, eta_bar);
                if (fsng.cls == SingularityClass::FoldedSaddle) {
                    write_canard_csv(res.dir / "singular_canards.csv", cfg.hash(),
                                     singular_canards(pp, fsng, eta_bar, 3.0));
                    break;
                }
            }
        } else if (figure_id == "branch") {
            if (!fs::exists(run_dir / "branch.csv"))
                throw std::invalid_argument(
                    "figure branch requires branch.csv from a sweep run");
            fs::copy_file(run_dir / "branch.csv", res.dir / "branch.csv",
                          fs::copy_options::overwrite_existing);
        } else if (figure_id == "raster") {
            if (!fs::exists(run_dir / "spikes.csv"))
                throw std::invalid_argument(
                    "figure raster requires spikes.csv from a simulate-network "
                    "run with keep_spikes");
            const CsvTable spikes = read_csv(run_dir / "spikes.csv");
            std::vector<SpikeEvent> log;
            for (const auto& row : spikes.rows)
                log.push_back({row[0], static_cast<std::int32_t>(row[1])});
            fs::copy_file(run_dir / "spikes.csv", res.dir / "raster.csv",
                          fs::copy_options::overwrite_existing);
            double t_max = 0.0;
            for (const auto& ev : log) t_max = std::max(t_max, ev.t);
            const long N =
                static_cast<long>(opt_num(cfg.experiment, "N", 1000));
            write_rate_hist_csv(res.dir / "rate_hist.csv", cfg.hash(),
                                rate_estimate(log, 0.15, N, {0.0, t_max}));
        } else {
            throw std::invalid_argument("unknown figure id '" + figure_id +
                                        "' (expected orbit3d, branch or raster)");
        }
    } catch (const std::invalid_argument& e) {
        res.exit_code = 3;
        res.message = e.what();
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.message = e.what();
    }
    return res;
}

}  // namespace qifc
