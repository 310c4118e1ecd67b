#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qifc/experiments.hpp"
#include "qifc/runconfig.hpp"

using nlohmann::json;

namespace {

struct GlobalFlags {
    std::uint64_t seed = 1;
    std::string out;
    std::string convention = "pi2";
    std::string jump = "meanfield";
    double dt = 0.0;
    bool quiet = false;
};

void add_global_flags(CLI::App* app, GlobalFlags& g) {
    app->add_option("--seed", g.seed, "top-level RNG seed");
    app->add_option("--out", g.out, "output root (default $QIFC_OUT or cwd)");
    app->add_option("--convention", g.convention,
                    "rate-term convention: pi2 or printed")
        ->check(CLI::IsMember({"pi2", "printed"}));
    app->add_option("--jump-convention", g.jump,
                    "synaptic jump convention: meanfield or literal")
        ->check(CLI::IsMember({"meanfield", "literal"}));
    app->add_option("--dt", g.dt, "integration step (0 = derived default)");
    app->add_flag("--quiet", g.quiet, "suppress progress output");
}

qifc::RunConfig base_config(const GlobalFlags& g, qifc::ExperimentKind kind) {
    qifc::RunConfig cfg;
    cfg.kind = kind;
    cfg.seed = g.seed;
    cfg.out_root = g.out;
    cfg.convention = g.convention == "printed" ? qifc::Convention::printed
                                               : qifc::Convention::pi2;
    cfg.jump = g.jump == "literal" ? qifc::JumpConvention::literal
                                   : qifc::JumpConvention::meanfield;
    cfg.dt = g.dt;
    cfg.quiet = g.quiet;
    return cfg;
}

int execute(const qifc::RunConfig& cfg) {
    const auto res = qifc::run_experiment(cfg);
    if (!cfg.quiet) {
        if (res.exit_code == 0)
            std::cout << "run complete: " << res.dir.string() << "\n";
        else
            std::cerr << "run failed (" << res.exit_code << "): " << res.message
                      << "\n";
    }
    return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"QIF network and mean-field canard toolkit"};
    app.require_subcommand(1);
    GlobalFlags g;
    add_global_flags(&app, g);

    // --- run from a config file -------------------------------------------
    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "execute a JSON run config");
    run_cmd->add_option("config", config_path, "path to config.json")->required();

    // --- simulate-meanfield -------------------------------------------------
    auto* mf = app.add_subcommand("simulate-meanfield",
                                  "integrate a forced mean-field model");
    struct {
        std::string model = "mpr";
        double delta = 1.0, J = 15.0, tau_s = 0.02, eta_bar = -15.1;
        double Gamma = 0.0, gel = 0.0, a = 1.0;
        double A = 12.0, eps = 0.05;
        long N = 1000, M = 1000;
        double delta_gamma = 0.3;
        std::string sheet = "down", method = "rk4";
        int transient = 1, eval = 1;
    } m;
    mf->add_option("--model", m.model)->check(CLI::IsMember({"mpr", "sparse-heuristic"}));
    mf->add_option("--delta", m.delta);
    mf->add_option("--J", m.J);
    mf->add_option("--tau-s", m.tau_s);
    mf->add_option("--eta-bar", m.eta_bar);
    mf->add_option("--Gamma", m.Gamma);
    mf->add_option("--g", m.gel);
    mf->add_option("--a", m.a);
    mf->add_option("--A", m.A);
    mf->add_option("--eps", m.eps);
    mf->add_option("--M", m.M);
    mf->add_option("--delta-gamma", m.delta_gamma);
    mf->add_option("--start-sheet", m.sheet)->check(CLI::IsMember({"down", "up"}));
    mf->add_option("--method", m.method)
        ->check(CLI::IsMember({"rk4", "heun", "rkf45"}));
    mf->add_option("--transient-periods", m.transient);
    mf->add_option("--eval-periods", m.eval);

    // --- simulate-network ----------------------------------------------------
    auto* net = app.add_subcommand("simulate-network",
                                   "integrate a microscopic QIF network");
    struct {
        std::string kind = "dense", eta_mode = "";
        long N = 1000, M = 100;
        double J = 15.0, tau_s = 0.02, eta_bar = -15.1, delta = 1.0;
        double delta_gamma = 0.3, V_t = 100.0;
        double A = 12.0, eps = 0.05;
        double periods = 1.0, record_dt = 0.05, bin_dt = 0.15, spin = 5.0;
        std::string integrator = "euler";
        bool no_spikes = false, hold = false;
        double theta_threshold = 0.0;
    } n;
    net->add_option("--net", n.kind)
        ->check(CLI::IsMember({"dense", "sparse", "cell-theta"}));
    net->add_option("--N", n.N);
    net->add_option("--M", n.M);
    net->add_option("--J", n.J);
    net->add_option("--tau-s", n.tau_s);
    net->add_option("--eta-bar", n.eta_bar);
    net->add_option("--delta", n.delta);
    net->add_option("--delta-gamma", n.delta_gamma);
    net->add_option("--V-t", n.V_t);
    net->add_option("--A", n.A);
    net->add_option("--eps", n.eps);
    net->add_option("--periods", n.periods);
    net->add_option("--record-dt", n.record_dt);
    net->add_option("--bin-dt", n.bin_dt);
    net->add_option("--spin-up-time", n.spin);
    net->add_option("--eta-mode", n.eta_mode)
        ->check(CLI::IsMember({"quantile", "iid"}));
    net->add_option("--integrator", n.integrator)
        ->check(CLI::IsMember({"euler", "heun"}));
    net->add_flag("--no-spike-log", n.no_spikes);
    net->add_flag("--refractory-hold", n.hold);
    net->add_option("--theta-threshold", n.theta_threshold,
                    "firing angle for cell-theta (default pi)");

    // --- analyze-manifold ----------------------------------------------------
    auto* man = app.add_subcommand("analyze-manifold",
                                   "fold geometry and singular canards");
    struct {
        std::string model = "mpr";
        double delta = 1.0, J_tilde = 15.0, gamma_tilde = 0.0, eta_bar = -15.1;
        double J = 1.0, delta_gamma = 0.3;
        long M = 1000;
        double v_lo = -50.0, v_hi = -1e-4, arclength = 3.0;
        int scan_points = 10000, n_samples = 2000;
    } a;
    man->add_option("--model", a.model)
        ->check(CLI::IsMember({"mpr", "sparse-heuristic"}));
    man->add_option("--delta", a.delta);
    man->add_option("--J-tilde", a.J_tilde);
    man->add_option("--gamma-tilde", a.gamma_tilde);
    man->add_option("--eta-bar", a.eta_bar);
    man->add_option("--J", a.J);
    man->add_option("--delta-gamma", a.delta_gamma);
    man->add_option("--M", a.M);
    man->add_option("--v-lo", a.v_lo);
    man->add_option("--v-hi", a.v_hi);
    man->add_option("--scan-points", a.scan_points);
    man->add_option("--canard-arclength", a.arclength);
    man->add_option("--n-samples", a.n_samples);

    // --- sweep ---------------------------------------------------------------
    auto* sw = app.add_subcommand("sweep",
                                  "threshold bisection or branch tracing in A");
    struct {
        std::string target = "meanfield", mode = "bisect", sheet = "down";
        std::string measure = "delta_r";
        double delta = 1.0, J = 15.0, tau_s = 0.02, eta_bar = -15.1, eps = 0.05;
        double A_lo = 11.0, A_hi = 13.0, tol = 1e-8;
        int n_coarse = 25, refine_depth = 4;
    } s;
    sw->add_option("--target", s.target)->check(CLI::IsMember({"meanfield", "cell"}));
    sw->add_option("--mode", s.mode)->check(CLI::IsMember({"bisect", "branch"}));
    sw->add_option("--start-sheet", s.sheet)->check(CLI::IsMember({"down", "up"}));
    sw->add_option("--measure", s.measure)
        ->check(CLI::IsMember({"inv_snorm", "delta_r"}));
    sw->add_option("--delta", s.delta);
    sw->add_option("--J", s.J);
    sw->add_option("--tau-s", s.tau_s);
    sw->add_option("--eta-bar", s.eta_bar);
    sw->add_option("--eps", s.eps);
    sw->add_option("--A-lo", s.A_lo)->required();
    sw->add_option("--A-hi", s.A_hi)->required();
    sw->add_option("--tol-A", s.tol);
    sw->add_option("--n-coarse", s.n_coarse);
    sw->add_option("--refine-depth", s.refine_depth);

    // --- classify-scenario ---------------------------------------------------
    auto* cs = app.add_subcommand("classify-scenario",
                                  "scenario taxonomy and route analysis");
    struct {
        double delta = 1.0, J = 15.0, tau_s = 0.02, eta_bar = -5.0, eps = 0.05;
        double bisect_tol = 1e-6;
        int secondary_samples = 9;
    } c;
    cs->add_option("--delta", c.delta);
    cs->add_option("--J", c.J);
    cs->add_option("--tau-s", c.tau_s);
    cs->add_option("--eta-bar", c.eta_bar)->required();
    cs->add_option("--eps", c.eps);
    cs->add_option("--bisect-tol", c.bisect_tol);
    cs->add_option("--secondary-samples", c.secondary_samples);

    // --- sparse-demo -----------------------------------------------------------
    auto* sd = app.add_subcommand("sparse-demo",
                                  "sparse-network route to bursting, desk scale");
    struct {
        long N = 2000, M = 200;
        double delta_gamma = 0.3, J = 1.0, tau_s = 0.015, eta_bar = -0.5;
        double delta = 1e-4, eps = 0.1;
        double A_lo = 15.5, A_hi = 16.5;
        int n_coarse = 9;
        double periods = 2.0;
    } d;
    sd->add_option("--N", d.N);
    sd->add_option("--M", d.M);
    sd->add_option("--delta-gamma", d.delta_gamma);
    sd->add_option("--J", d.J);
    sd->add_option("--tau-s", d.tau_s);
    sd->add_option("--eta-bar", d.eta_bar);
    sd->add_option("--delta", d.delta);
    sd->add_option("--eps", d.eps);
    sd->add_option("--A-scaled-lo", d.A_lo, "A*sqrt(M) at the low end");
    sd->add_option("--A-scaled-hi", d.A_hi, "A*sqrt(M) at the high end");
    sd->add_option("--n-coarse", d.n_coarse);
    sd->add_option("--periods", d.periods);

    // --- emit-figure -----------------------------------------------------------
    auto* fig = app.add_subcommand("emit-figure",
                                   "reshape run outputs into plot-ready bundles");
    std::string fig_dir, fig_id;
    fig->add_option("run_dir", fig_dir)->required();
    fig->add_option("figure", fig_id, "orbit3d, branch or raster")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            qifc::RunConfig cfg = qifc::parse_config_file(config_path);
            if (g.out.size()) cfg.out_root = g.out;
            return execute(cfg);
        }
        if (mf->parsed()) {
            auto cfg = base_config(g, qifc::ExperimentKind::simulate_meanfield);
            json ex{{"model", m.model},   {"delta", m.delta}, {"J", m.J},
                    {"tau_s", m.tau_s},   {"eta_bar", m.eta_bar},
                    {"start_sheet", m.sheet}, {"method", m.method},
                    {"transient_periods", m.transient},
                    {"eval_periods", m.eval},
                    {"forcing", json{{"A", m.A}, {"eps", m.eps}}}};
            if (m.model == "mpr") {
                ex["Gamma"] = m.Gamma;
                ex["g"] = m.gel;
                ex["a"] = m.a;
            } else {
                ex["M"] = m.M;
                ex["delta_gamma"] = m.delta_gamma;
            }
            cfg.experiment = ex;
            return execute(cfg);
        }
        if (net->parsed()) {
            auto cfg = base_config(g, qifc::ExperimentKind::simulate_network);
            json ex{{"net", n.kind},       {"N", n.N},
                    {"J", n.J},            {"tau_s", n.tau_s},
                    {"eta_bar", n.eta_bar},{"delta", n.delta},
                    {"periods", n.periods},{"record_dt", n.record_dt},
                    {"bin_dt", n.bin_dt},  {"spin_up_time", n.spin},
                    {"keep_spikes", !n.no_spikes},
                    {"integrator", n.integrator},
                    {"forcing", json{{"A", n.A}, {"eps", n.eps}}}};
            if (n.kind == "dense") {
                ex["V_t"] = n.V_t;
                ex["V_r"] = -n.V_t;
                ex["eta_mode"] = n.eta_mode.empty() ? "quantile" : n.eta_mode;
                if (n.hold) ex["refractory_hold"] = true;
            } else if (n.kind == "sparse") {
                ex["M"] = n.M;
                ex["delta_gamma"] = n.delta_gamma;
                ex["eta_mode"] = n.eta_mode.empty() ? "iid" : n.eta_mode;
            } else if (n.theta_threshold > 0) {
                ex["theta_threshold"] = n.theta_threshold;
            }
            cfg.experiment = ex;
            return execute(cfg);
        }
        if (man->parsed()) {
            auto cfg = base_config(g, qifc::ExperimentKind::analyze_manifold);
            json ex{{"model", a.model},       {"delta", a.delta},
                    {"eta_bar", a.eta_bar},   {"v_lo", a.v_lo},
                    {"v_hi", a.v_hi},         {"scan_points", a.scan_points},
                    {"canard_arclength", a.arclength},
                    {"n_samples", a.n_samples}};
            if (a.model == "mpr") {
                ex["J_tilde"] = a.J_tilde;
                ex["gamma_tilde"] = a.gamma_tilde;
            } else {
                ex["J"] = a.J;
                ex["M"] = a.M;
                ex["delta_gamma"] = a.delta_gamma;
            }
            cfg.experiment = ex;
            return execute(cfg);
        }
        if (sw->parsed()) {
            auto cfg = base_config(g, qifc::ExperimentKind::sweep);
            cfg.experiment =
                json{{"target", s.target},   {"mode", s.mode},
                     {"start_sheet", s.sheet},{"measure", s.measure},
                     {"delta", s.delta},     {"J", s.J},
                     {"tau_s", s.tau_s},     {"eta_bar", s.eta_bar},
                     {"eps", s.eps},         {"A_lo", s.A_lo},
                     {"A_hi", s.A_hi},       {"tol_A", s.tol},
                     {"n_coarse", s.n_coarse},{"refine_depth", s.refine_depth}};
            return execute(cfg);
        }
        if (cs->parsed()) {
            auto cfg = base_config(g, qifc::ExperimentKind::classify_scenario);
            cfg.experiment = json{{"delta", c.delta},     {"J", c.J},
                                  {"tau_s", c.tau_s},     {"eta_bar", c.eta_bar},
                                  {"eps", c.eps},         {"bisect_tol", c.bisect_tol},
                                  {"secondary_samples", c.secondary_samples}};
            return execute(cfg);
        }
        if (sd->parsed()) {
            auto cfg = base_config(g, qifc::ExperimentKind::sparse_demo);
            cfg.experiment =
                json{{"N", d.N},           {"M", d.M},
                     {"delta_gamma", d.delta_gamma},
                     {"J", d.J},           {"tau_s", d.tau_s},
                     {"eta_bar", d.eta_bar},{"delta", d.delta},
                     {"eps", d.eps},       {"A_scaled_lo", d.A_lo},
                     {"A_scaled_hi", d.A_hi},{"n_coarse", d.n_coarse},
                     {"periods", d.periods}};
            return execute(cfg);
        }
        if (fig->parsed()) {
            const auto res = qifc::emit_figure_data(fig_dir, fig_id);
            if (res.exit_code != 0) std::cerr << res.message << "\n";
            else std::cout << "figure bundle: " << res.dir.string() << "\n";
            return res.exit_code;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
