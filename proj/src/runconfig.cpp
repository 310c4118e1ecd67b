#include "qifc/runconfig.hpp"

#include <fstream>
#include <set>

#include "qifc/rng.hpp"

namespace qifc {

using nlohmann::json;

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::simulate_network: return "simulate-network";
        case ExperimentKind::simulate_meanfield: return "simulate-meanfield";
        case ExperimentKind::analyze_manifold: return "analyze-manifold";
        case ExperimentKind::sweep: return "sweep";
        case ExperimentKind::classify_scenario: return "classify-scenario";
        default: return "sparse-demo";
    }
}

ExperimentKind experiment_kind_from(const std::string& s) {
    if (s == "simulate-network") return ExperimentKind::simulate_network;
    if (s == "simulate-meanfield") return ExperimentKind::simulate_meanfield;
    if (s == "analyze-manifold") return ExperimentKind::analyze_manifold;
    if (s == "sweep") return ExperimentKind::sweep;
    if (s == "classify-scenario") return ExperimentKind::classify_scenario;
    if (s == "sparse-demo") return ExperimentKind::sparse_demo;
    throw std::invalid_argument("unknown experiment kind '" + s +
                                "' (expected one of simulate-network, "
                                "simulate-meanfield, analyze-manifold, sweep, "
                                "classify-scenario, sparse-demo)");
}

json RunConfig::to_json() const {
    json j;
    j["kind"] = to_string(kind);
    j["seed"] = seed;
    j["out_root"] = out_root;
    j["convention"] = qifc::to_string(convention);
    j["jump_convention"] = qifc::to_string(jump);
    j["dt"] = dt;
    j["quiet"] = quiet;
    j["experiment"] = experiment;
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    static const std::set<std::string> allowed{
        "kind", "seed", "out_root", "convention", "jump_convention",
        "dt",   "quiet", "experiment"};
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw std::invalid_argument("unknown config key '" + key + "'");

    RunConfig cfg;
    if (!j.contains("kind") || !j.at("kind").is_string())
        throw std::invalid_argument("config key 'kind' must be a string");
    cfg.kind = experiment_kind_from(j.at("kind").get<std::string>());
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
            throw std::invalid_argument("config key 'seed' must be an integer");
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("out_root")) {
        if (!j.at("out_root").is_string())
            throw std::invalid_argument("config key 'out_root' must be a string");
        cfg.out_root = j.at("out_root").get<std::string>();
    }
    if (j.contains("convention")) {
        const std::string c = j.at("convention").get<std::string>();
        if (c == "pi2") cfg.convention = Convention::pi2;
        else if (c == "printed") cfg.convention = Convention::printed;
        else
            throw std::invalid_argument(
                "config key 'convention' must be 'pi2' or 'printed'");
    }
    if (j.contains("jump_convention")) {
        const std::string c = j.at("jump_convention").get<std::string>();
        if (c == "meanfield") cfg.jump = JumpConvention::meanfield;
        else if (c == "literal") cfg.jump = JumpConvention::literal;
        else
            throw std::invalid_argument(
                "config key 'jump_convention' must be 'meanfield' or 'literal'");
    }
    if (j.contains("dt")) {
        if (!j.at("dt").is_number())
            throw std::invalid_argument("config key 'dt' must be a number");
        cfg.dt = j.at("dt").get<double>();
        if (cfg.dt < 0)
            throw std::invalid_argument("config key 'dt' must be >= 0");
    }
    if (j.contains("quiet")) {
        if (!j.at("quiet").is_boolean())
            throw std::invalid_argument("config key 'quiet' must be a boolean");
        cfg.quiet = j.at("quiet").get<bool>();
    }
    if (j.contains("experiment")) {
        if (!j.at("experiment").is_object())
            throw std::invalid_argument("config key 'experiment' must be an object");
        cfg.experiment = j.at("experiment");
    }
    validate_config(cfg);
    return cfg;
}

std::string RunConfig::canonical() const {
    // nlohmann::json with the default (std::map) object storage emits keys
    // in sorted order; dump with no locale dependence. Delivery options
    // (out_root, quiet) do not identify the experiment and stay out of the
    // canonical form, so hashes are stable across machines.
    json j = to_json();
    j.erase("out_root");
    j.erase("quiet");
    return j.dump();
}

std::string RunConfig::hash() const {
    const std::uint64_t h = fnv1a64(canonical());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config file " + path.string() +
                                    " is not valid JSON: " + e.what());
    }
    return RunConfig::from_json(j);
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw std::invalid_argument("unknown key '" + key + "' in " + where);
}

double need_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key) || !obj.at(key).is_number())
        throw std::invalid_argument("key '" + key + "' in " + where +
                                    " must be present and numeric");
    return obj.at(key).get<double>();
}

double opt_number(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number())
        throw std::invalid_argument("key '" + key + "' must be numeric");
    return obj.at(key).get<double>();
}

void validate_forcing(const json& f, const std::string& where) {
    check_keys(f, {"A", "eps", "eta_bar"}, where);
    ForcingParams fp;
    fp.A = need_number(f, "A", where);
    fp.eps = need_number(f, "eps", where);
    fp.eta_bar = opt_number(f, "eta_bar", 0.0);
    try {
        fp.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument(where + ": " + e.what());
    }
}

}  // namespace

void validate_config(const RunConfig& cfg) {
    const json& ex = cfg.experiment;
    const std::string where = "experiment (" + to_string(cfg.kind) + ")";
    switch (cfg.kind) {
        case ExperimentKind::simulate_meanfield: {
            check_keys(ex,
                       {"model", "delta", "J", "tau_s", "eta_bar", "Gamma", "g", "a",
                        "N", "M", "delta_gamma", "forcing", "start_sheet",
                        "transient_periods", "eval_periods", "method", "record_dt"},
                       where);
            const std::string model =
                ex.contains("model") ? ex.at("model").get<std::string>() : "mpr";
            if (model != "mpr" && model != "sparse-heuristic")
                throw std::invalid_argument(
                    "experiment.model must be 'mpr' or 'sparse-heuristic'");
            need_number(ex, "delta", where);
            need_number(ex, "J", where);
            const double tau_s = need_number(ex, "tau_s", where);
            if (tau_s <= 0)
                throw std::invalid_argument("experiment.tau_s must be > 0");
            if (!ex.contains("forcing"))
                throw std::invalid_argument(where + " requires a 'forcing' block");
            validate_forcing(ex.at("forcing"), where + ".forcing");
            break;
        }
        case ExperimentKind::simulate_network: {
            check_keys(ex,
                       {"net", "N", "M", "J", "tau_s", "eta_bar", "delta",
                        "delta_gamma", "V_t", "V_r", "eta_mode", "forcing",
                        "periods", "record_dt", "bin_dt", "spin_up_time",
                        "keep_spikes", "integrator", "refractory_hold",
                        "theta_threshold"},
                       where);
            const std::string net =
                ex.contains("net") ? ex.at("net").get<std::string>() : "dense";
            if (net != "dense" && net != "sparse" && net != "cell-theta")
                throw std::invalid_argument(
                    "experiment.net must be 'dense', 'sparse' or 'cell-theta'");
            const double tau_s = need_number(ex, "tau_s", where);
            if (tau_s <= 0)
                throw std::invalid_argument("experiment.tau_s must be > 0");
            if (!ex.contains("forcing"))
                throw std::invalid_argument(where + " requires a 'forcing' block");
            validate_forcing(ex.at("forcing"), where + ".forcing");
            break;
        }
        case ExperimentKind::analyze_manifold: {
            check_keys(ex,
                       {"model", "delta", "J_tilde", "gamma_tilde", "eta_bar", "M",
                        "delta_gamma", "J", "v_lo", "v_hi", "scan_points",
                        "canard_arclength", "n_samples"},
                       where);
            need_number(ex, "delta", where);
            break;
        }
        case ExperimentKind::sweep: {
            check_keys(ex,
                       {"target", "mode", "delta", "J", "tau_s", "eta_bar", "Gamma",
                        "g", "a", "eps", "start_sheet", "A_lo", "A_hi", "tol_A",
                        "n_coarse", "refine_depth", "measure", "N", "M",
                        "delta_gamma", "transient_periods", "eval_periods"},
                       where);
            const double lo = need_number(ex, "A_lo", where);
            const double hi = need_number(ex, "A_hi", where);
            if (!(lo <= hi))
                throw std::invalid_argument("experiment requires A_lo <= A_hi");
            break;
        }
        case ExperimentKind::classify_scenario: {
            check_keys(ex,
                       {"delta", "J", "tau_s", "eta_bar", "eps", "bisect_tol",
                        "secondary_samples"},
                       where);
            need_number(ex, "eta_bar", where);
            break;
        }
        case ExperimentKind::sparse_demo: {
            check_keys(ex,
                       {"N", "M", "delta_gamma", "J", "tau_s", "eta_bar", "delta",
                        "eps", "A_scaled_lo", "A_scaled_hi", "n_coarse", "periods"},
                       where);
            break;
        }
    }
}

}  // namespace qifc
