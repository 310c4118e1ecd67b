#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "qifc/params.hpp"

namespace qifc {

enum class ExperimentKind {
    simulate_network,
    simulate_meanfield,
    analyze_manifold,
    sweep,
    classify_scenario,
    sparse_demo,
};

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from(const std::string& s);

// Full description of one run. Serializes losslessly to canonical
// (key-sorted) JSON; the FNV-1a hash of that serialization names the run
// directory.
struct RunConfig {
    ExperimentKind kind = ExperimentKind::simulate_meanfield;
    std::uint64_t seed = 1;
    std::string out_root;  // empty: cwd or $QIFC_OUT
    Convention convention = Convention::pi2;
    JumpConvention jump = JumpConvention::meanfield;
    double dt = 0.0;  // 0: derived default
    bool quiet = false;

    // experiment payload, schema-checked per kind
    nlohmann::json experiment = nlohmann::json::object();

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);

    std::string canonical() const;  // key-sorted, locale-independent dump
    std::string hash() const;       // 16 hex chars of fnv1a64(canonical)
};

RunConfig parse_config_file(const std::filesystem::path& path);

// schema validation with messages naming the offending key; throws
// std::invalid_argument
void validate_config(const RunConfig& cfg);

}  // namespace qifc
