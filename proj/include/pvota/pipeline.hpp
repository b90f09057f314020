#pragma once

// End-to-end run: parse, build, prune, ingest, fit, match, classify.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvota/deviation.hpp"
#include "pvota/pattern.hpp"
#include "pvota/simplify.hpp"
#include "pvota/taint.hpp"
#include "pvota/telemetry.hpp"
#include "pvota/verdict.hpp"

namespace pvota {

struct RunConfig {
    std::vector<std::string> sources;
    std::vector<std::string> p_vars;
    taint::Catalogs catalogs = taint::Catalogs::defaults();
    std::map<std::string, taint::ValueType> value_types;
    std::string field, network, applog, baseline, events;
    deviation::FitOptions fit;
    pattern::MatchConfig match = pattern::MatchConfig::defaults();
    simplify::PrunePolicy prune;
    std::vector<std::string> path;  ///< analyst override, node labels

    /// Relative paths resolve against `base`.
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
    static RunConfig load(const std::filesystem::path& file);
    nlohmann::json to_json() const;
    /// Throws ConfigError for missing files or bad thresholds.
    void validate() const;

    taint::BuildOptions build_options() const;
};

script::ScriptProgram load_program(const std::vector<std::string>& paths);
taint::TaintGraph build_graph_stage(const RunConfig& cfg);
telemetry::RecordStore ingest_stage(const RunConfig& cfg);

struct RunArtifacts {
    taint::TaintGraph graph;   ///< before simplification
    taint::TaintGraph pruned;  ///< labelled
    simplify::PruneReport prune_report;
    telemetry::RecordStore store;
    deviation::ModelSet models;
    pattern::MatchLedger ledger;
    verdict::Verdict verdict;
};

RunArtifacts run_pipeline(const RunConfig& cfg);

} // namespace pvota
