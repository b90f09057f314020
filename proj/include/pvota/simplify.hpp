#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pvota/taint.hpp"

namespace pvota::simplify {

enum class PruneOp { ChainCollapse, ConstantDrop, DuplicateMerge, DeadBranchDrop };

std::string_view to_string(PruneOp op);

struct PrunePolicy {
    bool chain_collapse = true;
    bool constant_drop = true;
    bool duplicate_merge = true;
    bool dead_branch_drop = true;

    static PrunePolicy from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct Removal {
    taint::NodeId node = -1;
    std::string entity;
    PruneOp op = PruneOp::ChainCollapse;
    taint::NodeId merged_into = -1;  ///< DuplicateMerge only
};

struct PruneReport {
    std::vector<Removal> removed;
    std::size_t before_count = 0;
    std::size_t after_count = 0;

    double reduction_ratio() const;
    nlohmann::json to_json() const;
};

/// Applies the enabled operations to a fixpoint in the order ChainCollapse,
/// ConstantDrop, DuplicateMerge, DeadBranchDrop, restarting after any change.
/// Throws PolicyViolation if a P_var, source or sink would be removed.
std::pair<taint::TaintGraph, PruneReport> simplify(const taint::TaintGraph& graph, const PrunePolicy& policy = {});

} // namespace pvota::simplify
