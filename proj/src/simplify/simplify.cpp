#include <algorithm>
#include <set>

#include "pvota/error.hpp"
#include "pvota/simplify.hpp"

namespace pvota::simplify {

using taint::NodeId;
using taint::NodeKind;
using taint::TaintGraph;

std::string_view to_string(PruneOp op) {
    switch (op) {
    case PruneOp::ChainCollapse: return "ChainCollapse";
    case PruneOp::ConstantDrop: return "ConstantDrop";
    case PruneOp::DuplicateMerge: return "DuplicateMerge";
    case PruneOp::DeadBranchDrop: return "DeadBranchDrop";
    }
    return "?";
}

PrunePolicy PrunePolicy::from_json(const nlohmann::json& j) {
    PrunePolicy p;
    p.chain_collapse = j.value("ChainCollapse", true);
    p.constant_drop = j.value("ConstantDrop", true);
    p.duplicate_merge = j.value("DuplicateMerge", true);
    p.dead_branch_drop = j.value("DeadBranchDrop", true);
    return p;
}

nlohmann::json PrunePolicy::to_json() const {
    return {{"ChainCollapse", chain_collapse},
            {"ConstantDrop", constant_drop},
            {"DuplicateMerge", duplicate_merge},
            {"DeadBranchDrop", dead_branch_drop}};
}

double PruneReport::reduction_ratio() const {
    if (before_count == 0) return 0;
    return 1.0 - static_cast<double>(after_count) / static_cast<double>(before_count);
}

nlohmann::json PruneReport::to_json() const {
    nlohmann::json removed_j = nlohmann::json::array();
    for (const auto& r : removed) {
        nlohmann::json j{{"node", r.node}, {"entity", r.entity}, {"operation", std::string(to_string(r.op))}};
        if (r.merged_into >= 0) j["merged_into"] = r.merged_into;
        removed_j.push_back(std::move(j));
    }
    return {{"before_count", before_count},
            {"after_count", after_count},
            {"reduction_ratio", reduction_ratio()},
            {"removed", removed_j}};
}

namespace {

bool is_protected(const taint::TaintNode& n) {
    return n.kind == NodeKind::VirtualPhysical || n.kind == NodeKind::Source || n.kind == NodeKind::Sink;
}

class Pruner {
public:
    Pruner(TaintGraph g, PruneReport& report) : g_(std::move(g)), report_(report) {}

    TaintGraph take() { return std::move(g_); }

    bool chain_collapse() {
        for (const auto& [id, n] : g_.nodes()) {
            if (n.kind != NodeKind::Auxiliary || !n.pure_copy) continue;
            if (g_.pred(id).size() != 1 || g_.succ(id).size() != 1) continue;
            NodeId p = *g_.pred(id).begin();
            NodeId s = *g_.succ(id).begin();
            // Splicing onto an existing edge would merge two distinct paths.
            if (g_.has_edge(p, s)) continue;
            auto label = g_.edge_label(id, s);
            remove(id, PruneOp::ChainCollapse);
            g_.add_edge(p, s, label);
            return true;
        }
        return false;
    }

    bool constant_drop() {
        for (const auto& [id, n] : g_.nodes()) {
            if (!n.constant || is_protected(n)) continue;
            if (reaches_kind(id, {NodeKind::VirtualPhysical, NodeKind::Sink})) continue;
            remove(id, PruneOp::ConstantDrop);
            return true;
        }
        return false;
    }

    bool duplicate_merge() {
        for (const auto& [a, na] : g_.nodes()) {
            if (is_protected(na) || na.kind == NodeKind::FunctionCall) continue;
            for (NodeId b : g_.succ(a)) {
                const auto& nb = g_.node(b);
                if (nb.entity != na.entity || nb.subgraph != na.subgraph) continue;
                if (is_protected(nb) || nb.kind == NodeKind::FunctionCall) continue;
                if (!mergeable(a, b)) continue;
                merge(a, b);
                return true;
            }
        }
        return false;
    }

    bool dead_branch_drop() {
        if (g_.sinks().empty()) return false;
        for (const auto& [id, n] : g_.nodes()) {
            if (n.subgraph != taint::Subgraph::LSG || is_protected(n)) continue;
            if (reaches_kind(id, {NodeKind::Sink, NodeKind::VirtualPhysical, NodeKind::Source})) continue;
            remove(id, PruneOp::DeadBranchDrop);
            return true;
        }
        return false;
    }

private:
    bool reaches_kind(NodeId from, std::initializer_list<NodeKind> kinds) const {
        std::set<NodeId> seen{from};
        std::vector<NodeId> stack{from};
        while (!stack.empty()) {
            NodeId cur = stack.back();
            stack.pop_back();
            if (cur != from && std::find(kinds.begin(), kinds.end(), g_.node(cur).kind) != kinds.end()) return true;
            for (NodeId s : g_.succ(cur))
                if (seen.insert(s).second) stack.push_back(s);
        }
        return false;
    }

    // Contracting a->b keeps every path distinct only when no other node
    // feeds both and no node is fed by both. Either a is b's only feeder or
    // b is a's only target, otherwise the merged node connects new pairs.
    bool mergeable(NodeId a, NodeId b) const {
        if (g_.pred(b).size() != 1 && g_.succ(a).size() != 1) return false;
        for (NodeId p : g_.pred(b))
            if (p != a && (g_.has_edge(p, a) || g_.reaches(a, p))) return false;
        for (NodeId s : g_.succ(b))
            if (g_.has_edge(a, s)) return false;
        return true;
    }

    void merge(NodeId a, NodeId b) {
        std::vector<std::pair<NodeId, taint::EdgeLabel>> preds, succs;
        for (NodeId p : g_.pred(b))
            if (p != a) preds.emplace_back(p, g_.edge_label(p, b));
        for (NodeId s : g_.succ(b)) succs.emplace_back(s, g_.edge_label(b, s));
        taint::TaintNode& na = g_.node(a);
        na.weight = std::max(na.weight, g_.node(b).weight);
        na.unterminated = na.unterminated && g_.node(b).unterminated;
        remove(b, PruneOp::DuplicateMerge, a);
        for (auto [p, l] : preds) g_.add_edge(p, a, l);
        for (auto [s, l] : succs) g_.add_edge(a, s, l);
    }

    void remove(NodeId id, PruneOp op, NodeId into = -1) {
        const auto& n = g_.node(id);
        if (is_protected(n))
            throw PolicyViolation("operation " + std::string(to_string(op)) + " would remove protected node '" +
                                  n.entity + "'");
        report_.removed.push_back(Removal{id, n.entity, op, into});
        g_.remove_node(id);
    }

    TaintGraph g_;
    PruneReport& report_;
};

} // namespace

std::pair<TaintGraph, PruneReport> simplify(const TaintGraph& graph, const PrunePolicy& policy) {
    PruneReport report;
    report.before_count = graph.size();
    Pruner p(graph, report);
    for (;;) {
        if (policy.chain_collapse && p.chain_collapse()) continue;
        if (policy.constant_drop && p.constant_drop()) continue;
        if (policy.duplicate_merge && p.duplicate_merge()) continue;
        if (policy.dead_branch_drop && p.dead_branch_drop()) continue;
        break;
    }
    TaintGraph out = p.take();
    report.after_count = out.size();
    return {std::move(out), std::move(report)};
}

} // namespace pvota::simplify
