#pragma once

// Two-part dependency graph built from virtual physical variables: the upper
// subgraph (USG) by backward tracking toward taint sources and the lower
// subgraph (LSG) by forward tracking toward sinks.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pvota/defuse.hpp"
#include "pvota/script.hpp"

namespace pvota::taint {

using script::StmtId;
using NodeId = int;

enum class NodeKind { VirtualPhysical, Source, Sink, Auxiliary, FunctionCall, ArrayObjectRef, Expression };
enum class Subgraph { USG, LSG };
enum class ValueType { F, S, Other };
enum class EdgeLabel { Assign, ArgPass, Return, FieldRead, Callback };

std::string_view to_string(NodeKind k);
std::string_view to_string(Subgraph s);
std::string_view to_string(ValueType v);
std::string_view to_string(EdgeLabel l);

/// Catalogs of callee patterns (shell globs matched against the rendered
/// callee, e.g. `conn.get_response`) and callback method names.
struct Catalogs {
    std::vector<std::string> sources;
    std::vector<std::string> sinks;
    std::vector<std::string> callbacks;

    static Catalogs defaults();
    static Catalogs from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    bool is_source(std::string_view callee) const;
    bool is_sink(std::string_view callee) const;
    bool is_callback(std::string_view method) const;
};

bool glob_match(std::string_view pattern, std::string_view text);

struct TaintNode {
    NodeId id = -1;
    std::string entity;
    StmtId stmt = script::kNoStmt;
    NodeKind kind = NodeKind::Auxiliary;
    Subgraph subgraph = Subgraph::USG;
    double weight = 0;               ///< W_k; 0 when not on the USG
    ValueType value_type = ValueType::F;
    bool source_feature = false;     ///< call matching the source catalog
    bool pure_copy = false;          ///< `x = y`
    bool projection = false;         ///< `x = y.f` or `x = y[k]`
    std::string field;               ///< projected attribute or literal key
    bool constant = false;           ///< statement reads only literals
    bool unterminated = false;       ///< LSG dead end that reaches no sink
    std::string callee;              ///< FunctionCall nodes
    std::string function;            ///< enclosing function, empty at module level
    std::string text;                ///< statement text
    int line = 0;
    std::string label;               ///< N0, N1, ... after labelling
};

struct TaintEdge {
    NodeId from = -1;
    NodeId to = -1;
    EdgeLabel label = EdgeLabel::Assign;

    auto operator<=>(const TaintEdge& o) const {
        if (auto c = from <=> o.from; c != 0) return c;
        return to <=> o.to;
    }
    bool operator==(const TaintEdge& o) const { return from == o.from && to == o.to; }
};

class TaintGraph {
public:
    /// Returns the node for (entity, stmt), creating it when missing.
    NodeId add_node(const std::string& entity, StmtId stmt, bool* created = nullptr);
    /// Next id handed out by add_node; never moves backwards.
    void advance_next_id(NodeId id) { next_id_ = std::max(next_id_, id); }
    std::optional<NodeId> find(const std::string& entity, StmtId stmt) const;
    /// Adds an edge unless it is a self-loop, a duplicate, or would close a
    /// cycle. Returns true when the edge is present afterwards.
    bool add_edge(NodeId from, NodeId to, EdgeLabel label);
    void remove_edge(NodeId from, NodeId to);
    void remove_node(NodeId id);
    bool contains(NodeId id) const { return nodes_.contains(id); }
    bool has_edge(NodeId from, NodeId to) const;
    bool reaches(NodeId from, NodeId to) const;

    TaintNode& node(NodeId id) { return nodes_.at(id); }
    const TaintNode& node(NodeId id) const { return nodes_.at(id); }
    const std::map<NodeId, TaintNode>& nodes() const { return nodes_; }
    std::vector<TaintEdge> edges() const;
    const std::set<NodeId>& succ(NodeId id) const;
    const std::set<NodeId>& pred(NodeId id) const;
    EdgeLabel edge_label(NodeId from, NodeId to) const;
    std::size_t size() const { return nodes_.size(); }
    std::size_t edge_count() const;

    std::vector<NodeId> p_vars() const;
    std::vector<NodeId> sources() const;
    std::vector<NodeId> sinks() const;
    std::vector<NodeId> topological_order() const;
    NodeId next_id() const { return next_id_; }

    std::vector<std::string> warnings;

private:
    std::map<NodeId, TaintNode> nodes_;
    std::map<std::pair<std::string, StmtId>, NodeId> index_;
    std::map<NodeId, std::set<NodeId>> succ_;
    std::map<NodeId, std::set<NodeId>> pred_;
    std::map<std::pair<NodeId, NodeId>, EdgeLabel> labels_;
    NodeId next_id_ = 0;
};

struct BuildOptions {
    Catalogs catalogs = Catalogs::defaults();
    /// Explicit value types by entity name; anything else is inferred.
    std::map<std::string, ValueType> value_types;
};

/// Backward tracking from every definition of each P_var.
/// Throws PVarNotFound when a name has no definition.
TaintGraph build_usg(const script::ScriptProgram& prog, const script::DefUseChains& chains,
                     const std::vector<std::string>& p_vars, const BuildOptions& opts = {});
void assign_weights(TaintGraph& usg);
/// Marks T_src nodes and removes USG nodes that lie before them or on paths
/// without any source. Returns the number of source-less root paths dropped.
std::size_t trim_to_sources(TaintGraph& usg);
/// Forward tracking from P_var nodes already present in `graph` (or from the
/// P_var definitions when the graph is empty) until sink calls.
void build_lsg(const script::ScriptProgram& prog, const script::DefUseChains& chains,
               const std::vector<std::string>& p_vars, TaintGraph& graph, const BuildOptions& opts = {});
/// Enters callback methods through tainted member variables and continues
/// forward tracking from there. Returns the attached callbacks in order.
std::vector<std::string> attach_callbacks(const script::ScriptProgram& prog, const script::DefUseChains& chains,
                                          TaintGraph& graph, const BuildOptions& opts = {});

/// Full phase-one construction: USG, weights, trimming, LSG, callbacks.
TaintGraph build_graph(const script::ScriptProgram& prog, const std::vector<std::string>& p_vars,
                       const BuildOptions& opts = {});

/// Assigns N0.. labels: N0 is the source call downstream of every other
/// source; remaining nodes follow by longest-path layer from N0 and then by
/// statement. Nodes not reachable from N0 get U0.. labels.
void assign_labels(TaintGraph& graph);

std::string to_dot(const TaintGraph& graph);
nlohmann::json to_json(const TaintGraph& graph);
TaintGraph graph_from_json(const nlohmann::json& j);

} // namespace pvota::taint
