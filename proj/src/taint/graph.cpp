#include <algorithm>
#include <fnmatch.h>
#include <functional>
#include <sstream>

#include "pvota/error.hpp"
#include "pvota/taint.hpp"

namespace pvota::taint {

namespace {

const std::set<NodeId> kEmpty;

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::array<E, N>& values) {
    for (E v : values)
        if (to_string(v) == s) return v;
    throw ConfigError("unknown enum value '" + s + "'");
}

constexpr std::array kAllKinds = {NodeKind::VirtualPhysical, NodeKind::Source,         NodeKind::Sink,
                                  NodeKind::Auxiliary,       NodeKind::FunctionCall,   NodeKind::ArrayObjectRef,
                                  NodeKind::Expression};
constexpr std::array kAllSubgraphs = {Subgraph::USG, Subgraph::LSG};
constexpr std::array kAllValueTypes = {ValueType::F, ValueType::S, ValueType::Other};
constexpr std::array kAllLabels = {EdgeLabel::Assign, EdgeLabel::ArgPass, EdgeLabel::Return, EdgeLabel::FieldRead,
                                   EdgeLabel::Callback};

bool any_match(const std::vector<std::string>& patterns, std::string_view text) {
    return std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) { return glob_match(p, text); });
}

} // namespace

std::string_view to_string(NodeKind k) {
    switch (k) {
    case NodeKind::VirtualPhysical: return "VirtualPhysical";
    case NodeKind::Source: return "Source";
    case NodeKind::Sink: return "Sink";
    case NodeKind::Auxiliary: return "Auxiliary";
    case NodeKind::FunctionCall: return "FunctionCall";
    case NodeKind::ArrayObjectRef: return "ArrayObjectRef";
    case NodeKind::Expression: return "Expression";
    }
    return "?";
}

std::string_view to_string(Subgraph s) { return s == Subgraph::USG ? "USG" : "LSG"; }

std::string_view to_string(ValueType v) {
    switch (v) {
    case ValueType::F: return "F";
    case ValueType::S: return "S";
    case ValueType::Other: return "Other";
    }
    return "?";
}

std::string_view to_string(EdgeLabel l) {
    switch (l) {
    case EdgeLabel::Assign: return "assign";
    case EdgeLabel::ArgPass: return "arg-pass";
    case EdgeLabel::Return: return "return";
    case EdgeLabel::FieldRead: return "field-read";
    case EdgeLabel::Callback: return "callback";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Catalogs
// ---------------------------------------------------------------------------

bool glob_match(std::string_view pattern, std::string_view text) {
    return fnmatch(std::string(pattern).c_str(), std::string(text).c_str(), 0) == 0;
}

Catalogs Catalogs::defaults() {
    Catalogs c;
    c.sources = {"GridAPPSD",     "*.get_response", "input",          "*.read",     "*.readline", "*.readlines",
                 "*.recv",        "*.query",        "*.query_data",   "*.query_object", "*.parse_args",
                 "*.getenv",      "requests.get",   "*.fetch"};
    c.sinks = {"*.send", "*.publish", "*.send_message", "*.dispatch"};
    c.callbacks = {"_on_*", "on_message"};
    return c;
}

Catalogs Catalogs::from_json(const nlohmann::json& j) {
    Catalogs c = defaults();
    if (j.contains("sources")) c.sources = j.at("sources").get<std::vector<std::string>>();
    if (j.contains("sinks")) c.sinks = j.at("sinks").get<std::vector<std::string>>();
    if (j.contains("callbacks")) c.callbacks = j.at("callbacks").get<std::vector<std::string>>();
    return c;
}

nlohmann::json Catalogs::to_json() const { return {{"sources", sources}, {"sinks", sinks}, {"callbacks", callbacks}}; }

bool Catalogs::is_source(std::string_view callee) const { return any_match(sources, callee); }
bool Catalogs::is_sink(std::string_view callee) const { return any_match(sinks, callee); }
bool Catalogs::is_callback(std::string_view method) const { return any_match(callbacks, method); }

// ---------------------------------------------------------------------------
// Graph container
// ---------------------------------------------------------------------------

NodeId TaintGraph::add_node(const std::string& entity, StmtId stmt, bool* created) {
    auto key = std::make_pair(entity, stmt);
    if (auto it = index_.find(key); it != index_.end()) {
        if (created) *created = false;
        return it->second;
    }
    NodeId id = next_id_++;
    TaintNode n;
    n.id = id;
    n.entity = entity;
    n.stmt = stmt;
    nodes_.emplace(id, std::move(n));
    index_.emplace(key, id);
    if (created) *created = true;
    return id;
}

std::optional<NodeId> TaintGraph::find(const std::string& entity, StmtId stmt) const {
    auto it = index_.find({entity, stmt});
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool TaintGraph::has_edge(NodeId from, NodeId to) const {
    auto it = succ_.find(from);
    return it != succ_.end() && it->second.contains(to);
}

bool TaintGraph::reaches(NodeId from, NodeId to) const {
    if (from == to) return true;
    std::set<NodeId> seen{from};
    std::vector<NodeId> stack{from};
    while (!stack.empty()) {
        NodeId cur = stack.back();
        stack.pop_back();
        for (NodeId n : succ(cur)) {
            if (n == to) return true;
            if (seen.insert(n).second) stack.push_back(n);
        }
    }
    return false;
}

bool TaintGraph::add_edge(NodeId from, NodeId to, EdgeLabel label) {
    if (from == to) return false;
    if (has_edge(from, to)) return true;
    if (reaches(to, from)) return false;
    succ_[from].insert(to);
    pred_[to].insert(from);
    labels_[{from, to}] = label;
    return true;
}

void TaintGraph::remove_edge(NodeId from, NodeId to) {
    if (auto it = succ_.find(from); it != succ_.end()) it->second.erase(to);
    if (auto it = pred_.find(to); it != pred_.end()) it->second.erase(from);
    labels_.erase({from, to});
}

void TaintGraph::remove_node(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) return;
    for (NodeId s : std::set<NodeId>(succ(id))) remove_edge(id, s);
    for (NodeId p : std::set<NodeId>(pred(id))) remove_edge(p, id);
    index_.erase({it->second.entity, it->second.stmt});
    succ_.erase(id);
    pred_.erase(id);
    nodes_.erase(it);
}

std::vector<TaintEdge> TaintGraph::edges() const {
    std::vector<TaintEdge> out;
    for (const auto& [from, tos] : succ_)
        for (NodeId to : tos) out.push_back(TaintEdge{from, to, labels_.at({from, to})});
    return out;
}

std::size_t TaintGraph::edge_count() const { return labels_.size(); }

const std::set<NodeId>& TaintGraph::succ(NodeId id) const {
    auto it = succ_.find(id);
    return it == succ_.end() ? kEmpty : it->second;
}

const std::set<NodeId>& TaintGraph::pred(NodeId id) const {
    auto it = pred_.find(id);
    return it == pred_.end() ? kEmpty : it->second;
}

EdgeLabel TaintGraph::edge_label(NodeId from, NodeId to) const { return labels_.at({from, to}); }

namespace {

std::vector<NodeId> of_kind(const std::map<NodeId, TaintNode>& nodes, NodeKind k) {
    std::vector<NodeId> out;
    for (const auto& [id, n] : nodes)
        if (n.kind == k) out.push_back(id);
    return out;
}

} // namespace

std::vector<NodeId> TaintGraph::p_vars() const { return of_kind(nodes_, NodeKind::VirtualPhysical); }
std::vector<NodeId> TaintGraph::sources() const { return of_kind(nodes_, NodeKind::Source); }
std::vector<NodeId> TaintGraph::sinks() const { return of_kind(nodes_, NodeKind::Sink); }

std::vector<NodeId> TaintGraph::topological_order() const {
    std::map<NodeId, std::size_t> indeg;
    for (const auto& [id, n] : nodes_) indeg[id] = pred(id).size();
    std::set<std::pair<StmtId, NodeId>> ready;
    for (const auto& [id, d] : indeg)
        if (d == 0) ready.insert({nodes_.at(id).stmt, id});
    std::vector<NodeId> out;
    while (!ready.empty()) {
        auto [stmt, id] = *ready.begin();
        ready.erase(ready.begin());
        out.push_back(id);
        for (NodeId s : succ(id))
            if (--indeg[s] == 0) ready.insert({nodes_.at(s).stmt, s});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

void assign_labels(TaintGraph& graph) {
    for (const auto& [id, n] : graph.nodes()) graph.node(id).label.clear();
    std::vector<NodeId> sources = graph.sources();
    std::optional<NodeId> anchor;
    std::size_t best = 0;
    for (NodeId s : sources) {
        std::size_t upstream = 0;
        for (NodeId o : sources)
            if (o != s && graph.reaches(o, s)) ++upstream;
        if (!anchor || upstream > best || (upstream == best && graph.node(s).stmt > graph.node(*anchor).stmt)) {
            anchor = s;
            best = upstream;
        }
    }

    std::map<NodeId, int> layer;
    if (anchor) {
        layer[*anchor] = 0;
        for (NodeId id : graph.topological_order()) {
            auto it = layer.find(id);
            if (it == layer.end()) continue;
            for (NodeId s : graph.succ(id)) layer[s] = std::max(layer.count(s) ? layer[s] : 0, it->second + 1);
        }
    }
    std::vector<std::tuple<int, StmtId, NodeId>> order;
    for (const auto& [id, l] : layer) order.emplace_back(l, graph.node(id).stmt, id);
    std::sort(order.begin(), order.end());
    int k = 0;
    for (const auto& [l, stmt, id] : order) graph.node(id).label = "N" + std::to_string(k++);
    int u = 0;
    for (NodeId id : graph.topological_order())
        if (!layer.contains(id)) graph.node(id).label = "U" + std::to_string(u++);
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

} // namespace

std::string to_dot(const TaintGraph& graph) {
    std::ostringstream out;
    out << "digraph taint {\n  rankdir=TB;\n  node [shape=box, style=filled, fontname=\"Helvetica\"];\n";
    for (const auto& [id, n] : graph.nodes()) {
        bool special =
            n.kind == NodeKind::VirtualPhysical || n.kind == NodeKind::Source || n.kind == NodeKind::Sink;
        const char* color = special ? "yellow" : n.subgraph == Subgraph::USG ? "lightblue" : "salmon";
        std::string label = n.label.empty() ? n.entity : n.label + ": " + n.entity;
        out << "  n" << id << " [label=\"" << dot_escape(label) << "\", fillcolor=" << color << ", class=\""
            << to_string(n.subgraph) << ' ' << to_string(n.kind) << "\"];\n";
    }
    for (const auto& e : graph.edges())
        out << "  n" << e.from << " -> n" << e.to << " [label=\"" << to_string(e.label) << "\"];\n";
    out << "}\n";
    return out.str();
}

nlohmann::json to_json(const TaintGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [id, n] : graph.nodes()) {
        nlohmann::json j{{"id", id},
                         {"entity", n.entity},
                         {"stmt", n.stmt},
                         {"kind", std::string(to_string(n.kind))},
                         {"subgraph", std::string(to_string(n.subgraph))},
                         {"weight", n.weight},
                         {"value_type", std::string(to_string(n.value_type))},
                         {"source_feature", n.source_feature},
                         {"pure_copy", n.pure_copy},
                         {"projection", n.projection},
                         {"constant", n.constant},
                         {"unterminated", n.unterminated},
                         {"function", n.function},
                         {"text", n.text},
                         {"line", n.line}};
        if (!n.callee.empty()) j["callee"] = n.callee;
        if (!n.field.empty()) j["field"] = n.field;
        if (!n.label.empty()) j["label"] = n.label;
        nodes.push_back(std::move(j));
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : graph.edges())
        edges.push_back({{"from", e.from}, {"to", e.to}, {"label", std::string(to_string(e.label))}});
    return {{"nodes", nodes}, {"edges", edges}, {"warnings", graph.warnings}, {"next_id", graph.next_id()}};
}

TaintGraph graph_from_json(const nlohmann::json& j) {
    TaintGraph g;
    std::map<NodeId, NodeId> remap;
    for (const auto& jn : j.at("nodes")) {
        g.advance_next_id(jn.at("id").get<NodeId>());
        NodeId id = g.add_node(jn.at("entity").get<std::string>(), jn.at("stmt").get<StmtId>());
        remap[jn.at("id").get<NodeId>()] = id;
        TaintNode& n = g.node(id);
        n.kind = parse_enum(jn.at("kind").get<std::string>(), kAllKinds);
        n.subgraph = parse_enum(jn.at("subgraph").get<std::string>(), kAllSubgraphs);
        n.value_type = parse_enum(jn.at("value_type").get<std::string>(), kAllValueTypes);
        n.weight = jn.value("weight", 0.0);
        n.source_feature = jn.value("source_feature", false);
        n.pure_copy = jn.value("pure_copy", false);
        n.projection = jn.value("projection", false);
        n.field = jn.value("field", "");
        n.constant = jn.value("constant", false);
        n.unterminated = jn.value("unterminated", false);
        n.callee = jn.value("callee", "");
        n.function = jn.value("function", "");
        n.text = jn.value("text", "");
        n.line = jn.value("line", 0);
        n.label = jn.value("label", "");
    }
    for (const auto& je : j.at("edges")) {
        NodeId from = remap.at(je.at("from").get<NodeId>());
        NodeId to = remap.at(je.at("to").get<NodeId>());
        if (!g.add_edge(from, to, parse_enum(je.at("label").get<std::string>(), kAllLabels)))
            throw ConfigError("graph JSON contains a cycle or self-loop");
    }
    if (j.contains("warnings")) g.warnings = j.at("warnings").get<std::vector<std::string>>();
    g.advance_next_id(j.value("next_id", NodeId{0}));
    return g;
}

} // namespace pvota::taint
