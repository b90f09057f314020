#include <algorithm>
#include <cmath>
#include <functional>

#include "pvota/error.hpp"
#include "pvota/pattern.hpp"

namespace pvota::pattern {

using telemetry::Channel;
using telemetry::ChannelRecord;
using telemetry::Value;

std::string to_string(GlobalPattern p) { return "GPTN" + std::to_string(static_cast<int>(p)); }
std::string to_string(LocalPattern p) { return "LPTN" + std::to_string(static_cast<int>(p)); }

namespace {

int parse_id(std::string_view s, std::string_view prefix, int max) {
    if (s.substr(0, prefix.size()) == prefix) {
        std::string rest(s.substr(prefix.size()));
        if (rest.size() == 1 && rest[0] >= '1' && rest[0] - '0' <= max) return rest[0] - '0';
    }
    throw ConfigError("unknown pattern id '" + std::string(s) + "'");
}

} // namespace

GlobalPattern parse_global(std::string_view s) { return static_cast<GlobalPattern>(parse_id(s, "GPTN", 8)); }
LocalPattern parse_local(std::string_view s) { return static_cast<LocalPattern>(parse_id(s, "LPTN", 5)); }

std::string describe(const GlobalTriple& t) {
    return std::string("<") + (t.dn_consistent ? "C_dn" : "I_dn") + ", " + (t.na_consistent ? "C_na" : "I_na") +
           ", " + (t.deviated ? "Y" : "N") + ">";
}

GlobalTriple definition(GlobalPattern p) {
    switch (p) {
    case GlobalPattern::GPTN1: return {false, true, true};
    case GlobalPattern::GPTN2: return {false, true, false};
    case GlobalPattern::GPTN3: return {true, false, true};
    case GlobalPattern::GPTN4: return {true, false, false};
    case GlobalPattern::GPTN5: return {true, true, true};
    case GlobalPattern::GPTN6: return {true, true, false};
    case GlobalPattern::GPTN7: return {true, false, true};
    case GlobalPattern::GPTN8: return {true, false, false};
    }
    return {};
}

bool dispatch_specific(GlobalPattern p) { return p == GlobalPattern::GPTN7 || p == GlobalPattern::GPTN8; }

bool covers(GlobalPattern p, const GlobalTriple& t, Direction dir) {
    GlobalTriple d = definition(p);
    if (t.deviated != d.deviated) return false;
    bool dispatch_row = dir == Direction::dispatch && t.dn_consistent && !t.na_consistent;
    if (dispatch_specific(p)) return dispatch_row;
    if (dispatch_row) return false;
    if (!d.dn_consistent) return !t.dn_consistent;
    return t.dn_consistent && t.na_consistent == d.na_consistent;
}

GlobalPattern classify_triple(const GlobalTriple& t, Direction dir) {
    for (int i = 1; i <= 8; ++i)
        if (covers(static_cast<GlobalPattern>(i), t, dir)) return static_cast<GlobalPattern>(i);
    throw Error("match", "no global pattern covers " + describe(t));
}

std::string_view to_string(ValueKind k) {
    switch (k) {
    case ValueKind::F: return "F";
    case ValueKind::S: return "S";
    case ValueKind::Others: return "Others";
    }
    return "?";
}

std::string_view to_string(Availability a) {
    switch (a) {
    case Availability::Logged: return "logged";
    case Availability::Estimated: return "estimated";
    case Availability::None: return "none";
    }
    return "?";
}

bool covers(LocalPattern p, ValueKind kind, Availability avail, bool as_expected) {
    bool others = kind == ValueKind::Others;
    bool known = avail != Availability::None;
    switch (p) {
    case LocalPattern::LPTN1: return !others && known && as_expected;
    case LocalPattern::LPTN2: return kind == ValueKind::F && known && !as_expected;
    case LocalPattern::LPTN3: return kind == ValueKind::S && known && !as_expected;
    case LocalPattern::LPTN4: return !others && !known;
    case LocalPattern::LPTN5: return others;
    }
    return false;
}

LocalPattern classify_node(ValueKind kind, Availability avail, bool as_expected) {
    for (int i = 1; i <= 5; ++i)
        if (covers(static_cast<LocalPattern>(i), kind, avail, as_expected)) return static_cast<LocalPattern>(i);
    throw Error("match", "no local pattern covers node");
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

MatchConfig MatchConfig::defaults() {
    MatchConfig c;
    c.groups.push_back(MessageGroup{"response", "response", {"angle", "magnitude"}});
    c.aliases = {{"equipment_p_meas", "magnitude"}, {"equipment_q_meas", "angle"}};
    c.node_events = {{"response", {1, 2, 3}},
                     {"equipment_p_meas", {5, 6}},
                     {"equipment_q_meas", {5, 7}},
                     {"forward_value", {10}},
                     {"reverse_value", {11}},
                     {"forward_diff", {13, 14}},
                     {"reverse_diff", {13, 14}},
                     {"conn.send(input_topic, message)", {15}}};
    return c;
}

MatchConfig MatchConfig::from_json(const nlohmann::json& j) {
    MatchConfig c = defaults();
    if (j.contains("tau_h")) c.thresholds.tau_h = j.at("tau_h").get<double>();
    if (j.contains("tau_m")) c.thresholds.tau_m = j.at("tau_m").get<double>();
    if (j.contains("tau_l")) c.thresholds.tau_l = j.at("tau_l").get<double>();
    c.thresholds.validate();
    c.tolerance = j.value("tolerance", c.tolerance);
    c.window_ms = j.value("window_ms", c.window_ms);
    if (j.contains("groups")) {
        c.groups.clear();
        for (const auto& g : j.at("groups"))
            c.groups.push_back(MessageGroup{g.at("name").get<std::string>(), g.at("node").get<std::string>(),
                                            g.at("fields").get<std::vector<std::string>>()});
    }
    if (j.contains("aliases")) c.aliases = j.at("aliases").get<std::map<std::string, std::string>>();
    if (j.contains("node_events")) {
        c.node_events.clear();
        for (const auto& [entity, arr] : j.at("node_events").items()) {
            auto& types = c.node_events[entity];
            for (const auto& e : arr) {
                auto t = telemetry::parse_event_type(e.get<std::string>());
                if (!t) throw ConfigError("unknown event type '" + e.get<std::string>() + "'");
                types.push_back(*t);
            }
        }
    }
    return c;
}

nlohmann::json MatchConfig::to_json() const {
    nlohmann::json groups_j = nlohmann::json::array();
    for (const auto& g : groups) groups_j.push_back({{"name", g.name}, {"node", g.node}, {"fields", g.fields}});
    nlohmann::json events_j = nlohmann::json::object();
    for (const auto& [entity, types] : node_events) {
        auto& arr = events_j[entity] = nlohmann::json::array();
        for (int t : types) arr.push_back(telemetry::event_name(t));
    }
    return {{"tau_h", thresholds.tau_h}, {"tau_m", thresholds.tau_m}, {"tau_l", thresholds.tau_l},
            {"tolerance", tolerance},    {"window_ms", window_ms},    {"groups", groups_j},
            {"aliases", aliases},        {"node_events", events_j}};
}

// ---------------------------------------------------------------------------
// Global matching
// ---------------------------------------------------------------------------

namespace {

bool same_value(const Value& x, const Value& y, double tol) {
    if (x.index() != y.index()) return false;
    if (const auto* s = std::get_if<std::string>(&x)) return *s == std::get<std::string>(y);
    double a = std::get<double>(x), b = std::get<double>(y);
    return a == b || std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

const deviation::DeviationModel& model_for(const deviation::ModelSet& models, const std::string& var) {
    auto it = models.find(var);
    if (it == models.end()) throw Error("match", "no baseline model for '" + var + "'");
    return it->second;
}

} // namespace

GlobalResult match_global(const telemetry::RecordStore& store, const deviation::ModelSet& models,
                          const MatchConfig& cfg) {
    GlobalResult out;
    bool has_e1 = std::any_of(store.events.begin(), store.events.end(), [](const auto& e) { return e.type == 1; });
    for (const auto& g : cfg.groups) {
        std::map<std::string, std::vector<telemetry::AlignedTriple>> per_field;
        std::size_t epochs = 0;
        for (const auto& f : g.fields) {
            per_field[f] = telemetry::align(store.records, f, cfg.window_ms);
            epochs = std::max(epochs, per_field[f].size());
        }
        for (std::size_t k = 0; k < epochs; ++k) {
            GlobalMatch m;
            m.group = g.name;
            m.epoch = static_cast<int>(k);
            std::string missing;
            std::optional<Direction> dir;
            bool mixed = false;
            for (const auto& f : g.fields) {
                const auto& trs = per_field[f];
                if (k >= trs.size() || !trs[k].complete()) {
                    missing += (missing.empty() ? "" : ", ") + f;
                    continue;
                }
                const auto& tr = trs[k];
                if (tr.flagged) out.flagged.push_back(g.name + "@" + std::to_string(k) + ": " + f);
                if (!dir)
                    dir = tr.direction;
                else if (*dir != tr.direction)
                    mixed = true;
                m.triple.dn_consistent = m.triple.dn_consistent && same_value(tr.d->v, tr.n->v, cfg.tolerance);
                m.triple.na_consistent = m.triple.na_consistent && same_value(tr.n->v, tr.a->v, cfg.tolerance);
                auto s = deviation::score(model_for(models, f), tr.d->v, cfg.thresholds);
                m.triple.deviated = m.triple.deviated || s.deviated;
                m.scores[f] = s;
                m.evidence.insert(m.evidence.end(), {*tr.d, *tr.n, *tr.a});
            }
            if (!missing.empty()) {
                out.incomplete.push_back(g.name + "@" + std::to_string(k) + ": missing channels for " + missing);
                continue;
            }
            m.direction = mixed || !dir ? Direction::unknown : *dir;
            m.pattern = classify_triple(m.triple, m.direction);
            if (has_e1) m.event = 1;
            out.matches.push_back(std::move(m));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Path selection
// ---------------------------------------------------------------------------

std::vector<NodeId> PathSelection::nodes() const {
    std::set<NodeId> all;
    for (const auto& p : selected) all.insert(p.nodes.begin(), p.nodes.end());
    return {all.begin(), all.end()};
}

std::vector<std::size_t> PathSelection::matched_events() const {
    std::set<std::size_t> idx;
    for (const auto& p : selected)
        for (const auto& [e, n] : p.assignment) idx.insert(e);
    return {idx.begin(), idx.end()};
}

namespace {

bool produces(const taint::TaintNode& n, int type, const std::map<std::string, std::vector<int>>& node_events) {
    auto it = node_events.find(n.entity);
    return it != node_events.end() && std::find(it->second.begin(), it->second.end(), type) != it->second.end();
}

SelectedPath score_path(const taint::TaintGraph& g, std::vector<NodeId> nodes, const telemetry::EventSequence& ev,
                        const std::map<std::string, std::vector<int>>& node_events) {
    std::size_t k = nodes.size(), m = ev.size();
    std::vector<std::vector<int>> f(k + 1, std::vector<int>(m + 1, 0));
    auto prod = [&](std::size_t i, std::size_t j) { return produces(g.node(nodes[i - 1]), ev[j - 1].type, node_events); };
    for (std::size_t i = 1; i <= k; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            f[i][j] = std::max(f[i - 1][j], f[i][j - 1] + (prod(i, j) ? 1 : 0));
    SelectedPath p;
    p.score = f[k][m];
    std::size_t i = k, j = m;
    while (i > 0 && j > 0) {
        if (prod(i, j) && f[i][j] == f[i][j - 1] + 1) {
            p.assignment.emplace_back(j - 1, nodes[i - 1]);
            --j;
        } else if (f[i][j] == f[i - 1][j]) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(p.assignment.begin(), p.assignment.end());
    p.nodes = std::move(nodes);
    return p;
}

bool proper_suffix(const std::vector<NodeId>& shorter, const std::vector<NodeId>& longer) {
    return shorter.size() < longer.size() && std::equal(shorter.rbegin(), shorter.rend(), longer.rbegin());
}

} // namespace

PathSelection select_paths(const taint::TaintGraph& graph, const telemetry::EventSequence& events,
                           const std::map<std::string, std::vector<int>>& node_events, std::size_t max_paths) {
    PathSelection sel;
    std::vector<NodeId> roots = graph.sources(), ends = graph.sinks();
    if (roots.empty())
        for (const auto& [id, n] : graph.nodes())
            if (graph.pred(id).empty()) roots.push_back(id);
    std::set<NodeId> terminal(ends.begin(), ends.end());
    bool to_leaves = terminal.empty();

    std::vector<std::vector<NodeId>> paths;
    std::vector<NodeId> stack;
    std::function<void(NodeId)> walk = [&](NodeId v) {
        if (paths.size() >= max_paths) {
            sel.truncated = true;
            return;
        }
        stack.push_back(v);
        if (terminal.contains(v) || (to_leaves && graph.succ(v).empty()))
            paths.push_back(stack);
        else
            for (NodeId s : graph.succ(v)) walk(s);
        stack.pop_back();
    };
    for (NodeId r : roots) walk(r);

    std::vector<SelectedPath> scored;
    int best = 0;
    for (auto& p : paths) {
        scored.push_back(score_path(graph, std::move(p), events, node_events));
        best = std::max(best, scored.back().score);
    }
    sel.no_match = !events.empty() && best == 0;
    std::vector<const SelectedPath*> top;
    for (const auto& p : scored)
        if (p.score == best) top.push_back(&p);
    for (const auto& p : scored) {
        std::string reason;
        if (p.score < best) {
            reason = "score " + std::to_string(p.score) + " < " + std::to_string(best);
        } else {
            for (const auto* q : top)
                if (proper_suffix(q->nodes, p.nodes)) reason = "extends a selected path upstream";
        }
        if (reason.empty()) {
            sel.selected.push_back(p);
        } else {
            sel.excluded.push_back(p);
            sel.excluded_reasons.push_back(reason);
        }
    }
    return sel;
}

PathSelection forced_path(const taint::TaintGraph& graph, const std::vector<std::string>& labels,
                          const telemetry::EventSequence& events,
                          const std::map<std::string, std::vector<int>>& node_events) {
    std::map<std::string, NodeId> by_label;
    for (const auto& [id, n] : graph.nodes()) by_label[n.label] = id;
    std::vector<NodeId> nodes;
    for (const auto& l : labels) {
        auto it = by_label.find(l);
        if (it == by_label.end()) throw ConfigError("path override names unknown node '" + l + "'");
        if (!nodes.empty() && !graph.has_edge(nodes.back(), it->second))
            throw ConfigError("path override is not a directed path at '" + l + "'");
        nodes.push_back(it->second);
    }
    PathSelection sel;
    sel.forced = true;
    sel.selected.push_back(score_path(graph, std::move(nodes), events, node_events));
    return sel;
}

// ---------------------------------------------------------------------------
// Local matching
// ---------------------------------------------------------------------------

namespace {

// Deviation degrees per message field; the empty key holds a scalar.
using Delta = std::map<std::string, Degree>;

Degree scalar(const Delta& d) {
    Degree out = Degree::None;
    for (const auto& [k, v] : d) out = std::max(out, v);
    return out;
}

Delta project(const Delta& d, const std::string& field) {
    if (!field.empty())
        if (auto it = d.find(field); it != d.end()) return {{"", it->second}};
    return d;
}

std::pair<int, int> label_key(const taint::TaintNode& n) {
    if (n.label.size() > 1 && (n.label[0] == 'N' || n.label[0] == 'U'))
        return {n.label[0] == 'N' ? 0 : 1, std::stoi(n.label.substr(1))};
    return {2, n.id};
}

std::optional<Value> latest(const telemetry::RecordStore& store, const std::string& var) {
    for (Channel c : {Channel::a, Channel::n, Channel::d}) {
        std::optional<Value> v;
        for (const auto& r : store.records)
            if (r.channel == c && r.variable == var) v = r.v;
        if (v) return v;
    }
    return std::nullopt;
}

} // namespace

std::vector<LocalMatch> match_local(const taint::TaintGraph& graph, const PathSelection& selection,
                                    const telemetry::RecordStore& store, const deviation::ModelSet& models,
                                    const MatchConfig& cfg) {
    std::map<NodeId, Delta> carried;
    std::map<NodeId, Delta> observed;
    std::map<NodeId, Availability> avail;
    std::map<NodeId, ValueKind> kinds;
    std::map<NodeId, std::string> notes;

    auto alias = [&](const std::string& e) {
        auto it = cfg.aliases.find(e);
        return it == cfg.aliases.end() ? e : it->second;
    };

    for (NodeId id : graph.topological_order()) {
        const auto& n = graph.node(id);
        auto model_it = models.find(alias(n.entity));
        ValueKind kind = n.value_type == taint::ValueType::Other ? ValueKind::Others
                         : model_it != models.end()          ? (model_it->second.numeric ? ValueKind::F : ValueKind::S)
                         : n.value_type == taint::ValueType::S ? ValueKind::S
                                                               : ValueKind::F;
        kinds[id] = kind;

        const MessageGroup* group = nullptr;
        for (const auto& g : cfg.groups)
            if (g.node == n.entity) group = &g;

        const auto& preds = graph.pred(id);
        if (group) {
            Delta d;
            for (const auto& f : group->fields)
                if (auto v = latest(store, f); v && models.contains(f))
                    d[f] = deviation::score(models.at(f), *v, cfg.thresholds).degree;
            carried[id] = d;
        } else if (preds.size() == 1 && carried.contains(*preds.begin())) {
            carried[id] = project(carried[*preds.begin()], n.field);
        } else {
            bool any = false;
            Degree mx = Degree::None;
            for (NodeId p : preds)
                if (auto it = carried.find(p); it != carried.end()) {
                    any = true;
                    mx = std::max(mx, scalar(it->second));
                }
            if (any) carried[id] = {{"", mx}};
        }

        avail[id] = Availability::None;
        if (kind == ValueKind::Others) continue;
        if (auto v = store.app_value(n.entity)) {
            if (model_it == models.end()) {
                notes[id] = "logged without baseline";
                continue;
            }
            observed[id] = {{"", deviation::score(model_it->second, *v, cfg.thresholds).degree}};
            avail[id] = Availability::Logged;
        } else if (group) {
            observed[id] = carried[id];
            avail[id] = Availability::Logged;
            notes[id] = "channel evidence";
        } else if (preds.size() == 1 && (n.pure_copy || n.projection) && observed.contains(*preds.begin())) {
            observed[id] = project(observed[*preds.begin()], n.field);
            avail[id] = Availability::Estimated;
        } else {
            notes[id] = "log not available";
        }
    }

    std::map<NodeId, std::vector<int>> node_events;
    for (const auto& p : selection.selected)
        for (const auto& [e, node] : p.assignment) {
            auto& v = node_events[node];
            int t = store.events.at(e).type;
            if (std::find(v.begin(), v.end(), t) == v.end()) v.push_back(t);
        }

    std::vector<NodeId> order = selection.nodes();
    std::sort(order.begin(), order.end(),
              [&](NodeId a, NodeId b) { return label_key(graph.node(a)) < label_key(graph.node(b)); });

    std::vector<LocalMatch> out;
    for (NodeId id : order) {
        const auto& n = graph.node(id);
        LocalMatch m;
        m.node = id;
        m.label = n.label;
        m.entity = n.entity;
        m.kind = kinds[id];
        m.availability = avail[id];
        m.note = notes[id];
        if (auto it = node_events.find(id); it != node_events.end()) {
            m.events = it->second;
            std::sort(m.events.begin(), m.events.end());
        }
        bool as_expected = true;
        if (m.kind != ValueKind::Others && m.availability != Availability::None) {
            Degree exp = carried.contains(id) ? scalar(carried[id]) : Degree::None;
            if (m.kind == ValueKind::S) exp = exp == Degree::H ? Degree::H : Degree::None;
            Degree obs = scalar(observed[id]);
            m.expected = exp;
            m.observed = obs;
            as_expected = exp == obs;
        }
        m.pattern = classify_node(m.kind, m.availability, as_expected);
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

std::string format_sequence(const std::vector<int>& types) {
    std::string out;
    int prev = 0;
    for (int t : types) {
        if (t == prev) continue;
        if (!out.empty()) out += "→";
        out += telemetry::event_name(t);
        prev = t;
    }
    return out;
}

MatchLedger match_all(const taint::TaintGraph& graph, const telemetry::RecordStore& store,
                      const deviation::ModelSet& models, const MatchConfig& cfg,
                      const std::vector<std::string>& path_override) {
    MatchLedger l;
    l.global = match_global(store, models, cfg);
    l.selection = path_override.empty() ? select_paths(graph, store.events, cfg.node_events)
                                        : forced_path(graph, path_override, store.events, cfg.node_events);
    l.local = match_local(graph, l.selection, store, models, cfg);
    for (std::size_t e : l.selection.matched_events()) l.event_sequence.push_back(store.events[e].type);
    return l;
}

namespace {

nlohmann::json path_json(const SelectedPath& p) {
    nlohmann::json assign = nlohmann::json::array();
    for (const auto& [e, n] : p.assignment) assign.push_back({e, n});
    return {{"nodes", p.nodes}, {"score", p.score}, {"assignment", assign}};
}

SelectedPath path_from(const nlohmann::json& j) {
    SelectedPath p;
    p.nodes = j.at("nodes").get<std::vector<NodeId>>();
    p.score = j.at("score").get<int>();
    for (const auto& a : j.at("assignment")) p.assignment.emplace_back(a.at(0).get<std::size_t>(), a.at(1).get<NodeId>());
    return p;
}

nlohmann::json opt_degree(const std::optional<Degree>& d) {
    return d ? nlohmann::json(std::string(deviation::to_string(*d))) : nlohmann::json(nullptr);
}

Direction parse_direction(const std::string& s) {
    if (s == "response") return Direction::response;
    if (s == "dispatch") return Direction::dispatch;
    return Direction::unknown;
}

} // namespace

nlohmann::json MatchLedger::to_json() const {
    nlohmann::json g = nlohmann::json::array();
    for (const auto& m : global.matches) {
        nlohmann::json scores = nlohmann::json::object();
        for (const auto& [f, s] : m.scores)
            scores[f] = {{"deviated", s.deviated},
                         {"degree", std::string(deviation::to_string(s.degree))},
                         {"bin", s.bin ? nlohmann::json(*s.bin) : nlohmann::json(nullptr)},
                         {"p", s.p}};
        nlohmann::json ev = nlohmann::json::array();
        for (const auto& r : m.evidence)
            ev.push_back({{"variable", r.variable},
                          {"channel", std::string(telemetry::to_string(r.channel))},
                          {"t", r.t},
                          {"v", telemetry::format_value(r.v)}});
        g.push_back({{"pattern", to_string(m.pattern)},
                     {"group", m.group},
                     {"epoch", m.epoch},
                     {"triple", describe(m.triple)},
                     {"dn_consistent", m.triple.dn_consistent},
                     {"na_consistent", m.triple.na_consistent},
                     {"deviated", m.triple.deviated},
                     {"direction", std::string(telemetry::to_string(m.direction))},
                     {"scores", scores},
                     {"evidence", ev},
                     {"event", m.event ? nlohmann::json(telemetry::event_name(*m.event)) : nlohmann::json(nullptr)}});
    }
    nlohmann::json sel{{"selected", nlohmann::json::array()},
                       {"excluded", nlohmann::json::array()},
                       {"no_match", selection.no_match},
                       {"forced", selection.forced},
                       {"truncated", selection.truncated}};
    for (const auto& p : selection.selected) sel["selected"].push_back(path_json(p));
    for (std::size_t i = 0; i < selection.excluded.size(); ++i) {
        auto j = path_json(selection.excluded[i]);
        j["reason"] = selection.excluded_reasons[i];
        sel["excluded"].push_back(std::move(j));
    }
    nlohmann::json loc = nlohmann::json::array();
    for (const auto& m : local) {
        nlohmann::json evs = nlohmann::json::array();
        for (int t : m.events) evs.push_back(telemetry::event_name(t));
        loc.push_back({{"node", m.node},
                       {"label", m.label},
                       {"entity", m.entity},
                       {"pattern", to_string(m.pattern)},
                       {"kind", std::string(to_string(m.kind))},
                       {"availability", std::string(to_string(m.availability))},
                       {"observed", opt_degree(m.observed)},
                       {"expected", opt_degree(m.expected)},
                       {"events", evs},
                       {"note", m.note}});
    }
    nlohmann::json seq = nlohmann::json::array();
    for (int t : event_sequence) seq.push_back(telemetry::event_name(t));
    return {{"global", g},
            {"incomplete", global.incomplete},
            {"flagged", global.flagged},
            {"selection", sel},
            {"local", loc},
            {"event_sequence", seq}};
}

MatchLedger MatchLedger::from_json(const nlohmann::json& j) {
    MatchLedger l;
    for (const auto& jg : j.at("global")) {
        GlobalMatch m;
        m.pattern = parse_global(jg.at("pattern").get<std::string>());
        m.group = jg.at("group").get<std::string>();
        m.epoch = jg.at("epoch").get<int>();
        m.triple = {jg.at("dn_consistent").get<bool>(), jg.at("na_consistent").get<bool>(),
                    jg.at("deviated").get<bool>()};
        m.direction = parse_direction(jg.at("direction").get<std::string>());
        for (const auto& [f, s] : jg.at("scores").items()) {
            deviation::DeviationScore ds;
            ds.deviated = s.at("deviated").get<bool>();
            ds.degree = deviation::parse_degree(s.at("degree").get<std::string>());
            if (!s.at("bin").is_null()) ds.bin = s.at("bin").get<std::size_t>();
            ds.p = s.at("p").get<double>();
            m.scores[f] = ds;
        }
        for (const auto& r : jg.at("evidence")) {
            std::string ch = r.at("channel").get<std::string>();
            m.evidence.push_back(ChannelRecord{r.at("variable").get<std::string>(),
                                               ch == "d" ? Channel::d : ch == "n" ? Channel::n : Channel::a,
                                               r.at("t").get<std::int64_t>(),
                                               telemetry::parse_value(r.at("v").get<std::string>())});
        }
        if (!jg.at("event").is_null()) m.event = telemetry::parse_event_type(jg.at("event").get<std::string>());
        l.global.matches.push_back(std::move(m));
    }
    l.global.incomplete = j.at("incomplete").get<std::vector<std::string>>();
    l.global.flagged = j.at("flagged").get<std::vector<std::string>>();
    const auto& sel = j.at("selection");
    for (const auto& p : sel.at("selected")) l.selection.selected.push_back(path_from(p));
    for (const auto& p : sel.at("excluded")) {
        l.selection.excluded.push_back(path_from(p));
        l.selection.excluded_reasons.push_back(p.at("reason").get<std::string>());
    }
    l.selection.no_match = sel.at("no_match").get<bool>();
    l.selection.forced = sel.at("forced").get<bool>();
    l.selection.truncated = sel.at("truncated").get<bool>();
    for (const auto& jm : j.at("local")) {
        LocalMatch m;
        m.node = jm.at("node").get<NodeId>();
        m.label = jm.at("label").get<std::string>();
        m.entity = jm.at("entity").get<std::string>();
        m.pattern = parse_local(jm.at("pattern").get<std::string>());
        std::string k = jm.at("kind").get<std::string>();
        m.kind = k == "F" ? ValueKind::F : k == "S" ? ValueKind::S : ValueKind::Others;
        std::string a = jm.at("availability").get<std::string>();
        m.availability = a == "logged" ? Availability::Logged : a == "estimated" ? Availability::Estimated
                                                                                 : Availability::None;
        if (!jm.at("observed").is_null()) m.observed = deviation::parse_degree(jm.at("observed").get<std::string>());
        if (!jm.at("expected").is_null()) m.expected = deviation::parse_degree(jm.at("expected").get<std::string>());
        for (const auto& e : jm.at("events")) m.events.push_back(*telemetry::parse_event_type(e.get<std::string>()));
        m.note = jm.at("note").get<std::string>();
        l.local.push_back(std::move(m));
    }
    for (const auto& e : j.at("event_sequence")) {
        auto t = telemetry::parse_event_type(e.get<std::string>());
        if (!t) throw UnknownEventType(0, e.get<std::string>());
        l.event_sequence.push_back(*t);
    }
    return l;
}

} // namespace pvota::pattern
