#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <variant>

#include "pvota/error.hpp"
#include "pvota/taint.hpp"

namespace pvota::taint {

using namespace script;

namespace {

constexpr std::string_view kStringCalls[] = {"str", "repr", "json.dumps", "format", "*.join", "*.format",
                                             "*.strip", "*.upper", "*.lower", "*.replace", "*.encode", "*.decode"};

bool string_expr(const Expr& e) {
    switch (e.kind) {
    case ExprKind::Literal: return e.literal == LiteralKind::String;
    case ExprKind::Subscript:
    case ExprKind::Attribute:
    case ExprKind::Name: return false;
    case ExprKind::Dict: return true;
    case ExprKind::Call: {
        std::string callee = render(*e.children[0]);
        for (auto p : kStringCalls)
            if (glob_match(p, callee)) return true;
        return false;
    }
    default:
        return std::any_of(e.children.begin(), e.children.end(), [](const ExprPtr& c) { return string_expr(*c); });
    }
}

struct CallRef {
    StmtId stmt;
    int call;
    auto operator<=>(const CallRef&) const = default;
};

class Builder {
public:
    Builder(const ScriptProgram& prog, const DefUseChains& chains, const BuildOptions& opts, TaintGraph& g,
            const std::vector<std::string>& p_vars)
        : prog_(prog), chains_(chains), opts_(opts), g_(g), pvars_(p_vars.begin(), p_vars.end()) {}

    std::vector<DefSite> pvar_defs(const std::string& name) const {
        std::vector<DefSite> out;
        for (StmtId id : prog_.definitions_of(name)) {
            const Stmt& s = prog_.stmt(id);
            for (std::size_t i = 0; i < s.targets.size(); ++i)
                if (s.targets[i].name == name && !s.targets[i].mutation)
                    out.push_back(DefSite{id, DefKind::Target, static_cast<int>(i), s.targets[i].def_key()});
        }
        return out;
    }

    // ------------------------------------------------------------------ USG

    void backward(const std::vector<DefSite>& starts) {
        sg_ = Subgraph::USG;
        for (const auto& d : starts) push_back_def(d);
        while (!bwork_.empty()) {
            auto item = bwork_.front();
            bwork_.pop_front();
            std::visit([this](const auto& x) { expand_back(x); }, item);
        }
    }

    // ------------------------------------------------------------------ LSG

    void forward_from(const DefSite& d) {
        sg_ = Subgraph::LSG;
        NodeId n = def_node(d);
        if (done_defs_.insert(d).second) fwork_.push_back(d);
        (void)n;
        drain_forward();
    }

    void drain_forward() {
        while (!fwork_.empty()) {
            DefSite d = fwork_.front();
            fwork_.pop_front();
            expand_forward(d);
        }
    }

    std::vector<std::string> callbacks() {
        sg_ = Subgraph::LSG;
        std::vector<std::string> names;
        for (const auto& f : prog_.functions)
            if (!f.class_name.empty() && opts_.catalogs.is_callback(f.name)) names.push_back(f.qualified);
        std::sort(names.begin(), names.end());
        std::vector<std::string> attached;
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& cb : names) {
                bool entered = false;
                for (const auto& s : prog_.stmts) {
                    if (s.function != cb) continue;
                    for (std::size_t i = 0; i < s.sources.size(); ++i) {
                        const Entity& e = s.sources[i];
                        if (e.keys.empty() || !e.keys[0].starts_with("self.")) continue;
                        for (const auto& d : chains_.defs_of(UseSite{s.id, static_cast<int>(i)})) {
                            if (d.kind != DefKind::Target || def_function(d) == cb) continue;
                            auto it = def_nodes_.find(d);
                            if (it == def_nodes_.end() || g_.node(it->second).subgraph != Subgraph::LSG) continue;
                            if (!entered_uses_.insert({s.id, static_cast<int>(i)}).second) continue;
                            flow(s.id, e.context_call, e.context_arg, it->second, EdgeLabel::Callback);
                            entered = true;
                        }
                    }
                }
                if (entered) {
                    changed = true;
                    if (std::find(attached.begin(), attached.end(), cb) == attached.end()) attached.push_back(cb);
                    drain_forward();
                }
            }
        }
        return attached;
    }

private:
    using BackItem = std::variant<DefSite, CallRef, StmtId>;

    std::string def_function(const DefSite& d) const {
        if (d.kind == DefKind::Param)
            for (const auto& f : prog_.functions)
                if (f.def_stmt == d.stmt) return f.qualified;
        return prog_.stmt(d.stmt).function;
    }

    const FunctionDef& function_at(StmtId def_stmt) const {
        for (const auto& f : prog_.functions)
            if (f.def_stmt == def_stmt) return f;
        throw Error("graph", "no function defined at statement " + std::to_string(def_stmt));
    }

    // Methods and constructors bind `self` to the receiver, so call argument
    // k maps to parameter k + 1.
    int param_offset(const CallSite& c) const {
        const FunctionDef* f = prog_.function(*c.resolved_function);
        if (!f || f->class_name.empty()) return 0;
        return c.constructor || c.bound_object ? 1 : 0;
    }

    void init_node(NodeId id, StmtId stmt) {
        TaintNode& n = g_.node(id);
        const Stmt& s = prog_.stmt(stmt);
        n.subgraph = sg_;
        n.function = s.function;
        n.text = s.text();
        n.line = s.line;
    }

    NodeId def_node(const DefSite& d) {
        if (auto it = def_nodes_.find(d); it != def_nodes_.end()) return it->second;
        const Stmt& s = prog_.stmt(d.stmt);
        bool created = false;
        NodeId id;
        if (d.kind == DefKind::Param) {
            id = g_.add_node(s.params[static_cast<std::size_t>(d.index)], d.stmt, &created);
            if (created) {
                init_node(id, d.stmt);
                g_.node(id).function = def_function(d);
                g_.node(id).kind = NodeKind::Auxiliary;
            }
        } else {
            const Entity& t = s.targets[static_cast<std::size_t>(d.index)];
            id = g_.add_node(t.name, d.stmt, &created);
            if (created) {
                init_node(id, d.stmt);
                TaintNode& n = g_.node(id);
                n.pure_copy = s.pure_copy();
                n.constant = s.constant();
                bool projection = s.value && (s.value->kind == ExprKind::Attribute || s.value->kind == ExprKind::Subscript);
                n.projection = projection;
                if (projection && s.value->kind == ExprKind::Attribute)
                    n.field = s.value->text;
                else if (projection && s.value->children.size() > 1 &&
                         s.value->children[1]->literal == LiteralKind::String)
                    n.field = unquote(s.value->children[1]->text);
                if (pvars_.contains(t.name))
                    n.kind = NodeKind::VirtualPhysical;
                else if (t.category != EntityCategory::Identifier || t.mutation || projection)
                    n.kind = NodeKind::ArrayObjectRef;
                else
                    n.kind = NodeKind::Auxiliary;
                const CallSite* top = s.callee();
                bool object = t.mutation || (top && top->constructor && s.value && s.value->kind == ExprKind::Call);
                if (auto ov = opts_.value_types.find(t.name); ov != opts_.value_types.end())
                    n.value_type = ov->second;
                else if (object)
                    n.value_type = ValueType::Other;
                else if (s.value && s.kind != StmtKind::Loop && string_expr(*s.value))
                    n.value_type = ValueType::S;
                else
                    n.value_type = ValueType::F;
            }
        }
        def_nodes_[d] = id;
        return id;
    }

    NodeId call_node(StmtId stmt, int call) {
        const Stmt& s = prog_.stmt(stmt);
        const CallSite& c = s.calls[static_cast<std::size_t>(call)];
        bool created = false;
        NodeId id = g_.add_node(c.text, stmt, &created);
        if (created) {
            init_node(id, stmt);
            TaintNode& n = g_.node(id);
            n.callee = c.callee;
            n.kind = opts_.catalogs.is_sink(c.callee) ? NodeKind::Sink : NodeKind::FunctionCall;
            n.source_feature = !c.resolved_function && opts_.catalogs.is_source(c.callee);
            n.value_type = ValueType::Other;
        }
        return id;
    }

    NodeId return_node(StmtId stmt) {
        const Stmt& s = prog_.stmt(stmt);
        bool created = false;
        NodeId id = g_.add_node(s.text(), stmt, &created);
        if (created) {
            init_node(id, stmt);
            TaintNode& n = g_.node(id);
            n.kind = NodeKind::Expression;
            n.value_type = s.value && string_expr(*s.value) ? ValueType::S : ValueType::F;
        }
        return id;
    }

    static EdgeLabel label_for(const Entity& e, EdgeLabel fallback) {
        if (e.category == EntityCategory::AttributeRef || e.category == EntityCategory::SubscriptRef)
            return EdgeLabel::FieldRead;
        return fallback;
    }

    // ------------------------------------------------------------------ backward helpers

    void push_back_def(const DefSite& d) {
        def_node(d);
        if (seen_back_.insert(BackItem{d}).second) bwork_.push_back(d);
    }

    void push_back_call(CallRef c) {
        call_node(c.stmt, c.call);
        if (seen_back_.insert(BackItem{c}).second) bwork_.push_back(c);
    }

    void push_back_return(StmtId r) {
        return_node(r);
        if (seen_back_.insert(BackItem{r}).second) bwork_.push_back(r);
    }

    // Inputs evaluated into position (ctx, arg) of statement `stmt`. arg = -1
    // takes every position of the call.
    void link_inputs(StmtId stmt, int ctx, int arg, NodeId into, EdgeLabel fallback) {
        const Stmt& s = prog_.stmt(stmt);
        for (std::size_t i = 0; i < s.sources.size(); ++i) {
            const Entity& e = s.sources[i];
            if (e.context_call != ctx || (arg != -1 && e.context_arg != arg)) continue;
            if (e.keys.empty()) continue;
            for (const auto& d : chains_.defs_of(UseSite{stmt, static_cast<int>(i)})) {
                if (d.kind == DefKind::Function) continue;
                if (d.stmt >= stmt && def_function(d) == s.function) continue;
                NodeId p = def_node(d);
                g_.add_edge(p, into, label_for(e, fallback));
                push_back_def(d);
            }
        }
        for (std::size_t c = 0; c < s.calls.size(); ++c) {
            const CallSite& cs = s.calls[c];
            if (cs.parent_call != ctx || (arg != -1 && cs.parent_arg != arg)) continue;
            NodeId p = call_node(stmt, static_cast<int>(c));
            g_.add_edge(p, into, ctx < 0 ? EdgeLabel::Assign : EdgeLabel::ArgPass);
            push_back_call(CallRef{stmt, static_cast<int>(c)});
        }
    }

    void expand_back(const DefSite& d) {
        NodeId n = def_node(d);
        if (d.kind == DefKind::Param) {
            const FunctionDef& f = function_at(d.stmt);
            for (const CallRef& ctx : back_contexts_[f.qualified]) {
                const CallSite& c = prog_.stmt(ctx.stmt).calls[static_cast<std::size_t>(ctx.call)];
                int arg = d.index - param_offset(c);
                if (arg < 0 || arg >= static_cast<int>(c.args.size()) || !c.args[static_cast<std::size_t>(arg)]) continue;
                link_inputs(ctx.stmt, ctx.call, arg, n, EdgeLabel::ArgPass);
            }
            return;
        }
        const Stmt& s = prog_.stmt(d.stmt);
        if (s.targets[static_cast<std::size_t>(d.index)].mutation) {
            link_inputs(d.stmt, 0, -1, n, EdgeLabel::ArgPass);
            return;
        }
        link_inputs(d.stmt, -1, -1, n, EdgeLabel::Assign);
    }

    void expand_back(const CallRef& ref) {
        NodeId n = call_node(ref.stmt, ref.call);
        const CallSite& c = prog_.stmt(ref.stmt).calls[static_cast<std::size_t>(ref.call)];
        const FunctionDef* f = c.resolved_function ? prog_.function(*c.resolved_function) : nullptr;
        if (f && !c.constructor) {
            auto& ctxs = back_contexts_[f->qualified];
            if (ctxs.insert(ref).second) {
                // Parameters already visited must see the new context.
                for (const auto& [d, id] : def_nodes_)
                    if (d.kind == DefKind::Param && d.stmt == f->def_stmt && seen_back_.contains(BackItem{d}))
                        bwork_.push_back(d);
            }
            for (const auto& s : prog_.stmts)
                if (s.kind == StmtKind::Return && s.value && s.function == f->qualified) {
                    g_.add_edge(return_node(s.id), n, EdgeLabel::Return);
                    push_back_return(s.id);
                }
            return;
        }
        link_inputs(ref.stmt, ref.call, -1, n, EdgeLabel::ArgPass);
    }

    void expand_back(StmtId ret) { link_inputs(ret, -1, -1, return_node(ret), EdgeLabel::Assign); }

    // ------------------------------------------------------------------ forward helpers

    void taint_def(const DefSite& d, NodeId from, EdgeLabel label) {
        NodeId n = def_node(d);
        g_.add_edge(from, n, label);
        if (done_defs_.insert(d).second) fwork_.push_back(d);
    }

    void expand_forward(const DefSite& d) {
        NodeId from = def_node(d);
        std::string fn = def_function(d);
        for (const auto& u : chains_.uses_of(d)) {
            const Stmt& s = prog_.stmt(u.stmt);
            if (s.function != fn) continue;
            if (u.stmt <= d.stmt) continue;
            const Entity& e = s.sources[static_cast<std::size_t>(u.source)];
            flow(u.stmt, e.context_call, e.context_arg, from, label_for(e, EdgeLabel::Assign));
        }
    }

    // Taint arriving at position (ctx, arg) of statement `stmt` from node `from`.
    void flow(StmtId stmt, int ctx, int arg, NodeId from, EdgeLabel label) {
        const Stmt& s = prog_.stmt(stmt);
        if (ctx < 0) {
            switch (s.kind) {
            case StmtKind::Assign:
            case StmtKind::AugAssign:
            case StmtKind::Loop:
                for (std::size_t i = 0; i < s.targets.size(); ++i)
                    taint_def(DefSite{stmt, DefKind::Target, static_cast<int>(i), s.targets[i].def_key()}, from, label);
                break;
            case StmtKind::Return: {
                NodeId r = return_node(stmt);
                g_.add_edge(from, r, label);
                auto& reached = returns_[s.function];
                if (reached.insert(stmt).second)
                    for (const CallRef& c : fwd_contexts_[s.function]) call_returns(c, r);
                break;
            }
            default: break;
            }
            return;
        }
        const CallSite& c = s.calls[static_cast<std::size_t>(ctx)];
        if (opts_.catalogs.is_sink(c.callee)) {
            g_.add_edge(from, call_node(stmt, ctx), EdgeLabel::ArgPass);
            return;
        }
        if (ctx == 0 && s.kind == StmtKind::ExprStmt && !s.targets.empty() && s.targets[0].mutation) {
            taint_def(DefSite{stmt, DefKind::Target, 0, s.targets[0].def_key()}, from, EdgeLabel::ArgPass);
            return;
        }
        if (c.resolved_function) {
            if (arg < 0 || arg >= static_cast<int>(c.args.size())) return;
            const FunctionDef* f = prog_.function(*c.resolved_function);
            int p = arg + param_offset(c);
            if (!f || p >= static_cast<int>(f->params.size())) return;
            taint_def(DefSite{f->def_stmt, DefKind::Param, p, f->params[static_cast<std::size_t>(p)]}, from,
                      EdgeLabel::ArgPass);
            CallRef ref{stmt, ctx};
            if (fwd_contexts_[f->qualified].insert(ref).second)
                for (StmtId r : returns_[f->qualified]) call_returns(ref, return_node(r));
            return;
        }
        NodeId n = call_node(stmt, ctx);
        g_.add_edge(from, n, EdgeLabel::ArgPass);
        call_result(stmt, ctx, n);
    }

    void call_returns(const CallRef& ref, NodeId ret) {
        NodeId n = call_node(ref.stmt, ref.call);
        g_.add_edge(ret, n, EdgeLabel::Return);
        call_result(ref.stmt, ref.call, n);
    }

    void call_result(StmtId stmt, int ctx, NodeId n) {
        if (!done_calls_.insert(CallRef{stmt, ctx}).second) return;
        const CallSite& c = prog_.stmt(stmt).calls[static_cast<std::size_t>(ctx)];
        if (c.parent_call >= 0)
            flow(stmt, c.parent_call, c.parent_arg, n, EdgeLabel::ArgPass);
        else
            flow(stmt, -1, -1, n, EdgeLabel::Assign);
    }

    const ScriptProgram& prog_;
    const DefUseChains& chains_;
    const BuildOptions& opts_;
    TaintGraph& g_;
    std::set<std::string> pvars_;
    Subgraph sg_ = Subgraph::USG;

    std::map<DefSite, NodeId> def_nodes_;
    std::deque<BackItem> bwork_;
    std::set<BackItem> seen_back_;
    std::map<std::string, std::set<CallRef>> back_contexts_;

    std::deque<DefSite> fwork_;
    std::set<DefSite> done_defs_;
    std::set<CallRef> done_calls_;
    std::map<std::string, std::set<CallRef>> fwd_contexts_;
    std::map<std::string, std::set<StmtId>> returns_;
    std::set<std::pair<StmtId, int>> entered_uses_;
};

std::vector<DefSite> collect_pvars(const Builder& b, const std::vector<std::string>& p_vars) {
    std::vector<DefSite> out;
    for (const auto& name : p_vars) {
        auto defs = b.pvar_defs(name);
        if (defs.empty()) throw PVarNotFound(name);
        out.insert(out.end(), defs.begin(), defs.end());
    }
    return out;
}

void mark_unterminated(TaintGraph& g) {
    std::set<NodeId> good;
    auto order = g.topological_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const TaintNode& n = g.node(*it);
        bool ok = n.kind == NodeKind::Sink;
        for (NodeId s : g.succ(*it)) ok = ok || good.contains(s);
        if (ok) good.insert(*it);
    }
    bool any_sink = false;
    for (const auto& [id, n] : g.nodes()) {
        if (n.kind == NodeKind::Sink) any_sink = true;
        bool lsg = n.subgraph == Subgraph::LSG || n.kind == NodeKind::VirtualPhysical;
        g.node(id).unterminated = lsg && !good.contains(id);
    }
    if (!any_sink && !g.p_vars().empty()) g.warnings.push_back("SinkNeverReached: no sink reached from any P_var");
}

} // namespace

TaintGraph build_usg(const ScriptProgram& prog, const DefUseChains& chains, const std::vector<std::string>& p_vars,
                     const BuildOptions& opts) {
    TaintGraph g;
    Builder b(prog, chains, opts, g, p_vars);
    b.backward(collect_pvars(b, p_vars));
    return g;
}

void assign_weights(TaintGraph& usg) {
    auto order = usg.topological_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TaintNode& n = usg.node(*it);
        if (n.subgraph != Subgraph::USG) continue;
        if (n.kind == NodeKind::VirtualPhysical) {
            n.weight = 1;
            continue;
        }
        double w = 0;
        for (NodeId s : usg.succ(*it)) {
            const TaintNode& c = usg.node(s);
            if (c.subgraph != Subgraph::USG || c.weight <= 0) continue;
            w = std::max(w, c.weight + (n.source_feature ? 1.0 : 0.5));
        }
        n.weight = w;
    }
}

std::size_t trim_to_sources(TaintGraph& usg) {
    auto in_usg = [&](NodeId id) { return usg.node(id).subgraph == Subgraph::USG; };
    auto qualifies = [&](NodeId id) {
        const TaintNode& n = usg.node(id);
        return n.weight >= 1 && n.source_feature;
    };
    std::set<NodeId> sources;
    std::size_t dropped = 0;
    std::vector<NodeId> roots;
    for (const auto& [id, n] : usg.nodes()) {
        if (!in_usg(id)) continue;
        bool has_pred = false;
        for (NodeId p : usg.pred(id)) has_pred = has_pred || in_usg(p);
        if (!has_pred) roots.push_back(id);
    }
    for (NodeId r : roots) {
        std::set<NodeId> seen{r};
        std::vector<NodeId> stack{r};
        bool found = false;
        while (!stack.empty()) {
            NodeId cur = stack.back();
            stack.pop_back();
            if (qualifies(cur)) {
                sources.insert(cur);
                found = true;
                continue;
            }
            for (NodeId s : usg.succ(cur))
                if (in_usg(s) && seen.insert(s).second) stack.push_back(s);
        }
        if (!found) {
            ++dropped;
            usg.warnings.push_back("NoSourceOnAnyPath: root '" + usg.node(r).entity + "' reaches no taint source");
        }
    }
    std::set<NodeId> keep(sources.begin(), sources.end());
    std::vector<NodeId> stack(sources.begin(), sources.end());
    while (!stack.empty()) {
        NodeId cur = stack.back();
        stack.pop_back();
        for (NodeId s : usg.succ(cur))
            if (keep.insert(s).second) stack.push_back(s);
    }
    std::vector<NodeId> drop;
    for (const auto& [id, n] : usg.nodes())
        if (in_usg(id) && !keep.contains(id) && n.kind != NodeKind::VirtualPhysical) drop.push_back(id);
    for (NodeId id : drop) usg.remove_node(id);
    for (NodeId s : sources) usg.node(s).kind = NodeKind::Source;
    if (sources.empty()) usg.warnings.push_back("NoSourceOnAnyPath: no taint source identified");
    return dropped;
}

void build_lsg(const ScriptProgram& prog, const DefUseChains& chains, const std::vector<std::string>& p_vars,
               TaintGraph& graph, const BuildOptions& opts) {
    Builder b(prog, chains, opts, graph, p_vars);
    for (const auto& d : collect_pvars(b, p_vars)) b.forward_from(d);
    mark_unterminated(graph);
}

std::vector<std::string> attach_callbacks(const ScriptProgram& prog, const DefUseChains& chains, TaintGraph& graph,
                                          const BuildOptions& opts) {
    std::vector<std::string> p_vars;
    for (NodeId id : graph.p_vars()) p_vars.push_back(graph.node(id).entity);
    std::sort(p_vars.begin(), p_vars.end());
    p_vars.erase(std::unique(p_vars.begin(), p_vars.end()), p_vars.end());
    Builder b(prog, chains, opts, graph, p_vars);
    for (const auto& d : collect_pvars(b, p_vars)) b.forward_from(d);
    auto attached = b.callbacks();
    mark_unterminated(graph);
    return attached;
}

TaintGraph build_graph(const ScriptProgram& prog, const std::vector<std::string>& p_vars, const BuildOptions& opts) {
    DefUseChains chains = defuse_chains(prog);
    TaintGraph g = build_usg(prog, chains, p_vars, opts);
    assign_weights(g);
    trim_to_sources(g);
    build_lsg(prog, chains, p_vars, g, opts);
    attach_callbacks(prog, chains, g, opts);
    assign_labels(g);
    return g;
}

} // namespace pvota::taint
