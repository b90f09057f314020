#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pvota/defuse.hpp"

namespace pvota::script {

namespace {

const std::vector<DefSite> kNoDefs;
const std::vector<UseSite> kNoUses;

constexpr std::array<std::string_view, 44> kBuiltins = {
    "abs",   "all",      "any",        "bool",      "dict",     "enumerate", "filter",  "float",  "format",
    "getattr", "hasattr", "hash",      "id",        "int",      "isinstance", "iter",   "len",    "list",
    "map",   "max",      "min",        "next",      "object",   "open",      "print",   "range",  "repr",
    "reversed", "round", "set",        "setattr",   "sorted",   "str",       "sum",     "super",  "tuple",
    "type",  "zip",      "input",      "True",      "False",    "None",      "Exception", "__name__"};

bool covers(const std::string& key, const std::string& def) {
    return def == key || (def.size() > key.size() && def.starts_with(key) && def[key.size()] == '.');
}

struct Scope {
    std::string name;
    StmtId entry = kNoStmt;  // FuncDef for function scopes
    std::vector<StmtId> nodes;
    std::map<StmtId, std::vector<StmtId>> succ;
    std::map<StmtId, std::vector<StmtId>> pred;
};

class Analysis {
public:
    explicit Analysis(const ScriptProgram& prog) : prog_(prog) {}

    DefUseChains run() {
        build_scopes();
        for (auto& [name, scope] : scopes_) solve(scope);
        for (auto& [name, scope] : scopes_) resolve(scope);
        for (auto& [d, us] : out_.uses) {
            std::sort(us.begin(), us.end());
            us.erase(std::unique(us.begin(), us.end()), us.end());
        }
        return std::move(out_);
    }

private:
    void build_scopes() {
        for (const auto& f : prog_.functions) {
            Scope& sc = scopes_[f.qualified];
            sc.name = f.qualified;
            sc.entry = f.def_stmt;
            sc.nodes.push_back(f.def_stmt);
            link(sc, f.body, {f.def_stmt});
        }
        Scope& mod = scopes_[""];
        link(mod, prog_.top_level, {});
        for (const auto& c : prog_.classes) {
            std::vector<StmtId> inner;
            for (StmtId id : prog_.stmt(c.def_stmt).body)
                if (prog_.stmt(id).kind != StmtKind::FuncDef) inner.push_back(id);
            if (inner.empty()) continue;
            Scope& sc = scopes_["class " + c.name];
            sc.name = "class " + c.name;
            link(sc, inner, {});
        }
    }

    void edge(Scope& sc, StmtId from, StmtId to) {
        sc.succ[from].push_back(to);
        sc.pred[to].push_back(from);
    }

    // Links a block after `preds`; returns the statements falling through.
    std::vector<StmtId> link(Scope& sc, const std::vector<StmtId>& block, std::vector<StmtId> preds) {
        for (StmtId id : block) {
            const Stmt& s = prog_.stmt(id);
            sc.nodes.push_back(id);
            for (StmtId p : preds) edge(sc, p, id);
            preds = {id};
            switch (s.kind) {
            case StmtKind::If: {
                auto a = link(sc, s.body, {id});
                auto b = s.orelse.empty() ? std::vector<StmtId>{id} : link(sc, s.orelse, {id});
                a.insert(a.end(), b.begin(), b.end());
                preds = std::move(a);
                break;
            }
            case StmtKind::Loop: {
                auto tail = link(sc, s.body, {id});
                for (StmtId t : tail) edge(sc, t, id);
                break;
            }
            case StmtKind::Return: preds.clear(); break;
            default: break;
            }
        }
        return preds;
    }

    std::vector<DefSite> gen(const Scope& sc, StmtId id) const {
        std::vector<DefSite> all = definitions_at(prog_, id);
        std::vector<DefSite> out;
        for (auto& d : all) {
            bool param = d.kind == DefKind::Param;
            if (param == (sc.entry == id)) out.push_back(std::move(d));
        }
        return out;
    }

    bool strong(const DefSite& d) const {
        if (d.kind != DefKind::Target) return true;
        return !prog_.stmt(d.stmt).targets[static_cast<std::size_t>(d.index)].weak_definition();
    }

    void solve(Scope& sc) {
        std::map<StmtId, std::set<DefSite>>& in = in_[sc.name];
        std::map<StmtId, std::set<DefSite>> outs;
        bool changed = true;
        while (changed) {
            changed = false;
            for (StmtId id : sc.nodes) {
                std::set<DefSite> cur;
                for (StmtId p : sc.pred[id]) cur.insert(outs[p].begin(), outs[p].end());
                in[id] = cur;
                for (const auto& d : gen(sc, id)) {
                    if (strong(d))
                        std::erase_if(cur, [&](const DefSite& e) { return covers(d.key, e.key); });
                }
                for (const auto& d : gen(sc, id)) cur.insert(d);
                if (cur != outs[id]) {
                    outs[id] = std::move(cur);
                    changed = true;
                }
            }
        }
    }

    static std::vector<DefSite> match(const std::vector<std::string>& keys, const std::set<DefSite>& defs) {
        std::vector<DefSite> out;
        for (std::size_t level = 0; level < keys.size() && out.empty(); ++level)
            for (const auto& d : defs)
                if (level == 0 ? covers(keys[0], d.key) : d.key == keys[level]) out.push_back(d);
        return out;
    }

    std::set<DefSite> class_defs(const std::string& cls) {
        if (auto it = class_defs_.find(cls); it != class_defs_.end()) return it->second;
        std::set<DefSite> out;
        const ClassDef* c = prog_.class_def(cls);
        if (c)
            for (const auto& s : prog_.stmts) {
                const FunctionDef* f = s.function.empty() ? nullptr : prog_.function(s.function);
                if (!f || f->class_name != cls) continue;
                for (auto& d : definitions_at(prog_, s.id))
                    if (d.kind == DefKind::Target && d.key.starts_with("self.")) out.insert(d);
            }
        return class_defs_[cls] = out;
    }

    const std::set<DefSite>& module_defs() {
        if (!module_defs_) {
            module_defs_.emplace();
            for (StmtId id : scopes_[""].nodes)
                for (auto& d : definitions_at(prog_, id))
                    if (d.kind != DefKind::Param) module_defs_->insert(d);
        }
        return *module_defs_;
    }

    void resolve(Scope& sc) {
        const auto& in = in_[sc.name];
        const FunctionDef* fn = prog_.function(sc.name);
        for (StmtId id : sc.nodes) {
            const Stmt& s = prog_.stmt(id);
            auto it = in.find(id);
            std::set<DefSite> empty;
            const std::set<DefSite>& reach = it == in.end() ? empty : it->second;
            for (std::size_t i = 0; i < s.sources.size(); ++i) {
                const Entity& e = s.sources[i];
                if (e.keys.empty()) continue;
                UseSite u{id, static_cast<int>(i)};
                std::vector<DefSite> defs = match({e.keys[0]}, reach);
                if (defs.empty() && fn && !fn->class_name.empty() && e.keys[0].starts_with("self."))
                    defs = match({e.keys[0]}, class_defs(fn->class_name));
                if (defs.empty()) defs = match(e.keys, reach);
                if (defs.empty() && !sc.name.empty()) defs = match({e.keys.back()}, module_defs());
                if (defs.empty()) {
                    out_.external.push_back(u);
                    const std::string& root = e.keys.back();
                    if (!prog_.is_imported(root) && !is_builtin(root)) out_.unresolved.push_back(u);
                    continue;
                }
                std::sort(defs.begin(), defs.end());
                for (const auto& d : defs) out_.uses[d].push_back(u);
                out_.reaching[u] = std::move(defs);
            }
        }
    }

    const ScriptProgram& prog_;
    std::map<std::string, Scope> scopes_;
    std::map<std::string, std::map<StmtId, std::set<DefSite>>> in_;
    std::map<std::string, std::set<DefSite>> class_defs_;
    std::optional<std::set<DefSite>> module_defs_;
    DefUseChains out_;
};

} // namespace

bool is_builtin(std::string_view name) {
    return std::find(kBuiltins.begin(), kBuiltins.end(), name) != kBuiltins.end();
}

std::vector<DefSite> definitions_at(const ScriptProgram& prog, StmtId id) {
    const Stmt& s = prog.stmt(id);
    std::vector<DefSite> out;
    if (s.kind == StmtKind::FuncDef || s.kind == StmtKind::ClassDef) {
        out.push_back(DefSite{id, DefKind::Function, 0, s.name});
        for (std::size_t i = 0; i < s.params.size(); ++i)
            out.push_back(DefSite{id, DefKind::Param, static_cast<int>(i), s.params[i]});
        return out;
    }
    for (std::size_t i = 0; i < s.targets.size(); ++i)
        out.push_back(DefSite{id, DefKind::Target, static_cast<int>(i), s.targets[i].def_key()});
    return out;
}

const std::vector<DefSite>& DefUseChains::defs_of(UseSite u) const {
    auto it = reaching.find(u);
    return it == reaching.end() ? kNoDefs : it->second;
}

const std::vector<UseSite>& DefUseChains::uses_of(const DefSite& d) const {
    auto it = uses.find(d);
    return it == uses.end() ? kNoUses : it->second;
}

std::vector<StmtId> DefUseChains::def_stmts(UseSite u) const {
    std::vector<StmtId> out;
    for (const auto& d : defs_of(u)) out.push_back(d.stmt);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

DefUseChains defuse_chains(const ScriptProgram& prog) { return Analysis(prog).run(); }

} // namespace pvota::script
