#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pvota/defuse.hpp"
#include "pvota/error.hpp"
#include "pvota/script.hpp"
#include "syntax.hpp"

namespace pvota::script {

using detail::RawKind;
using detail::RawStmt;

std::string_view to_string(EntityCategory c) {
    switch (c) {
    case EntityCategory::Identifier: return "Identifier";
    case EntityCategory::AttributeRef: return "AttributeRef";
    case EntityCategory::SubscriptRef: return "SubscriptRef";
    case EntityCategory::CallResult: return "CallResult";
    case EntityCategory::ObjectCtor: return "ObjectCtor";
    case EntityCategory::Literal: return "Literal";
    }
    return "?";
}

std::string_view to_string(StmtKind k) {
    switch (k) {
    case StmtKind::Assign: return "Assign";
    case StmtKind::AugAssign: return "AugAssign";
    case StmtKind::Return: return "Return";
    case StmtKind::ExprStmt: return "ExprStmt";
    case StmtKind::If: return "If";
    case StmtKind::Loop: return "Loop";
    case StmtKind::FuncDef: return "FuncDef";
    case StmtKind::ClassDef: return "ClassDef";
    case StmtKind::Import: return "Import";
    case StmtKind::Pass: return "Pass";
    }
    return "?";
}

bool Entity::weak_definition() const { return mutation || category == EntityCategory::SubscriptRef; }

const CallSite* Stmt::callee() const {
    for (const auto& c : calls)
        if (c.parent_call < 0) return &c;
    return nullptr;
}

namespace {

std::string join_targets(const std::vector<Entity>& targets) {
    std::string out;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (i) out += ", ";
        out += targets[i].name;
    }
    return out;
}

std::string value_text(const ExprPtr& e) {
    if (!e) return {};
    // Top-level tuples print without parentheses, matching how they parse.
    if (e->kind == ExprKind::Tuple && e->children.size() > 1) {
        std::string out;
        for (std::size_t i = 0; i < e->children.size(); ++i) {
            if (i) out += ", ";
            out += render(*e->children[i]);
        }
        return out;
    }
    return render(*e);
}

} // namespace

std::string unquote(const std::string& lit) {
    std::size_t start = 0;
    while (start < lit.size() && lit[start] != '"' && lit[start] != '\'') ++start;
    if (start >= lit.size()) return lit;
    char q = lit[start];
    std::size_t qlen = lit.compare(start, 3, std::string(3, q)) == 0 ? 3 : 1;
    if (lit.size() < start + 2 * qlen) return lit;
    return lit.substr(start + qlen, lit.size() - start - 2 * qlen);
}

std::string Stmt::text() const {
    switch (kind) {
    case StmtKind::Assign: {
        std::string lhs;
        // Chained assignment keeps each target group separately.
        for (std::size_t i = 0; i < targets.size(); ++i) {
            if (i) lhs += targets[i].mutation ? ", " : (op == "chain" ? " = " : ", ");
            lhs += targets[i].name;
        }
        return lhs + " = " + value_text(value);
    }
    case StmtKind::AugAssign: return join_targets(targets) + " " + op + "= " + value_text(value);
    case StmtKind::Return: return value ? "return " + value_text(value) : "return";
    case StmtKind::ExprStmt: return value_text(value);
    case StmtKind::If: return "if " + render(*value) + ":";
    case StmtKind::Loop:
        if (op == "for") return "for " + join_targets(targets) + " in " + value_text(value) + ":";
        return "while " + render(*value) + ":";
    case StmtKind::FuncDef: {
        std::string out = "def " + name + "(";
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (i) out += ", ";
            out += params[i];
            if (defaults[i]) out += "=" + render(*defaults[i]);
        }
        return out + "):";
    }
    case StmtKind::ClassDef: {
        std::string out = "class " + name;
        if (!bases.empty()) {
            out += "(";
            for (std::size_t i = 0; i < bases.size(); ++i) out += (i ? ", " : "") + bases[i];
            out += ")";
        }
        return out + ":";
    }
    case StmtKind::Import:
    case StmtKind::Pass: return op;
    }
    return {};
}

bool Stmt::pure_copy() const {
    if (kind != StmtKind::Assign || targets.size() != 1 || !value) return false;
    return value->kind == ExprKind::Name && sources.size() == 1 &&
           sources[0].category == EntityCategory::Identifier;
}

bool Stmt::constant() const {
    if (kind != StmtKind::Assign && kind != StmtKind::AugAssign) return false;
    if (kind == StmtKind::AugAssign) return false;
    return std::all_of(sources.begin(), sources.end(),
                       [](const Entity& e) { return e.category == EntityCategory::Literal; });
}

const FunctionDef* ScriptProgram::function(std::string_view qualified) const {
    for (const auto& f : functions)
        if (f.qualified == qualified) return &f;
    return nullptr;
}

const ClassDef* ScriptProgram::class_def(std::string_view name) const {
    for (const auto& c : classes)
        if (c.name == name) return &c;
    return nullptr;
}

bool ScriptProgram::is_imported(std::string_view name) const {
    return std::find(imported.begin(), imported.end(), name) != imported.end();
}

std::vector<StmtId> ScriptProgram::definitions_of(std::string_view name) const {
    std::vector<StmtId> out;
    for (const auto& s : stmts)
        for (const auto& t : s.targets)
            if (t.name == name || (!t.keys.empty() && t.def_key() == name && !t.mutation)) {
                out.push_back(s.id);
                break;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Lowering from the raw tree
// ---------------------------------------------------------------------------

namespace {

bool is_chain(const Expr& e) {
    switch (e.kind) {
    case ExprKind::Name: return true;
    case ExprKind::Attribute:
    case ExprKind::Subscript: return is_chain(*e.children[0]);
    default: return false;
    }
}

std::vector<std::string> chain_keys(const Expr& e) {
    switch (e.kind) {
    case ExprKind::Name: return {e.text};
    case ExprKind::Attribute: {
        if (!is_chain(*e.children[0])) return {};
        auto rest = chain_keys(*e.children[0]);
        // `a[i].f` is looked up through `a`.
        if (e.children[0]->kind == ExprKind::Subscript) return rest;
        rest.insert(rest.begin(), render(e));
        return rest;
    }
    case ExprKind::Subscript: return is_chain(*e.children[0]) ? chain_keys(*e.children[0]) : std::vector<std::string>{};
    default: return {};
    }
}

std::string root_name(const Expr& e) {
    const Expr* cur = &e;
    while (cur->kind == ExprKind::Attribute || cur->kind == ExprKind::Subscript) cur = cur->children[0].get();
    return cur->kind == ExprKind::Name ? cur->text : std::string{};
}


std::string qualify(const std::string& function, const std::string& cls, const std::string& name) {
    if (!function.empty()) return function + "." + name;
    return cls.empty() ? name : cls + "." + name;
}

struct Registry {
    std::map<std::string, std::string> free_functions;  // simple name -> qualified
    std::map<std::string, std::map<std::string, std::string>> class_methods;  // class -> method -> qualified
    std::map<std::string, std::vector<std::string>> params;  // qualified -> params
    std::set<std::string> imported;
};

class Lowering {
public:
    Lowering(ScriptProgram& prog, const Registry& reg) : prog_(prog), reg_(reg) {}

    void lower_block(const std::vector<RawStmt>& raws, const std::string& file, StmtId parent,
                     const std::string& function, const std::string& cls, std::vector<StmtId>& out) {
        for (const auto& r : raws) out.push_back(lower(r, file, parent, function, cls));
    }

private:
    StmtId lower(const RawStmt& r, const std::string& file, StmtId parent, const std::string& function,
                 const std::string& cls) {
        StmtId id = static_cast<StmtId>(prog_.stmts.size());
        prog_.stmts.emplace_back();
        Stmt s;
        s.id = id;
        s.parent = parent;
        s.function = function;
        s.file = file;
        s.line = r.line;
        s.value = r.value;
        s.op = r.op;
        cls_ = cls;
        calls_.clear();
        sources_.clear();

        std::vector<StmtId> body, orelse;
        switch (r.kind) {
        case RawKind::Assign:
            s.kind = StmtKind::Assign;
            if (r.targets.size() > 1) s.op = "chain";
            for (const auto& t : r.targets) add_targets(*t, s.targets);
            walk(*r.value, -1, -1);
            break;
        case RawKind::AugAssign: {
            s.kind = StmtKind::AugAssign;
            add_targets(*r.targets[0], s.targets);
            // The augmented target is read as well as written.
            walk(*r.targets[0], -1, -1);
            walk(*r.value, -1, -1);
            break;
        }
        case RawKind::Return:
            s.kind = StmtKind::Return;
            if (r.value) walk(*r.value, -1, -1);
            break;
        case RawKind::ExprStmt:
            s.kind = StmtKind::ExprStmt;
            walk(*r.value, -1, -1);
            add_mutation(*r.value, s.targets);
            break;
        case RawKind::If:
            s.kind = StmtKind::If;
            walk(*r.value, -1, -1);
            break;
        case RawKind::For:
            s.kind = StmtKind::Loop;
            s.op = "for";
            add_targets(*r.targets[0], s.targets);
            walk(*r.value, -1, -1);
            break;
        case RawKind::While:
            s.kind = StmtKind::Loop;
            s.op = "while";
            walk(*r.value, -1, -1);
            break;
        case RawKind::FuncDef:
            s.kind = StmtKind::FuncDef;
            s.name = r.name;
            s.params = r.params;
            s.defaults = r.defaults;
            break;
        case RawKind::ClassDef:
            s.kind = StmtKind::ClassDef;
            s.name = r.name;
            s.bases = r.bases;
            break;
        case RawKind::Import:
            s.kind = StmtKind::Import;
            break;
        case RawKind::Pass:
            s.kind = StmtKind::Pass;
            break;
        }
        s.sources = std::move(sources_);
        s.calls = std::move(calls_);
        prog_.stmts[static_cast<std::size_t>(id)] = std::move(s);
        prog_.source_map[id] = SourceLoc{file, r.line};

        if (r.kind == RawKind::FuncDef) {
            std::string qualified = qualify(function, cls, r.name);
            lower_block(r.body, file, id, qualified, cls, body);
            FunctionDef f{r.name, qualified, cls, r.params, id, body, file};
            prog_.functions.push_back(std::move(f));
        } else if (r.kind == RawKind::ClassDef) {
            ClassDef c{r.name, id, {}, file};
            for (const auto& m : r.body)
                if (m.kind == RawKind::FuncDef) c.methods.push_back(r.name + "." + m.name);
            prog_.classes.push_back(std::move(c));
            // Methods are lowered with the class context; other class-body
            // statements form their own scope.
            for (const auto& m : r.body) {
                if (m.kind == RawKind::FuncDef)
                    body.push_back(lower(m, file, id, "", r.name));
                else
                    body.push_back(lower(m, file, id, "class " + r.name, ""));
            }
        } else {
            lower_block(r.body, file, id, function, cls, body);
            lower_block(r.orelse, file, id, function, cls, orelse);
        }
        cls_ = cls;
        prog_.stmts[static_cast<std::size_t>(id)].body = std::move(body);
        prog_.stmts[static_cast<std::size_t>(id)].orelse = std::move(orelse);
        return id;
    }

    Entity entity_for(const Expr& e, int ctx_call, int ctx_arg) {
        Entity ent;
        ent.name = render(e);
        ent.context_call = ctx_call;
        ent.context_arg = ctx_arg;
        switch (e.kind) {
        case ExprKind::Name: ent.category = EntityCategory::Identifier; break;
        case ExprKind::Attribute: ent.category = EntityCategory::AttributeRef; break;
        case ExprKind::Subscript: {
            ent.category = EntityCategory::SubscriptRef;
            const Expr& idx = *e.children[1];
            if (idx.kind == ExprKind::Literal) {
                ent.key = idx.literal == LiteralKind::String ? unquote(idx.text) : idx.text;
            }
            break;
        }
        default: break;
        }
        if (e.kind == ExprKind::Attribute || e.kind == ExprKind::Subscript) ent.base_object = render(*e.children[0]);
        ent.keys = chain_keys(e);
        return ent;
    }

    // Walks index expressions nested inside a name chain.
    void walk_chain_indices(const Expr& e, int ctx_call, int ctx_arg) {
        if (e.kind == ExprKind::Attribute) {
            walk_chain_indices(*e.children[0], ctx_call, ctx_arg);
        } else if (e.kind == ExprKind::Subscript) {
            walk_chain_indices(*e.children[0], ctx_call, ctx_arg);
            walk(*e.children[1], ctx_call, ctx_arg);
        }
    }

    void walk(const Expr& e, int ctx_call, int ctx_arg) {
        switch (e.kind) {
        case ExprKind::Name:
            sources_.push_back(entity_for(e, ctx_call, ctx_arg));
            return;
        case ExprKind::Literal: {
            Entity lit;
            lit.name = e.text;
            lit.category = EntityCategory::Literal;
            lit.context_call = ctx_call;
            lit.context_arg = ctx_arg;
            sources_.push_back(std::move(lit));
            return;
        }
        case ExprKind::Attribute:
        case ExprKind::Subscript:
            if (is_chain(*e.children[0]))
                walk_chain_indices(*e.children[0], ctx_call, ctx_arg);
            else
                walk(*e.children[0], ctx_call, ctx_arg);
            if (e.kind == ExprKind::Subscript) walk(*e.children[1], ctx_call, ctx_arg);
            sources_.push_back(entity_for(e, ctx_call, ctx_arg));
            return;
        case ExprKind::Call: {
            int idx = lower_call(e, ctx_call, ctx_arg);
            Entity res;
            res.name = render(e);
            res.category = calls_[static_cast<std::size_t>(idx)].constructor ? EntityCategory::ObjectCtor
                                                                              : EntityCategory::CallResult;
            res.context_call = ctx_call;
            res.context_arg = ctx_arg;
            res.own_call = idx;
            sources_.push_back(std::move(res));
            return;
        }
        default:
            for (const auto& c : e.children) walk(*c, ctx_call, ctx_arg);
            for (const auto& kw : e.keywords) walk(*kw.value, ctx_call, ctx_arg);
            return;
        }
    }

    int lower_call(const Expr& e, int parent_call, int parent_arg) {
        int idx = static_cast<int>(calls_.size());
        calls_.emplace_back();
        CallSite cs;
        cs.parent_call = parent_call;
        cs.parent_arg = parent_arg;
        cs.text = render(e);
        const Expr& func = *e.children[0];
        cs.callee = render(func);

        bool drop_self = false;
        if (func.kind == ExprKind::Name) {
            if (auto it = reg_.class_methods.find(func.text); it != reg_.class_methods.end()) {
                cs.constructor = true;
                if (auto m = it->second.find("__init__"); m != it->second.end()) {
                    cs.resolved_function = m->second;
                    drop_self = true;
                }
            } else if (auto f = reg_.free_functions.find(func.text); f != reg_.free_functions.end()) {
                cs.resolved_function = f->second;
            } else if (!func.text.empty() && std::isupper(static_cast<unsigned char>(func.text[0]))) {
                cs.constructor = true;
            }
        } else if (func.kind == ExprKind::Attribute) {
            cs.bound_object = render(*func.children[0]);
            const Expr& recv = *func.children[0];
            if (recv.kind == ExprKind::Name && recv.text == "self" && !cls_.empty()) {
                auto it = reg_.class_methods.find(cls_);
                if (it != reg_.class_methods.end())
                    if (auto m = it->second.find(func.text); m != it->second.end()) {
                        cs.resolved_function = m->second;
                        drop_self = true;
                    }
            }
        }

        std::vector<ExprPtr> positional(e.children.begin() + 1, e.children.end());
        if (cs.resolved_function) {
            std::vector<std::string> params = reg_.params.at(*cs.resolved_function);
            if (drop_self && !params.empty()) params.erase(params.begin());
            std::vector<ExprPtr> args = positional;
            if (args.size() < params.size()) args.resize(params.size());
            for (const auto& kw : e.keywords) {
                auto p = std::find(params.begin(), params.end(), kw.name);
                if (p == params.end()) {
                    cs.keywords.push_back(kw);
                } else {
                    args[static_cast<std::size_t>(p - params.begin())] = kw.value;
                }
            }
            cs.args = std::move(args);
        } else {
            cs.args = std::move(positional);
            cs.keywords = e.keywords;
        }

        if (func.kind == ExprKind::Attribute) {
            const Expr& recv = *func.children[0];
            if (is_chain(recv)) {
                walk_chain_indices(recv, idx, -2);
                sources_.push_back(entity_for(recv, idx, -2));
            } else {
                walk(recv, idx, -2);
            }
        }
        for (std::size_t i = 0; i < cs.args.size(); ++i)
            if (cs.args[i]) walk(*cs.args[i], idx, static_cast<int>(i));
        for (std::size_t k = 0; k < cs.keywords.size(); ++k)
            walk(*cs.keywords[k].value, idx, static_cast<int>(cs.args.size() + k));
        calls_[static_cast<std::size_t>(idx)] = std::move(cs);
        return idx;
    }

    void add_targets(const Expr& t, std::vector<Entity>& out) {
        switch (t.kind) {
        case ExprKind::Tuple:
        case ExprKind::List:
            for (const auto& c : t.children) add_targets(*c, out);
            return;
        case ExprKind::Subscript:
            walk(*t.children[1], -1, -1);
            [[fallthrough]];
        case ExprKind::Attribute:
            if (!is_chain(t)) throw SyntaxOutsideSubset(t.line, "assignment target on a computed object");
            walk_chain_indices(*t.children[0], -1, -1);
            [[fallthrough]];
        case ExprKind::Name:
            out.push_back(entity_for(t, -1, -1));
            return;
        default: throw SyntaxOutsideSubset(t.line, "assignment target");
        }
    }

    // `obj.method(args...)` as a statement updates the state of `obj`.
    void add_mutation(const Expr& e, std::vector<Entity>& out) {
        if (e.kind != ExprKind::Call || e.children.size() + e.keywords.size() < 2) return;
        const Expr& func = *e.children[0];
        if (func.kind != ExprKind::Attribute || !is_chain(*func.children[0])) return;
        const CallSite& cs = calls_.front();
        if (cs.resolved_function) return;
        std::string root = root_name(*func.children[0]);
        if (reg_.imported.contains(root) || reg_.class_methods.contains(root) || is_builtin(root)) return;
        Entity m = entity_for(*func.children[0], -1, -1);
        m.mutation = true;
        out.push_back(std::move(m));
    }

    ScriptProgram& prog_;
    const Registry& reg_;
    std::string cls_;
    std::vector<CallSite> calls_;
    std::vector<Entity> sources_;
};

void collect(const std::vector<RawStmt>& raws, const std::string& file, const std::string& function,
             const std::string& cls, Registry& reg, std::set<std::string>& seen_in_file) {
    for (const auto& r : raws) {
        if (r.kind == RawKind::Import)
            for (const auto& n : r.bound_names) reg.imported.insert(n);
        if (r.kind == RawKind::FuncDef) {
            std::string qualified = qualify(function, cls, r.name);
            if (!seen_in_file.insert(qualified).second)
                throw SyntaxOutsideSubset(r.line, "duplicate function definition '" + qualified + "' in " + file);
            reg.params[qualified] = r.params;
            if (function.empty() && !cls.empty())
                reg.class_methods[cls][r.name] = qualified;
            else
                reg.free_functions.emplace(r.name, qualified);
            collect(r.body, file, qualified, cls, reg, seen_in_file);
        } else if (r.kind == RawKind::ClassDef) {
            reg.class_methods[r.name];
            collect(r.body, file, function, r.name, reg, seen_in_file);
        } else {
            collect(r.body, file, function, cls, reg, seen_in_file);
            collect(r.orelse, file, function, cls, reg, seen_in_file);
        }
    }
}

} // namespace

ScriptProgram parse_sources(const std::vector<SourceFile>& files, const ParseOptions& options) {
    std::vector<std::vector<RawStmt>> raws;
    Registry reg;
    for (const auto& f : files) {
        raws.push_back(detail::parse_file(f.text));
        std::set<std::string> seen;
        collect(raws.back(), f.path, "", "", reg, seen);
    }
    ScriptProgram prog;
    Lowering low(prog, reg);
    for (std::size_t i = 0; i < files.size(); ++i) low.lower_block(raws[i], files[i].path, kNoStmt, "", "", prog.top_level);
    prog.imported.assign(reg.imported.begin(), reg.imported.end());

    DefUseChains chains = defuse_chains(prog);
    for (const auto& u : chains.external)
        prog.stmts[static_cast<std::size_t>(u.stmt)].sources[static_cast<std::size_t>(u.source)].external = true;
    for (const auto& u : chains.unresolved) {
        const Stmt& s = prog.stmt(u.stmt);
        const Entity& e = s.sources[static_cast<std::size_t>(u.source)];
        if (options.strict_names) throw UnresolvedName(e.name, s.line);
        prog.warnings.push_back(Diagnostic{s.file, s.line, "unresolved name '" + e.name + "' marked external"});
    }
    return prog;
}

ScriptProgram parse_source(std::string_view text, const ParseOptions& options, std::string file) {
    return parse_sources({SourceFile{std::move(file), std::string(text)}}, options);
}

// ---------------------------------------------------------------------------
// Printing and JSON
// ---------------------------------------------------------------------------

namespace {

void print_block(const ScriptProgram& prog, const std::vector<StmtId>& ids, int indent, std::string& out,
                 bool is_else_if = false);

void print_stmt(const ScriptProgram& prog, StmtId id, int indent, std::string& out, bool as_elif = false) {
    const Stmt& s = prog.stmt(id);
    std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
    std::string text = s.text();
    if (as_elif) text = "el" + text;
    out += pad + text + "\n";
    if (s.kind == StmtKind::If || s.kind == StmtKind::Loop || s.kind == StmtKind::FuncDef ||
        s.kind == StmtKind::ClassDef) {
        if (s.body.empty())
            out += pad + "    pass\n";
        else
            print_block(prog, s.body, indent + 1, out);
    }
    if (s.kind == StmtKind::If && !s.orelse.empty()) {
        const Stmt& first = prog.stmt(s.orelse.front());
        if (s.orelse.size() == 1 && first.kind == StmtKind::If) {
            print_stmt(prog, first.id, indent, out, true);
        } else {
            out += pad + "else:\n";
            print_block(prog, s.orelse, indent + 1, out);
        }
    }
}

void print_block(const ScriptProgram& prog, const std::vector<StmtId>& ids, int indent, std::string& out, bool) {
    for (StmtId id : ids) print_stmt(prog, id, indent, out);
}

nlohmann::json entity_json(const Entity& e) {
    nlohmann::json j{{"name", e.name}, {"category", std::string(to_string(e.category))}};
    if (e.base_object) j["base_object"] = *e.base_object;
    if (e.key) j["key"] = *e.key;
    if (e.context_call >= 0) {
        j["call"] = e.context_call;
        j["arg"] = e.context_arg;
    }
    if (e.own_call >= 0) j["own_call"] = e.own_call;
    if (e.external) j["external"] = true;
    if (e.mutation) j["mutation"] = true;
    return j;
}

} // namespace

std::string print_program(const ScriptProgram& prog) {
    std::string out;
    print_block(prog, prog.top_level, 0, out);
    return out;
}

nlohmann::json to_json(const ScriptProgram& prog, bool with_locations) {
    nlohmann::json stmts = nlohmann::json::array();
    for (const auto& s : prog.stmts) {
        nlohmann::json j{{"id", s.id}, {"kind", std::string(to_string(s.kind))}, {"text", s.text()}};
        if (!s.function.empty()) j["function"] = s.function;
        nlohmann::json targets = nlohmann::json::array();
        for (const auto& t : s.targets) targets.push_back(entity_json(t));
        nlohmann::json sources = nlohmann::json::array();
        for (const auto& e : s.sources) sources.push_back(entity_json(e));
        j["targets"] = targets;
        j["sources"] = sources;
        if (!s.calls.empty()) {
            nlohmann::json calls = nlohmann::json::array();
            for (const auto& c : s.calls) {
                nlohmann::json cj{{"callee", c.callee}, {"text", c.text}};
                if (c.bound_object) cj["bound_object"] = *c.bound_object;
                if (c.resolved_function) cj["resolved"] = *c.resolved_function;
                if (c.constructor) cj["constructor"] = true;
                if (c.parent_call >= 0) {
                    cj["parent_call"] = c.parent_call;
                    cj["parent_arg"] = c.parent_arg;
                }
                calls.push_back(cj);
            }
            j["calls"] = calls;
        }
        if (!s.body.empty()) j["body"] = s.body;
        if (!s.orelse.empty()) j["orelse"] = s.orelse;
        if (with_locations) {
            j["file"] = s.file;
            j["line"] = s.line;
        }
        stmts.push_back(std::move(j));
    }
    nlohmann::json functions = nlohmann::json::array();
    for (const auto& f : prog.functions)
        functions.push_back({{"name", f.qualified}, {"params", f.params}, {"stmt", f.def_stmt}});
    nlohmann::json out{{"stmts", stmts}, {"functions", functions}, {"top_level", prog.top_level}};
    if (with_locations) {
        nlohmann::json warnings = nlohmann::json::array();
        for (const auto& w : prog.warnings) warnings.push_back({{"file", w.file}, {"line", w.line}, {"message", w.message}});
        out["warnings"] = warnings;
    }
    return out;
}

} // namespace pvota::script
