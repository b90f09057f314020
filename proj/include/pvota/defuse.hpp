#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "pvota/script.hpp"

namespace pvota::script {

enum class DefKind { Target, Param, Function };

/// A definition: statement target `index` (Target), parameter `index` of the
/// FuncDef statement (Param), or the function/class name bound by a
/// FuncDef/ClassDef statement (Function).
struct DefSite {
    StmtId stmt = kNoStmt;
    DefKind kind = DefKind::Target;
    int index = 0;
    std::string key;

    auto operator<=>(const DefSite&) const = default;
};

/// One source entity of one statement.
struct UseSite {
    StmtId stmt = kNoStmt;
    int source = 0;

    auto operator<=>(const UseSite&) const = default;
};

struct DefUseChains {
    std::map<UseSite, std::vector<DefSite>> reaching;
    std::map<DefSite, std::vector<UseSite>> uses;
    std::vector<UseSite> external;       ///< uses with no definition (imports, builtins, unresolved)
    std::vector<UseSite> unresolved;     ///< subset of `external` that is neither imported nor builtin

    const std::vector<DefSite>& defs_of(UseSite u) const;
    const std::vector<UseSite>& uses_of(const DefSite& d) const;
    /// Definition statement ids reaching a use, sorted and unique.
    std::vector<StmtId> def_stmts(UseSite u) const;
};

/// Flow-sensitive reaching definitions over a statement CFG per scope
/// (module, each function, each class body). Deterministic.
DefUseChains defuse_chains(const ScriptProgram& prog);

/// The definitions created by one statement (targets, or params and the bound
/// name for FuncDef).
std::vector<DefSite> definitions_at(const ScriptProgram& prog, StmtId id);

bool is_builtin(std::string_view name);

} // namespace pvota::script
