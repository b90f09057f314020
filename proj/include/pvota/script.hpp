#pragma once

// Statement-level intermediate form for the analyzed DERMS application
// source. The accepted language is a fixed subset of a Python-like scripting
// language: assignments, augmented assignments, function and class
// definitions, calls with positional and keyword arguments, attribute access,
// subscripts, if/elif/else, for/while, return, imports and literals.
// Anything else (decorators, comprehensions, lambdas, try/except, with,
// yield, ...) is rejected with SyntaxOutsideSubset.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pvota::script {

using StmtId = int;
inline constexpr StmtId kNoStmt = -1;

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind { Name, Attribute, Subscript, Call, Literal, BinOp, UnaryOp, BoolOp, Compare, List, Tuple, Dict, Set };
enum class LiteralKind { None, Number, String, Bool, NoneValue };

struct Keyword {
    std::string name;
    ExprPtr value;
};

struct Expr {
    ExprKind kind = ExprKind::Name;
    /// Name: identifier. Attribute: attribute name. BinOp/UnaryOp/BoolOp/
    /// Compare: operator spelling. Literal: token text.
    std::string text;
    LiteralKind literal = LiteralKind::None;
    /// Attribute/Subscript: [value, (index)]. Call: [func, positional args...].
    /// Operators: operands. Dict: alternating key, value.
    std::vector<ExprPtr> children;
    std::vector<Keyword> keywords;
    /// Compare chains carry one operator per pair.
    std::vector<std::string> ops;
    int line = 0;
};

/// Canonical source rendering. Re-parsing the result yields the same tree.
std::string render(const Expr& e);
/// Strips the quotes of a string literal token.
std::string unquote(const std::string& lit);

// ---------------------------------------------------------------------------
// Entities, call sites, statements
// ---------------------------------------------------------------------------

enum class EntityCategory { Identifier, AttributeRef, SubscriptRef, CallResult, ObjectCtor, Literal };

std::string_view to_string(EntityCategory c);

struct Entity {
    std::string name;            ///< rendered expression text
    EntityCategory category = EntityCategory::Identifier;
    /// Def-use lookup keys, most specific first: `a.b.c` -> {a.b.c, a.b, a};
    /// `x[i]` -> keys of `x`. Empty for literals and call results.
    std::vector<std::string> keys;
    std::optional<std::string> base_object;  ///< Attribute/Subscript base, rendered
    std::optional<std::string> key;          ///< literal subscript key, unquoted
    int context_call = -1;       ///< index of enclosing CallSite, -1 at statement level
    int context_arg = -1;        ///< argument position in that call, -2 = receiver object
    int own_call = -1;           ///< CallResult/ObjectCtor: index of its CallSite
    bool external = false;       ///< use that resolves to no definition
    bool mutation = false;       ///< target created by an object-bound call statement

    /// Name under which this entity is defined by def-use.
    const std::string& def_key() const { return keys.front(); }
    /// Subscript targets and object mutations do not kill earlier definitions.
    bool weak_definition() const;
};

struct CallSite {
    std::string callee;                       ///< rendered callee expression
    std::string text;                         ///< rendered call expression
    std::optional<std::string> bound_object;  ///< receiver for `obj.method(...)`
    std::vector<ExprPtr> args;                ///< positional order (normalized when callee known)
    std::vector<Keyword> keywords;            ///< keywords of unknown callees
    int parent_call = -1;                     ///< call receiving this result as an argument
    int parent_arg = -1;
    bool constructor = false;
    std::optional<std::string> resolved_function;  ///< qualified name of a user-defined callee
};

enum class StmtKind { Assign, AugAssign, Return, ExprStmt, If, Loop, FuncDef, ClassDef, Import, Pass };

std::string_view to_string(StmtKind k);

struct Stmt {
    StmtId id = kNoStmt;
    StmtKind kind = StmtKind::Pass;
    std::vector<Entity> targets;
    std::vector<Entity> sources;
    std::vector<CallSite> calls;
    ExprPtr value;            ///< right-hand side / condition / iterable / returned value
    std::string op;           ///< AugAssign operator; Loop: "for" or "while"; Import: module
    std::string name;         ///< FuncDef/ClassDef name
    std::vector<std::string> params;
    std::vector<ExprPtr> defaults;  ///< parallel to params, null when absent
    std::vector<std::string> bases;
    std::vector<StmtId> body;
    std::vector<StmtId> orelse;
    StmtId parent = kNoStmt;  ///< enclosing compound statement
    std::string function;     ///< qualified name of the enclosing function, empty at module level
    std::string file;
    int line = 0;

    /// First call evaluated at statement level, when there is one.
    const CallSite* callee() const;
    /// One-line canonical rendering.
    std::string text() const;
    /// `x = y` with a bare identifier on the right.
    bool pure_copy() const;
    /// True when the statement reads only literals.
    bool constant() const;
};

struct FunctionDef {
    std::string name;
    std::string qualified;   ///< `Class.method` for methods
    std::string class_name;  ///< empty for free functions
    std::vector<std::string> params;
    StmtId def_stmt = kNoStmt;
    std::vector<StmtId> body;
    std::string file;
};

struct ClassDef {
    std::string name;
    StmtId def_stmt = kNoStmt;
    std::vector<std::string> methods;  ///< qualified names
    std::string file;
};

struct SourceLoc {
    std::string file;
    int line = 0;
};

struct Diagnostic {
    std::string file;
    int line = 0;
    std::string message;
};

struct ScriptProgram {
    std::vector<Stmt> stmts;  ///< indexed by StmtId, in source (pre-)order
    std::vector<FunctionDef> functions;
    std::vector<ClassDef> classes;
    std::vector<StmtId> top_level;
    std::map<StmtId, SourceLoc> source_map;
    std::vector<std::string> imported;  ///< names bound by import statements
    std::vector<Diagnostic> warnings;   ///< unresolved names downgraded to `external`

    const Stmt& stmt(StmtId id) const { return stmts.at(static_cast<std::size_t>(id)); }
    const FunctionDef* function(std::string_view qualified) const;
    const ClassDef* class_def(std::string_view name) const;
    bool is_imported(std::string_view name) const;

    /// Statements whose target names contain `name` (exact entity text).
    std::vector<StmtId> definitions_of(std::string_view name) const;
};

struct ParseOptions {
    /// Treat names that resolve to no definition as errors instead of
    /// downgrading them to warnings with an `external` marker.
    bool strict_names = false;
};

struct SourceFile {
    std::string path;
    std::string text;
};

/// Parses one or more files into a single program; names are resolved across
/// files. Throws SyntaxOutsideSubset on constructs outside the subset.
ScriptProgram parse_sources(const std::vector<SourceFile>& files, const ParseOptions& options = {});
ScriptProgram parse_source(std::string_view text, const ParseOptions& options = {}, std::string file = "<input>");

/// Renders the program back to source in canonical form.
std::string print_program(const ScriptProgram& prog);

nlohmann::json to_json(const ScriptProgram& prog, bool with_locations = true);

} // namespace pvota::script
