#pragma once

// Internal: tokens and the raw statement tree produced by the parser before
// lowering into the statement-level intermediate form.

#include <string>
#include <string_view>
#include <vector>

#include "pvota/script.hpp"

namespace pvota::script::detail {

enum class Tok { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 0;
};

std::vector<Token> tokenize(std::string_view text);

enum class RawKind { Assign, AugAssign, Return, ExprStmt, If, For, While, FuncDef, ClassDef, Import, Pass };

struct RawStmt {
    RawKind kind = RawKind::Pass;
    std::vector<ExprPtr> targets;
    ExprPtr value;
    std::string op;
    std::string name;
    std::vector<std::string> params;
    std::vector<ExprPtr> defaults;
    std::vector<std::string> bases;
    std::vector<std::string> bound_names;  ///< Import: names bound in the module
    std::vector<RawStmt> body;
    std::vector<RawStmt> orelse;
    int line = 0;
};

std::vector<RawStmt> parse_file(std::string_view text);

/// Precedence used by the renderer; higher binds tighter.
int precedence(const Expr& e);

} // namespace pvota::script::detail
