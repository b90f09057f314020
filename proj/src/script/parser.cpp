#include <memory>
#include <set>
#include <string>
#include <vector>

#include "pvota/error.hpp"
#include "syntax.hpp"

namespace pvota::script::detail {

namespace {

const std::set<std::string, std::less<>> kRejectedKeywords = {
    "try", "except", "finally", "with", "lambda", "yield", "async", "await", "raise",
    "del", "assert", "global", "nonlocal", "match"};

const std::set<std::string, std::less<>> kAugOps = {"+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                                    "&=", "|=", "^=", "<<=", ">>="};

const std::set<std::string, std::less<>> kReserved = {
    "and", "or", "not", "in", "is", "if", "else", "elif", "for", "while", "def", "class",
    "return", "import", "from", "as", "pass", "break", "continue", "True", "False", "None"};

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    std::vector<RawStmt> file() {
        std::vector<RawStmt> out;
        while (!at(Tok::End)) {
            if (accept(Tok::Newline)) continue;
            statement(out);
        }
        return out;
    }

private:
    // --- token helpers ------------------------------------------------------
    const Token& peek(std::size_t k = 0) const {
        std::size_t i = std::min(pos_ + k, toks_.size() - 1);
        return toks_[i];
    }
    bool at(Tok k) const { return peek().kind == k; }
    bool at_op(std::string_view op) const { return peek().kind == Tok::Op && peek().text == op; }
    bool at_kw(std::string_view kw) const { return peek().kind == Tok::Name && peek().text == kw; }
    const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
    bool accept(Tok k) {
        if (!at(k)) return false;
        ++pos_;
        return true;
    }
    bool accept_op(std::string_view op) {
        if (!at_op(op)) return false;
        ++pos_;
        return true;
    }
    bool accept_kw(std::string_view kw) {
        if (!at_kw(kw)) return false;
        ++pos_;
        return true;
    }
    [[noreturn]] void fail(const std::string& what) const { throw SyntaxOutsideSubset(peek().line, what); }
    void expect_op(std::string_view op) {
        if (!accept_op(op)) fail("expected '" + std::string(op) + "' near '" + peek().text + "'");
    }
    std::string expect_name() {
        if (!at(Tok::Name) || kReserved.contains(peek().text)) fail("expected identifier near '" + peek().text + "'");
        return next().text;
    }
    void check_rejected() const {
        if (peek().kind == Tok::Name && kRejectedKeywords.contains(peek().text)) {
            std::string kw = peek().text;
            if (kw == "try" || kw == "except" || kw == "finally" || kw == "raise") fail("exception handling ('" + kw + "')");
            if (kw == "lambda") fail("lambda");
            fail("'" + kw + "' statement");
        }
    }

    // --- statements ---------------------------------------------------------
    void statement(std::vector<RawStmt>& out) {
        if (at_op("@")) fail("decorator");
        check_rejected();
        if (at_kw("def")) return out.push_back(funcdef());
        if (at_kw("class")) return out.push_back(classdef());
        if (at_kw("if")) return out.push_back(if_stmt());
        if (at_kw("for")) return out.push_back(for_stmt());
        if (at_kw("while")) return out.push_back(while_stmt());
        simple_line(out);
    }

    void simple_line(std::vector<RawStmt>& out) {
        out.push_back(simple_stmt());
        while (accept_op(";")) {
            if (at(Tok::Newline)) break;
            out.push_back(simple_stmt());
        }
        if (!accept(Tok::Newline) && !at(Tok::End) && !at(Tok::Dedent)) fail("unexpected token '" + peek().text + "'");
    }

    RawStmt simple_stmt() {
        check_rejected();
        RawStmt s;
        s.line = peek().line;
        if (accept_kw("pass")) {
            s.kind = RawKind::Pass;
            s.op = "pass";
            return s;
        }
        if (accept_kw("break")) {
            s.kind = RawKind::Pass;
            s.op = "break";
            return s;
        }
        if (accept_kw("continue")) {
            s.kind = RawKind::Pass;
            s.op = "continue";
            return s;
        }
        if (accept_kw("return")) {
            s.kind = RawKind::Return;
            if (!at(Tok::Newline) && !at_op(";") && !at(Tok::End)) s.value = testlist();
            return s;
        }
        if (at_kw("import") || at_kw("from")) return import_stmt();

        ExprPtr first = testlist();
        if (at_op(":")) fail("annotated assignment");
        if (peek().kind == Tok::Op && kAugOps.contains(peek().text)) {
            s.kind = RawKind::AugAssign;
            s.op = next().text;
            s.op.pop_back();
            check_target(*first, true);
            s.targets.push_back(first);
            s.value = testlist();
            return s;
        }
        if (at_op("=")) {
            s.kind = RawKind::Assign;
            std::vector<ExprPtr> chain{first};
            while (accept_op("=")) chain.push_back(testlist());
            s.value = chain.back();
            chain.pop_back();
            for (auto& t : chain) check_target(*t, false);
            s.targets = std::move(chain);
            return s;
        }
        s.kind = RawKind::ExprStmt;
        s.value = first;
        return s;
    }

    void check_target(const Expr& e, bool aug) const {
        switch (e.kind) {
        case ExprKind::Name:
        case ExprKind::Attribute:
        case ExprKind::Subscript: return;
        case ExprKind::Tuple:
        case ExprKind::List:
            if (aug) break;
            for (auto& c : e.children) check_target(*c, false);
            return;
        default: break;
        }
        throw SyntaxOutsideSubset(e.line, "assignment target");
    }

    RawStmt import_stmt() {
        RawStmt s;
        s.kind = RawKind::Import;
        s.line = peek().line;
        if (accept_kw("import")) {
            std::string text = "import ";
            bool first = true;
            do {
                std::string mod = dotted_name();
                std::string bound = mod.substr(0, mod.find('.'));
                if (!first) text += ", ";
                text += mod;
                if (accept_kw("as")) {
                    bound = expect_name();
                    text += " as " + bound;
                }
                s.bound_names.push_back(bound);
                first = false;
            } while (accept_op(","));
            s.op = text;
            return s;
        }
        expect_kw("from");
        std::string mod;
        while (accept_op(".")) mod += ".";
        if (!at_kw("import")) mod += dotted_name();
        expect_kw("import");
        if (at_op("*")) fail("wildcard import");
        bool paren = accept_op("(");
        std::string text = "from " + mod + " import ";
        bool first = true;
        do {
            if (paren && at_op(")")) break;
            std::string name = expect_name();
            std::string bound = name;
            if (!first) text += ", ";
            text += name;
            if (accept_kw("as")) {
                bound = expect_name();
                text += " as " + bound;
            }
            s.bound_names.push_back(bound);
            first = false;
        } while (accept_op(","));
        if (paren) expect_op(")");
        s.op = text;
        return s;
    }

    void expect_kw(std::string_view kw) {
        if (!accept_kw(kw)) fail("expected '" + std::string(kw) + "'");
    }

    std::string dotted_name() {
        std::string n = expect_name();
        while (accept_op(".")) n += "." + expect_name();
        return n;
    }

    std::vector<RawStmt> suite() {
        std::vector<RawStmt> body;
        if (!accept(Tok::Newline)) {
            simple_line(body);
            return body;
        }
        while (accept(Tok::Newline)) {}
        if (!accept(Tok::Indent)) fail("expected an indented block");
        while (!accept(Tok::Dedent)) {
            if (at(Tok::End)) break;
            if (accept(Tok::Newline)) continue;
            statement(body);
        }
        return body;
    }

    RawStmt funcdef() {
        RawStmt s;
        s.kind = RawKind::FuncDef;
        s.line = peek().line;
        expect_kw("def");
        s.name = expect_name();
        expect_op("(");
        while (!at_op(")")) {
            if (at_op("*") || at_op("**")) fail("variadic parameters");
            s.params.push_back(expect_name());
            if (at_op(":")) fail("parameter annotation");
            s.defaults.push_back(accept_op("=") ? test() : nullptr);
            if (!accept_op(",")) break;
        }
        expect_op(")");
        if (at_op("->")) fail("return annotation");
        expect_op(":");
        s.body = suite();
        return s;
    }

    RawStmt classdef() {
        RawStmt s;
        s.kind = RawKind::ClassDef;
        s.line = peek().line;
        expect_kw("class");
        s.name = expect_name();
        if (accept_op("(")) {
            while (!at_op(")")) {
                s.bases.push_back(render(*test()));
                if (!accept_op(",")) break;
            }
            expect_op(")");
        }
        expect_op(":");
        s.body = suite();
        return s;
    }

    RawStmt if_stmt() {
        RawStmt s;
        s.kind = RawKind::If;
        s.line = peek().line;
        next();  // 'if' or 'elif'
        s.value = test();
        expect_op(":");
        s.body = suite();
        if (at_kw("elif")) {
            s.orelse.push_back(if_stmt());
        } else if (accept_kw("else")) {
            expect_op(":");
            s.orelse = suite();
        }
        return s;
    }

    RawStmt for_stmt() {
        RawStmt s;
        s.kind = RawKind::For;
        s.line = peek().line;
        expect_kw("for");
        ExprPtr target = target_list();
        check_target(*target, false);
        s.targets.push_back(target);
        expect_kw("in");
        s.value = testlist();
        expect_op(":");
        s.body = suite();
        if (at_kw("else")) fail("loop else clause");
        return s;
    }

    RawStmt while_stmt() {
        RawStmt s;
        s.kind = RawKind::While;
        s.line = peek().line;
        expect_kw("while");
        s.value = test();
        expect_op(":");
        s.body = suite();
        if (at_kw("else")) fail("loop else clause");
        return s;
    }

    // --- expressions --------------------------------------------------------
    ExprPtr target_list() {
        int line = peek().line;
        std::vector<ExprPtr> items{bitor_expr()};
        bool tuple = false;
        while (accept_op(",")) {
            tuple = true;
            if (at_kw("in")) break;
            items.push_back(bitor_expr());
        }
        if (!tuple) return items.front();
        return make(Expr{ExprKind::Tuple, "", LiteralKind::None, std::move(items), {}, {}, line});
    }

    ExprPtr testlist() {
        int line = peek().line;
        std::vector<ExprPtr> items{test()};
        bool tuple = false;
        while (accept_op(",")) {
            tuple = true;
            if (at(Tok::Newline) || at_op("=") || at_op(")") || at(Tok::End) || at_op(";")) break;
            items.push_back(test());
        }
        if (!tuple) return items.front();
        return make(Expr{ExprKind::Tuple, "", LiteralKind::None, std::move(items), {}, {}, line});
    }

    ExprPtr test() {
        if (at_kw("lambda")) fail("lambda");
        ExprPtr e = or_test();
        if (at_kw("if")) fail("conditional expression");
        if (at_op(":=")) fail("assignment expression");
        return e;
    }

    ExprPtr bool_chain(std::string_view kw, ExprPtr (Parser::*sub)()) {
        int line = peek().line;
        ExprPtr e = (this->*sub)();
        if (!at_kw(kw)) return e;
        std::vector<ExprPtr> ops{e};
        while (accept_kw(kw)) ops.push_back((this->*sub)());
        return make(Expr{ExprKind::BoolOp, std::string(kw), LiteralKind::None, std::move(ops), {}, {}, line});
    }
    ExprPtr or_test() { return bool_chain("or", &Parser::and_test); }
    ExprPtr and_test() { return bool_chain("and", &Parser::not_test); }

    ExprPtr not_test() {
        int line = peek().line;
        if (accept_kw("not"))
            return make(Expr{ExprKind::UnaryOp, "not", LiteralKind::None, {not_test()}, {}, {}, line});
        return comparison();
    }

    std::string comp_op() {
        if (peek().kind == Tok::Op) {
            const auto& t = peek().text;
            if (t == "<" || t == ">" || t == "==" || t == ">=" || t == "<=" || t == "!=") return next().text;
        }
        if (at_kw("in")) return next().text;
        if (at_kw("not") && peek(1).kind == Tok::Name && peek(1).text == "in") {
            pos_ += 2;
            return "not in";
        }
        if (accept_kw("is")) return accept_kw("not") ? "is not" : "is";
        return {};
    }

    ExprPtr comparison() {
        int line = peek().line;
        ExprPtr e = bitor_expr();
        std::vector<ExprPtr> operands{e};
        std::vector<std::string> ops;
        for (std::string op = comp_op(); !op.empty(); op = comp_op()) {
            ops.push_back(op);
            operands.push_back(bitor_expr());
        }
        if (ops.empty()) return e;
        return make(Expr{ExprKind::Compare, "", LiteralKind::None, std::move(operands), {}, std::move(ops), line});
    }

    ExprPtr binary(std::initializer_list<std::string_view> ops, ExprPtr (Parser::*sub)()) {
        ExprPtr e = (this->*sub)();
        for (;;) {
            if (peek().kind != Tok::Op) return e;
            bool matched = false;
            for (auto op : ops) matched = matched || peek().text == op;
            if (!matched) return e;
            int line = peek().line;
            std::string op = next().text;
            ExprPtr rhs = (this->*sub)();
            e = make(Expr{ExprKind::BinOp, op, LiteralKind::None, {e, rhs}, {}, {}, line});
        }
    }
    ExprPtr bitor_expr() { return binary({"|"}, &Parser::bitxor_expr); }
    ExprPtr bitxor_expr() { return binary({"^"}, &Parser::bitand_expr); }
    ExprPtr bitand_expr() { return binary({"&"}, &Parser::shift_expr); }
    ExprPtr shift_expr() { return binary({"<<", ">>"}, &Parser::arith_expr); }
    ExprPtr arith_expr() { return binary({"+", "-"}, &Parser::term); }
    ExprPtr term() { return binary({"*", "/", "//", "%", "@"}, &Parser::factor); }

    ExprPtr factor() {
        int line = peek().line;
        if (at_op("+") || at_op("-") || at_op("~")) {
            std::string op = next().text;
            return make(Expr{ExprKind::UnaryOp, op, LiteralKind::None, {factor()}, {}, {}, line});
        }
        return power();
    }

    ExprPtr power() {
        int line = peek().line;
        ExprPtr base = primary();
        if (accept_op("**")) return make(Expr{ExprKind::BinOp, "**", LiteralKind::None, {base, factor()}, {}, {}, line});
        return base;
    }

    ExprPtr primary() {
        ExprPtr e = atom();
        for (;;) {
            int line = peek().line;
            if (accept_op(".")) {
                std::string attr = expect_name();
                e = make(Expr{ExprKind::Attribute, attr, LiteralKind::None, {e}, {}, {}, line});
            } else if (accept_op("(")) {
                e = call_args(e, line);
            } else if (accept_op("[")) {
                if (at_op(":")) fail("slice");
                ExprPtr idx = test();
                if (at_op(":")) fail("slice");
                if (at_op(",")) {
                    std::vector<ExprPtr> items{idx};
                    while (accept_op(",")) {
                        if (at_op("]")) break;
                        items.push_back(test());
                    }
                    idx = make(Expr{ExprKind::Tuple, "", LiteralKind::None, std::move(items), {}, {}, line});
                }
                expect_op("]");
                e = make(Expr{ExprKind::Subscript, "", LiteralKind::None, {e, idx}, {}, {}, line});
            } else {
                return e;
            }
        }
    }

    ExprPtr call_args(ExprPtr func, int line) {
        Expr call{ExprKind::Call, "", LiteralKind::None, {func}, {}, {}, line};
        while (!at_op(")")) {
            if (at_op("*") || at_op("**")) fail("argument unpacking");
            if (at(Tok::Name) && peek(1).kind == Tok::Op && peek(1).text == "=") {
                std::string name = next().text;
                next();
                call.keywords.push_back(Keyword{name, test()});
            } else {
                if (!call.keywords.empty()) fail("positional argument after keyword argument");
                call.children.push_back(test());
            }
            if (at_kw("for")) fail("comprehension");
            if (!accept_op(",")) break;
        }
        expect_op(")");
        return make(std::move(call));
    }

    ExprPtr atom() {
        const Token& t = peek();
        int line = t.line;
        if (t.kind == Tok::Number) return make(Expr{ExprKind::Literal, next().text, LiteralKind::Number, {}, {}, {}, line});
        if (t.kind == Tok::String) {
            std::string text = next().text;
            while (at(Tok::String)) text += " " + next().text;
            return make(Expr{ExprKind::Literal, text, LiteralKind::String, {}, {}, {}, line});
        }
        if (t.kind == Tok::Name) {
            if (t.text == "True" || t.text == "False")
                return make(Expr{ExprKind::Literal, next().text, LiteralKind::Bool, {}, {}, {}, line});
            if (t.text == "None") return make(Expr{ExprKind::Literal, next().text, LiteralKind::NoneValue, {}, {}, {}, line});
            check_rejected();
            return make(Expr{ExprKind::Name, expect_name(), LiteralKind::None, {}, {}, {}, line});
        }
        if (accept_op("(")) {
            if (accept_op(")")) return make(Expr{ExprKind::Tuple, "", LiteralKind::None, {}, {}, {}, line});
            ExprPtr first = test();
            if (at_kw("for")) fail("generator expression");
            if (accept_op(")")) return first;
            std::vector<ExprPtr> items{first};
            while (accept_op(",")) {
                if (at_op(")")) break;
                items.push_back(test());
            }
            expect_op(")");
            return make(Expr{ExprKind::Tuple, "", LiteralKind::None, std::move(items), {}, {}, line});
        }
        if (accept_op("[")) {
            std::vector<ExprPtr> items;
            while (!at_op("]")) {
                items.push_back(test());
                if (at_kw("for")) fail("comprehension");
                if (!accept_op(",")) break;
            }
            expect_op("]");
            return make(Expr{ExprKind::List, "", LiteralKind::None, std::move(items), {}, {}, line});
        }
        if (accept_op("{")) {
            std::vector<ExprPtr> items;
            bool dict = true;
            bool first = true;
            while (!at_op("}")) {
                if (at_op("**")) fail("dict unpacking");
                items.push_back(test());
                if (first) dict = at_op(":");
                first = false;
                if (dict) {
                    expect_op(":");
                    items.push_back(test());
                }
                if (at_kw("for")) fail("comprehension");
                if (!accept_op(",")) break;
            }
            expect_op("}");
            return make(Expr{dict ? ExprKind::Dict : ExprKind::Set, "", LiteralKind::None, std::move(items), {}, {}, line});
        }
        if (at_op("...")) return make(Expr{ExprKind::Literal, next().text, LiteralKind::NoneValue, {}, {}, {}, line});
        fail("unexpected token '" + t.text + "'");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<RawStmt> parse_file(std::string_view text) { return Parser(tokenize(text)).file(); }

} // namespace pvota::script::detail
