#include <string>

#include "pvota/script.hpp"
#include "syntax.hpp"

namespace pvota::script {

namespace detail {

int precedence(const Expr& e) {
    switch (e.kind) {
    case ExprKind::BoolOp: return e.text == "or" ? 3 : 4;
    case ExprKind::UnaryOp: return e.text == "not" ? 5 : 13;
    case ExprKind::Compare: return 6;
    case ExprKind::BinOp: {
        const auto& op = e.text;
        if (op == "|") return 7;
        if (op == "^") return 8;
        if (op == "&") return 9;
        if (op == "<<" || op == ">>") return 10;
        if (op == "+" || op == "-") return 11;
        if (op == "**") return 14;
        return 12;
    }
    default: return 16;
    }
}

} // namespace detail

namespace {

using detail::precedence;

std::string wrap(const Expr& e, bool paren) { return paren ? "(" + render(e) + ")" : render(e); }

std::string join(const std::vector<ExprPtr>& items, const char* sep = ", ") {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += render(*items[i]);
    }
    return out;
}

} // namespace

std::string render(const Expr& e) {
    switch (e.kind) {
    case ExprKind::Name:
    case ExprKind::Literal: return e.text;
    case ExprKind::Attribute: {
        const Expr& v = *e.children[0];
        return wrap(v, precedence(v) < 16 || v.kind == ExprKind::Literal) + "." + e.text;
    }
    case ExprKind::Subscript: {
        const Expr& v = *e.children[0];
        const Expr& idx = *e.children[1];
        std::string inner = idx.kind == ExprKind::Tuple && !idx.children.empty() ? join(idx.children) : render(idx);
        if (idx.kind == ExprKind::Tuple && idx.children.size() == 1) inner += ",";
        return wrap(v, precedence(v) < 16) + "[" + inner + "]";
    }
    case ExprKind::Call: {
        const Expr& f = *e.children[0];
        std::string out = wrap(f, precedence(f) < 16) + "(";
        bool first = true;
        for (std::size_t i = 1; i < e.children.size(); ++i) {
            if (!first) out += ", ";
            out += render(*e.children[i]);
            first = false;
        }
        for (const auto& kw : e.keywords) {
            if (!first) out += ", ";
            out += kw.name + "=" + render(*kw.value);
            first = false;
        }
        return out + ")";
    }
    case ExprKind::BinOp: {
        int p = precedence(e);
        const Expr& l = *e.children[0];
        const Expr& r = *e.children[1];
        bool right_assoc = e.text == "**";
        bool lp = right_assoc ? precedence(l) <= p : precedence(l) < p;
        bool rp = right_assoc ? precedence(r) < p : precedence(r) <= p;
        return wrap(l, lp) + " " + e.text + " " + wrap(r, rp);
    }
    case ExprKind::UnaryOp: {
        const Expr& v = *e.children[0];
        bool paren = precedence(v) < precedence(e);
        return e.text + (e.text == "not" ? " " : "") + wrap(v, paren);
    }
    case ExprKind::BoolOp: {
        int p = precedence(e);
        std::string out;
        for (std::size_t i = 0; i < e.children.size(); ++i) {
            if (i) out += " " + e.text + " ";
            out += wrap(*e.children[i], precedence(*e.children[i]) <= p);
        }
        return out;
    }
    case ExprKind::Compare: {
        std::string out;
        for (std::size_t i = 0; i < e.children.size(); ++i) {
            if (i) out += " " + e.ops[i - 1] + " ";
            out += wrap(*e.children[i], precedence(*e.children[i]) <= 6);
        }
        return out;
    }
    case ExprKind::List: return "[" + join(e.children) + "]";
    case ExprKind::Tuple:
        if (e.children.size() == 1) return "(" + render(*e.children[0]) + ",)";
        return "(" + join(e.children) + ")";
    case ExprKind::Set: return "{" + join(e.children) + "}";
    case ExprKind::Dict: {
        std::string out = "{";
        for (std::size_t i = 0; i + 1 < e.children.size(); i += 2) {
            if (i) out += ", ";
            out += render(*e.children[i]) + ": " + render(*e.children[i + 1]);
        }
        return out + "}";
    }
    }
    return {};
}

} // namespace pvota::script
