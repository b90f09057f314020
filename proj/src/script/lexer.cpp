#include <cctype>
#include <string>
#include <vector>

#include "pvota/error.hpp"
#include "syntax.hpp"

namespace pvota::script::detail {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

constexpr std::string_view kOps3[] = {"**=", "//=", ">>=", "<<=", "..."};
constexpr std::string_view kOps2[] = {"**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=",
                                      "&=", "|=", "^=", "->", "<<", ">>", ":="};
constexpr std::string_view kOps1 = "+-*/%()[]{},:.;=<>&|^~@";

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        indents_.push_back(0);
        bool at_line_start = true;
        while (pos_ < src_.size()) {
            if (at_line_start && depth_ == 0) {
                if (!handle_indentation()) continue;
                at_line_start = false;
            }
            char c = src_[pos_];
            if (c == '\n') {
                ++pos_;
                if (depth_ == 0) {
                    emit(Tok::Newline, "");
                    at_line_start = true;
                }
                ++line_;
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
                ++pos_;
                continue;
            }
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
                continue;
            }
            if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
                pos_ += 2;
                ++line_;
                continue;
            }
            if (is_ident_start(c)) {
                lex_name_or_prefixed_string();
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                lex_number();
                continue;
            }
            if (c == '"' || c == '\'') {
                lex_string(pos_);
                continue;
            }
            lex_op();
        }
        if (!tokens_.empty() && tokens_.back().kind != Tok::Newline && tokens_.back().kind != Tok::Dedent)
            emit(Tok::Newline, "");
        while (indents_.size() > 1) {
            indents_.pop_back();
            emit(Tok::Dedent, "");
        }
        emit(Tok::End, "");
        return std::move(tokens_);
    }

private:
    void emit(Tok k, std::string text) { tokens_.push_back(Token{k, std::move(text), line_}); }

    // Returns false when the line was blank or comment-only and has been consumed.
    bool handle_indentation() {
        int col = 0;
        std::size_t p = pos_;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t')) {
            col = src_[p] == '\t' ? (col / 8 + 1) * 8 : col + 1;
            ++p;
        }
        if (p >= src_.size()) {
            pos_ = p;
            return false;
        }
        if (src_[p] == '\n' || src_[p] == '#' || src_[p] == '\r') {
            while (p < src_.size() && src_[p] != '\n') ++p;
            if (p < src_.size()) ++p;
            ++line_;
            pos_ = p;
            return false;
        }
        pos_ = p;
        if (col > indents_.back()) {
            indents_.push_back(col);
            emit(Tok::Indent, "");
        } else {
            while (col < indents_.back()) {
                indents_.pop_back();
                emit(Tok::Dedent, "");
            }
            if (col != indents_.back()) throw SyntaxOutsideSubset(line_, "inconsistent indentation");
        }
        return true;
    }

    void lex_name_or_prefixed_string() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
        std::string word(src_.substr(start, pos_ - start));
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') && word.size() <= 2) {
            std::string lower;
            for (char ch : word) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (lower.find('f') != std::string::npos) throw SyntaxOutsideSubset(line_, "f-string");
            if (lower == "r" || lower == "b" || lower == "u" || lower == "rb" || lower == "br") {
                lex_string(start);
                return;
            }
        }
        emit(Tok::Name, std::move(word));
    }

    void lex_number() {
        std::size_t start = pos_;
        if (src_[pos_] == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
            pos_ += 2;
            while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        } else {
            while (pos_ < src_.size() &&
                   (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' || src_[pos_] == '_'))
                ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                ++pos_;
                if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) ++pos_;
        emit(Tok::Number, std::string(src_.substr(start, pos_ - start)));
    }

    // `start` points at the prefix (if any); pos_ at the opening quote.
    void lex_string(std::size_t start) {
        while (src_[pos_] != '"' && src_[pos_] != '\'') ++pos_;
        char q = src_[pos_];
        bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q;
        int start_line = line_;
        pos_ += triple ? 3 : 1;
        for (;;) {
            if (pos_ >= src_.size()) throw SyntaxOutsideSubset(start_line, "unterminated string");
            char c = src_[pos_];
            if (c == '\\') {
                if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++line_;
                pos_ += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) throw SyntaxOutsideSubset(start_line, "unterminated string");
                ++line_;
            }
            if (c == q) {
                if (!triple) {
                    ++pos_;
                    break;
                }
                if (pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q) {
                    pos_ += 3;
                    break;
                }
            }
            ++pos_;
        }
        tokens_.push_back(Token{Tok::String, std::string(src_.substr(start, pos_ - start)), start_line});
    }

    void lex_op() {
        auto rest = src_.substr(pos_);
        for (auto op : kOps3)
            if (rest.starts_with(op)) return push_op(op);
        for (auto op : kOps2)
            if (rest.starts_with(op)) return push_op(op);
        char c = src_[pos_];
        if (kOps1.find(c) == std::string_view::npos)
            throw SyntaxOutsideSubset(line_, std::string("unexpected character '") + c + "'");
        if (c == '(' || c == '[' || c == '{') ++depth_;
        if ((c == ')' || c == ']' || c == '}') && depth_ > 0) --depth_;
        push_op(std::string_view(&src_[pos_], 1));
    }

    void push_op(std::string_view op) {
        emit(Tok::Op, std::string(op));
        pos_ += op.size();
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int depth_ = 0;
    std::vector<int> indents_;
    std::vector<Token> tokens_;
};

} // namespace

std::vector<Token> tokenize(std::string_view text) { return Lexer(text).run(); }

} // namespace pvota::script::detail
