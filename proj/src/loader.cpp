#include <cctype>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sped/grammar.hpp"

namespace sped {

namespace {

// ---------------------------------------------------------------------------
// Tokens

enum class Tok : std::uint8_t {
    Name, Arrow, Slash, Bang, Amp, Star, Plus, Question,
    LParen, RParen, Literal, Class, StartDirective, End
};

struct ClassItem {
    std::uint8_t lo;
    std::uint8_t hi;
};

struct Token {
    Tok kind;
    SourcePos pos;
    std::string text;              // Name
    std::vector<std::uint8_t> bytes; // Literal (escape-processed)
    std::vector<ClassItem> items;  // Class
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        skip_trivia();
        Token t;
        t.pos = pos();
        if (i_ >= text_.size()) {
            t.kind = Tok::End;
            return t;
        }
        char c = text_[i_];
        switch (c) {
        case '/': ++i_; t.kind = Tok::Slash; return t;
        case '!': ++i_; t.kind = Tok::Bang; return t;
        case '&': ++i_; t.kind = Tok::Amp; return t;
        case '*': ++i_; t.kind = Tok::Star; return t;
        case '+': ++i_; t.kind = Tok::Plus; return t;
        case '?': ++i_; t.kind = Tok::Question; return t;
        case '(': ++i_; t.kind = Tok::LParen; return t;
        case ')': ++i_; t.kind = Tok::RParen; return t;
        case '<':
            if (i_ + 1 < text_.size() && text_[i_ + 1] == '-') {
                i_ += 2;
                t.kind = Tok::Arrow;
                return t;
            }
            throw grammar_error("stray '<' (expected '<-')", t.pos);
        case '\'':
        case '"':
            t.kind = Tok::Literal;
            t.bytes = lex_quoted(c);
            return t;
        case '[':
            t.kind = Tok::Class;
            t.items = lex_class();
            return t;
        case '%': {
            ++i_;
            std::string word = lex_word();
            if (word != "start") throw grammar_error("unknown directive %" + word, t.pos);
            t.kind = Tok::StartDirective;
            return t;
        }
        default: break;
        }
        if (is_name_start(c)) {
            t.kind = Tok::Name;
            t.text = lex_word();
            return t;
        }
        throw grammar_error(std::string("unexpected character '") + c + "'", t.pos);
    }

private:
    static bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    SourcePos pos() const { return {line_, static_cast<std::uint32_t>(i_ - bol_ + 1)}; }

    void advance_line() {
        ++line_;
        bol_ = i_;
    }

    void skip_trivia() {
        while (i_ < text_.size()) {
            char c = text_[i_];
            if (c == '\n') {
                ++i_;
                advance_line();
            } else if (c == ' ' || c == '\t' || c == '\r') {
                ++i_;
            } else if (c == '#') {
                while (i_ < text_.size() && text_[i_] != '\n') ++i_;
            } else {
                break;
            }
        }
    }

    std::string lex_word() {
        std::size_t start = i_;
        while (i_ < text_.size() && is_name_char(text_[i_])) ++i_;
        if (i_ == start) throw grammar_error("expected a name", pos());
        return std::string(text_.substr(start, i_ - start));
    }

    // One source character inside quotes or a class, with escape processing.
    // `closer` is the delimiter whose escaped form is accepted here.
    std::uint8_t lex_escaped_byte(char closer) {
        SourcePos p = pos();
        char c = text_[i_++];
        if (c != '\\') return static_cast<std::uint8_t>(c);
        if (i_ >= text_.size()) throw grammar_error("dangling escape", p);
        char e = text_[i_++];
        switch (e) {
        case '\\': return '\\';
        case '\'': return '\'';
        case '"': return '"';
        case ']': return ']';
        case 'n': return '\n';
        case 'r': return '\r';
        case 't': return '\t';
        case 'x': {
            if (i_ + 1 >= text_.size()) throw grammar_error("truncated \\x escape", p);
            auto hex = [&](char h) -> int {
                if (h >= '0' && h <= '9') return h - '0';
                if (h >= 'a' && h <= 'f') return h - 'a' + 10;
                if (h >= 'A' && h <= 'F') return h - 'A' + 10;
                throw grammar_error("bad hex digit in \\x escape", p);
            };
            int v = hex(text_[i_]) * 16 + hex(text_[i_ + 1]);
            i_ += 2;
            return static_cast<std::uint8_t>(v);
        }
        default:
            (void)closer;
            throw grammar_error(std::string("unknown escape \\") + e, p);
        }
    }

    std::vector<std::uint8_t> lex_quoted(char quote) {
        SourcePos open = pos();
        ++i_; // opening quote
        std::vector<std::uint8_t> out;
        for (;;) {
            if (i_ >= text_.size()) throw grammar_error("unterminated literal", open);
            char c = text_[i_];
            if (c == quote) {
                ++i_;
                return out;
            }
            if (c == '\n') throw grammar_error("newline inside literal", pos());
            out.push_back(lex_escaped_byte(quote));
        }
    }

    std::vector<ClassItem> lex_class() {
        SourcePos open = pos();
        ++i_; // '['
        std::vector<ClassItem> items;
        for (;;) {
            if (i_ >= text_.size()) throw grammar_error("unterminated character class", open);
            char c = text_[i_];
            if (c == ']') {
                ++i_;
                return items;
            }
            if (c == '\n') throw grammar_error("newline inside character class", pos());
            SourcePos p = pos();
            std::uint8_t lo = lex_escaped_byte(']');
            std::uint8_t hi = lo;
            if (i_ < text_.size() && text_[i_] == '-' && i_ + 1 < text_.size() &&
                text_[i_ + 1] != ']') {
                ++i_; // '-'
                hi = lex_escaped_byte(']');
                if (lo > hi) throw grammar_error("character range is backwards", p);
            }
            items.push_back({lo, hi});
        }
    }

    std::string_view text_;
    std::size_t i_ = 0;
    std::size_t bol_ = 0;
    std::uint32_t line_ = 1;
};

// ---------------------------------------------------------------------------
// Parse tree with repetition sugar still present; desugared after the whole
// file is read so generated rule names can avoid everything in the source.

struct PExpr;
using PExprPtr = std::unique_ptr<PExpr>;

enum class PKind : std::uint8_t {
    Char, Empty, Fail, Name, Not, And, Seq, Alt, Star, Plus, Opt, Literal, Class
};

struct PExpr {
    PKind kind;
    SourcePos pos;
    std::uint8_t byte = 0;
    std::string name;
    std::vector<std::uint8_t> bytes;
    std::vector<ClassItem> items;
    PExprPtr a;
    PExprPtr b;
};

PExprPtr pnode(PKind k, SourcePos pos) {
    auto p = std::make_unique<PExpr>();
    p->kind = k;
    p->pos = pos;
    return p;
}

struct PRule {
    std::string name;
    SourcePos pos;
    PExprPtr body;
};

class Parser {
public:
    explicit Parser(std::string_view text) : lex_(text) { shift(); }

    void parse_file() {
        while (cur_.kind != Tok::End) {
            if (cur_.kind == Tok::StartDirective) {
                SourcePos p = cur_.pos;
                shift();
                if (cur_.kind != Tok::Name) throw grammar_error("%start needs a rule name", p);
                if (!start_.empty()) throw grammar_error("duplicate %start directive", p);
                start_ = cur_.text;
                start_pos_ = p;
                shift();
                continue;
            }
            parse_rule();
        }
        if (rules_.empty()) throw grammar_error("grammar has no rules");
    }

    std::vector<PRule> take_rules() { return std::move(rules_); }
    std::string start() const { return start_; }
    SourcePos start_pos() const { return start_pos_; }
    const std::vector<std::pair<std::string, SourcePos>>& references() const { return refs_; }

private:
    void shift() {
        cur_ = next_;
        if (!primed_) {
            cur_ = lex_.next();
            primed_ = true;
        }
        next_ = lex_.next();
    }

    void parse_rule() {
        if (cur_.kind != Tok::Name)
            throw grammar_error("expected a rule definition", cur_.pos);
        if (cur_.text == "FAIL")
            throw grammar_error("FAIL is reserved and cannot name a rule", cur_.pos);
        PRule r;
        r.name = cur_.text;
        r.pos = cur_.pos;
        shift();
        if (cur_.kind != Tok::Arrow)
            throw grammar_error("expected '<-' after rule name " + r.name, cur_.pos);
        shift();
        r.body = parse_alt();
        rules_.push_back(std::move(r));
    }

    // choice is right-nested: a / b / c parses as a / (b / c)
    PExprPtr parse_alt() {
        PExprPtr a = parse_seq();
        if (cur_.kind != Tok::Slash) return a;
        SourcePos p = cur_.pos;
        shift();
        PExprPtr node = pnode(PKind::Alt, p);
        node->a = std::move(a);
        node->b = parse_alt();
        return node;
    }

    bool at_expr_start() const {
        switch (cur_.kind) {
        case Tok::Bang:
        case Tok::Amp:
        case Tok::LParen:
        case Tok::Literal:
        case Tok::Class: return true;
        case Tok::Name:
            // a name followed by <- starts the next rule
            return next_.kind != Tok::Arrow;
        default: return false;
        }
    }

    // sequence is right-nested: a b c parses as a (b c)
    PExprPtr parse_seq() {
        PExprPtr a = parse_prefix();
        if (!at_expr_start()) return a;
        PExprPtr node = pnode(PKind::Seq, a->pos);
        node->a = std::move(a);
        node->b = parse_seq();
        return node;
    }

    PExprPtr parse_prefix() {
        if (cur_.kind == Tok::Bang || cur_.kind == Tok::Amp) {
            PKind k = cur_.kind == Tok::Bang ? PKind::Not : PKind::And;
            SourcePos p = cur_.pos;
            shift();
            PExprPtr node = pnode(k, p);
            node->a = parse_prefix();
            return node;
        }
        return parse_postfix();
    }

    PExprPtr parse_postfix() {
        PExprPtr e = parse_primary();
        for (;;) {
            PKind k;
            if (cur_.kind == Tok::Star) k = PKind::Star;
            else if (cur_.kind == Tok::Plus) k = PKind::Plus;
            else if (cur_.kind == Tok::Question) k = PKind::Opt;
            else break;
            PExprPtr node = pnode(k, cur_.pos);
            shift();
            node->a = std::move(e);
            e = std::move(node);
        }
        return e;
    }

    PExprPtr parse_primary() {
        switch (cur_.kind) {
        case Tok::Literal: {
            PExprPtr node = pnode(PKind::Literal, cur_.pos);
            node->bytes = cur_.bytes;
            shift();
            return node;
        }
        case Tok::Class: {
            PExprPtr node = pnode(PKind::Class, cur_.pos);
            node->items = cur_.items;
            shift();
            return node;
        }
        case Tok::Name: {
            if (next_.kind == Tok::Arrow)
                throw grammar_error("expected an expression before the next rule", cur_.pos);
            if (cur_.text == "FAIL") {
                PExprPtr node = pnode(PKind::Fail, cur_.pos);
                shift();
                return node;
            }
            PExprPtr node = pnode(PKind::Name, cur_.pos);
            node->name = cur_.text;
            refs_.emplace_back(cur_.text, cur_.pos);
            shift();
            return node;
        }
        case Tok::LParen: {
            shift();
            PExprPtr inner = parse_alt();
            if (cur_.kind != Tok::RParen)
                throw grammar_error("expected ')'", cur_.pos);
            shift();
            return inner;
        }
        default:
            throw grammar_error("expected an expression", cur_.pos);
        }
    }

    Lexer lex_;
    Token cur_;
    Token next_;
    bool primed_ = false;
    std::vector<PRule> rules_;
    std::vector<std::pair<std::string, SourcePos>> refs_;
    std::string start_;
    SourcePos start_pos_;
};

// ---------------------------------------------------------------------------
// Desugaring into core expressions

ExprPtr literal_expr(const std::vector<std::uint8_t>& bytes) {
    if (bytes.empty()) return Expr::make_empty();
    ExprPtr e = Expr::make_char(bytes.back());
    for (std::size_t i = bytes.size() - 1; i-- > 0;) {
        e = Expr::make_seq(Expr::make_char(bytes[i]), std::move(e));
    }
    return e;
}

ExprPtr class_expr(const std::vector<ClassItem>& items) {
    // expands to a right-nested choice of single bytes, in listed order
    std::vector<std::uint8_t> bytes;
    for (const ClassItem& it : items) {
        for (int b = it.lo; b <= it.hi; ++b) bytes.push_back(static_cast<std::uint8_t>(b));
    }
    if (bytes.empty()) return Expr::make_fail();
    ExprPtr e = Expr::make_char(bytes.back());
    for (std::size_t i = bytes.size() - 1; i-- > 0;) {
        e = Expr::make_alt(Expr::make_char(bytes[i]), std::move(e));
    }
    return e;
}

ExprPtr desugar(const PExpr& p, GrammarBuilder& b) {
    switch (p.kind) {
    case PKind::Char: return Expr::make_char(p.byte);
    case PKind::Empty: return Expr::make_empty();
    case PKind::Fail: return Expr::make_fail();
    case PKind::Name: return Expr::make_nonterm(p.name);
    case PKind::Not: return Expr::make_not(desugar(*p.a, b));
    case PKind::And: return GrammarBuilder::lookahead(desugar(*p.a, b));
    case PKind::Seq: return Expr::make_seq(desugar(*p.a, b), desugar(*p.b, b));
    case PKind::Alt: return Expr::make_alt(desugar(*p.a, b), desugar(*p.b, b));
    case PKind::Star: return b.star(desugar(*p.a, b));
    case PKind::Plus: return b.plus(desugar(*p.a, b));
    case PKind::Opt: return GrammarBuilder::opt(desugar(*p.a, b));
    case PKind::Literal: return literal_expr(p.bytes);
    case PKind::Class: return class_expr(p.items);
    }
    return Expr::make_fail();
}

struct ParsedFile {
    RuleList raw;
    std::string start_name;
};

ParsedFile parse_to_raw(std::string_view text) {
    Parser parser(text);
    parser.parse_file();
    std::vector<PRule> prules = parser.take_rules();

    GrammarBuilder builder;
    builder.set_source_text(text);
    for (const PRule& r : prules) builder.reserve_name(r.name);
    for (const auto& [name, pos] : parser.references()) builder.reserve_name(name);

    std::vector<std::pair<std::string, SourcePos>> order;
    for (PRule& r : prules) {
        builder.add_rule(r.name, desugar(*r.body, builder), r.pos);
        order.emplace_back(r.name, r.pos);
    }

    // undefined-reference diagnostics with source positions
    std::unordered_set<std::string> defined;
    for (const auto& [name, pos] : order) defined.insert(name);
    ParsedFile out;
    out.raw = std::move(builder).take_raw();
    for (const auto& [name, body] : out.raw) defined.insert(name);
    for (const auto& [name, pos] : parser.references()) {
        if (!defined.count(name))
            throw grammar_error("undefined rule: " + name, pos);
    }
    out.start_name = parser.start().empty() ? order.front().first : parser.start();
    if (!defined.count(out.start_name))
        throw grammar_error("undefined start rule: " + out.start_name, parser.start_pos());
    return out;
}

} // namespace

LoadedGrammar parse_grammar_full(std::string_view text) {
    ParsedFile parsed = parse_to_raw(text);
    Grammar g = Grammar::make(parsed.raw, parsed.start_name);
    return LoadedGrammar{std::move(g), std::move(parsed.raw), std::move(parsed.start_name)};
}

Grammar parse_grammar(std::string_view text) {
    ParsedFile parsed = parse_to_raw(text);
    return Grammar::make(std::move(parsed.raw), parsed.start_name);
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw grammar_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw grammar_error("read error on " + path);
    return ss.str();
}

} // namespace

Grammar load_grammar_file(const std::string& path) {
    return parse_grammar(read_file(path));
}

LoadedGrammar load_grammar_file_full(const std::string& path) {
    return parse_grammar_full(read_file(path));
}

} // namespace sped
