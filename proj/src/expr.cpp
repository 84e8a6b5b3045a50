#include "sped/expr.hpp"

#include <utility>

namespace sped {

ExprPtr Expr::make_char(std::uint8_t c) {
    auto e = std::make_shared<Expr>(Private{}, ExprKind::Char);
    e->byte_ = c;
    return e;
}

ExprPtr Expr::make_empty() {
    static const ExprPtr e = std::make_shared<Expr>(Private{}, ExprKind::Empty);
    return e;
}

ExprPtr Expr::make_fail() {
    static const ExprPtr e = std::make_shared<Expr>(Private{}, ExprKind::Fail);
    return e;
}

ExprPtr Expr::make_nonterm(std::string name) {
    auto e = std::make_shared<Expr>(Private{}, ExprKind::Nonterm);
    e->name_ = std::move(name);
    return e;
}

ExprPtr Expr::make_not(ExprPtr c) {
    auto e = std::make_shared<Expr>(Private{}, ExprKind::Not);
    e->a_ = std::move(c);
    return e;
}

ExprPtr Expr::make_seq(ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>(Private{}, ExprKind::Seq);
    e->a_ = std::move(a);
    e->b_ = std::move(b);
    return e;
}

ExprPtr Expr::make_alt(ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>(Private{}, ExprKind::Alt);
    e->a_ = std::move(a);
    e->b_ = std::move(b);
    return e;
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b || a->kind() != b->kind()) return false;
    switch (a->kind()) {
    case ExprKind::Char: return a->byte() == b->byte();
    case ExprKind::Empty:
    case ExprKind::Fail: return true;
    case ExprKind::Nonterm: return a->name() == b->name();
    case ExprKind::Not: return structurally_equal(a->child(), b->child());
    case ExprKind::Seq:
    case ExprKind::Alt:
        return structurally_equal(a->first(), b->first()) &&
               structurally_equal(a->second(), b->second());
    }
    return false;
}

std::size_t expr_size(const ExprPtr& e) {
    if (!e) return 0;
    switch (e->kind()) {
    case ExprKind::Char:
    case ExprKind::Empty:
    case ExprKind::Fail:
    case ExprKind::Nonterm: return 1;
    case ExprKind::Not: return 1 + expr_size(e->child());
    case ExprKind::Seq:
    case ExprKind::Alt: return 1 + expr_size(e->first()) + expr_size(e->second());
    }
    return 1;
}

std::string escape_byte(std::uint8_t c, char context) {
    switch (c) {
    case '\\': return "\\\\";
    case '\n': return "\\n";
    case '\r': return "\\r";
    case '\t': return "\\t";
    default: break;
    }
    if (c == static_cast<std::uint8_t>(context)) return std::string("\\") + context;
    if (c >= 0x20 && c <= 0x7e) return std::string(1, static_cast<char>(c));
    static const char hex[] = "0123456789abcdef";
    std::string out = "\\x";
    out += hex[c >> 4];
    out += hex[c & 0xf];
    return out;
}

std::string to_text(const ExprPtr& e) {
    switch (e->kind()) {
    case ExprKind::Char: return "'" + escape_byte(e->byte(), '\'') + "'";
    case ExprKind::Empty: return "''";
    case ExprKind::Fail: return "FAIL";
    case ExprKind::Nonterm: return e->name();
    case ExprKind::Not: return "!" + to_text(e->child());
    case ExprKind::Seq: return "(" + to_text(e->first()) + " " + to_text(e->second()) + ")";
    case ExprKind::Alt: return "(" + to_text(e->first()) + " / " + to_text(e->second()) + ")";
    }
    return "";
}

} // namespace sped
