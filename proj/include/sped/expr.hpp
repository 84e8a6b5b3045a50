#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace sped {

enum class ExprKind : std::uint8_t { Char, Empty, Fail, Nonterm, Not, Seq, Alt };

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable parsing expression tree. Recursion only happens through
/// nonterminal names, never through child pointers, so trees are finite and
/// acyclic by construction. Structurally equal subtrees may be shared.
class Expr {
public:
    ExprKind kind() const { return kind_; }

    /// Byte matched by a Char node.
    std::uint8_t byte() const { return byte_; }
    /// Rule name referenced by a Nonterm node.
    const std::string& name() const { return name_; }
    /// Operand of a Not node.
    const ExprPtr& child() const { return a_; }
    /// Components of a Seq or Alt node.
    const ExprPtr& first() const { return a_; }
    const ExprPtr& second() const { return b_; }

    static ExprPtr make_char(std::uint8_t c);
    static ExprPtr make_empty();
    static ExprPtr make_fail();
    static ExprPtr make_nonterm(std::string name);
    static ExprPtr make_not(ExprPtr e);
    static ExprPtr make_seq(ExprPtr a, ExprPtr b);
    static ExprPtr make_alt(ExprPtr a, ExprPtr b);

    struct Private {};
    Expr(Private, ExprKind k) : kind_(k) {}

private:
    ExprKind kind_;
    std::uint8_t byte_ = 0;
    std::string name_;
    ExprPtr a_;
    ExprPtr b_;
};

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

/// Number of nodes in the tree (shared subtrees counted once per occurrence).
std::size_t expr_size(const ExprPtr& e);

/// Fully parenthesized text form, re-parseable by the grammar loader:
/// 'a', '', FAIL, Name, !e, (e1 e2), (e1 / e2).
std::string to_text(const ExprPtr& e);

/// Escaped source form of one byte as it appears inside quotes or a class.
/// `context` is the closing delimiter that must be escaped ('\'' , '"', ']').
std::string escape_byte(std::uint8_t c, char context);

} // namespace sped
