#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sped/expr.hpp"

namespace sped {

struct SourcePos {
    std::uint32_t line = 0; // 1-based; 0 when the error has no source location
    std::uint32_t col = 0;
};

/// Grammar text or construction problem: syntax errors, undefined or
/// duplicate rule names, bad escapes, reserved names.
class grammar_error : public std::runtime_error {
public:
    grammar_error(std::string msg, SourcePos pos = {});
    SourcePos where() const { return pos_; }

private:
    SourcePos pos_;
};

/// Ordered rule map as produced by the loader before simplification.
using RuleList = std::vector<std::pair<std::string, ExprPtr>>;

const ExprPtr* find_rule(const RuleList& rules, std::string_view name);

/// A named rule set with a start expression. Public construction paths
/// validate references and rule names and rewrite every body with the
/// load-time simplifier, so a Grammar never contains a simplifiable redex.
/// Well-formedness is a separate, explicit check (see analysis.hpp).
class Grammar {
public:
    const RuleList& rules() const { return rules_; }
    std::size_t size() const { return rules_.size(); }
    bool has_rule(std::string_view name) const;
    /// Body of a rule; throws grammar_error for unknown names.
    const ExprPtr& rule(std::string_view name) const;
    /// Body of a rule, or null for unknown names.
    const ExprPtr* find(std::string_view name) const;

    const std::string& start_name() const { return start_name_; }
    /// The start expression: a reference to the start rule, possibly
    /// collapsed by simplification.
    const ExprPtr& start() const { return start_; }

    /// One rule per line in loader syntax, fully parenthesized, followed by
    /// a %start directive when the start rule is not the first rule.
    /// Reloading the text yields a structurally identical grammar.
    std::string canonical() const;

    /// Validate and simplify an explicit rule list. `start` defaults to the
    /// first rule. Throws grammar_error on duplicate names, undefined
    /// references, or an empty rule list.
    static Grammar make(RuleList rules, std::optional<std::string> start = std::nullopt);

private:
    Grammar() = default;
    RuleList rules_;
    std::unordered_map<std::string, std::size_t> index_;
    std::string start_name_;
    ExprPtr start_;
};

/// Incremental construction with repetition desugaring. Generated rule names
/// (for `*` and `+`) avoid every reserved name and never occur as a substring
/// of the registered source text.
class GrammarBuilder {
public:
    /// Register raw grammar text; generated names must not occur inside it.
    void set_source_text(std::string_view text) { source_ = text; }
    void reserve_name(const std::string& name) { reserved_.insert(name); }

    /// Appends a rule. Duplicate names are reported here.
    void add_rule(std::string name, ExprPtr body, SourcePos pos = {});

    /// e* as a fresh right-recursive rule R <- e R / '' ; returns the
    /// reference to R.
    ExprPtr star(const ExprPtr& e);
    /// e+ = e followed by e*.
    ExprPtr plus(const ExprPtr& e);
    /// e? = e / ''.
    static ExprPtr opt(const ExprPtr& e);
    /// &e = !!e.
    static ExprPtr lookahead(const ExprPtr& e);

    /// Validated, simplified grammar. See Grammar::make.
    Grammar build(std::optional<std::string> start = std::nullopt) &&;
    /// The raw rule list (pre-simplification, generated rules appended after
    /// the explicit ones), for diffing and testing.
    RuleList take_raw() &&;

private:
    std::string fresh_name();
    RuleList rules_;
    RuleList generated_;
    std::unordered_map<std::string, SourcePos> seen_;
    std::unordered_set<std::string> reserved_;
    std::string source_;
    std::uint32_t counter_ = 0;
};

struct LoadedGrammar {
    Grammar grammar;      // validated + simplified
    RuleList raw_rules;   // post-desugar, pre-simplification bodies
    std::string start_name;
};

/// Parse grammar text: `Name <- expression` rules, `#` comments, an optional
/// `%start Name` directive. Throws grammar_error with a source position.
Grammar parse_grammar(std::string_view text);
LoadedGrammar parse_grammar_full(std::string_view text);

/// Reads the file and parses it. I/O failures raise grammar_error.
Grammar load_grammar_file(const std::string& path);
LoadedGrammar load_grammar_file_full(const std::string& path);

} // namespace sped
