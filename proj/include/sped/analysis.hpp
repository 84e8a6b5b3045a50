#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sped/grammar.hpp"

namespace sped {

/// Two nullability predicates per expression, computed as least fixed points
/// over the rule map (all rules start false, iterate to stability):
///   nu(e):     e matches without consuming input.
///   lambda(e): e can match while looking at no input beyond what it
///              consumes; differs from nu only on !e, which is always
///              lambda-nullable but never nu-nullable.
/// nu(e) implies lambda(e). Queries on arbitrary expressions evaluate
/// structurally against the converged per-rule values, so the table answers
/// for expressions that are not occurrences inside the grammar as well.
/// Lambda of a sequence short-circuits: the second component is not consulted
/// when the first is not lambda-nullable.
class NullabilityTable {
public:
    bool nu(const ExprPtr& e) const;
    bool lambda(const ExprPtr& e) const;
    bool rule_nu(const std::string& name) const;
    bool rule_lambda(const std::string& name) const;
    /// True when the rule's body is the fail expression (used by the
    /// simplifier to collapse references to dead rules).
    bool rule_is_fail(const std::string& name) const;

private:
    friend NullabilityTable compute_nullability(const RuleList&);
    std::unordered_map<std::string, bool> rule_nu_;
    std::unordered_map<std::string, bool> rule_lambda_;
    std::unordered_set<std::string> rule_fail_;
    // keyed by owning pointer: a cached expression stays alive, so its
    // address cannot be reused by a later allocation while cached
    mutable std::unordered_map<ExprPtr, bool> nu_memo_;
    mutable std::unordered_map<ExprPtr, bool> lambda_memo_;
};

NullabilityTable compute_nullability(const RuleList& rules);
NullabilityTable compute_nullability(const Grammar& g);

/// Immediate sub- and left-expansion sets of one node. Sub collects every
/// component a node can invoke; left-expansion keeps only components that can
/// be entered before any input is consumed (the second component of a
/// sequence only when the first is lambda-nullable). Nonterminals expand to
/// their rule body; unknown names expand to nothing.
std::vector<const Expr*> sub_of(const Expr* e, const RuleList& rules);
std::vector<const Expr*> le_of(const Expr* e, const RuleList& rules, const NullabilityTable& nt);

/// Transitive (one-or-more step) closures of sub and left-expansion over
/// every expression occurrence reachable from the rule bodies and start.
class ExpansionSets {
public:
    const std::vector<const Expr*>& universe() const { return universe_; }
    /// Closure members for a node in the universe; empty for foreign nodes.
    const std::unordered_set<const Expr*>& sub_plus(const Expr* e) const;
    const std::unordered_set<const Expr*>& le_plus(const Expr* e) const;
    /// e is a member of its own left-expansion closure (a left cycle).
    bool in_own_le(const Expr* e) const;

private:
    friend ExpansionSets compute_expansions(const Grammar&, const NullabilityTable&);
    std::vector<const Expr*> universe_;
    std::unordered_map<const Expr*, std::unordered_set<const Expr*>> sub_plus_;
    std::unordered_map<const Expr*, std::unordered_set<const Expr*>> le_plus_;
    std::unordered_set<const Expr*> empty_probe_; // returned for foreign nodes
};

ExpansionSets compute_expansions(const Grammar& g, const NullabilityTable& nt);

struct LeftCycle {
    std::string rule;               // rule whose body lies on the cycle
    std::vector<std::string> names; // witness, e.g. {"A", "B", "A"}
};

struct WellFormedness {
    bool ok = false;
    std::vector<LeftCycle> cycles; // one witness per offending rule
};

/// A grammar is well formed when no reachable expression can left-expand back
/// to itself; recognition and normalization require this.
WellFormedness check_well_formed(const Grammar& g, const ExpansionSets& sets);
WellFormedness check_well_formed(const Grammar& g);

/// One bottom-up simplification pass over an expression:
///   e ''  -> e        '' e  -> e       e FAIL -> FAIL     FAIL e -> FAIL
///   e / FAIL -> e     FAIL / e -> e    e1 / e2 -> e1 when nu(e1)
///   A -> FAIL when A's body is FAIL    !e -> FAIL when nu(e)
///   !FAIL -> ''       !!!e -> !e
/// Grammar loading reapplies passes (recomputing nullability in between)
/// until no rule body changes.
ExprPtr simplify(const ExprPtr& e, const NullabilityTable& nt);

/// Fixed-point driver used by Grammar construction; exposed for testing and
/// for raw/simplified comparisons.
RuleList simplify_rules(RuleList rules);

} // namespace sped
