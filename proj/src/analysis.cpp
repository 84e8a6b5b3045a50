#include "sped/analysis.hpp"

#include <algorithm>
#include <deque>

namespace sped {

namespace {

// Structural nu over the current per-rule table; plain tree recursion, so it
// terminates on any expression regardless of grammar shape.
bool eval_nu(const Expr* e, const std::unordered_map<std::string, bool>& rules) {
    switch (e->kind()) {
    case ExprKind::Char: return false;
    case ExprKind::Empty: return true;
    case ExprKind::Fail: return false;
    case ExprKind::Nonterm: {
        auto it = rules.find(e->name());
        return it != rules.end() && it->second;
    }
    case ExprKind::Not: return false;
    case ExprKind::Seq:
        return eval_nu(e->first().get(), rules) && eval_nu(e->second().get(), rules);
    case ExprKind::Alt:
        return eval_nu(e->first().get(), rules) || eval_nu(e->second().get(), rules);
    }
    return false;
}

bool eval_lambda(const Expr* e, const std::unordered_map<std::string, bool>& rules) {
    switch (e->kind()) {
    case ExprKind::Char: return false;
    case ExprKind::Empty: return true;
    case ExprKind::Fail: return false;
    case ExprKind::Nonterm: {
        auto it = rules.find(e->name());
        return it != rules.end() && it->second;
    }
    case ExprKind::Not: return true;
    case ExprKind::Seq:
        // short-circuits: second component untouched unless first is nullable
        return eval_lambda(e->first().get(), rules) && eval_lambda(e->second().get(), rules);
    case ExprKind::Alt:
        return eval_lambda(e->first().get(), rules) || eval_lambda(e->second().get(), rules);
    }
    return false;
}

bool memo_eval(const ExprPtr& e, const std::unordered_map<std::string, bool>& rules,
               std::unordered_map<ExprPtr, bool>& memo,
               bool (*eval)(const Expr*, const std::unordered_map<std::string, bool>&)) {
    auto it = memo.find(e);
    if (it != memo.end()) return it->second;
    bool v = eval(e.get(), rules);
    memo.emplace(e, v);
    return v;
}

} // namespace

bool NullabilityTable::nu(const ExprPtr& e) const {
    return memo_eval(e, rule_nu_, nu_memo_, &eval_nu);
}

bool NullabilityTable::lambda(const ExprPtr& e) const {
    return memo_eval(e, rule_lambda_, lambda_memo_, &eval_lambda);
}

bool NullabilityTable::rule_nu(const std::string& name) const {
    auto it = rule_nu_.find(name);
    return it != rule_nu_.end() && it->second;
}

bool NullabilityTable::rule_lambda(const std::string& name) const {
    auto it = rule_lambda_.find(name);
    return it != rule_lambda_.end() && it->second;
}

bool NullabilityTable::rule_is_fail(const std::string& name) const {
    return rule_fail_.count(name) != 0;
}

NullabilityTable compute_nullability(const RuleList& rules) {
    NullabilityTable t;
    for (const auto& [name, body] : rules) {
        t.rule_nu_[name] = false;
        t.rule_lambda_[name] = false;
        if (body->kind() == ExprKind::Fail) t.rule_fail_.insert(name);
    }
    // ascending iteration from all-false to the least fixed point
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& [name, body] : rules) {
            if (!t.rule_lambda_[name] && eval_lambda(body.get(), t.rule_lambda_)) {
                t.rule_lambda_[name] = true;
                changed = true;
            }
        }
    }
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& [name, body] : rules) {
            if (!t.rule_nu_[name] && eval_nu(body.get(), t.rule_nu_)) {
                t.rule_nu_[name] = true;
                changed = true;
            }
        }
    }
    return t;
}

NullabilityTable compute_nullability(const Grammar& g) {
    return compute_nullability(g.rules());
}

std::vector<const Expr*> sub_of(const Expr* e, const RuleList& rules) {
    switch (e->kind()) {
    case ExprKind::Char:
    case ExprKind::Empty:
    case ExprKind::Fail: return {};
    case ExprKind::Nonterm: {
        const ExprPtr* body = find_rule(rules, e->name());
        if (!body) return {};
        return {body->get()};
    }
    case ExprKind::Not: return {e->child().get()};
    case ExprKind::Seq:
    case ExprKind::Alt: return {e->first().get(), e->second().get()};
    }
    return {};
}

std::vector<const Expr*> le_of(const Expr* e, const RuleList& rules, const NullabilityTable& nt) {
    switch (e->kind()) {
    case ExprKind::Char:
    case ExprKind::Empty:
    case ExprKind::Fail: return {};
    case ExprKind::Nonterm: {
        const ExprPtr* body = find_rule(rules, e->name());
        if (!body) return {};
        return {body->get()};
    }
    case ExprKind::Not: return {e->child().get()};
    case ExprKind::Seq:
        if (nt.lambda(e->first())) return {e->first().get(), e->second().get()};
        return {e->first().get()};
    case ExprKind::Alt: return {e->first().get(), e->second().get()};
    }
    return {};
}

const std::unordered_set<const Expr*>& ExpansionSets::sub_plus(const Expr* e) const {
    auto it = sub_plus_.find(e);
    return it == sub_plus_.end() ? empty_probe_ : it->second;
}

const std::unordered_set<const Expr*>& ExpansionSets::le_plus(const Expr* e) const {
    auto it = le_plus_.find(e);
    return it == le_plus_.end() ? empty_probe_ : it->second;
}

bool ExpansionSets::in_own_le(const Expr* e) const {
    return le_plus(e).count(e) != 0;
}

namespace {

// Reachable-in-one-or-more-steps closure per node over an explicit edge map.
std::unordered_map<const Expr*, std::unordered_set<const Expr*>>
close_over(const std::vector<const Expr*>& universe,
           const std::unordered_map<const Expr*, std::vector<const Expr*>>& edges) {
    std::unordered_map<const Expr*, std::unordered_set<const Expr*>> out;
    for (const Expr* root : universe) {
        auto& reach = out[root];
        std::deque<const Expr*> work(edges.at(root).begin(), edges.at(root).end());
        while (!work.empty()) {
            const Expr* n = work.front();
            work.pop_front();
            if (!reach.insert(n).second) continue;
            for (const Expr* next : edges.at(n)) work.push_back(next);
        }
    }
    return out;
}

} // namespace

ExpansionSets compute_expansions(const Grammar& g, const NullabilityTable& nt) {
    ExpansionSets sets;
    const RuleList& rules = g.rules();

    std::unordered_map<const Expr*, std::vector<const Expr*>> sub_edges;
    std::unordered_map<const Expr*, std::vector<const Expr*>> le_edges;
    std::deque<const Expr*> work;
    auto visit = [&](const Expr* e) {
        if (sub_edges.count(e)) return;
        sub_edges[e] = sub_of(e, rules);
        le_edges[e] = le_of(e, rules, nt);
        sets.universe_.push_back(e);
        for (const Expr* c : sub_edges[e]) work.push_back(c);
    };
    for (const auto& [name, body] : rules) work.push_back(body.get());
    work.push_back(g.start().get());
    while (!work.empty()) {
        const Expr* e = work.front();
        work.pop_front();
        visit(e);
    }

    sets.sub_plus_ = close_over(sets.universe_, sub_edges);
    sets.le_plus_ = close_over(sets.universe_, le_edges);
    return sets;
}

namespace {

// Shortest left-expansion path from `root` back to itself, projected to the
// nonterminal names traversed. `root` must lie on a cycle.
std::vector<std::string> witness_cycle(const Expr* root, const std::string& rule,
                                       const RuleList& rules, const NullabilityTable& nt) {
    std::unordered_map<const Expr*, const Expr*> parent;
    std::deque<const Expr*> work;
    for (const Expr* next : le_of(root, rules, nt)) {
        if (!parent.count(next)) {
            parent[next] = nullptr;
            work.push_back(next);
        }
    }
    const Expr* hit = parent.count(root) ? root : nullptr;
    while (!hit && !work.empty()) {
        const Expr* cur = work.front();
        work.pop_front();
        if (cur == root) { hit = cur; break; }
        for (const Expr* next : le_of(cur, rules, nt)) {
            if (!parent.count(next)) {
                parent[next] = cur;
                work.push_back(next);
            }
        }
    }
    std::vector<std::string> names{rule};
    if (root->kind() == ExprKind::Nonterm) names.push_back(root->name());
    if (hit) {
        // parent chain runs backwards from the final arrival at root
        std::vector<const Expr*> chain;
        for (const Expr* n = hit; n != nullptr; n = parent[n]) chain.push_back(n);
        for (std::size_t i = chain.size(); i-- > 1;) {
            if (chain[i]->kind() == ExprKind::Nonterm) names.push_back(chain[i]->name());
        }
    }
    if (names.size() == 1 || names.back() != rule) names.push_back(rule);
    return names;
}

} // namespace

WellFormedness check_well_formed(const Grammar& g, const ExpansionSets& sets) {
    WellFormedness wf;
    wf.ok = true;
    for (const Expr* e : sets.universe()) {
        if (sets.in_own_le(e)) { wf.ok = false; break; }
    }
    NullabilityTable nt = compute_nullability(g);
    for (const auto& [name, body] : g.rules()) {
        if (sets.in_own_le(body.get())) {
            wf.cycles.push_back({name, witness_cycle(body.get(), name, g.rules(), nt)});
        }
    }
    return wf;
}

WellFormedness check_well_formed(const Grammar& g) {
    NullabilityTable nt = compute_nullability(g);
    ExpansionSets sets = compute_expansions(g, nt);
    return check_well_formed(g, sets);
}

ExprPtr simplify(const ExprPtr& e, const NullabilityTable& nt) {
    switch (e->kind()) {
    case ExprKind::Char:
    case ExprKind::Empty:
    case ExprKind::Fail: return e;
    case ExprKind::Nonterm:
        if (nt.rule_is_fail(e->name())) return Expr::make_fail();
        return e;
    case ExprKind::Not: {
        ExprPtr c = simplify(e->child(), nt);
        if (nt.nu(c)) return Expr::make_fail();
        if (c->kind() == ExprKind::Fail) return Expr::make_empty();
        if (c->kind() == ExprKind::Not && c->child()->kind() == ExprKind::Not)
            return c->child(); // !!!e collapses to !e
        if (c == e->child()) return e;
        return Expr::make_not(std::move(c));
    }
    case ExprKind::Seq: {
        ExprPtr a = simplify(e->first(), nt);
        ExprPtr b = simplify(e->second(), nt);
        if (a->kind() == ExprKind::Fail || b->kind() == ExprKind::Fail) return Expr::make_fail();
        if (a->kind() == ExprKind::Empty) return b;
        if (b->kind() == ExprKind::Empty) return a;
        if (a == e->first() && b == e->second()) return e;
        return Expr::make_seq(std::move(a), std::move(b));
    }
    case ExprKind::Alt: {
        ExprPtr a = simplify(e->first(), nt);
        ExprPtr b = simplify(e->second(), nt);
        if (a->kind() == ExprKind::Fail) return b;
        if (b->kind() == ExprKind::Fail) return a;
        if (nt.nu(a)) return a; // ordered choice never reaches b
        if (a == e->first() && b == e->second()) return e;
        return Expr::make_alt(std::move(a), std::move(b));
    }
    }
    return e;
}

RuleList simplify_rules(RuleList rules) {
    for (bool changed = true; changed;) {
        changed = false;
        NullabilityTable nt = compute_nullability(rules);
        for (auto& [name, body] : rules) {
            ExprPtr s = simplify(body, nt);
            if (s != body) {
                body = std::move(s);
                changed = true;
            }
        }
    }
    return rules;
}

} // namespace sped
