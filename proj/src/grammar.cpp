#include "sped/grammar.hpp"

#include <algorithm>
#include <deque>

#include "sped/analysis.hpp"

namespace sped {

grammar_error::grammar_error(std::string msg, SourcePos pos)
    : std::runtime_error(pos.line ? std::to_string(pos.line) + ":" + std::to_string(pos.col) +
                                        ": " + msg
                                  : msg),
      pos_(pos) {}

const ExprPtr* find_rule(const RuleList& rules, std::string_view name) {
    for (const auto& [n, body] : rules) {
        if (n == name) return &body;
    }
    return nullptr;
}

bool Grammar::has_rule(std::string_view name) const {
    return index_.count(std::string(name)) != 0;
}

const ExprPtr* Grammar::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return nullptr;
    return &rules_[it->second].second;
}

const ExprPtr& Grammar::rule(std::string_view name) const {
    const ExprPtr* b = find(name);
    if (!b) throw grammar_error("unknown rule: " + std::string(name));
    return *b;
}

namespace {

void collect_refs(const ExprPtr& e, std::vector<std::string>& out) {
    switch (e->kind()) {
    case ExprKind::Char:
    case ExprKind::Empty:
    case ExprKind::Fail: return;
    case ExprKind::Nonterm: out.push_back(e->name()); return;
    case ExprKind::Not: collect_refs(e->child(), out); return;
    case ExprKind::Seq:
    case ExprKind::Alt:
        collect_refs(e->first(), out);
        collect_refs(e->second(), out);
        return;
    }
}

} // namespace

Grammar Grammar::make(RuleList rules, std::optional<std::string> start) {
    if (rules.empty()) throw grammar_error("grammar has no rules");
    Grammar g;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (!g.index_.emplace(rules[i].first, i).second)
            throw grammar_error("duplicate rule name: " + rules[i].first);
    }
    for (const auto& [name, body] : rules) {
        std::vector<std::string> refs;
        collect_refs(body, refs);
        for (const std::string& r : refs) {
            if (!g.index_.count(r))
                throw grammar_error("undefined rule referenced from " + name + ": " + r);
        }
    }
    g.start_name_ = start ? *start : rules.front().first;
    if (!g.index_.count(g.start_name_))
        throw grammar_error("undefined start rule: " + g.start_name_);

    g.rules_ = simplify_rules(std::move(rules));
    NullabilityTable nt = compute_nullability(g.rules_);
    g.start_ = simplify(Expr::make_nonterm(g.start_name_), nt);
    return g;
}

std::string Grammar::canonical() const {
    std::string out;
    for (const auto& [name, body] : rules_) {
        out += name;
        out += " <- ";
        out += to_text(body);
        out += "\n";
    }
    if (!rules_.empty() && start_name_ != rules_.front().first) {
        out += "%start " + start_name_ + "\n";
    }
    return out;
}

void GrammarBuilder::add_rule(std::string name, ExprPtr body, SourcePos pos) {
    auto it = seen_.find(name);
    if (it != seen_.end()) throw grammar_error("duplicate rule name: " + name, pos);
    seen_.emplace(name, pos);
    reserved_.insert(name);
    rules_.emplace_back(std::move(name), std::move(body));
}

std::string GrammarBuilder::fresh_name() {
    for (;;) {
        std::string name = "Rep" + std::to_string(counter_++);
        if (reserved_.count(name)) continue;
        if (!source_.empty() && source_.find(name) != std::string::npos) continue;
        reserved_.insert(name);
        return name;
    }
}

ExprPtr GrammarBuilder::star(const ExprPtr& e) {
    std::string name = fresh_name();
    ExprPtr ref = Expr::make_nonterm(name);
    // R <- e R / ''
    generated_.emplace_back(name,
                            Expr::make_alt(Expr::make_seq(e, ref), Expr::make_empty()));
    seen_.emplace(name, SourcePos{});
    return ref;
}

ExprPtr GrammarBuilder::plus(const ExprPtr& e) {
    return Expr::make_seq(e, star(e));
}

ExprPtr GrammarBuilder::opt(const ExprPtr& e) {
    return Expr::make_alt(e, Expr::make_empty());
}

ExprPtr GrammarBuilder::lookahead(const ExprPtr& e) {
    return Expr::make_not(Expr::make_not(e));
}

Grammar GrammarBuilder::build(std::optional<std::string> start) && {
    return Grammar::make(std::move(*this).take_raw(), std::move(start));
}

RuleList GrammarBuilder::take_raw() && {
    RuleList all = std::move(rules_);
    for (auto& r : generated_) all.emplace_back(std::move(r));
    generated_.clear();
    return all;
}

} // namespace sped
