#include "sped/oracle.hpp"

#include <stdexcept>

namespace sped {

namespace {

// The recursion is written once against a rule-lookup callable so the grammar
// and raw-rule-list fronts cannot drift apart.
template <typename Lookup>
OracleResult eval_expr(const Lookup& rule_body, const Expr* e, std::string_view input,
                       std::size_t pos, std::uint64_t& fuel, std::uint32_t depth) {
    if (depth == 0) return OracleResult::exhausted();
    --depth;
    switch (e->kind()) {
    case ExprKind::Char:
        if (pos < input.size() && static_cast<std::uint8_t>(input[pos]) == e->byte())
            return OracleResult::rest(pos + 1);
        return OracleResult::failure();
    case ExprKind::Empty:
        return OracleResult::rest(pos);
    case ExprKind::Fail:
        return OracleResult::failure();
    case ExprKind::Nonterm: {
        if (fuel == 0) return OracleResult::exhausted();
        --fuel;
        const Expr* body = rule_body(e->name());
        if (!body) throw std::invalid_argument("reference to unknown rule " + e->name());
        return eval_expr(rule_body, body, input, pos, fuel, depth);
    }
    case ExprKind::Not: {
        OracleResult r = eval_expr(rule_body, e->child().get(), input, pos, fuel, depth);
        switch (r.status) {
        case OracleStatus::Rest: return OracleResult::failure();
        case OracleStatus::Failure: return OracleResult::rest(pos);
        case OracleStatus::FuelExhausted: return r;
        }
        return r;
    }
    case ExprKind::Seq: {
        OracleResult r = eval_expr(rule_body, e->first().get(), input, pos, fuel, depth);
        if (r.status != OracleStatus::Rest) return r;
        return eval_expr(rule_body, e->second().get(), input, r.pos, fuel, depth);
    }
    case ExprKind::Alt: {
        OracleResult r = eval_expr(rule_body, e->first().get(), input, pos, fuel, depth);
        if (r.status != OracleStatus::Failure) return r;
        return eval_expr(rule_body, e->second().get(), input, pos, fuel, depth);
    }
    }
    return OracleResult::failure();
}

template <typename Lookup>
OracleResult eval_node(const Lookup& rule_body, const NormNode* n, std::string_view input,
                       std::size_t pos, std::uint64_t& fuel, std::uint32_t depth) {
    if (depth == 0) return OracleResult::exhausted();
    --depth;
    switch (n->kind()) {
    case NodeKind::Char:
        if (pos < input.size() && static_cast<std::uint8_t>(input[pos]) == n->byte())
            return OracleResult::rest(pos + 1);
        return OracleResult::failure();
    case NodeKind::Empty:
        return OracleResult::rest(n->at());
    case NodeKind::Fail:
        return OracleResult::failure();
    case NodeKind::Not: {
        OracleResult r = eval_node(rule_body, n->child().get(), input, pos, fuel, depth);
        switch (r.status) {
        case OracleStatus::Rest: return OracleResult::failure();
        case OracleStatus::Failure: return OracleResult::rest(n->at());
        case OracleStatus::FuelExhausted: return r;
        }
        return r;
    }
    case NodeKind::Seq: {
        OracleResult r = eval_node(rule_body, n->first().get(), input, pos, fuel, depth);
        if (r.status != OracleStatus::Rest) return r;
        return eval_expr(rule_body, n->tail_template().get(), input, r.pos, fuel, depth);
    }
    case NodeKind::Alt: {
        OracleResult r = eval_node(rule_body, n->first().get(), input, pos, fuel, depth);
        if (r.status != OracleStatus::Failure) return r;
        return eval_node(rule_body, n->second().get(), input, pos, fuel, depth);
    }
    }
    return OracleResult::failure();
}

} // namespace

OracleResult oracle_eval(const Grammar& g, const ExprPtr& e, std::string_view input,
                         std::size_t pos, std::uint64_t& fuel) {
    auto lookup = [&g](const std::string& name) -> const Expr* {
        const ExprPtr* b = g.find(name);
        return b ? b->get() : nullptr;
    };
    return eval_expr(lookup, e.get(), input, pos, fuel, OracleLimits{}.max_depth);
}

OracleResult oracle_eval(const RuleList& rules, const ExprPtr& e, std::string_view input,
                         std::size_t pos, std::uint64_t& fuel) {
    auto lookup = [&rules](const std::string& name) -> const Expr* {
        const ExprPtr* b = find_rule(rules, name);
        return b ? b->get() : nullptr;
    };
    return eval_expr(lookup, e.get(), input, pos, fuel, OracleLimits{}.max_depth);
}

OracleResult oracle_eval(const Grammar& g, const NodePtr& n, std::string_view input,
                         std::size_t pos, std::uint64_t& fuel) {
    auto lookup = [&g](const std::string& name) -> const Expr* {
        const ExprPtr* b = g.find(name);
        return b ? b->get() : nullptr;
    };
    return eval_node(lookup, n.get(), input, pos, fuel, OracleLimits{}.max_depth);
}

OracleResult oracle_match(const Grammar& g, std::string_view input, OracleLimits limits) {
    std::uint64_t fuel = limits.fuel;
    auto lookup = [&g](const std::string& name) -> const Expr* {
        const ExprPtr* b = g.find(name);
        return b ? b->get() : nullptr;
    };
    return eval_expr(lookup, g.start().get(), input, 0, fuel, limits.max_depth);
}

OracleResult oracle_match(const RuleList& rules, const std::string& start,
                          std::string_view input, OracleLimits limits) {
    std::uint64_t fuel = limits.fuel;
    auto lookup = [&rules](const std::string& name) -> const Expr* {
        const ExprPtr* b = find_rule(rules, name);
        return b ? b->get() : nullptr;
    };
    ExprPtr e = Expr::make_nonterm(start);
    return eval_expr(lookup, e.get(), input, 0, fuel, limits.max_depth);
}

} // namespace sped
