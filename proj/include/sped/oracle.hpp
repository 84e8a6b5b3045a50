#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "sped/engine.hpp"
#include "sped/expr.hpp"
#include "sped/grammar.hpp"

namespace sped {

// Reference interpreter: a direct recursive-descent evaluation of prefix-match
// semantics, kept deliberately naive so it shares no machinery with the
// step-context engine. Recursion is bounded by a fuel budget on rule
// expansions so left-recursive or otherwise diverging grammars come back as
// FuelExhausted instead of hanging.

enum class OracleStatus : std::uint8_t {
    Rest,          // matched a prefix; pos is the first unconsumed offset
    Failure,       // no prefix matches
    FuelExhausted, // budget ran out before an answer was reached
};

struct OracleResult {
    OracleStatus status = OracleStatus::Failure;
    std::size_t pos = 0; // meaningful only for Rest

    static OracleResult rest(std::size_t p) { return {OracleStatus::Rest, p}; }
    static OracleResult failure() { return {OracleStatus::Failure, 0}; }
    static OracleResult exhausted() { return {OracleStatus::FuelExhausted, 0}; }

    bool operator==(const OracleResult& o) const {
        if (status != o.status) return false;
        return status != OracleStatus::Rest || pos == o.pos;
    }
};

struct OracleLimits {
    std::uint64_t fuel = 1'000'000; // rule expansions allowed
    // Recursion frames allowed. The interpreter descends one C stack frame
    // per step, and raw rule lists may loop without consuming input (left
    // recursion is only rejected when a grammar is loaded), so this guards
    // the stack; the default stays a few megabytes under common limits.
    // Breaching either budget reports FuelExhausted.
    std::uint32_t max_depth = 25'000;
};

// Evaluate an expression at an absolute offset. Rule references resolve
// against the grammar (or against a raw rule list, for checking rule
// transformations against their untransformed source). `fuel` is decremented
// in place so nested calls share one budget; recursion depth is capped at the
// OracleLimits default.
OracleResult oracle_eval(const Grammar& g, const ExprPtr& e, std::string_view input,
                         std::size_t pos, std::uint64_t& fuel);
OracleResult oracle_eval(const RuleList& rules, const ExprPtr& e, std::string_view input,
                         std::size_t pos, std::uint64_t& fuel);

// Evaluate an annotated node the same way. Empty-match and lookahead nodes
// jump to their recorded offsets; sequence tails are interpreted from their
// surface template, so this is an independent reading of what a node claims.
OracleResult oracle_eval(const Grammar& g, const NodePtr& n, std::string_view input,
                         std::size_t pos, std::uint64_t& fuel);

// Whole-input entry points starting at offset 0 from the start expression.
OracleResult oracle_match(const Grammar& g, std::string_view input, OracleLimits limits = {});
OracleResult oracle_match(const RuleList& rules, const std::string& start,
                          std::string_view input, OracleLimits limits = {});

} // namespace sped
