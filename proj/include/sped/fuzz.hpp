#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "sped/engine.hpp"
#include "sped/grammar.hpp"
#include "sped/oracle.hpp"

namespace sped {

// Deterministic generator state. splitmix64 is small, fast, and produces the
// same stream on every platform, which keeps case seeds reproducible.
struct SplitMix {
    std::uint64_t state = 0;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    std::uint32_t below(std::uint32_t n) { return n ? static_cast<std::uint32_t>(next() % n) : 0; }
    bool chance(std::uint32_t num, std::uint32_t den) { return below(den) < num; }
};

// Derive an independent stream for case `index` of run `seed`.
std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index);

struct FuzzConfig {
    std::uint64_t seed = 1;
    std::uint64_t count = 10000;
    std::uint32_t max_rules = 6;
    std::uint32_t max_depth = 5;
    std::uint32_t max_input = 12;
    std::uint32_t jobs = 0; // 0 picks the hardware thread count
    std::uint64_t fuel = 1'000'000;
    bool hash_cons = false;
    bool follower_on_second = false; // forwarded fault injection, see EngineOptions
    bool stop_at_first_failure = false;
    bool minimize = true;
};

struct GeneratedCase {
    RuleList raw;    // rule bodies as generated, before any rewriting
    Grammar grammar; // the same rules as the engine will see them
    std::string input;
    bool fallback = false;        // generator gave up and used a stock grammar
    std::uint32_t rejected = 0;   // candidate grammars discarded as not well formed
};

GeneratedCase generate_case(std::uint64_t seed, const FuzzConfig& cfg);

enum class CaseOutcome : std::uint8_t {
    Agree,
    Disagree,  // both sides answered and the answers differ
    Violation, // the engine raised an internal-invariant error
    FuelSkip,  // the reference interpreter ran out of fuel; not comparable
};

struct CaseReport {
    CaseOutcome outcome = CaseOutcome::Agree;
    std::string engine_answer; // "match through N" / "no match" / error text
    std::string oracle_answer;
    std::array<std::uint64_t, 5> seq_branch{};
    double max_growth_ratio = 0.0; // nodes created per step over 1 + prior follower peak
};

CaseReport run_case(const Grammar& g, std::string_view input, const FuzzConfig& cfg);

struct FuzzFailure {
    std::uint64_t case_index = 0;
    std::uint64_t seed = 0;
    CaseOutcome kind = CaseOutcome::Disagree;
    std::string grammar_text; // canonical form, minimized when enabled
    std::string input;        // raw bytes
    std::string engine_answer;
    std::string oracle_answer;
};

struct FuzzSummary {
    std::uint64_t requested = 0;
    std::uint64_t cases_run = 0;
    std::uint64_t agreements = 0;
    std::uint64_t disagreements = 0;
    std::uint64_t violations = 0;
    std::uint64_t fuel_skips = 0;
    std::uint64_t fallback_grammars = 0;
    std::uint64_t rejected_grammars = 0;
    std::array<std::uint64_t, 5> seq_branch{};
    double max_growth_ratio = 0.0;
    double elapsed_seconds = 0.0;
    std::optional<FuzzFailure> first_failure;

    bool clean() const { return disagreements == 0 && violations == 0; }
};

FuzzSummary run_fuzz(const FuzzConfig& cfg);

// Shrink a failing case while it keeps failing with the same kind: drop input
// bytes, then drop rules, then replace rule bodies with their pieces.
FuzzFailure minimize_failure(const FuzzFailure& failure, const RuleList& raw,
                             const std::string& start, const FuzzConfig& cfg);

} // namespace sped
