#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "sped/analysis.hpp"
#include "sped/grammar.hpp"
#include "sped/index_set.hpp"

namespace sped {

/// Broken internal invariant of the derivative engine (never a property of
/// the input); recognition surfaces these instead of misreporting a verdict.
class engine_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// One input symbol: a byte, or the end-of-input marker. The marker lives
/// outside the byte range and cannot be constructed from input data.
class Symbol {
public:
    static constexpr Symbol from_byte(std::uint8_t b) { return Symbol(b); }
    static constexpr Symbol end_marker() { return Symbol(kEnd); }
    constexpr bool is_end() const { return v_ == kEnd; }
    constexpr std::uint8_t byte() const { return static_cast<std::uint8_t>(v_); }
    constexpr bool operator==(const Symbol&) const = default;

private:
    static constexpr std::uint16_t kEnd = 256;
    explicit constexpr Symbol(std::uint16_t v) : v_(v) {}
    std::uint16_t v_;
};

enum class NodeKind : std::uint8_t { Char, Empty, Fail, Not, Seq, Alt };

class NormNode;
using NodePtr = std::shared_ptr<const NormNode>;

/// Saved derivative of a sequence tail: the tail's state for a parse of the
/// first component that stopped consuming at input index `at`.
struct Follower {
    std::uint32_t at;
    NodePtr node;
};

/// Node of the normalized expression DAG stepped by the derivative. Nodes are
/// immutable, carry a session-unique id, and cache their back and match index
/// sets at construction:
///   back:  indices at which the node could yet match without more input
///          (positions of its live empty-match and lookahead annotations).
///   match: index at which the node has already matched, if any; at most one.
/// match is always a subset of back. Construction goes through StepContext.
class NormNode {
public:
    NodeKind kind() const { return kind_; }
    std::uint64_t id() const { return id_; }

    std::uint8_t byte() const { return byte_; }  // Char
    std::uint32_t at() const { return at_; }     // Empty, Not
    const NodePtr& child() const { return a_; }  // Not
    const NodePtr& first() const { return a_; }  // Seq, Alt
    const NodePtr& second() const { return b_; } // Alt

    /// Un-normalized tail of a sequence, instantiated on demand.
    const ExprPtr& tail_template() const { return template_; }
    /// Sorted by index, strictly ascending; indices equal back() of first().
    const std::vector<Follower>& followers() const { return followers_; }
    const NodePtr* follower_at(std::uint32_t at) const;

    const IndexSet& back() const { return back_; }
    const IndexSet& match_set() const { return match_; }

    bool is_empty() const { return kind_ == NodeKind::Empty; }
    bool is_fail() const { return kind_ == NodeKind::Fail; }
    /// Empty or Fail: recognition can stop, later derivatives are identity.
    bool is_terminal() const { return is_empty() || is_fail(); }
    /// No future input can make this node fail. Derivatives preserve the
    /// property, so a choice whose first branch has it commits immediately:
    /// its second branch is reachable only through a failure that will never
    /// come. Conservative (false) for lookaheads and for sequences whose tail
    /// can fail.
    bool cant_fail() const { return cant_fail_; }

    struct Private {};
    NormNode(Private, NodeKind k, std::uint64_t id) : kind_(k), id_(id) {}

private:
    friend class StepContext;
    NodeKind kind_;
    std::uint64_t id_;
    std::uint8_t byte_ = 0;
    std::uint32_t at_ = 0;
    NodePtr a_;
    NodePtr b_;
    ExprPtr template_;
    std::vector<Follower> followers_;
    IndexSet back_;
    IndexSet match_;
    bool cant_fail_ = false;
};

struct StepStats {
    std::uint64_t nodes_created = 0;
    std::uint64_t derive_calls = 0; // derivations actually computed (memo misses)
    // sequence derivative outcomes: fail, tail-start, tail-start-at-end,
    // saved-follower, rebuild
    std::array<std::uint64_t, 5> seq_branch{};
};

struct EngineOptions {
    /// Intern structurally identical nodes created within one step.
    bool hash_cons = false;
    /// Fault injection for harness self-tests: create the sequence follower
    /// based on the tail instead of the first component. Never enable for
    /// real recognition.
    bool follower_on_second = false;
};

/// Per-step working state of a recognition session: the current input index,
/// a derivative memo and a normalization cache that are reset at every step,
/// and the node factories. One StepContext per session; not shareable across
/// threads. Requires a well-formed grammar.
class StepContext {
public:
    explicit StepContext(const Grammar& g, EngineOptions opts = {});

    const Grammar& grammar() const { return *g_; }
    const NullabilityTable& nullability() const { return nt_; }
    std::uint32_t index() const { return index_; }
    const StepStats& stats() const { return stats_; }

    /// Enter derivative step `i`: clears the memo tables and the step stats.
    void begin_step(std::uint32_t i);

    /// Instantiate an expression at the current index. Cached per occurrence
    /// within the step, so a template normalizes once per step.
    NodePtr normalize(const ExprPtr& e);

    /// Derivative of `n` by symbol `c` at the current index. Memoized per
    /// node id within the step, so shared nodes derive once.
    NodePtr derive(const NodePtr& n, Symbol c);

    // Node factories; validate the cached-set invariants.
    NodePtr make_char(std::uint8_t byte);
    NodePtr make_empty_at(std::uint32_t at);
    NodePtr make_fail();
    NodePtr make_not_at(std::uint32_t at, NodePtr child);
    NodePtr make_seq(NodePtr first, ExprPtr tail, std::vector<Follower> followers);
    NodePtr make_alt(NodePtr first, NodePtr second);

private:
    NodePtr intern(NodePtr n);
    NodePtr fresh(NodeKind k);

    const Grammar* g_;
    NullabilityTable nt_;
    EngineOptions opts_;
    std::uint64_t next_id_ = 0;
    std::uint32_t index_ = 0;
    NodePtr fail_;
    std::unordered_map<std::uint64_t, NodePtr> derive_memo_;
    // owning keys: see the nullability memo note in analysis.hpp
    std::unordered_map<ExprPtr, NodePtr> norm_memo_;
    std::unordered_map<std::string, NodePtr> intern_;
    StepStats stats_;
};

/// Index annotations bounded by k, and every sequence node's follower indices
/// exactly its first component's back set.
bool check_normalized(const NodePtr& n, std::uint32_t k);

struct DagStats {
    std::uint64_t live_nodes = 0;
    std::array<std::uint64_t, 6> by_kind{}; // indexed by NodeKind
    std::uint64_t max_followers = 0;
    std::uint64_t depth = 0; // longest path; sequence tails not counted
};

/// Identity-aware traversal: shared nodes counted once.
DagStats dag_stats(const NodePtr& n);

struct StepRecord {
    std::uint32_t step = 0;  // record ordinal; 0 is the initial normalization
    std::int32_t symbol = 0; // byte value, -1 for the end marker, -2 for none
    std::uint64_t nodes_created = 0;
    std::uint64_t live_nodes = 0;    // populated when stats are collected
    std::uint64_t max_followers = 0; // populated when stats are collected
};

struct RecognizeOptions {
    EngineOptions engine;
    /// Collect per-step live-DAG statistics (adds one traversal per step).
    bool collect_stats = false;
    /// Check structural invariants after every step; engine_error on breach.
    bool validate = false;
    /// Streaming hook, called once per record, including the step-0 record.
    std::function<void(const StepRecord&)> on_step;
};

struct RecognitionOutcome {
    bool matched = false;
    std::uint32_t consumed_through = 0; // valid when matched
    std::uint64_t input_length = 0;     // bytes fed to the engine
    std::uint64_t steps = 0;            // derivative steps executed
    bool short_circuited = false;       // resolved before the end marker
    std::uint64_t nodes_created = 0;
    std::uint64_t derive_calls = 0;
    std::array<std::uint64_t, 5> seq_branch{};
    std::uint64_t peak_live_nodes = 0;    // stats only
    std::uint64_t max_followers_seen = 0; // stats only
    std::vector<StepRecord> trail;        // stats only
};

/// Recognize a byte sequence: normalize the start expression at index 0, take
/// one derivative per byte at indices 1..n, then the end-marker derivative at
/// index n. Matched means a prefix of the input matched; consumed_through is
/// its length. Throws std::invalid_argument for ill-formed grammars and
/// engine_error on internal invariant violations.
RecognitionOutcome recognize(const Grammar& g, std::span<const std::uint8_t> input,
                             const RecognizeOptions& opts = {});
RecognitionOutcome recognize(const Grammar& g, std::string_view input,
                             const RecognizeOptions& opts = {});
/// Streaming variant; reads one byte at a time and stops reading when the
/// outcome is decided early.
RecognitionOutcome recognize(const Grammar& g, std::istream& input,
                             const RecognizeOptions& opts = {});

} // namespace sped
