#include "sped/fuzz.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>
#include <vector>

#include "sped/analysis.hpp"

namespace sped {

std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index) {
    SplitMix m{seed ^ (0xA0761D6478BD642Full + index * 0xE7037ED1A0B428DBull)};
    m.next();
    return m.next();
}

namespace {

constexpr std::uint32_t kAlphabet = 4; // bytes 'a' through 'd'

ExprPtr gen_expr(SplitMix& rng, std::uint32_t depth, std::uint32_t nrules) {
    auto nonterm = [&] { return Expr::make_nonterm("R" + std::to_string(rng.below(nrules))); };
    auto ch = [&] { return Expr::make_char(static_cast<std::uint8_t>('a' + rng.below(kAlphabet))); };
    if (depth == 0) {
        std::uint32_t r = rng.below(100);
        if (r < 55) return ch();
        if (r < 75) return Expr::make_empty();
        if (r < 93) return nonterm();
        return Expr::make_fail();
    }
    std::uint32_t r = rng.below(100);
    if (r < 24) return ch();
    if (r < 46) return Expr::make_seq(gen_expr(rng, depth - 1, nrules),
                                      gen_expr(rng, depth - 1, nrules));
    if (r < 68) return Expr::make_alt(gen_expr(rng, depth - 1, nrules),
                                      gen_expr(rng, depth - 1, nrules));
    if (r < 80) return Expr::make_not(gen_expr(rng, depth - 1, nrules));
    if (r < 86) {
        // paired lookaheads make sequences whose head resolves only at the
        // end of input, the rarest derivative shape
        return Expr::make_seq(Expr::make_not(ch()), Expr::make_not(ch()));
    }
    if (r < 94) return nonterm();
    if (r < 98) return Expr::make_empty();
    return Expr::make_fail();
}

void collect_terminals(const Expr* e, std::vector<std::uint8_t>& out) {
    switch (e->kind()) {
    case ExprKind::Char:
        if (std::find(out.begin(), out.end(), e->byte()) == out.end()) out.push_back(e->byte());
        break;
    case ExprKind::Empty:
    case ExprKind::Fail:
    case ExprKind::Nonterm: break;
    case ExprKind::Not: collect_terminals(e->child().get(), out); break;
    case ExprKind::Seq:
    case ExprKind::Alt:
        collect_terminals(e->first().get(), out);
        collect_terminals(e->second().get(), out);
        break;
    }
}

std::string gen_input(SplitMix& rng, const Grammar& g, std::uint32_t max_input) {
    std::vector<std::uint8_t> terminals;
    for (const auto& [name, body] : g.rules()) collect_terminals(body.get(), terminals);
    std::string input;
    std::uint32_t len = rng.below(max_input + 1);
    input.reserve(len);
    for (std::uint32_t i = 0; i < len; ++i) {
        if (!terminals.empty() && rng.chance(85, 100)) {
            input.push_back(static_cast<char>(terminals[rng.below(
                static_cast<std::uint32_t>(terminals.size()))]));
        } else {
            // one byte past the alphabet sneaks in unmatched symbols
            input.push_back(static_cast<char>('a' + rng.below(kAlphabet + 1)));
        }
    }
    return input;
}

} // namespace

GeneratedCase generate_case(std::uint64_t seed, const FuzzConfig& cfg) {
    SplitMix rng{seed};
    rng.next();
    std::uint32_t rejected = 0;
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::uint32_t nrules = 1 + rng.below(std::max(1u, cfg.max_rules));
        RuleList raw;
        raw.reserve(nrules);
        for (std::uint32_t i = 0; i < nrules; ++i) {
            std::uint32_t depth = 1 + rng.below(std::max(1u, cfg.max_depth));
            raw.emplace_back("R" + std::to_string(i), gen_expr(rng, depth, nrules));
        }
        Grammar g = Grammar::make(raw, "R0");
        if (check_well_formed(g).ok) {
            std::string input = gen_input(rng, g, cfg.max_input);
            return GeneratedCase{std::move(raw), std::move(g), std::move(input), false, rejected};
        }
        ++rejected;
    }
    RuleList raw;
    raw.emplace_back("R0", Expr::make_alt(Expr::make_seq(Expr::make_char('a'),
                                                         Expr::make_char('b')),
                                          Expr::make_char('a')));
    Grammar g = Grammar::make(raw, "R0");
    std::string input = gen_input(rng, g, cfg.max_input);
    return GeneratedCase{std::move(raw), std::move(g), std::move(input), true, rejected};
}

CaseReport run_case(const Grammar& g, std::string_view input, const FuzzConfig& cfg) {
    CaseReport rep;
    RecognizeOptions ro;
    ro.engine.hash_cons = cfg.hash_cons;
    ro.engine.follower_on_second = cfg.follower_on_second;
    ro.collect_stats = true;
    ro.validate = true;

    bool engine_ok = false;
    bool engine_match = false;
    std::uint64_t consumed = 0;
    try {
        RecognitionOutcome rec = recognize(g, input, ro);
        rep.seq_branch = rec.seq_branch;
        for (std::size_t k = 1; k < rec.trail.size(); ++k) {
            double ratio = static_cast<double>(rec.trail[k].nodes_created) /
                           (1.0 + static_cast<double>(rec.trail[k - 1].max_followers));
            rep.max_growth_ratio = std::max(rep.max_growth_ratio, ratio);
        }
        engine_ok = true;
        engine_match = rec.matched;
        consumed = rec.consumed_through;
        rep.engine_answer = engine_match
                                ? "match through " + std::to_string(consumed)
                                : "no match";
    } catch (const std::exception& e) {
        rep.outcome = CaseOutcome::Violation;
        rep.engine_answer = std::string("error: ") + e.what();
    }

    OracleResult orc = oracle_match(g, input, OracleLimits{cfg.fuel});
    switch (orc.status) {
    case OracleStatus::Rest:
        rep.oracle_answer = "match through " + std::to_string(orc.pos);
        break;
    case OracleStatus::Failure:
        rep.oracle_answer = "no match";
        break;
    case OracleStatus::FuelExhausted:
        rep.oracle_answer = "fuel exhausted";
        break;
    }

    if (rep.outcome == CaseOutcome::Violation) return rep;
    if (orc.status == OracleStatus::FuelExhausted) {
        rep.outcome = CaseOutcome::FuelSkip;
        return rep;
    }
    bool agree = engine_ok &&
                 ((engine_match && orc.status == OracleStatus::Rest && consumed == orc.pos) ||
                  (!engine_match && orc.status == OracleStatus::Failure));
    rep.outcome = agree ? CaseOutcome::Agree : CaseOutcome::Disagree;
    return rep;
}

namespace {

// Retained context for the earliest failing case of a worker; the raw rules
// are needed to rerun the case during minimization.
struct HeldFailure {
    FuzzFailure failure;
    RuleList raw;
    std::string start;
};

struct WorkerState {
    FuzzSummary sum;
    std::optional<HeldFailure> held;
};

void fold_case(WorkerState& w, std::uint64_t index, std::uint64_t seed, GeneratedCase& c,
               const CaseReport& rep, const FuzzConfig& cfg, std::atomic<bool>& stop) {
    ++w.sum.cases_run;
    w.sum.fallback_grammars += c.fallback ? 1 : 0;
    w.sum.rejected_grammars += c.rejected;
    for (std::size_t b = 0; b < rep.seq_branch.size(); ++b)
        w.sum.seq_branch[b] += rep.seq_branch[b];
    w.sum.max_growth_ratio = std::max(w.sum.max_growth_ratio, rep.max_growth_ratio);
    switch (rep.outcome) {
    case CaseOutcome::Agree: ++w.sum.agreements; return;
    case CaseOutcome::FuelSkip: ++w.sum.fuel_skips; return;
    case CaseOutcome::Disagree: ++w.sum.disagreements; break;
    case CaseOutcome::Violation: ++w.sum.violations; break;
    }
    if (!w.held || index < w.held->failure.case_index) {
        FuzzFailure f;
        f.case_index = index;
        f.seed = seed;
        f.kind = rep.outcome;
        f.grammar_text = c.grammar.canonical();
        f.input = c.input;
        f.engine_answer = rep.engine_answer;
        f.oracle_answer = rep.oracle_answer;
        w.held = HeldFailure{std::move(f), std::move(c.raw), std::string(c.grammar.start_name())};
    }
    if (cfg.stop_at_first_failure) stop.store(true, std::memory_order_relaxed);
}

} // namespace

FuzzSummary run_fuzz(const FuzzConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    unsigned jobs = cfg.jobs ? cfg.jobs : std::thread::hardware_concurrency();
    if (jobs == 0) jobs = 1;
    jobs = static_cast<unsigned>(std::min<std::uint64_t>(jobs, std::max<std::uint64_t>(1, cfg.count)));

    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> stop{false};
    std::vector<WorkerState> workers(jobs);

    auto body = [&](WorkerState& w) {
        while (!stop.load(std::memory_order_relaxed)) {
            std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= cfg.count) break;
            std::uint64_t seed = case_seed(cfg.seed, i);
            GeneratedCase c = generate_case(seed, cfg);
            CaseReport rep = run_case(c.grammar, c.input, cfg);
            fold_case(w, i, seed, c, rep, cfg, stop);
        }
    };

    if (jobs == 1) {
        body(workers[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(body, std::ref(workers[j]));
        for (auto& t : pool) t.join();
    }

    FuzzSummary sum;
    sum.requested = cfg.count;
    const HeldFailure* earliest = nullptr;
    for (const WorkerState& w : workers) {
        sum.cases_run += w.sum.cases_run;
        sum.agreements += w.sum.agreements;
        sum.disagreements += w.sum.disagreements;
        sum.violations += w.sum.violations;
        sum.fuel_skips += w.sum.fuel_skips;
        sum.fallback_grammars += w.sum.fallback_grammars;
        sum.rejected_grammars += w.sum.rejected_grammars;
        for (std::size_t b = 0; b < sum.seq_branch.size(); ++b)
            sum.seq_branch[b] += w.sum.seq_branch[b];
        sum.max_growth_ratio = std::max(sum.max_growth_ratio, w.sum.max_growth_ratio);
        if (w.held && (!earliest || w.held->failure.case_index < earliest->failure.case_index))
            earliest = &*w.held;
    }
    if (earliest) {
        sum.first_failure = cfg.minimize
                                ? minimize_failure(earliest->failure, earliest->raw,
                                                   earliest->start, cfg)
                                : earliest->failure;
    }
    sum.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sum;
}

namespace {

void collect_subexprs(const ExprPtr& e, std::vector<ExprPtr>& out) {
    out.push_back(e);
    switch (e->kind()) {
    case ExprKind::Char:
    case ExprKind::Empty:
    case ExprKind::Fail:
    case ExprKind::Nonterm: break;
    case ExprKind::Not: collect_subexprs(e->child(), out); break;
    case ExprKind::Seq:
    case ExprKind::Alt:
        collect_subexprs(e->first(), out);
        collect_subexprs(e->second(), out);
        break;
    }
}

} // namespace

FuzzFailure minimize_failure(const FuzzFailure& failure, const RuleList& raw,
                             const std::string& start, const FuzzConfig& cfg) {
    RuleList rules = raw;
    std::string input = failure.input;
    FuzzFailure best = failure;
    int budget = 500;

    // Reproduce with candidate rules and input; keep only same-kind failures.
    auto probe = [&](const RuleList& r, const std::string& in,
                     CaseReport* out_rep) -> bool {
        if (budget <= 0) return false;
        --budget;
        try {
            Grammar g = Grammar::make(r, start);
            if (!check_well_formed(g).ok) return false;
            CaseReport rep = run_case(g, in, cfg);
            if (rep.outcome != failure.kind) return false;
            if (out_rep) *out_rep = rep;
            best.grammar_text = g.canonical();
            best.input = in;
            best.engine_answer = rep.engine_answer;
            best.oracle_answer = rep.oracle_answer;
            return true;
        } catch (const std::exception&) {
            return false;
        }
    };

    bool shrunk = true;
    while (shrunk && budget > 0) {
        shrunk = false;
        // drop input bytes
        for (std::size_t i = 0; i < input.size();) {
            std::string candidate = input;
            candidate.erase(i, 1);
            if (probe(rules, candidate, nullptr)) {
                input = std::move(candidate);
                shrunk = true;
            } else {
                ++i;
            }
        }
        // drop whole rules (never the start rule)
        for (std::size_t i = 0; i < rules.size();) {
            if (rules[i].first == start) { ++i; continue; }
            RuleList candidate = rules;
            candidate.erase(candidate.begin() + static_cast<std::ptrdiff_t>(i));
            if (probe(candidate, input, nullptr)) {
                rules = std::move(candidate);
                shrunk = true;
            } else {
                ++i;
            }
        }
        // replace a rule body with one of its own pieces, smallest first
        for (std::size_t i = 0; i < rules.size() && budget > 0; ++i) {
            std::vector<ExprPtr> pieces;
            collect_subexprs(rules[i].second, pieces);
            pieces.push_back(Expr::make_empty());
            std::sort(pieces.begin(), pieces.end(), [](const ExprPtr& a, const ExprPtr& b) {
                return expr_size(a) < expr_size(b);
            });
            for (const ExprPtr& piece : pieces) {
                if (piece == rules[i].second) continue;
                if (expr_size(piece) >= expr_size(rules[i].second)) continue;
                RuleList candidate = rules;
                candidate[i].second = piece;
                if (probe(candidate, input, nullptr)) {
                    rules = std::move(candidate);
                    shrunk = true;
                    break;
                }
            }
        }
    }
    return best;
}

} // namespace sped
