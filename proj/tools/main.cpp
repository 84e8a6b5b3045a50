#include <pthread.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sped/analysis.hpp"
#include "sped/engine.hpp"
#include "sped/fuzz.hpp"
#include "sped/grammar.hpp"
#include "sped/oracle.hpp"

using json = nlohmann::ordered_json;

namespace {

// Exit codes: 0 success or match, 1 negative answers (no match, ill-formed,
// disagreements, internal engine errors), 2 usage, load, and I/O problems.
constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitUsage = 2;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string printable(const std::string& bytes) {
    std::string out;
    for (unsigned char c : bytes) out += sped::escape_byte(c, '"');
    return out;
}

json byte_array(const std::string& bytes) {
    json arr = json::array();
    for (unsigned char c : bytes) arr.push_back(static_cast<int>(c));
    return arr;
}

// The reference interpreter recurses proportionally to input length, so large
// inputs need more stack than a default thread provides.
void run_with_big_stack(const std::function<void()>& fn) {
    struct Call {
        const std::function<void()>* fn;
        std::exception_ptr error;
    } call{&fn, nullptr};
    pthread_attr_t attr;
    pthread_attr_init(&attr);
    pthread_attr_setstacksize(&attr, std::size_t{1} << 30);
    auto trampoline = [](void* p) -> void* {
        auto* c = static_cast<Call*>(p);
        try {
            (*c->fn)();
        } catch (...) {
            c->error = std::current_exception();
        }
        return nullptr;
    };
    pthread_t tid;
    if (pthread_create(&tid, &attr, trampoline, &call) != 0) {
        pthread_attr_destroy(&attr);
        fn(); // fall back to the current stack
        return;
    }
    pthread_join(tid, nullptr);
    pthread_attr_destroy(&attr);
    if (call.error) std::rethrow_exception(call.error);
}

std::string read_stream(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw std::runtime_error("input read error");
    return ss.str();
}

std::string read_input_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_stream(in);
}

struct InputArgs {
    std::string file;
    std::optional<std::string> text;

    std::string load() const {
        if (text) return *text;
        if (!file.empty()) return read_input_file(file);
        return read_stream(std::cin);
    }
};

void add_input_options(CLI::App* cmd, InputArgs& args) {
    auto* f = cmd->add_option("-i,--input", args.file, "Input file (default: stdin)");
    auto* t = cmd->add_option("-t,--text", [&args](const std::vector<std::string>& vals) {
        args.text = vals.back();
        return true;
    }, "Input given directly on the command line");
    t->type_name("TEXT")->expected(1);
    f->excludes(t);
}

int cmd_check(const std::string& grammar_path, bool as_json) {
    sped::Grammar g = sped::load_grammar_file(grammar_path);
    sped::NullabilityTable nt = sped::compute_nullability(g);
    sped::WellFormedness wf = sped::check_well_formed(g);
    if (as_json) {
        json out;
        out["ok"] = wf.ok;
        out["start"] = g.start_name();
        json rules = json::array();
        for (const auto& [name, body] : g.rules()) {
            rules.push_back(json{{"name", name},
                                 {"nu", nt.rule_nu(name)},
                                 {"lambda", nt.rule_lambda(name)}});
        }
        out["rules"] = rules;
        json cycles = json::array();
        for (const auto& c : wf.cycles) cycles.push_back(c.names);
        out["cycles"] = cycles;
        std::cout << out.dump() << "\n";
    } else {
        std::cout << "rules: " << g.size() << "\n";
        std::cout << "start: " << g.start_name() << "\n";
        for (const auto& [name, body] : g.rules()) {
            std::cout << "  " << name << ": nu=" << (nt.rule_nu(name) ? "yes" : "no")
                      << " lambda=" << (nt.rule_lambda(name) ? "yes" : "no") << "\n";
        }
        if (wf.ok) {
            std::cout << "well formed: yes\n";
        } else {
            std::cout << "well formed: no\n";
            for (const auto& c : wf.cycles) {
                std::cout << "  left cycle: ";
                for (std::size_t i = 0; i < c.names.size(); ++i) {
                    if (i) std::cout << " -> ";
                    std::cout << c.names[i];
                }
                std::cout << "\n";
            }
        }
    }
    return wf.ok ? kExitOk : kExitNegative;
}

struct RunArgs {
    std::string grammar;
    InputArgs input;
    std::string backend = "sped";
    std::uint64_t fuel = 1'000'000;
    bool trace = false;
    bool validate = false;
    bool hash_cons = false;
};

json trace_record(const sped::StepRecord& r) {
    json line;
    line["step"] = r.step;
    if (r.symbol == -1) line["symbol"] = "#";
    else line["symbol"] = r.symbol;
    line["nodes_created"] = r.nodes_created;
    line["live_nodes"] = r.live_nodes;
    line["max_followers"] = r.max_followers;
    return line;
}

int cmd_run(const RunArgs& args) {
    sped::Grammar g = sped::load_grammar_file(args.grammar);
    json report;
    bool matched = false;

    if (args.backend == "oracle") {
        std::string input = args.input.load();
        sped::OracleResult r{};
        auto t0 = std::chrono::steady_clock::now();
        run_with_big_stack([&] {
            r = sped::oracle_match(g, input, sped::OracleLimits{args.fuel});
        });
        double elapsed = seconds_since(t0);
        matched = r.status == sped::OracleStatus::Rest;
        switch (r.status) {
        case sped::OracleStatus::Rest:
            report["verdict"] = "match";
            report["consumed_through"] = r.pos;
            break;
        case sped::OracleStatus::Failure: report["verdict"] = "no-match"; break;
        case sped::OracleStatus::FuelExhausted: report["verdict"] = "fuel-exhausted"; break;
        }
        report["backend"] = "oracle";
        report["input_length"] = input.size();
        report["elapsed_seconds"] = elapsed;
    } else {
        sped::RecognizeOptions opts;
        opts.engine.hash_cons = args.hash_cons;
        opts.validate = args.validate;
        opts.collect_stats = true;
        std::optional<sped::StepRecord> pending;
        if (args.trace) {
            opts.on_step = [&pending](const sped::StepRecord& r) {
                if (r.step == 0) return; // normalization has no input symbol
                if (pending) std::cerr << trace_record(*pending).dump() << "\n";
                pending = r;
            };
        }
        sped::RecognitionOutcome out;
        auto t0 = std::chrono::steady_clock::now();
        if (args.input.text) {
            out = sped::recognize(g, std::string_view(*args.input.text), opts);
        } else if (!args.input.file.empty()) {
            std::ifstream in(args.input.file, std::ios::binary);
            if (!in) throw std::runtime_error("cannot open " + args.input.file);
            out = sped::recognize(g, in, opts);
        } else {
            out = sped::recognize(g, std::cin, opts);
        }
        double elapsed = seconds_since(t0);
        if (pending) {
            json last = trace_record(*pending);
            last["outcome"] = out.matched ? "match" : "no-match";
            if (out.matched) last["consumed_through"] = out.consumed_through;
            std::cerr << last.dump() << "\n";
        }
        matched = out.matched;
        report["verdict"] = out.matched ? "match" : "no-match";
        if (out.matched) report["consumed_through"] = out.consumed_through;
        report["backend"] = "sped";
        report["input_length"] = out.input_length;
        report["elapsed_seconds"] = elapsed;
        report["peak_live_nodes"] = out.peak_live_nodes;
    }
    std::cout << report.dump() << "\n";
    return matched ? kExitOk : kExitNegative;
}

struct BenchArgs {
    std::string grammar;
    InputArgs input;
    std::string backend = "sped";
    std::uint64_t runs = 5;
    std::uint64_t fuel = 1'000'000;
};

int cmd_bench(const BenchArgs& args) {
    sped::Grammar g = sped::load_grammar_file(args.grammar);
    std::string input = args.input.load();
    std::vector<double> times;
    times.reserve(args.runs);
    bool matched = false;
    std::uint64_t max_live = 0;
    json report;
    if (args.backend == "oracle") {
        run_with_big_stack([&] {
            for (std::uint64_t i = 0; i < args.runs; ++i) {
                auto t0 = std::chrono::steady_clock::now();
                sped::OracleResult r = sped::oracle_match(g, input, sped::OracleLimits{args.fuel});
                times.push_back(seconds_since(t0));
                matched = r.status == sped::OracleStatus::Rest;
            }
        });
    } else {
        sped::RecognizeOptions plain;
        for (std::uint64_t i = 0; i < args.runs; ++i) {
            auto t0 = std::chrono::steady_clock::now();
            sped::RecognitionOutcome out = sped::recognize(g, std::string_view(input), plain);
            times.push_back(seconds_since(t0));
            matched = out.matched;
        }
        sped::RecognizeOptions with_stats;
        with_stats.collect_stats = true;
        max_live = sped::recognize(g, std::string_view(input), with_stats).peak_live_nodes;
    }
    std::sort(times.begin(), times.end());
    double median = times.empty() ? 0.0 : times[times.size() / 2];
    report["backend"] = args.backend;
    report["runs"] = args.runs;
    report["input_length"] = input.size();
    report["median_seconds"] = median;
    report["bytes_per_second"] = median > 0 ? static_cast<double>(input.size()) / median : 0.0;
    if (args.backend != "oracle") report["max_live_nodes"] = max_live;
    report["verdict"] = matched ? "match" : "no-match";
    std::cout << report.dump() << "\n";
    return kExitOk;
}

int cmd_fuzz(const sped::FuzzConfig& cfg) {
    sped::FuzzSummary sum = sped::run_fuzz(cfg);
    json out;
    out["seed"] = cfg.seed;
    out["requested"] = sum.requested;
    out["cases_run"] = sum.cases_run;
    out["agreements"] = sum.agreements;
    out["disagreements"] = sum.disagreements;
    out["violations"] = sum.violations;
    out["fuel_skips"] = sum.fuel_skips;
    out["fallback_grammars"] = sum.fallback_grammars;
    out["rejected_grammars"] = sum.rejected_grammars;
    out["seq_branch"] = sum.seq_branch;
    out["max_growth_ratio"] = sum.max_growth_ratio;
    out["elapsed_seconds"] = sum.elapsed_seconds;
    std::cout << out.dump() << "\n";
    std::uint64_t comparable = sum.cases_run - sum.fuel_skips;
    std::cout << sum.agreements << "/" << comparable << " agree";
    if (sum.fuel_skips) std::cout << " (" << sum.fuel_skips << " skipped on fuel)";
    std::cout << "\n";
    if (sum.first_failure) {
        const sped::FuzzFailure& f = *sum.first_failure;
        json fail;
        fail["case_index"] = f.case_index;
        fail["seed"] = f.seed;
        fail["kind"] = f.kind == sped::CaseOutcome::Disagree ? "disagreement" : "violation";
        fail["grammar"] = f.grammar_text;
        fail["input"] = printable(f.input);
        fail["input_bytes"] = byte_array(f.input);
        fail["engine"] = f.engine_answer;
        fail["oracle"] = f.oracle_answer;
        std::cerr << fail.dump() << "\n";
    }
    return sum.clean() ? kExitOk : kExitNegative;
}

int cmd_simplify(const std::string& grammar_path) {
    sped::Grammar g = sped::load_grammar_file(grammar_path);
    std::cout << g.canonical();
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PEG recognition by simplified parsing-expression derivatives"};
    app.require_subcommand(1);

    std::string check_grammar;
    bool check_json = false;
    auto* check = app.add_subcommand("check", "Analyze a grammar: nullability, well-formedness");
    check->add_option("-g,--grammar", check_grammar, "Grammar file")->required();
    check->add_flag("--json", check_json, "Machine-readable report");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Recognize one input");
    run->add_option("-g,--grammar", run_args.grammar, "Grammar file")->required();
    add_input_options(run, run_args.input);
    run->add_option("--backend", run_args.backend, "sped or oracle")
        ->check(CLI::IsMember({"sped", "oracle"}));
    run->add_option("--fuel", run_args.fuel, "Rule-expansion budget for the oracle backend");
    run->add_flag("--trace", run_args.trace, "Per-step records on stderr (sped backend)");
    run->add_flag("--validate", run_args.validate, "Check engine invariants at every step");
    run->add_flag("--hash-cons", run_args.hash_cons, "Intern identical nodes within a step");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Time repeated recognition of one input");
    bench->add_option("-g,--grammar", bench_args.grammar, "Grammar file")->required();
    add_input_options(bench, bench_args.input);
    bench->add_option("--backend", bench_args.backend, "sped or oracle")
        ->check(CLI::IsMember({"sped", "oracle"}));
    bench->add_option("--runs", bench_args.runs, "Repetitions (median is reported)")
        ->check(CLI::PositiveNumber);
    bench->add_option("--fuel", bench_args.fuel, "Rule-expansion budget for the oracle backend");

    sped::FuzzConfig fuzz_cfg;
    bool fuzz_no_minimize = false;
    auto* fuzz = app.add_subcommand("fuzz", "Differential test against the reference interpreter");
    fuzz->add_option("--seed", fuzz_cfg.seed, "Base seed");
    fuzz->add_option("--count", fuzz_cfg.count, "Number of cases");
    fuzz->add_option("--jobs", fuzz_cfg.jobs, "Worker threads (0 = hardware)");
    fuzz->add_option("--max-rules", fuzz_cfg.max_rules, "Rules per generated grammar");
    fuzz->add_option("--max-depth", fuzz_cfg.max_depth, "Expression depth");
    fuzz->add_option("--max-input", fuzz_cfg.max_input, "Input length");
    fuzz->add_option("--fuel", fuzz_cfg.fuel, "Oracle rule-expansion budget");
    fuzz->add_flag("--hash-cons", fuzz_cfg.hash_cons, "Intern identical nodes within a step");
    fuzz->add_flag("--stop-on-failure", fuzz_cfg.stop_at_first_failure,
                   "Stop scheduling new cases after the first failure");
    fuzz->add_flag("--no-minimize", fuzz_no_minimize, "Report the failing case unshrunk");
    fuzz->add_flag("--inject-follower-fault", fuzz_cfg.follower_on_second,
                   "Plant a known engine fault (harness self-test)");

    std::string simplify_grammar;
    auto* simplify = app.add_subcommand("simplify", "Print the simplified grammar");
    simplify->add_option("-g,--grammar", simplify_grammar, "Grammar file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    fuzz_cfg.minimize = !fuzz_no_minimize;

    try {
        if (check->parsed()) return cmd_check(check_grammar, check_json);
        if (run->parsed()) return cmd_run(run_args);
        if (bench->parsed()) return cmd_bench(bench_args);
        if (fuzz->parsed()) return cmd_fuzz(fuzz_cfg);
        if (simplify->parsed()) return cmd_simplify(simplify_grammar);
    } catch (const sped::grammar_error& e) {
        std::cerr << "grammar error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const sped::engine_error& e) {
        std::cerr << "engine invariant violation: " << e.what() << "\n";
        return kExitNegative;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kExitNegative;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
