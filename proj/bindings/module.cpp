#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sped/analysis.hpp"
#include "sped/engine.hpp"
#include "sped/fuzz.hpp"
#include "sped/grammar.hpp"
#include "sped/oracle.hpp"

namespace py = pybind11;

namespace {

// Thin grammar handle: parsing, analysis summaries, and both recognizers.
class PyGrammar {
public:
    explicit PyGrammar(sped::Grammar g) : g_(std::move(g)) {}

    std::string canonical() const { return g_.canonical(); }
    std::string start_name() const { return g_.start_name(); }

    std::vector<std::string> rule_names() const {
        std::vector<std::string> out;
        out.reserve(g_.size());
        for (const auto& [name, body] : g_.rules()) out.push_back(name);
        return out;
    }

    py::dict check() const {
        sped::WellFormedness wf = sped::check_well_formed(g_);
        sped::NullabilityTable nt = sped::compute_nullability(g_);
        py::list rules;
        for (const auto& [name, body] : g_.rules()) {
            py::dict r;
            r["name"] = name;
            r["nu"] = nt.rule_nu(name);
            r["lambda"] = nt.rule_lambda(name);
            rules.append(r);
        }
        py::list cycles;
        for (const auto& c : wf.cycles) cycles.append(c.names);
        py::dict out;
        out["ok"] = wf.ok;
        out["rules"] = rules;
        out["cycles"] = cycles;
        return out;
    }

    py::dict recognize(const std::string& data, bool validate, bool hash_cons) const {
        sped::RecognizeOptions opts;
        opts.engine.hash_cons = hash_cons;
        opts.validate = validate;
        opts.collect_stats = true;
        sped::RecognitionOutcome rec;
        {
            py::gil_scoped_release release;
            rec = sped::recognize(g_, std::string_view(data), opts);
        }
        py::dict out;
        out["matched"] = rec.matched;
        out["consumed_through"] =
            rec.matched ? py::object(py::int_(rec.consumed_through)) : py::none();
        out["input_length"] = rec.input_length;
        out["peak_live_nodes"] = rec.peak_live_nodes;
        out["nodes_created"] = rec.nodes_created;
        return out;
    }

    py::dict oracle(const std::string& data, std::uint64_t fuel) const {
        sped::OracleResult r;
        {
            py::gil_scoped_release release;
            r = sped::oracle_match(g_, std::string_view(data), sped::OracleLimits{fuel});
        }
        py::dict out;
        switch (r.status) {
        case sped::OracleStatus::Rest:
            out["status"] = "match";
            out["consumed_through"] = r.pos;
            break;
        case sped::OracleStatus::Failure:
            out["status"] = "no-match";
            break;
        case sped::OracleStatus::FuelExhausted:
            out["status"] = "fuel-exhausted";
            break;
        }
        return out;
    }

private:
    sped::Grammar g_;
};

py::dict summary_dict(const sped::FuzzSummary& sum) {
    py::dict out;
    out["requested"] = sum.requested;
    out["cases_run"] = sum.cases_run;
    out["agreements"] = sum.agreements;
    out["disagreements"] = sum.disagreements;
    out["violations"] = sum.violations;
    out["fuel_skips"] = sum.fuel_skips;
    out["seq_branch"] = sum.seq_branch;
    out["max_growth_ratio"] = sum.max_growth_ratio;
    out["elapsed_seconds"] = sum.elapsed_seconds;
    out["clean"] = sum.clean();
    if (sum.first_failure) {
        py::dict f;
        f["case_index"] = sum.first_failure->case_index;
        f["seed"] = sum.first_failure->seed;
        f["grammar"] = sum.first_failure->grammar_text;
        f["input"] = py::bytes(sum.first_failure->input);
        f["engine"] = sum.first_failure->engine_answer;
        f["oracle"] = sum.first_failure->oracle_answer;
        out["first_failure"] = f;
    } else {
        out["first_failure"] = py::none();
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_sped, m) {
    m.doc() = "PEG recognition by simplified derivatives, with a reference interpreter";

    py::register_exception<sped::grammar_error>(m, "GrammarError", PyExc_ValueError);
    py::register_exception<sped::engine_error>(m, "EngineError", PyExc_RuntimeError);

    py::class_<PyGrammar>(m, "Grammar")
        .def("canonical", &PyGrammar::canonical)
        .def("start_name", &PyGrammar::start_name)
        .def("rule_names", &PyGrammar::rule_names)
        .def("check", &PyGrammar::check)
        .def("recognize", &PyGrammar::recognize, py::arg("data"),
             py::arg("validate") = false, py::arg("hash_cons") = false)
        .def("oracle", &PyGrammar::oracle, py::arg("data"),
             py::arg("fuel") = std::uint64_t{1'000'000});

    m.def("parse", [](const std::string& text) { return PyGrammar(sped::parse_grammar(text)); },
          py::arg("text"));
    m.def("load", [](const std::string& path) { return PyGrammar(sped::load_grammar_file(path)); },
          py::arg("path"));
    m.def("simplify_text",
          [](const std::string& text) { return sped::parse_grammar(text).canonical(); },
          py::arg("text"));
    m.def(
        "fuzz_run",
        [](std::uint64_t seed, std::uint64_t count, std::uint32_t jobs, std::uint32_t max_rules,
           std::uint32_t max_depth, std::uint32_t max_input, std::uint64_t fuel) {
            sped::FuzzConfig cfg;
            cfg.seed = seed;
            cfg.count = count;
            cfg.jobs = jobs;
            cfg.max_rules = max_rules;
            cfg.max_depth = max_depth;
            cfg.max_input = max_input;
            cfg.fuel = fuel;
            sped::FuzzSummary sum;
            {
                py::gil_scoped_release release;
                sum = sped::run_fuzz(cfg);
            }
            return summary_dict(sum);
        },
        py::arg("seed") = 1, py::arg("count") = 1000, py::arg("jobs") = 0,
        py::arg("max_rules") = 6, py::arg("max_depth") = 5, py::arg("max_input") = 12,
        py::arg("fuel") = std::uint64_t{1'000'000});
}
