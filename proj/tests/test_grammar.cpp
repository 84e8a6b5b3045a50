#include <doctest.h>

#include <set>

#include "sped/grammar.hpp"

using namespace sped;

namespace {

const ExprPtr& body(const Grammar& g, const char* name) { return g.rule(name); }

} // namespace

TEST_SUITE("grammar") {

TEST_CASE("expression factories and text form") {
    ExprPtr e = Expr::make_seq(Expr::make_char('a'),
                               Expr::make_alt(Expr::make_empty(), Expr::make_fail()));
    CHECK(e->kind() == ExprKind::Seq);
    CHECK(to_text(e) == "('a' ('' / FAIL))");
    CHECK(expr_size(e) == 5);
    CHECK(to_text(Expr::make_not(Expr::make_nonterm("A"))) == "!A");
    CHECK(to_text(Expr::make_char('\n')) == "'\\n'");
    CHECK(to_text(Expr::make_char('\'')) == "'\\''");
    CHECK(to_text(Expr::make_char(0x01)) == "'\\x01'");
}

TEST_CASE("structural equality ignores sharing") {
    ExprPtr a1 = Expr::make_seq(Expr::make_char('a'), Expr::make_char('b'));
    ExprPtr a2 = Expr::make_seq(Expr::make_char('a'), Expr::make_char('b'));
    CHECK(structurally_equal(a1, a2));
    CHECK_FALSE(structurally_equal(a1, Expr::make_seq(Expr::make_char('a'),
                                                      Expr::make_char('c'))));
}

TEST_CASE("sequence binds tighter than choice") {
    Grammar g = parse_grammar("S <- 'a' 'b' / 'c'");
    const ExprPtr& b = body(g, "S");
    REQUIRE(b->kind() == ExprKind::Alt);
    CHECK(b->first()->kind() == ExprKind::Seq);
    CHECK(b->second()->kind() == ExprKind::Char);
}

TEST_CASE("sequences and choices nest to the right") {
    Grammar g = parse_grammar("S <- 'a' 'b' 'c' / 'd' / 'e'");
    const ExprPtr& b = body(g, "S");
    REQUIRE(b->kind() == ExprKind::Alt);
    CHECK(b->second()->kind() == ExprKind::Alt);
    const ExprPtr& seq = b->first();
    REQUIRE(seq->kind() == ExprKind::Seq);
    CHECK(seq->second()->kind() == ExprKind::Seq);
}

TEST_CASE("positive lookahead is double negation") {
    Grammar g = parse_grammar("S <- &'a' 'a'");
    const ExprPtr& b = body(g, "S");
    ExprPtr expected = Expr::make_seq(
        Expr::make_not(Expr::make_not(Expr::make_char('a'))), Expr::make_char('a'));
    CHECK(structurally_equal(b, expected));
}

TEST_CASE("star becomes a fresh right-recursive rule") {
    LoadedGrammar lg = parse_grammar_full("S <- 'a'*");
    REQUIRE(lg.grammar.size() == 2);
    const ExprPtr& b = body(lg.grammar, "S");
    REQUIRE(b->kind() == ExprKind::Nonterm);
    std::string rep = b->name();
    CHECK(rep != "S");
    const ExprPtr& rb = lg.grammar.rule(rep);
    ExprPtr expected = Expr::make_alt(
        Expr::make_seq(Expr::make_char('a'), Expr::make_nonterm(rep)), Expr::make_empty());
    CHECK(structurally_equal(rb, expected));
}

TEST_CASE("plus is one occurrence followed by star") {
    Grammar g = parse_grammar("S <- 'a'+");
    const ExprPtr& b = body(g, "S");
    REQUIRE(b->kind() == ExprKind::Seq);
    CHECK(b->first()->kind() == ExprKind::Char);
    CHECK(b->second()->kind() == ExprKind::Nonterm);
}

TEST_CASE("option is a choice with empty") {
    Grammar g = parse_grammar("S <- 'a'? 'b'");
    const ExprPtr& b = body(g, "S");
    REQUIRE(b->kind() == ExprKind::Seq);
    ExprPtr expected = Expr::make_alt(Expr::make_char('a'), Expr::make_empty());
    CHECK(structurally_equal(b->first(), expected));
}

TEST_CASE("generated repetition names collide with nothing in the source") {
    LoadedGrammar lg = parse_grammar_full("Rep0 <- 'b' / 'a'*\nRep1 <- Rep0 'c'");
    std::set<std::string> names;
    for (const auto& [name, rb] : lg.grammar.rules()) names.insert(name);
    CHECK(names.size() == lg.grammar.size());
    bool found_generated = false;
    for (const auto& name : names) {
        if (name == "Rep0" || name == "Rep1") continue;
        found_generated = true;
        CHECK(std::string("Rep0 <- 'b' / 'a'*\nRep1 <- Rep0 'c'").find(name) ==
              std::string::npos);
    }
    CHECK(found_generated);
}

TEST_CASE("string literals expand to character sequences") {
    Grammar g = parse_grammar("S <- \"ab\"");
    ExprPtr expected = Expr::make_seq(Expr::make_char('a'), Expr::make_char('b'));
    CHECK(structurally_equal(body(g, "S"), expected));
    Grammar g1 = parse_grammar("S <- \"x\"");
    CHECK(body(g1, "S")->kind() == ExprKind::Char);
}

TEST_CASE("empty literal is the empty expression") {
    Grammar g = parse_grammar("S <- '' 'a'");
    // load-time simplification removes the empty prefix
    CHECK(body(g, "S")->kind() == ExprKind::Char);
}

TEST_CASE("character classes expand to ordered choices") {
    Grammar g = parse_grammar("S <- [abc]");
    ExprPtr expected = Expr::make_alt(
        Expr::make_char('a'), Expr::make_alt(Expr::make_char('b'), Expr::make_char('c')));
    CHECK(structurally_equal(body(g, "S"), expected));
    Grammar g1 = parse_grammar("S <- [0-2]");
    ExprPtr expected1 = Expr::make_alt(
        Expr::make_char('0'), Expr::make_alt(Expr::make_char('1'), Expr::make_char('2')));
    CHECK(structurally_equal(body(g1, "S"), expected1));
    Grammar g2 = parse_grammar("S <- [a]");
    CHECK(body(g2, "S")->kind() == ExprKind::Char);
    // a trailing dash is a plain byte
    Grammar g3 = parse_grammar("S <- [a-]");
    ExprPtr expected3 = Expr::make_alt(Expr::make_char('a'), Expr::make_char('-'));
    CHECK(structurally_equal(body(g3, "S"), expected3));
}

TEST_CASE("escapes in literals and classes") {
    Grammar g = parse_grammar(R"(S <- '\n' '\t' '\\' '\'' '\x41')");
    const Expr* e = body(g, "S").get();
    std::string bytes;
    while (e->kind() == ExprKind::Seq) {
        bytes.push_back(static_cast<char>(e->first()->byte()));
        e = e->second().get();
    }
    bytes.push_back(static_cast<char>(e->byte()));
    CHECK(bytes == "\n\t\\'A");
    Grammar g1 = parse_grammar(R"(S <- [\]a\x20])");
    ExprPtr expected = Expr::make_alt(
        Expr::make_char(']'), Expr::make_alt(Expr::make_char('a'), Expr::make_char(' ')));
    CHECK(structurally_equal(body(g1, "S"), expected));
}

TEST_CASE("FAIL keyword and dead-choice cleanup") {
    Grammar g = parse_grammar("S <- FAIL / 'a'");
    CHECK(body(g, "S")->kind() == ExprKind::Char);
    Grammar g1 = parse_grammar("S <- FAIL");
    CHECK(body(g1, "S")->kind() == ExprKind::Fail);
    CHECK(g1.start()->kind() == ExprKind::Fail);
}

TEST_CASE("comments and blank lines are skipped") {
    Grammar g = parse_grammar("# heading\n\nS <- 'a' # trailing\n  / 'b'\n# tail\n");
    CHECK(body(g, "S")->kind() == ExprKind::Alt);
}

TEST_CASE("start defaults to the first rule and obeys the directive") {
    Grammar g = parse_grammar("A <- 'a'\nB <- 'b'");
    CHECK(g.start_name() == "A");
    Grammar g1 = parse_grammar("A <- 'a'\nB <- 'b'\n%start B");
    CHECK(g1.start_name() == "B");
    REQUIRE(g1.start()->kind() == ExprKind::Nonterm);
    CHECK(g1.start()->name() == "B");
}

TEST_CASE("rule lookups") {
    Grammar g = parse_grammar("A <- 'a'\nB <- A");
    CHECK(g.has_rule("A"));
    CHECK_FALSE(g.has_rule("C"));
    CHECK(g.find("C") == nullptr);
    CHECK_THROWS_AS((void)g.rule("C"), grammar_error);
}

TEST_CASE("load errors carry positions") {
    CHECK_THROWS_AS((void)parse_grammar(""), grammar_error);
    CHECK_THROWS_AS((void)parse_grammar("S <- 'a' S <- 'b'"), grammar_error);
    CHECK_THROWS_AS((void)parse_grammar("S <- 'a'\nS <- 'b'"), grammar_error);
    CHECK_THROWS_AS((void)parse_grammar("S <- T"), grammar_error);
    CHECK_THROWS_AS((void)parse_grammar("S <- 'a"), grammar_error);
    CHECK_THROWS_AS((void)parse_grammar("S <- 'a' %start T"), grammar_error);
    CHECK_THROWS_AS((void)parse_grammar("S <- [b-a]"), grammar_error);
    CHECK_THROWS_AS((void)parse_grammar("S <- '\\q'"), grammar_error);
    CHECK_THROWS_AS((void)parse_grammar("FAIL <- 'a'"), grammar_error);
    CHECK_THROWS_AS((void)parse_grammar("S <- 'a'\n%start A\n%start S"), grammar_error);
    try {
        (void)parse_grammar("S <- 'a'\nT <- Missing");
        CHECK(false);
    } catch (const grammar_error& e) {
        CHECK(e.where().line == 2);
        CHECK(std::string(e.what()).find("Missing") != std::string::npos);
    }
}

TEST_CASE("explicit construction validates names") {
    RuleList rules;
    rules.emplace_back("A", Expr::make_char('a'));
    rules.emplace_back("A", Expr::make_char('b'));
    CHECK_THROWS_AS((void)Grammar::make(std::move(rules)), grammar_error);
    RuleList rules2;
    rules2.emplace_back("A", Expr::make_nonterm("B"));
    CHECK_THROWS_AS((void)Grammar::make(std::move(rules2)), grammar_error);
    RuleList rules3;
    rules3.emplace_back("A", Expr::make_char('a'));
    CHECK_THROWS_AS((void)Grammar::make(std::move(rules3), "Z"), grammar_error);
}

TEST_CASE("canonical text reparses to the same grammar") {
    const char* sources[] = {
        "S <- 'a' 'b' / 'c'",
        "S <- &( A !'b' ) 'a'+ B !Any\nA <- 'a' A? 'b'\nB <- 'b' B? 'c'\nAny <- 'a' / 'b' / 'c'",
        "A <- 'a'\nB <- 'b'\n%start B",
        "S <- [a-d]* '\\n'?",
    };
    for (const char* src : sources) {
        CAPTURE(src);
        Grammar g1 = parse_grammar(src);
        std::string c1 = g1.canonical();
        Grammar g2 = parse_grammar(c1);
        CHECK(c1 == g2.canonical());
        REQUIRE(g1.size() == g2.size());
        CHECK(g1.start_name() == g2.start_name());
        for (const auto& [name, rb] : g1.rules()) {
            CAPTURE(name);
            CHECK(structurally_equal(rb, g2.rule(name)));
        }
    }
}

TEST_CASE("grammar files load") {
    Grammar g = load_grammar_file(std::string(SPED_GRAMMARS_DIR) + "/choice3.peg");
    CHECK(g.start_name() == "S");
    CHECK_THROWS_AS((void)load_grammar_file("/nonexistent/x.peg"), grammar_error);
}

} // TEST_SUITE
