"""End-to-end checks of the Python surface: parse, analyze, recognize with
both backends, round-trip canonical text, and run a short differential
campaign."""

import pytest

import sped


def test_parse_and_recognize():
    g = sped.parse("S <- 'a' 'b'")
    r = g.recognize(b"ab")
    assert r["matched"] is True
    assert r["consumed_through"] == 2
    assert r["input_length"] == 2
    assert r["peak_live_nodes"] >= 1


def test_prefix_match_reports_consumed_length():
    g = sped.parse('S <- "foo" / "bar"')
    r = g.recognize(b"foobar")
    assert r["matched"] is True
    assert r["consumed_through"] == 3


def test_no_match_has_no_consumed_length():
    g = sped.parse("S <- 'a' 'b'")
    r = g.recognize(b"ax")
    assert r["matched"] is False
    assert r["consumed_through"] is None


def test_backends_agree():
    g = sped.parse("S <- 'a' S 'b' / ''")
    for data in [b"", b"ab", b"aabb", b"aab", b"ba"]:
        engine = g.recognize(data)
        oracle = g.oracle(data)
        if engine["matched"]:
            assert oracle["status"] == "match"
            assert oracle["consumed_through"] == engine["consumed_through"]
        else:
            assert oracle["status"] == "no-match"


def test_check_reports_nullability_and_cycles():
    ok = sped.parse("S <- 'a'*")
    report = ok.check()
    assert report["ok"] is True
    assert report["cycles"] == []

    looped = sped.parse("A <- A 'x'")
    report = looped.check()
    assert report["ok"] is False
    assert any("A" in cycle for cycle in report["cycles"])


def test_canonical_text_round_trips():
    g = sped.parse("S <- 'a' ('b' / 'c')* !'d'")
    text = g.canonical()
    assert sped.parse(text).canonical() == text


def test_simplify_rewrites_dead_branches():
    assert sped.simplify_text("S <- '' 'a' / FAIL") == "S <- 'a'\n"


def test_syntax_errors_raise():
    with pytest.raises(sped.GrammarError):
        sped.parse("S <- ???")


def test_short_campaign_runs_clean():
    summary = sped.fuzz_run(seed=5, count=50)
    assert summary["clean"] is True
    assert summary["cases_run"] == 50
    assert summary["disagreements"] == 0
    assert summary["violations"] == 0
    assert summary["first_failure"] is None
