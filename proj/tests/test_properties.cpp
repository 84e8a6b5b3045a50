#include <doctest.h>

#include <set>

#include "prop_support.hpp"

using namespace sped;

TEST_SUITE("properties") {

TEST_CASE("every property holds across two hundred draws") {
    for (const props::NamedProperty& p : props::all()) {
        CAPTURE(p.name);
        props::Result r = p.run(20260813, 200);
        CHECK(r.cases == 200);
        CHECK(r.checked > 0);
        for (const std::string& f : r.failures) {
            CAPTURE(f);
            CHECK(r.ok());
        }
        CHECK(r.failed == 0);
    }
}

TEST_CASE("properties are deterministic in their seed") {
    const props::NamedProperty& p = props::all().front();
    props::Result a = p.run(7, 50);
    props::Result b = p.run(7, 50);
    CHECK(a.cases == b.cases);
    CHECK(a.checked == b.checked);
    CHECK(a.skipped == b.skipped);
    CHECK(a.failed == b.failed);
}

TEST_CASE("the property list stays distinctly named") {
    std::set<std::string> names;
    for (const props::NamedProperty& p : props::all()) names.insert(p.name);
    CHECK(names.size() == props::all().size());
    CHECK(props::all().size() == 11);
}

} // TEST_SUITE
