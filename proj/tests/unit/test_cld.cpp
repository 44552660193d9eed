#include "helpers.hpp"

#include "mmskit/casestudy.hpp"
#include "mmskit/cld.hpp"
#include "mmskit/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace mmskit;
using namespace testing;

TEST_CASE("shipped CLD is valid and has 21 links") {
    const Cld cld = casestudy::case_cld();
    CHECK(validate_cld(cld).empty());
    CHECK(cld.links.size() == 21);
    for (int id = 1; id <= 21; ++id) CHECK(cld.link(id) != nullptr);
    CHECK(cld.factor("infectivity")->interval("governance") == nullptr);
    CHECK(cld.factor("infectivity")->interval("time")->constant);
}

TEST_CASE("empty CLD is valid") { CHECK(validate_cld(Cld{}).empty()); }

TEST_CASE("dangling link yields one violation naming the link") {
    Cld c = time_cld({factor("a", "day", "year")}, {link(7, "X", "a")});
    const auto r = validate_cld(c);
    REQUIRE(r.size() == 1);
    CHECK(r.violations[0].code == "dangling_link");
    CHECK(r.violations[0].subject == "link 7");
}

TEST_CASE("undeclared dimension and malformed interval are reported") {
    Factor f = factor("a", "year", "day");
    f.intervals["space"] = iv("m", "km");
    const auto r = validate_cld(time_cld({f}, {}));
    REQUIRE(r.size() == 2);
    std::vector<std::string> codes;
    for (const auto& v : r.violations) codes.push_back(v.code);
    CHECK(std::count(codes.begin(), codes.end(), "malformed_interval") == 1);
    CHECK(std::count(codes.begin(), codes.end(), "undeclared_dimension") == 1);
}

TEST_CASE("duplicate ids and unflagged self loops") {
    Cld c = time_cld({factor("a", "day", "year"), factor("a", "day", "day")}, {link(1, "a", "a"), link(1, "a", "a")});
    const auto r = validate_cld(c);
    std::set<std::string> codes;
    for (const auto& v : r.violations) codes.insert(v.code);
    CHECK(codes.count("factor_duplicate"));
    CHECK(codes.count("link_duplicate"));
    CHECK(codes.count("self_loop"));

    Cld ok = time_cld({factor("a", "day", "year")}, {link(1, "a", "a")});
    ok.links[0].allow_self_loop = true;
    CHECK(validate_cld(ok).empty());
}

TEST_CASE("validation is independent of declaration order") {
    Cld c = casestudy::case_cld();
    c.links.push_back(link(99, "nowhere", "infected"));
    c.factors[3].intervals["time"] = iv("decade", "day");
    const auto base = validate_cld(c);
    std::mt19937 gen(3);
    for (int i = 0; i < 5; ++i) {
        Cld shuffled = c;
        std::shuffle(shuffled.factors.begin(), shuffled.factors.end(), gen);
        std::shuffle(shuffled.links.begin(), shuffled.links.end(), gen);
        CHECK(validate_cld(shuffled) == base);
    }
    CHECK(validate_cld(c) == base);
}

TEST_CASE("two-factor loop with one negative link is balancing") {
    Cld c = time_cld({factor("a", "day", "year"), factor("b", "day", "year")}, {link(1, "a", "b"), link(2, "b", "a", false)});
    const auto s = find_loops(c);
    REQUIRE(s.loops.size() == 1);
    CHECK(s.loops[0].kind == LoopKind::balancing);
    CHECK(s.loops[0].factors == std::vector<std::string>{"a", "b"});
    CHECK(s.loops[0].link_ids == std::vector<int>{1, 2});

    // Flipping one polarity flips the classification.
    c.links[1].polarity = Polarity::positive;
    CHECK(find_loops(c).loops[0].kind == LoopKind::reinforcing);
}

TEST_CASE("acyclic chain has no loops") {
    Cld c = time_cld({factor("a", "day", "year"), factor("b", "day", "year"), factor("c", "day", "year")},
                     {link(1, "a", "b"), link(2, "b", "c")});
    const auto s = find_loops(c);
    CHECK(s.loops.empty());
    CHECK_FALSE(s.truncated);
}

TEST_CASE("skills and income loop in the shipped CLD is reinforcing") {
    const Cld cld = casestudy::case_cld();
    const auto s = find_loops(cld);
    auto it = std::find_if(s.loops.begin(), s.loops.end(), [](const Loop& l) {
        std::vector<int> ids = l.link_ids;
        std::sort(ids.begin(), ids.end());
        return ids == std::vector<int>{19, 20, 21};
    });
    REQUIRE(it != s.loops.end());
    CHECK(it->kind == LoopKind::reinforcing);

    // Classification agrees with the product of polarities for every loop.
    for (const auto& loop : s.loops) {
        int sign = 1;
        for (int id : loop.link_ids) sign *= cld.link(id)->polarity == Polarity::positive ? 1 : -1;
        CHECK((sign == 1) == (loop.kind == LoopKind::reinforcing));
    }
    CHECK_FALSE(s.truncated);
}

TEST_CASE("loop search reports truncation at the length cap") {
    std::vector<Factor> fs;
    std::vector<CausalLink> ls;
    for (int i = 0; i < 5; ++i) {
        fs.push_back(factor("f" + std::to_string(i), "day", "year"));
        ls.push_back(link(i + 1, "f" + std::to_string(i), "f" + std::to_string((i + 1) % 5)));
    }
    const Cld c = time_cld(fs, ls);
    CHECK(find_loops(c, 5).loops.size() == 1);
    const auto capped = find_loops(c, 4);
    CHECK(capped.loops.empty());
    CHECK(capped.truncated);
}

TEST_CASE("CLD JSON round trip and parse errors") {
    const Cld cld = casestudy::case_cld();
    CHECK(parse_cld(to_json(cld)) == cld);

    auto doc = to_json(cld);
    doc["links"][0]["polarity"] = "?";
    CHECK_THROWS_AS(parse_cld(doc), ParseError);
    try {
        parse_cld(doc);
    } catch (const ParseError& e) {
        CHECK(e.field() == "links[0].polarity");
    }
    doc = to_json(cld);
    doc["factors"][2]["intervals"]["time"] = nlohmann::json::array({"day"});
    CHECK_THROWS_AS(parse_cld(doc), ParseError);
}
