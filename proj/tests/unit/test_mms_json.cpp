#include "random_mms.hpp"

#include "mmskit/casestudy.hpp"
#include "mmskit/error.hpp"
#include "mmskit/mms_json.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace mmskit;

TEST_CASE("case MMS round trips") {
    const Mms m = casestudy::build_case_mms();
    const auto doc = serialize_mms(m);
    CHECK(doc["submodels"].size() == 2);
    CHECK(doc["mappers"].size() == 2);
    CHECK(doc["conduits"].size() == 2);
    CHECK(parse_mms(doc) == m);
    CHECK(parse_mms_text(dump_mms(m)) == m);
    CHECK(dump_mms(parse_mms_text(dump_mms(m))) == dump_mms(m));
}

TEST_CASE("empty MMS round trips") {
    const Mms m;
    const auto doc = serialize_mms(m);
    CHECK(doc["submodels"].is_array());
    CHECK(doc["submodels"].empty());
    CHECK(parse_mms(doc) == m);
}

TEST_CASE("random valid MMS documents round trip") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        CAPTURE(seed);
        const Mms m = testing::random_mms(seed);
        REQUIRE(validate_mms(m).empty());
        CHECK(parse_mms_text(dump_mms(m)) == m);
    }
}

TEST_CASE("unknown port kind names the field") {
    auto doc = serialize_mms(casestudy::build_case_mms());
    doc["submodels"][0]["ports"][1]["kind"] = "Q";
    try {
        parse_mms(doc);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.field() == "submodels[0].ports[1].kind");
        CHECK(std::string(e.what()).find("'Q'") != std::string::npos);
    }
}

TEST_CASE("other malformed documents") {
    CHECK_THROWS_AS(parse_mms(nlohmann::json::array()), ParseError);
    auto doc = serialize_mms(casestudy::build_case_mms());
    doc["conduits"][0]["template"] = "diagonal";
    CHECK_THROWS_AS(parse_mms(doc), ParseError);
    try {
        parse_mms_text("{\n  \"submodels\": [,]\n}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("shipped case document matches the builder") {
    std::ifstream in(MMSKIT_SOURCE_DIR "/data/school_closure_mms.json");
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == dump_mms(casestudy::build_case_mms()));
}
