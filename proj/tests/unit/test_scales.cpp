#include "helpers.hpp"

#include "mmskit/error.hpp"
#include "mmskit/mms.hpp"
#include "mmskit/scales.hpp"

#include <doctest.h>

#include <set>

using namespace mmskit;
using testing::iv;
using testing::time_dim;

namespace {

// Independent oracle: intervals as sets of level indices.
IntervalRelation relation_by_sets(std::size_t ag, std::size_t ae, std::size_t bg, std::size_t be) {
    std::set<std::size_t> a, b, both;
    for (auto i = ag; i <= ae; ++i) a.insert(i);
    for (auto i = bg; i <= be; ++i) b.insert(i);
    for (auto i : a) {
        if (b.count(i)) both.insert(i);
    }
    if (both.empty()) return IntervalRelation::separated;
    if (both.size() == 1) {
        const auto shared = *both.begin();
        if ((shared == *a.rbegin() && shared == *b.begin()) || (shared == *b.rbegin() && shared == *a.begin()))
            return IntervalRelation::contiguous;
    }
    return IntervalRelation::overlapping;
}

} // namespace

TEST_CASE("dimension level lookup") {
    const auto d = time_dim();
    CHECK(d.index_of("day") == 0u);
    CHECK(d.index_of("decade") == 4u);
    CHECK_FALSE(d.index_of("century").has_value());
    CHECK(d.has_level("month"));
}

TEST_CASE("interval well-formedness") {
    const auto d = time_dim();
    CHECK(check_interval(iv("day", "year"), d).empty());
    CHECK(check_interval(iv("year", "year"), d).empty());
    CHECK(check_interval(ScaleInterval::make_constant(), d).empty());
    CHECK_FALSE(check_interval(iv("year", "day"), d).empty());
    CHECK_FALSE(check_interval(iv("day", "century"), d).empty());
    ScaleInterval bad_constant{"day", "", true};
    CHECK_FALSE(check_interval(bad_constant, d).empty());
}

TEST_CASE("interval relations on named examples") {
    const auto d = time_dim();
    CHECK(interval_relation(iv("day", "year"), iv("year", "decade"), d) == IntervalRelation::contiguous);
    CHECK(interval_relation(iv("day", "day"), iv("year", "decade"), d) == IntervalRelation::separated);
    CHECK(interval_relation(iv("day", "decade"), iv("year", "decade"), d) == IntervalRelation::overlapping);
}

TEST_CASE("constant intervals have no relation") {
    const auto d = time_dim();
    CHECK_THROWS_WITH_AS(interval_relation(ScaleInterval::make_constant(), iv("day", "year"), d),
                         "relation undefined for constant intervals", Error);
    CHECK_THROWS_AS(interval_relation(iv("year", "day"), iv("day", "year"), d), Error);
}

TEST_CASE("interval relation matches the set oracle and is symmetric over every pair") {
    const auto d = time_dim();
    const auto n = d.levels.size();
    std::size_t pairs = 0;
    for (std::size_t ag = 0; ag < n; ++ag)
        for (std::size_t ae = ag; ae < n; ++ae)
            for (std::size_t bg = 0; bg < n; ++bg)
                for (std::size_t be = bg; be < n; ++be) {
                    const auto a = iv(d.levels[ag], d.levels[ae]);
                    const auto b = iv(d.levels[bg], d.levels[be]);
                    const auto r = interval_relation(a, b, d);
                    CHECK(r == relation_by_sets(ag, ae, bg, be));
                    CHECK(r == interval_relation(b, a, d));
                    CHECK(infer_coupling_template(a, b, d) == infer_coupling_template(b, a, d));
                    ++pairs;
                }
    CHECK(pairs == 225);
}

TEST_CASE("interval and relation names") {
    CHECK(to_string(iv("day", "year")) == "(day, year)");
    CHECK(to_string(ScaleInterval::make_constant()) == "(constant)");
    CHECK(to_string(IntervalRelation::contiguous) == "contiguous");
}
