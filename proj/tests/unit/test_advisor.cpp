#include "mmskit/advisor.hpp"

#include <doctest.h>

#include <algorithm>

using namespace mmskit;

namespace {

bool cites_table(const ParadigmAdvice& a) {
    const auto& rows = paradigm_criteria_rows();
    return !a.rationale.empty() && std::all_of(a.rationale.begin(), a.rationale.end(), [&](const RationaleRow& r) {
               return std::find(rows.begin(), rows.end(), r.criterion) != rows.end();
           });
}

} // namespace

TEST_CASE("agent-based case: heterogeneous, networked, discrete, micro data") {
    ParadigmCriteria c;
    c.heterogeneity = Level::high;
    c.mixing = Mixing::networked;
    c.discreteness_matters = true;
    c.data_level = DataLevel::micro;
    const auto a = advise_paradigm(c);
    CHECK(a.recommendation == Paradigm::agent_based);
    CHECK(a.agent_score == 4);
    CHECK(cites_table(a));
}

TEST_CASE("stock-flow cases: aggregate, well mixed") {
    ParadigmCriteria c;
    c.time_budget = TimeBudget::tight;
    const auto tight = advise_paradigm(c);
    CHECK(tight.recommendation == Paradigm::stock_flow);
    CHECK(tight.agent_score == 0);
    CHECK(cites_table(tight));

    c.time_budget = TimeBudget::ample;
    const auto ample = advise_paradigm(c);
    CHECK(ample.recommendation == Paradigm::stock_flow);
    CHECK(ample.stock_score == 1);
}

TEST_CASE("ties follow the time budget") {
    ParadigmCriteria c;
    c.data_level = DataLevel::micro; // one agent-side rule
    c.time_budget = TimeBudget::tight; // one stock-side rule
    CHECK(advise_paradigm(c).recommendation == Paradigm::stock_flow);
    c.time_budget = TimeBudget::ample;
    CHECK(advise_paradigm(c).recommendation == Paradigm::agent_based);
}

TEST_CASE("a known threshold removes the discreteness argument") {
    ParadigmCriteria c;
    c.discreteness_matters = true;
    c.threshold_known = true;
    const auto a = advise_paradigm(c);
    CHECK(a.agent_score == 0);
    CHECK(a.recommendation == Paradigm::stock_flow);
}

TEST_CASE("advice is a pure function of the criteria") {
    for (int bits = 0; bits < 128; ++bits) {
        ParadigmCriteria c;
        c.heterogeneity = (bits & 1) ? Level::high : Level::low;
        c.mixing = (bits & 2) ? Mixing::networked : Mixing::well_mixed;
        c.adaptive_behavior = bits & 4;
        c.discreteness_matters = bits & 8;
        c.data_level = (bits & 16) ? DataLevel::micro : DataLevel::macro;
        c.time_budget = (bits & 32) ? TimeBudget::tight : TimeBudget::ample;
        c.threshold_known = bits & 64;
        const auto a = advise_paradigm(c);
        CHECK(a == advise_paradigm(c));
        CHECK(a.agent_score + a.stock_score == static_cast<int>(a.rationale.size()));
        CHECK(cites_table(a));
    }
}
