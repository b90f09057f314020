#include "support.hpp"
#include <doctest.h>

#include "pvota/verdict.hpp"

using namespace pvota;
using namespace pvota::verdict;
using pattern::GlobalPattern;
using pattern::LocalMatch;
using pattern::LocalPattern;

namespace {

std::vector<LocalMatch> locals(std::initializer_list<std::pair<const char*, LocalPattern>> rows) {
    std::vector<LocalMatch> out;
    for (auto [label, p] : rows) {
        LocalMatch m;
        m.label = label;
        m.pattern = p;
        out.push_back(m);
    }
    return out;
}

std::string status_of(const Verdict& v, const std::string& rule) {
    for (const auto& r : v.reasoning)
        if (r.rule == rule) return r.status;
    return "";
}

} // namespace

TEST_CASE("system fault needs GPTN5 and no unexpected deviation") {
    auto v = classify({GlobalPattern::GPTN5},
                      locals({{"N1", LocalPattern::LPTN1}, {"N10", LocalPattern::LPTN4}, {"N19", LocalPattern::LPTN5}}),
                      {1, 3, 5, 10, 13, 15});
    CHECK(v.cause == Cause::SystemFault);
    CHECK(v.confidence == Confidence::conclusive);
    CHECK(!v.first_ued);
    CHECK(status_of(v, "R5") == "fired");
    CHECK(status_of(v, "R6") == "suppressed by R5");
    CHECK(exit_code(v.cause) == 10);
}

TEST_CASE("rule precedence") {
    auto benign = locals({{"N1", LocalPattern::LPTN1}});
    CHECK(classify({GlobalPattern::GPTN1}, benign, {}).cause == Cause::FDI);
    CHECK(classify({GlobalPattern::GPTN2, GlobalPattern::GPTN3}, benign, {}).cause == Cause::FDI);
    CHECK(classify({GlobalPattern::GPTN4}, benign, {}).cause == Cause::SuspectedAppLogManipulation);
    CHECK(classify({GlobalPattern::GPTN8}, benign, {}).cause == Cause::SuspectedDispatchManipulation);
    CHECK(classify({GlobalPattern::GPTN6}, benign, {}).cause == Cause::BenignOrInconclusive);
    CHECK(classify({}, {}, {}).cause == Cause::BenignOrInconclusive);

    auto mc = classify({GlobalPattern::GPTN5, GlobalPattern::GPTN1},
                       locals({{"N18", LocalPattern::LPTN2}, {"N21", LocalPattern::LPTN3}}), {});
    CHECK(mc.cause == Cause::MemoryCorruption);
    CHECK(status_of(mc, "R2") == "suppressed by R1");
    CHECK(status_of(mc, "R5") == "not applicable");
    CHECK(*mc.first_ued == "N18");
    CHECK(exit_code(mc.cause) == 12);
}

TEST_CASE("first unexpected deviation is the lowest label") {
    auto v = classify({}, locals({{"N21", LocalPattern::LPTN3}, {"N9", LocalPattern::LPTN1}, {"N17", LocalPattern::LPTN2}}),
                      {});
    CHECK(*v.first_ued == "N17");
    CHECK(v.local_summary.at(LocalPattern::LPTN3) == 1);
}

TEST_CASE("verdict JSON and report") {
    pattern::MatchLedger ledger;
    pattern::GlobalMatch g;
    g.group = "response";
    g.pattern = GlobalPattern::GPTN6;
    g.triple = {true, true, false};
    ledger.global.matches.push_back(g);
    ledger.local = locals({{"N17", LocalPattern::LPTN2}, {"N20", LocalPattern::LPTN3}, {"N21", LocalPattern::LPTN3}});
    ledger.event_sequence = {1, 1, 2, 6, 7, 11, 13, 15};
    auto v = classify(ledger);
    auto j = v.to_json();
    CHECK(j["cause"] == "MemoryCorruption");
    CHECK(j["event_chain"] == "E1→E2→E6→E7→E11→E13→E15");
    CHECK(j["matched_global"] == nlohmann::json{"GPTN6"});
    auto md = render_markdown(v, ledger);
    CHECK(md.find("MemoryCorruption") != std::string::npos);
    CHECK(md.find("| N20–N21 | LPTN3 |") != std::string::npos);
    CHECK(md.find("GPTN4") != std::string::npos);
    auto rj = render_json(v, ledger, "pruned.dot");
    CHECK(rj["graph"] == "pruned.dot");
    CHECK(rj["local_table"].size() == 2);
    CHECK(parse_cause("FDI") == Cause::FDI);
}
