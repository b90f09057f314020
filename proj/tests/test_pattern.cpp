#include "support.hpp"
#include <doctest.h>

#include <set>

#include "pvota/error.hpp"
#include "pvota/pattern.hpp"

using namespace pvota;
using namespace pvota::pattern;
using taint::NodeKind;
using telemetry::Channel;
using telemetry::ChannelRecord;

namespace {

std::vector<telemetry::Value> ramp(double lo, double hi, int n) {
    std::vector<telemetry::Value> out;
    for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
    return out;
}

deviation::ModelSet uniform_models() {
    deviation::ModelSet m;
    m["angle"] = deviation::fit("angle", ramp(0, 100, 1000), 4);
    m["magnitude"] = deviation::fit("magnitude", ramp(0, 100, 1000), 4);
    return m;
}

telemetry::RecordStore triple(double d, double n, double a, std::int64_t dt = 10) {
    telemetry::RecordStore s;
    for (const char* var : {"angle", "magnitude"}) {
        s.records.push_back({var, Channel::d, 1000, d});
        s.records.push_back({var, Channel::n, 1000 + dt, n});
        s.records.push_back({var, Channel::a, 1000 + 2 * dt, a});
    }
    return s;
}

taint::NodeId add(taint::TaintGraph& g, const std::string& entity, int stmt, NodeKind kind) {
    auto id = g.add_node(entity, stmt);
    g.node(id).kind = kind;
    return id;
}

telemetry::EventSequence events(std::initializer_list<int> types) {
    telemetry::EventSequence out;
    int id = 0;
    for (int t : types) out.push_back({++id, t, std::nullopt, ""});
    return out;
}

} // namespace

TEST_CASE("every global triple is covered by exactly one pattern per direction") {
    for (int bits = 0; bits < 8; ++bits) {
        GlobalTriple t{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0};
        for (auto dir : {Direction::response, Direction::dispatch, Direction::unknown}) {
            int hits = 0;
            for (int p = 1; p <= 8; ++p) hits += covers(GlobalPattern(p), t, dir);
            CHECK(hits == 1);
        }
    }
    GlobalTriple c_i_y{true, false, true};
    CHECK(classify_triple(c_i_y, Direction::dispatch) == GlobalPattern::GPTN7);
    CHECK(classify_triple(c_i_y, Direction::response) == GlobalPattern::GPTN3);
    CHECK(classify_triple({true, false, false}, Direction::dispatch) == GlobalPattern::GPTN8);
    CHECK(classify_triple({false, false, true}, Direction::dispatch) == GlobalPattern::GPTN1);
    CHECK(classify_triple({true, true, false}, Direction::response) == GlobalPattern::GPTN6);
    CHECK(describe(definition(GlobalPattern::GPTN1)) == "<I_dn, C_na, Y>");
}

TEST_CASE("local pattern table") {
    for (auto kind : {ValueKind::F, ValueKind::S, ValueKind::Others})
        for (auto avail : {Availability::Logged, Availability::Estimated, Availability::None})
            for (bool ok : {true, false}) {
                int hits = 0;
                for (int p = 1; p <= 5; ++p) hits += covers(LocalPattern(p), kind, avail, ok);
                CHECK(hits == 1);
            }
    CHECK(classify_node(ValueKind::Others, Availability::Logged, false) == LocalPattern::LPTN5);
    CHECK(classify_node(ValueKind::F, Availability::None, false) == LocalPattern::LPTN4);
    CHECK(classify_node(ValueKind::F, Availability::Logged, true) == LocalPattern::LPTN1);
    CHECK(classify_node(ValueKind::S, Availability::Estimated, true) == LocalPattern::LPTN1);
    CHECK(classify_node(ValueKind::F, Availability::Logged, false) == LocalPattern::LPTN2);
    CHECK(classify_node(ValueKind::S, Availability::Logged, false) == LocalPattern::LPTN3);
    CHECK(parse_local("LPTN3") == LocalPattern::LPTN3);
    CHECK(parse_global("GPTN8") == GlobalPattern::GPTN8);
    CHECK_THROWS(parse_global("GPTN9"));
}

TEST_CASE("global matching on aligned channels") {
    auto models = uniform_models();
    auto cfg = MatchConfig::defaults();

    SUBCASE("consistent out-of-range values are a deviated fault") {
        auto r = match_global(triple(250, 250, 250), models, cfg);
        REQUIRE(r.matches.size() == 1);
        CHECK(r.matches[0].pattern == GlobalPattern::GPTN5);
        CHECK(r.matches[0].direction == Direction::response);
        CHECK(r.matches[0].scores.at("magnitude").degree == Degree::H);
    }
    SUBCASE("field and network disagree") {
        auto r = match_global(triple(50, 70, 70), models, cfg);
        REQUIRE(r.matches.size() == 1);
        CHECK(describe(r.matches[0].triple) == "<I_dn, C_na, N>");
        CHECK(r.matches[0].pattern == GlobalPattern::GPTN2);
    }
    SUBCASE("log disagrees on a dispatch") {
        auto r = match_global(triple(50, 50, 70, -10), models, cfg);
        REQUIRE(r.matches.size() == 1);
        CHECK(r.matches[0].direction == Direction::dispatch);
        CHECK(r.matches[0].pattern == GlobalPattern::GPTN8);
    }
    SUBCASE("relative tolerance absorbs rounding noise") {
        auto r = match_global(triple(50, 50 * (1 + 1e-12), 50), models, cfg);
        REQUIRE(r.matches.size() == 1);
        CHECK(r.matches[0].pattern == GlobalPattern::GPTN6);
    }
    SUBCASE("missing channel is reported, not matched") {
        auto s = triple(50, 50, 50);
        std::erase_if(s.records, [](const ChannelRecord& r) { return r.channel == Channel::a; });
        auto r = match_global(s, models, cfg);
        CHECK(r.matches.empty());
        CHECK(r.incomplete.size() == 1);
    }
}

TEST_CASE("path selection keeps the best-scoring paths") {
    taint::TaintGraph g;
    auto src = add(g, "fetch()", 0, NodeKind::Source);
    auto p = add(g, "p", 1, NodeKind::VirtualPhysical);
    auto x = add(g, "x", 2, NodeKind::Auxiliary);
    auto y = add(g, "y", 3, NodeKind::Auxiliary);
    auto snk = add(g, "send(x)", 4, NodeKind::Sink);
    g.add_edge(src, p, taint::EdgeLabel::Assign);
    g.add_edge(p, x, taint::EdgeLabel::Assign);
    g.add_edge(p, y, taint::EdgeLabel::Assign);
    g.add_edge(x, snk, taint::EdgeLabel::ArgPass);
    g.add_edge(y, snk, taint::EdgeLabel::ArgPass);
    taint::assign_labels(g);
    std::map<std::string, std::vector<int>> produce{{"p", {5}}, {"x", {10}}, {"y", {11}}, {"send(x)", {15}}};

    auto sel = select_paths(g, events({5, 10, 15}), produce);
    REQUIRE(sel.selected.size() == 1);
    CHECK(sel.selected[0].nodes == std::vector<taint::NodeId>{src, p, x, snk});
    CHECK(sel.selected[0].score == 3);
    CHECK(sel.excluded.size() == 1);
    CHECK(sel.matched_events() == std::vector<std::size_t>{0, 1, 2});

    SUBCASE("one node absorbs a run of repeated events") {
        auto s2 = select_paths(g, events({5, 5, 11, 15}), produce);
        REQUIRE(s2.selected.size() == 1);
        CHECK(s2.selected[0].nodes[2] == y);
        CHECK(s2.selected[0].score == 4);
    }
    SUBCASE("no producible event") {
        auto s3 = select_paths(g, events({7}), produce);
        CHECK(s3.no_match);
    }
    SUBCASE("analyst override") {
        const auto& ly = g.node(y).label;
        auto forced = forced_path(g, {g.node(src).label, g.node(p).label, ly, g.node(snk).label}, events({5, 10, 15}),
                                  produce);
        CHECK(forced.forced);
        REQUIRE(forced.selected.size() == 1);
        CHECK(forced.selected[0].score == 2);
        CHECK_THROWS_AS(forced_path(g, {g.node(src).label, g.node(x).label}, {}, produce), ConfigError);
        CHECK_THROWS_AS(forced_path(g, {"N99"}, {}, produce), ConfigError);
    }
}

TEST_CASE("event sequence rendering collapses repeats") {
    CHECK(format_sequence({1, 1, 3, 5, 10, 13, 15}) == "E1→E3→E5→E10→E13→E15");
    CHECK(format_sequence({}).empty());
}

TEST_CASE("match config round trip and threshold validation") {
    auto cfg = MatchConfig::defaults();
    cfg.window_ms = 250;
    auto back = MatchConfig::from_json(cfg.to_json());
    CHECK(back.window_ms == 250);
    CHECK(back.groups.size() == 1);
    CHECK(back.aliases.at("equipment_p_meas") == "magnitude");
    CHECK(back.node_events.at("forward_value") == std::vector<int>{10});
    CHECK_THROWS_AS(MatchConfig::from_json({{"tau_h", 0.3}, {"tau_m", 0.1}}), ConfigError);
}
