#include "support.hpp"
#include <doctest.h>

#include <sstream>

#include "pvota/error.hpp"
#include "pvota/telemetry.hpp"

using namespace pvota;
using namespace pvota::telemetry;

TEST_CASE("field CSV rows become sorted records") {
    std::istringstream in("timestamp_ms,variable,value\n"
                          "1200,magnitude,1972301.79\n"
                          "1000,angle,25.345\n");
    auto recs = parse_channel_csv(in, Channel::d);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].variable == "angle");
    CHECK(std::get<double>(recs[0].v) == 25.345);
    CHECK(recs[1].t == 1200);
    CHECK(std::get<double>(recs[1].v) == 1972301.79);
    CHECK(recs[1].channel == Channel::d);
}

TEST_CASE("empty channel file") {
    std::istringstream in("");
    CHECK(parse_channel_csv(in, Channel::n).empty());
}

TEST_CASE("channel schema errors") {
    std::istringstream bad_header("t,var,value\n1,a,2\n");
    CHECK_THROWS_AS(parse_channel_csv(bad_header, Channel::d), SchemaError);
    std::istringstream bad_ts("timestamp_ms,variable,value\nabc,a,2\n");
    CHECK_THROWS_AS(parse_channel_csv(bad_ts, Channel::d), SchemaError);
    std::istringstream dup("timestamp_ms,variable,value\n5,a,2\n5,a,3\n");
    CHECK_THROWS_AS(parse_channel_csv(dup, Channel::d), NonMonotoneTimestamp);
    std::istringstream mixed("timestamp_ms,variable,value\n5,a,2\n6,a,open\n");
    CHECK_THROWS_AS(parse_channel_csv(mixed, Channel::d), SchemaError);
}

TEST_CASE("channel CSV round trip") {
    std::string text = "timestamp_ms,variable,value\n"
                       "10,angle,30.7597\n"
                       "20,magnitude,1430307.59\n"
                       "30,status,\"OPEN, latched\"\n";
    std::istringstream in(text);
    std::ostringstream out;
    write_channel_csv(out, parse_channel_csv(in, Channel::n));
    CHECK(out.str() == text);
}

TEST_CASE("application log lines") {
    std::istringstream in("2024-03-01T10:00:00.250Z magnitude=1430307.59\n"
                          "connecting to platform\n"
                          "2024-03-01T10:00:00.300Z forward_diff={\"a\": 1}\n"
                          "2024-03-01T10:00:00.400+01:00 angle=30.7597\n");
    auto recs = parse_app_log(in);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].variable == "angle");
    CHECK(recs[1].variable == "magnitude");
    CHECK(recs[1].t == 1709287200250);
    CHECK(recs[0].t == recs[1].t - 3600000 + 150);
    CHECK(std::get<std::string>(recs[2].v) == "{\"a\": 1}");

    std::ostringstream out;
    write_app_log(out, recs);
    std::istringstream again(out.str());
    auto recs2 = parse_app_log(again);
    REQUIRE(recs2.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(recs2[i].t == recs[i].t);
        CHECK(recs2[i].v == recs[i].v);
    }
}

TEST_CASE("ISO8601 timestamps") {
    CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601("1970-01-01T00:00:01.5Z") == 1500);
    CHECK(parse_iso8601("2024-02-30T00:00:00Z") == std::nullopt);
    CHECK(parse_iso8601("yesterday") == std::nullopt);
    CHECK(format_iso8601(1709287200250) == "2024-03-01T10:00:00.250Z");
}

TEST_CASE("event sequence rows") {
    std::istringstream in("1, E1, 25.345, 'angle' sensing event\n"
                          "2, E1, 1972301.79, 'magnitude' sensing event\n"
                          "3, E3, , response fields inconsistent, see log\n");
    auto ev = parse_event_sequence(in);
    REQUIRE(ev.size() == 3);
    CHECK(ev[1].id == 2);
    CHECK(ev[1].type == 1);
    CHECK(std::get<double>(*ev[1].value) == 1972301.79);
    CHECK(ev[1].description == "'magnitude' sensing event");
    CHECK_FALSE(ev[2].value.has_value());
    CHECK(ev[2].description == "response fields inconsistent, see log");

    std::istringstream one("7, E15, , sent\n");
    CHECK(parse_event_sequence(one).size() == 1);

    std::istringstream order("3, E1, 1, a\n1, E2, 2, b\n");
    CHECK_THROWS_AS(parse_event_sequence(order), SchemaError);
    std::istringstream unknown("1, E16, 1, a\n");
    CHECK_THROWS_AS(parse_event_sequence(unknown), UnknownEventType);
}

TEST_CASE("baseline rows") {
    std::istringstream in("variable,value\nmagnitude,1200000\nmagnitude,1300000\nstate,OPEN\n");
    auto b = parse_baseline(in);
    CHECK(b.values.at("magnitude").size() == 2);
    CHECK(std::get<std::string>(b.values.at("state")[0]) == "OPEN");
}

TEST_CASE("alignment direction from timestamp order") {
    std::vector<ChannelRecord> recs{
        {"x", Channel::d, 100, 1.0}, {"x", Channel::n, 150, 1.0}, {"x", Channel::a, 200, 1.0},
        {"x", Channel::a, 5000, 2.0}, {"x", Channel::n, 5100, 2.0}, {"x", Channel::d, 5200, 2.0},
        {"x", Channel::a, 9000, 3.0},
        {"x", Channel::d, 12000, 4.0}, {"x", Channel::a, 12100, 4.0}, {"x", Channel::n, 12200, 4.0},
        {"y", Channel::d, 100, 9.0},
    };
    auto tr = align(recs, "x", 500);
    REQUIRE(tr.size() == 4);
    CHECK(tr[0].direction == Direction::response);
    CHECK(tr[0].complete());
    CHECK(tr[1].direction == Direction::dispatch);
    CHECK(tr[2].direction == Direction::unknown);
    CHECK_FALSE(tr[2].d.has_value());
    CHECK(tr[2].a.has_value());
    CHECK(tr[3].direction == Direction::unknown);
    CHECK(tr[3].flagged);

    std::vector<ChannelRecord> tie{{"x", Channel::d, 100, 1.0}, {"x", Channel::n, 100, 1.0}};
    auto t2 = align(tie, "x", 500);
    CHECK(t2[0].direction == Direction::unknown);
    CHECK_FALSE(t2[0].flagged);

    std::vector<ChannelRecord> amb{{"x", Channel::d, 100, 1.0}, {"x", Channel::d, 300, 1.0}};
    CHECK_THROWS_AS(align(amb, "x", 500), AmbiguousAlignment);
}

TEST_CASE("record store JSON round trip") {
    RecordStore s;
    s.records = {{"angle", Channel::d, 1, 25.345}, {"msg", Channel::a, 2, std::string("hi")}};
    s.baseline.values["angle"] = {Value{26.0}, Value{27.0}};
    s.events = {{1, 1, Value{25.345}, "sensing"}, {2, 15, std::nullopt, "sent"}};
    auto back = RecordStore::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    CHECK(back.app_value("msg") == Value{std::string("hi")});
    CHECK_FALSE(back.app_value("angle").has_value());
}
