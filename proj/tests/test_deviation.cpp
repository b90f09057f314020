#include "support.hpp"
#include <doctest.h>

#include "pvota/deviation.hpp"
#include "pvota/error.hpp"

using namespace pvota;
using namespace pvota::deviation;

namespace {

std::vector<Value> nums(std::initializer_list<double> xs) {
    std::vector<Value> out;
    for (double x : xs) out.emplace_back(x);
    return out;
}

} // namespace

TEST_CASE("three bin histogram counted by hand") {
    auto m = fit("x", nums({1, 1, 2, 2, 2, 3}), 3, 1);
    REQUIRE(m.bins() == 3);
    CHECK(m.counts == std::vector<std::size_t>{2, 3, 1});
    CHECK(m.ratios[0] == doctest::Approx(1.0 / 3));
    CHECK(m.ratios[1] == doctest::Approx(0.5));
    CHECK(m.ratios[2] == doctest::Approx(1.0 / 6));
}

TEST_CASE("identical baseline occupies a single bin") {
    std::vector<Value> vals(40, Value{5.0});
    auto m = fit("x", vals, 20);
    std::size_t occupied = 0;
    for (double p : m.ratios)
        if (p > 0) {
            ++occupied;
            CHECK(p == 1.0);
        }
    CHECK(occupied == 1);
    CHECK(score(m, 5.0).degree == Degree::None);
    CHECK(score(m, 6.0).degree == Degree::H);
}

TEST_CASE("string baseline is a membership set") {
    std::vector<Value> vals{std::string("OPEN"), std::string("CLOSE"), std::string("OPEN")};
    auto m = fit("state", vals);
    CHECK_FALSE(m.numeric);
    CHECK(m.strings.size() == 2);
    CHECK(m.edges.empty());
    CHECK(score(m, std::string("OPEN")).degree == Degree::None);
    auto s = score(m, std::string("TRIP"));
    CHECK(s.deviated);
    CHECK(s.degree == Degree::H);
    CHECK_THROWS_AS(score(m, 1.0), TypeMismatch);
}

TEST_CASE("too few samples") {
    CHECK_THROWS_AS(fit("x", nums({1, 2, 3}), 20, 30), InsufficientBaseline);
}

TEST_CASE("threshold ladder") {
    Thresholds th;
    CHECK(degree_for(0.0, th) == Degree::H);
    CHECK(degree_for(0.019, th) == Degree::H);
    CHECK(degree_for(0.02, th) == Degree::M);
    CHECK(degree_for(0.0999, th) == Degree::M);
    CHECK(degree_for(0.10, th) == Degree::L);
    CHECK(degree_for(0.2499, th) == Degree::L);
    CHECK(degree_for(0.25, th) == Degree::None);
    Thresholds bad{0.2, 0.1, 0.3};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("bin boundaries") {
    // 10 values per bin over [0, 40) with 4 bins of width 10.
    std::vector<Value> vals;
    for (int b = 0; b < 4; ++b)
        for (int k = 0; k < 10; ++k) vals.emplace_back(b * 10.0 + k);
    vals.emplace_back(40.0);
    auto m = fit("x", vals, 4, 1);
    CHECK(m.locate(0.0) == 0u);
    CHECK(m.locate(10.0) == 1u);
    CHECK(m.locate(40.0) == 3u);
    CHECK(m.locate(40.0001) == std::nullopt);
    CHECK(m.locate(-0.0001) == std::nullopt);
    auto out = score(m, 41.0);
    CHECK(out.deviated);
    CHECK(out.degree == Degree::H);
    CHECK_FALSE(out.bin.has_value());
}

TEST_CASE("model JSON round trip") {
    auto m = fit("x", nums({1, 1, 2, 2, 2, 3}), 3, 1);
    auto back = DeviationModel::from_json(m.to_json());
    CHECK(back.to_json() == m.to_json());
    CHECK(back.edges == m.edges);
    telemetry::BaselineStore b;
    b.values["x"] = nums({1, 1, 2, 2, 2, 3});
    FitOptions opts;
    opts.min_samples = 1;
    opts.bins_per_variable["x"] = 3;
    auto set = fit_all(b, opts);
    CHECK(set.at("x").bins() == 3);
    CHECK(to_json(models_from_json(to_json(set))) == to_json(set));
}
