#include "support.hpp"
#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "pvota/error.hpp"
#include "pvota/fixture.hpp"
#include "pvota/pipeline.hpp"

using namespace pvota;
namespace fs = std::filesystem;

namespace {

std::string case_dir(int id) { return std::string(PVOTA_FIXTURE_DIR) + "/case" + std::to_string(id); }

RunConfig case_config(int id) { return RunConfig::load(case_dir(id) + "/config.json"); }

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("pvota_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct Expected {
    verdict::Cause cause;
    pattern::GlobalPattern global;
    const char* chain;
};

} // namespace

namespace std {
inline ostream& operator<<(ostream& os, pvota::pattern::GlobalPattern p) { return os << pvota::pattern::to_string(p); }
} // namespace std

TEST_CASE("reference cases reproduce their verdicts") {
    const Expected want[] = {
        {verdict::Cause::SystemFault, pattern::GlobalPattern::GPTN5, "E1→E3→E5→E10→E13→E15"},
        {verdict::Cause::FDI, pattern::GlobalPattern::GPTN1, "E1→E3→E5→E10→E13→E15"},
        {verdict::Cause::MemoryCorruption, pattern::GlobalPattern::GPTN6, "E1→E2→E6→E7→E11→E13→E15"},
        {verdict::Cause::MemoryCorruption, pattern::GlobalPattern::GPTN5, "E1→E3→E5→E10→E13→E15"},
    };
    for (int id = 1; id <= 4; ++id) {
        CAPTURE(id);
        auto t0 = std::chrono::steady_clock::now();
        auto a = run_pipeline(case_config(id));
        auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto& w = want[id - 1];
        CHECK(a.verdict.cause == w.cause);
        CHECK(a.verdict.matched_global == std::vector<pattern::GlobalPattern>{w.global});
        CHECK(pattern::format_sequence(a.verdict.event_sequence) == w.chain);
        CHECK(a.prune_report.before_count == 57);
        CHECK(a.prune_report.after_count == 41);
        CHECK(secs < 5.0);
    }
}

TEST_CASE("case details") {
    auto by_label = [](const RunArtifacts& a) {
        std::map<std::string, pattern::LocalPattern> m;
        for (const auto& l : a.ledger.local) m[l.label] = l.pattern;
        return m;
    };
    auto c1 = run_pipeline(case_config(1));
    auto l1 = by_label(c1);
    for (const char* n : {"N2", "N5", "N9"}) CHECK(l1.at(n) == pattern::LocalPattern::LPTN1);
    for (const char* n : {"N10", "N11", "N12", "N14", "N16"}) CHECK(l1.at(n) == pattern::LocalPattern::LPTN4);
    CHECK(c1.verdict.local_summary.count(pattern::LocalPattern::LPTN2) == 0);
    CHECK(c1.verdict.local_summary.count(pattern::LocalPattern::LPTN3) == 0);

    auto c3 = run_pipeline(case_config(3));
    auto l3 = by_label(c3);
    CHECK(l3.at("N17") == pattern::LocalPattern::LPTN2);
    CHECK(c3.verdict.local_summary.at(pattern::LocalPattern::LPTN3) > 1);
    CHECK(*c3.verdict.first_ued == "N17");

    auto c4 = run_pipeline(case_config(4));
    CHECK(by_label(c4).at("N18") == pattern::LocalPattern::LPTN2);
}

TEST_CASE("fixture baselines place the case values in the stated bins") {
    auto a = run_pipeline(case_config(2));
    const auto& g = a.ledger.global.matches.at(0);
    CHECK(g.scores.at("magnitude").degree == deviation::Degree::M);
    const auto& angle = a.models.at("angle");
    auto largest = std::max_element(angle.counts.begin(), angle.counts.end()) - angle.counts.begin();
    CHECK(g.scores.at("angle").bin == std::optional<std::size_t>(largest));

    auto c1 = run_pipeline(case_config(1));
    CHECK(!c1.ledger.global.matches.at(0).scores.at("magnitude").bin);
    CHECK(c1.ledger.global.matches.at(0).scores.at("magnitude").degree == deviation::Degree::H);
}

TEST_CASE("fixture generation is deterministic and matches the shipped files") {
    for (int id = 1; id <= 4; ++id) {
        CAPTURE(id);
        auto a = fixture::generate(id);
        CHECK(a == fixture::generate(id));
        for (const auto& [name, text] : a) {
            std::ifstream in(case_dir(id) + "/" + name, std::ios::binary);
            std::string shipped((std::istreambuf_iterator<char>(in)), {});
            CHECK_MESSAGE(shipped == text, name);
        }
    }
    CHECK(fixture::generate(1, 7) != fixture::generate(1, 8));
    CHECK(fixture::generate(1).at("field.csv").find("1972301.79") != std::string::npos);
    auto c4 = fixture::generate(4);
    for (const char* f : {"field.csv", "network.csv", "app.log"}) CHECK(c4.at(f).find("1243590.094") != std::string::npos);
    CHECK_THROWS_AS(fixture::generate(5), ConfigError);
}

TEST_CASE("stages run standalone on serialized artifacts") {
    auto cfg = case_config(3);
    auto full = run_pipeline(cfg);

    auto graph = taint::graph_from_json(nlohmann::json::parse(taint::to_json(full.graph).dump()));
    auto [pruned, report] = simplify::simplify(graph, cfg.prune);
    taint::assign_labels(pruned);
    CHECK(report.after_count == 41);
    auto store = telemetry::RecordStore::from_json(nlohmann::json::parse(full.store.to_json().dump()));
    auto models = deviation::fit_all(store.baseline, cfg.fit);
    auto ledger = pattern::match_all(pruned, store, models, cfg.match, cfg.path);
    auto back = pattern::MatchLedger::from_json(nlohmann::json::parse(ledger.to_json().dump()));
    auto v = verdict::classify(back);
    CHECK(v.to_json() == full.verdict.to_json());
    CHECK(verdict::render_json(v, back).dump() == verdict::render_json(full.verdict, full.ledger).dump());
}

TEST_CASE("analyst path override") {
    auto cfg = case_config(1);
    auto plain = run_pipeline(cfg);
    REQUIRE(plain.ledger.selection.selected.size() > 1);
    for (auto id : plain.ledger.selection.selected.back().nodes) cfg.path.push_back(plain.pruned.node(id).label);
    auto a = run_pipeline(cfg);
    CHECK(a.ledger.selection.forced);
    CHECK(a.ledger.local.size() == cfg.path.size());
    CHECK(a.verdict.cause == verdict::Cause::SystemFault);
    cfg.path = {"N0", "N27"};
    CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
}

TEST_CASE("configuration validation") {
    auto dir = scratch("config");
    fixture::write(fixture::generate(1, 20240601, std::string(PVOTA_FIXTURE_DIR) + "/soap_server.der"), dir.string());
    auto cfg = RunConfig::load(dir / "config.json");
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.field == (dir / "field.csv").string());

    auto bad = cfg;
    bad.match.thresholds.tau_m = 0.01;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.events = (dir / "missing.csv").string();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.baseline = cfg.field;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::load(dir / "nope.json"), ConfigError);

    auto back = RunConfig::from_json(cfg.to_json());
    CHECK(back.sources == cfg.sources);
    CHECK(back.fit.bins == 20);
    CHECK(back.match.thresholds.tau_l == doctest::Approx(0.25));
}

TEST_CASE("stage errors carry the stage name") {
    auto dir = scratch("errors");
    fixture::write(fixture::generate(1, 20240601, std::string(PVOTA_FIXTURE_DIR) + "/soap_server.der"), dir.string());
    auto cfg = RunConfig::load(dir / "config.json");

    std::ofstream(dir / "events.csv") << "1, E1, 3.0, ok\n2, E99, , bad type\n";
    try {
        run_pipeline(cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.stage() == "ingest");
    }

    cfg.p_vars = {"no_such_variable"};
    try {
        run_pipeline(cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.stage() == "graph");
    }
}
