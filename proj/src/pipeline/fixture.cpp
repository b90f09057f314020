#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pvota/error.hpp"
#include "pvota/fixture.hpp"
#include "pvota/telemetry.hpp"

namespace pvota::fixture {

namespace {

using telemetry::Channel;
using telemetry::ChannelRecord;
using telemetry::EventInstance;
using telemetry::Value;

// std distributions differ between standard libraries; these do not.
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double unit() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(unit() * static_cast<double>(n)); }
};

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

struct Histogram {
    const char* variable;
    double lo, hi;
    std::array<int, 20> counts;
};

constexpr std::array<int, 20> kMagnitudeCounts{5, 10, 20, 40, 60, 70, 50, 90, 300, 150,
                                               80, 40, 30, 20, 15, 10, 5, 3, 1, 1};
constexpr std::array<int, 20> kAngleCounts{30, 40, 60, 90, 120, 300, 135, 90, 40, 25,
                                           20, 30, 5, 4, 3, 2, 2, 1, 1, 2};

const std::array<Histogram, 4> kHistograms{{
    {"magnitude", 1.0e6, 1.75e6, kMagnitudeCounts},
    {"angle", 25.0, 45.0, kAngleCounts},
    {"forward_value", 900.0, 1300.0, kMagnitudeCounts},
    {"reverse_value", 900.0, 1300.0, kMagnitudeCounts},
}};

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

std::vector<double> sample(const Histogram& h, Rng& rng) {
    double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    std::vector<double> out;
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        double lo = h.lo + width * static_cast<double>(b);
        for (int k = 0; k < h.counts[b]; ++k) {
            double v = round3(lo + rng.unit() * width);
            if (v >= lo + width) v = round3(lo + width - 0.001);
            if (v < lo) v = lo;
            out.push_back(v);
        }
    }
    out[0] = h.lo;
    out.back() = h.hi;
    shuffle(out, rng);
    return out;
}

std::string num(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

struct Messages {
    std::string forward_diff, reverse_diff, difference_message, input_msg, envelope, message;
};

std::string diff_entry(double v) {
    return R"([{"object": "_7A02B4D1", "attribute": "RegulatingControl.targetValue", "value": )" + num(v) + "}]";
}

Messages render(double forward, double reverse) {
    Messages m;
    m.forward_diff = diff_entry(forward);
    m.reverse_diff = diff_entry(reverse);
    m.difference_message =
        R"({"forward_differences": )" + m.forward_diff + R"(, "reverse_differences": )" + m.reverse_diff + "}";
    m.input_msg = R"({"simulation_id": "sim-1042", "message": )" + m.difference_message + "}";
    m.envelope = R"({"command": "update", "input": )" + m.input_msg + "}";
    m.message = m.envelope;
    return m;
}

struct CaseSpec {
    double d_magnitude, d_angle;
    double n_magnitude, n_angle;
    double forward, reverse;
    std::vector<std::tuple<int, std::string, std::string>> events;  // type, value, description
};

CaseSpec spec_for(int id) {
    switch (id) {
    case 1:
        return {1972301.79, 25.345, 1972301.79, 25.345, 1412.5, 1385.0,
                {{1, "25.345", "'angle' sensing event"},
                 {1, "1972301.79", "'magnitude' sensing event"},
                 {3, "1972301.79", "'magnitude' in response_obj deviates from its profile"},
                 {5, "1972301.79", "'equipment_p_meas' carries the deviated measurement"},
                 {10, "1412.5", "'forward_value' outside its profile"},
                 {13, "", "difference message differs from its profile"},
                 {15, "", "'message' sent to the physical side"}}};
    case 2:
        return {1156739.528, 30.7597, 1430307.59, 30.7597, 990.0, 1030.0,
                {{1, "30.7597", "'angle' sensing event"},
                 {1, "1156739.528", "'magnitude' sensing event"},
                 {3, "1430307.59", "'magnitude' in response_obj deviates from its profile"},
                 {5, "1430307.59", "'equipment_p_meas' carries the deviated measurement"},
                 {10, "990", "'forward_value' deviates from its profile"},
                 {13, "", "difference message built from deviated values"},
                 {15, "", "'message' sent to the physical side"}}};
    case 3:
        return {1318000.5, 30.412, 1318000.5, 30.412, 1070.0, 1412.5,
                {{1, "30.412", "'angle' sensing event"},
                 {1, "1318000.5", "'magnitude' sensing event"},
                 {2, "", "'response_obj' received"},
                 {6, "1318000.5", "'equipment_p_meas' updated"},
                 {7, "30.412", "'equipment_q_meas' updated"},
                 {11, "1412.5", "'reverse_value' outside its profile"},
                 {13, "", "difference message differs from its profile"},
                 {15, "", "'message' sent to the physical side"}}};
    case 4:
        return {1243590.094, 36.173, 1243590.094, 36.173, 1412.5, 1030.0,
                {{1, "36.173", "'angle' sensing event"},
                 {1, "1243590.094", "'magnitude' sensing event"},
                 {3, "1243590.094", "'magnitude' in response_obj deviates from its profile"},
                 {5, "1243590.094", "'equipment_p_meas' carries the deviated measurement"},
                 {10, "1412.5", "'forward_value' outside its profile"},
                 {13, "", "difference message differs from its profile"},
                 {15, "", "'message' sent to the physical side"}}};
    default:
        throw ConfigError("fixture case must be 1..4, got " + std::to_string(id));
    }
}

// Setpoint pairs dispatched in earlier benign runs. The generated cases reuse
// some of them, so their messages are members of the string baselines.
const std::vector<std::pair<double, double>> kKnownPairs{{990.0, 1030.0}, {1070.0, 1070.0}, {1030.0, 990.0}};

telemetry::BaselineStore baseline(std::uint64_t seed) {
    Rng rng(seed);
    telemetry::BaselineStore b;
    for (const auto& h : kHistograms)
        for (double v : sample(h, rng)) b.values[h.variable].push_back(v);

    auto pairs = kKnownPairs;
    const auto& fw = b.values["forward_value"];
    const auto& rv = b.values["reverse_value"];
    for (int i = 0; i < 60; ++i) {
        double f = std::round(std::get<double>(fw[rng.index(fw.size())]) / 5.0) * 5.0;
        double r = std::round(std::get<double>(rv[rng.index(rv.size())]) / 5.0) * 5.0;
        pairs.emplace_back(f, r);
    }
    shuffle(pairs, rng);
    for (auto [f, r] : pairs) {
        auto m = render(f, r);
        b.values["forward_diff"].push_back(m.forward_diff);
        b.values["reverse_diff"].push_back(m.reverse_diff);
        b.values["difference_message"].push_back(m.difference_message);
        b.values["input_msg"].push_back(m.input_msg);
        b.values["envelope"].push_back(m.envelope);
        b.values["message"].push_back(m.message);
    }
    return b;
}

template <class F>
std::string to_text(F&& write) {
    std::ostringstream out;
    write(out);
    return out.str();
}

} // namespace

FileSet generate(int case_id, std::uint64_t seed, const std::string& program) {
    CaseSpec c = spec_for(case_id);
    const std::int64_t t0 = 1685620800000LL + static_cast<std::int64_t>(case_id - 1) * 3600000LL;

    std::vector<ChannelRecord> field{{"angle", Channel::d, t0, c.d_angle}, {"magnitude", Channel::d, t0, c.d_magnitude}};
    std::vector<ChannelRecord> network{{"angle", Channel::n, t0 + 40, c.n_angle},
                                       {"magnitude", Channel::n, t0 + 40, c.n_magnitude}};
    auto m = render(c.forward, c.reverse);
    std::vector<ChannelRecord> app{
        {"angle", Channel::a, t0 + 120, c.n_angle},
        {"magnitude", Channel::a, t0 + 120, c.n_magnitude},
        {"equipment_p_meas", Channel::a, t0 + 180, c.n_magnitude},
        {"equipment_q_meas", Channel::a, t0 + 180, c.n_angle},
        {"reverse_value", Channel::a, t0 + 220, c.reverse},
        {"forward_value", Channel::a, t0 + 220, c.forward},
        {"reverse_diff", Channel::a, t0 + 260, m.reverse_diff},
        {"forward_diff", Channel::a, t0 + 260, m.forward_diff},
        {"difference_message", Channel::a, t0 + 300, m.difference_message},
        {"input_msg", Channel::a, t0 + 300, m.input_msg},
        {"envelope", Channel::a, t0 + 300, m.envelope},
        {"message", Channel::a, t0 + 340, m.message},
    };

    telemetry::EventSequence events;
    int id = 0;
    for (const auto& [type, value, desc] : c.events) {
        EventInstance e{++id, type, std::nullopt, desc};
        if (!value.empty()) e.value = telemetry::parse_value(value);
        events.push_back(std::move(e));
    }

    nlohmann::ordered_json cfg{
        {"source", {program}},
        {"p_vars", {"equipment_p_meas", "equipment_q_meas"}},
        {"field", "field.csv"},
        {"network", "network.csv"},
        {"applog", "app.log"},
        {"baseline", "baseline.csv"},
        {"events", "events.csv"},
        {"bins", 20},
        {"min_samples", 30},
        {"tau_h", 0.02},
        {"tau_m", 0.10},
        {"tau_l", 0.25},
        {"window_ms", 500},
    };

    FileSet files;
    files["field.csv"] = to_text([&](std::ostream& o) { telemetry::write_channel_csv(o, field); });
    files["network.csv"] = to_text([&](std::ostream& o) { telemetry::write_channel_csv(o, network); });
    files["app.log"] = to_text([&](std::ostream& o) {
        o << telemetry::format_iso8601(t0 + 100) << " INFO soap server connected\n";
        telemetry::write_app_log(o, app);
    });
    files["events.csv"] = to_text([&](std::ostream& o) { telemetry::write_event_sequence(o, events); });
    files["baseline.csv"] = to_text([&](std::ostream& o) { telemetry::write_baseline(o, baseline(seed)); });
    files["config.json"] = cfg.dump(2) + "\n";
    return files;
}

void write(const FileSet& files, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : files) {
        std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
        if (!out) throw Error("fixture", "cannot write " + name + " in " + dir);
        out << text;
    }
}

} // namespace pvota::fixture
