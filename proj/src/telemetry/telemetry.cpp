#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pvota/error.hpp"
#include "pvota/telemetry.hpp"

namespace pvota::telemetry {

std::string_view to_string(Channel c) {
    switch (c) {
    case Channel::d: return "d";
    case Channel::n: return "n";
    case Channel::a: return "a";
    }
    return "?";
}

std::string_view to_string(Direction d) {
    switch (d) {
    case Direction::response: return "response";
    case Direction::dispatch: return "dispatch";
    case Direction::unknown: return "unknown";
    }
    return "?";
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        return s.substr(1, s.size() - 2);
    return s;
}

// Splits one CSV line; double quotes group fields and `""` escapes a quote.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"' && trim(cur).empty()) {
            cur.clear();
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos && trim(s) == s) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

bool is_number(const Value& v) { return std::holds_alternative<double>(v); }

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Sorts by time and rejects repeated (variable, t) pairs and per-variable
// type changes.
void finish(std::vector<ChannelRecord>& recs, std::vector<int>& lines, const std::string& name) {
    std::vector<std::size_t> order(recs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return recs[x].t < recs[y].t; });
    std::set<std::pair<std::string, std::int64_t>> seen;
    std::map<std::string, bool> numeric;
    std::vector<ChannelRecord> sorted;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        if (!seen.insert({r.variable, r.t}).second) throw NonMonotoneTimestamp(name, lines[i]);
        auto [it, fresh] = numeric.emplace(r.variable, is_number(r.v));
        if (!fresh && it->second != is_number(r.v))
            throw SchemaError(name, lines[i], "value type of '" + r.variable + "' changes");
    }
    for (std::size_t i : order) sorted.push_back(std::move(recs[i]));
    recs = std::move(sorted);
}

std::ifstream open(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("ingest", "cannot open " + path);
    return in;
}

} // namespace

Value parse_value(const std::string& text) {
    std::string t = trim(text);
    if (auto d = parse_number(t)) return *d;
    return strip_quotes(t);
}

std::string format_value(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
    return std::string(buf, p);
}

std::string event_name(int type) { return "E" + std::to_string(type); }

std::optional<int> parse_event_type(std::string_view s) {
    std::string t = trim(s);
    if (t.size() < 2 || t[0] != 'E') return std::nullopt;
    int v = 0;
    auto [p, ec] = std::from_chars(t.data() + 1, t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || v < 1 || v > kEventTypes) return std::nullopt;
    return v;
}

std::vector<ChannelRecord> parse_channel_csv(std::istream& in, Channel channel, const std::string& name) {
    std::vector<ChannelRecord> out;
    std::vector<int> lines;
    std::string line;
    int lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (trim(line).empty()) continue;
        auto cols = split_csv(line);
        if (!header) {
            if (cols.size() != 3 || trim(cols[0]) != "timestamp_ms" || trim(cols[1]) != "variable" ||
                trim(cols[2]) != "value")
                throw SchemaError(name, lineno, "expected header timestamp_ms,variable,value");
            header = true;
            continue;
        }
        if (cols.size() != 3) throw SchemaError(name, lineno, "expected 3 columns");
        ChannelRecord r;
        std::string ts = trim(cols[0]);
        auto [p, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), r.t);
        if (ec != std::errc{} || p != ts.data() + ts.size()) throw SchemaError(name, lineno, "bad timestamp");
        r.variable = trim(cols[1]);
        if (r.variable.empty()) throw SchemaError(name, lineno, "empty variable");
        r.channel = channel;
        r.v = parse_value(cols[2]);
        out.push_back(std::move(r));
        lines.push_back(lineno);
    }
    finish(out, lines, name);
    return out;
}

std::vector<ChannelRecord> parse_app_log(std::istream& in, const std::string& name) {
    std::vector<ChannelRecord> out;
    std::vector<int> lines;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        std::size_t sp = line.find(' ');
        if (sp == std::string::npos) continue;
        auto t = parse_iso8601(std::string_view(line).substr(0, sp));
        if (!t) continue;
        std::string rest = line.substr(sp + 1);
        std::size_t eq = rest.find('=');
        if (eq == std::string::npos) continue;
        std::string var = rest.substr(0, eq);
        if (var.empty() || var.find_first_of(" \t") != std::string::npos) continue;
        out.push_back(ChannelRecord{var, Channel::a, *t, parse_value(rest.substr(eq + 1))});
        lines.push_back(lineno);
    }
    finish(out, lines, name);
    return out;
}

std::vector<ChannelRecord> load_channel(const std::string& path, Channel channel) {
    auto in = open(path);
    return channel == Channel::a ? parse_app_log(in, path) : parse_channel_csv(in, channel, path);
}

EventSequence parse_event_sequence(std::istream& in) {
    EventSequence out;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (trim(line).empty()) continue;
        ++row;
        auto cols = split_csv(line);
        if (cols.size() < 4) throw SchemaError("events", row, "expected 4 columns");
        EventInstance e;
        std::string id = trim(cols[0]);
        auto [p, ec] = std::from_chars(id.data(), id.data() + id.size(), e.id);
        if (ec != std::errc{} || p != id.data() + id.size()) throw SchemaError("events", row, "bad id");
        auto type = parse_event_type(cols[1]);
        if (!type) throw UnknownEventType(row, trim(cols[1]));
        e.type = *type;
        if (!trim(cols[2]).empty()) e.value = parse_value(cols[2]);
        std::string desc = cols[3];
        for (std::size_t i = 4; i < cols.size(); ++i) desc += "," + cols[i];
        e.description = trim(desc);
        if (!out.empty() && e.id <= out.back().id) throw SchemaError("events", row, "event ids must increase");
        out.push_back(std::move(e));
    }
    return out;
}

EventSequence load_event_sequence(const std::string& path) {
    auto in = open(path);
    return parse_event_sequence(in);
}

BaselineStore parse_baseline(std::istream& in, const std::string& name) {
    BaselineStore out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (trim(line).empty()) continue;
        auto cols = split_csv(line);
        if (cols.size() != 2) throw SchemaError(name, lineno, "expected variable,value");
        std::string var = trim(cols[0]);
        if (lineno == 1 && var == "variable" && trim(cols[1]) == "value") continue;
        Value v = parse_value(cols[1]);
        auto& vals = out.values[var];
        if (!vals.empty() && is_number(vals.front()) != is_number(v))
            throw SchemaError(name, lineno, "value type of '" + var + "' changes");
        vals.push_back(std::move(v));
    }
    return out;
}

BaselineStore load_baseline(const std::string& path) {
    auto in = open(path);
    return parse_baseline(in, path);
}

void write_channel_csv(std::ostream& out, const std::vector<ChannelRecord>& records) {
    out << "timestamp_ms,variable,value\n";
    for (const auto& r : records) out << r.t << ',' << csv_field(r.variable) << ',' << csv_field(format_value(r.v)) << '\n';
}

void write_app_log(std::ostream& out, const std::vector<ChannelRecord>& records) {
    for (const auto& r : records) out << format_iso8601(r.t) << ' ' << r.variable << '=' << format_value(r.v) << '\n';
}

void write_event_sequence(std::ostream& out, const EventSequence& events) {
    for (const auto& e : events)
        out << e.id << ", " << event_name(e.type) << ", " << (e.value ? csv_field(format_value(*e.value)) : "")
            << ", " << e.description << '\n';
}

void write_baseline(std::ostream& out, const BaselineStore& baseline) {
    out << "variable,value\n";
    for (const auto& [var, vals] : baseline.values)
        for (const auto& v : vals) out << csv_field(var) << ',' << csv_field(format_value(v)) << '\n';
}

std::string format_iso8601(std::int64_t ms) {
    using namespace std::chrono;
    sys_time<milliseconds> tp{milliseconds{ms}};
    auto day = floor<days>(tp);
    year_month_day ymd{day};
    hh_mm_ss hms{tp - day};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02lld.%03lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long long>(hms.seconds().count()), static_cast<long long>(hms.subseconds().count()));
    return buf;
}

std::optional<std::int64_t> parse_iso8601(std::string_view s) {
    using namespace std::chrono;
    auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        if (pos + len > s.size()) return std::nullopt;
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
        s[16] != ':')
        return std::nullopt;
    auto Y = num(0, 4), M = num(5, 2), D = num(8, 2), h = num(11, 2), m = num(14, 2), sec = num(17, 2);
    if (!Y || !M || !D || !h || !m || !sec) return std::nullopt;
    year_month_day ymd{year{*Y}, month{static_cast<unsigned>(*M)}, day{static_cast<unsigned>(*D)}};
    if (!ymd.ok() || *h > 23 || *m > 59 || *sec > 60) return std::nullopt;
    std::size_t pos = 19;
    std::int64_t frac = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            if (digits < 3) frac = frac * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (; digits < 3; ++digits) frac *= 10;
    }
    std::int64_t offset_min = 0;
    if (pos < s.size() && s[pos] == 'Z') {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        auto oh = num(pos + 1, 2), om = num(pos + 4, 2);
        if (!oh || !om || s[pos + 3] != ':') return std::nullopt;
        offset_min = (s[pos] == '-' ? -1 : 1) * (*oh * 60 + *om);
        pos += 6;
    }
    if (pos != s.size()) return std::nullopt;
    auto tp = sys_days{ymd} + hours{*h} + minutes{*m} + seconds{*sec} + milliseconds{frac} - minutes{offset_min};
    return duration_cast<milliseconds>(tp.time_since_epoch()).count();
}

std::vector<AlignedTriple> align(const std::vector<ChannelRecord>& records, const std::string& variable,
                                 std::int64_t window_ms) {
    std::vector<const ChannelRecord*> recs;
    for (const auto& r : records)
        if (r.variable == variable) recs.push_back(&r);
    std::stable_sort(recs.begin(), recs.end(), [](const auto* x, const auto* y) { return x->t < y->t; });

    std::vector<AlignedTriple> out;
    std::int64_t start = 0;
    for (const auto* r : recs) {
        if (out.empty() || r->t - start > window_ms) {
            out.push_back(AlignedTriple{variable, static_cast<int>(out.size()), {}, {}, {}, Direction::unknown, false});
            start = r->t;
        }
        auto& tr = out.back();
        auto& slot = r->channel == Channel::d ? tr.d : r->channel == Channel::n ? tr.n : tr.a;
        if (slot) throw AmbiguousAlignment(variable, tr.epoch);
        slot = *r;
    }

    for (auto& tr : out) {
        std::vector<std::int64_t> ts;
        for (const auto* c : {&tr.d, &tr.n, &tr.a})
            if (*c) ts.push_back((*c)->t);
        if (ts.size() < 2) continue;
        bool up = true, down = true, tie = false;
        for (std::size_t i = 1; i < ts.size(); ++i) {
            if (ts[i] == ts[i - 1]) tie = true;
            if (ts[i] <= ts[i - 1]) up = false;
            if (ts[i] >= ts[i - 1]) down = false;
        }
        if (up)
            tr.direction = Direction::response;
        else if (down)
            tr.direction = Direction::dispatch;
        else
            tr.flagged = !tie;
    }
    return out;
}

std::vector<std::string> RecordStore::variables(Channel c) const {
    std::set<std::string> vars;
    for (const auto& r : records)
        if (r.channel == c) vars.insert(r.variable);
    return {vars.begin(), vars.end()};
}

std::optional<Value> RecordStore::app_value(const std::string& variable) const {
    std::optional<Value> out;
    for (const auto& r : records)
        if (r.channel == Channel::a && r.variable == variable) out = r.v;
    return out;
}

namespace {

nlohmann::json value_json(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return std::get<std::string>(v);
}

Value json_value(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    return j.get<std::string>();
}

nlohmann::json record_json(const ChannelRecord& r) {
    return {{"variable", r.variable}, {"channel", std::string(to_string(r.channel))}, {"t", r.t}, {"v", value_json(r.v)}};
}

} // namespace

nlohmann::json RecordStore::to_json() const {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records) recs.push_back(record_json(r));
    nlohmann::json base = nlohmann::json::object();
    for (const auto& [var, vals] : baseline.values) {
        auto& arr = base[var] = nlohmann::json::array();
        for (const auto& v : vals) arr.push_back(value_json(v));
    }
    nlohmann::json evs = nlohmann::json::array();
    for (const auto& e : events) {
        nlohmann::json je{{"id", e.id}, {"type", event_name(e.type)}, {"description", e.description}};
        je["value"] = e.value ? value_json(*e.value) : nlohmann::json(nullptr);
        evs.push_back(std::move(je));
    }
    return {{"records", recs}, {"baseline", base}, {"events", evs}};
}

RecordStore RecordStore::from_json(const nlohmann::json& j) {
    RecordStore s;
    for (const auto& jr : j.at("records")) {
        std::string ch = jr.at("channel").get<std::string>();
        if (ch != "d" && ch != "n" && ch != "a") throw ConfigError("unknown channel '" + ch + "'");
        s.records.push_back(ChannelRecord{jr.at("variable").get<std::string>(),
                                          ch == "d" ? Channel::d : ch == "n" ? Channel::n : Channel::a,
                                          jr.at("t").get<std::int64_t>(), json_value(jr.at("v"))});
    }
    for (const auto& [var, arr] : j.at("baseline").items())
        for (const auto& v : arr) s.baseline.values[var].push_back(json_value(v));
    int row = 0;
    for (const auto& je : j.at("events")) {
        ++row;
        auto type = parse_event_type(je.at("type").get<std::string>());
        if (!type) throw UnknownEventType(row, je.at("type").get<std::string>());
        EventInstance e{je.at("id").get<int>(), *type, std::nullopt, je.value("description", "")};
        if (!je.at("value").is_null()) e.value = json_value(je.at("value"));
        s.events.push_back(std::move(e));
    }
    return s;
}

nlohmann::json to_json(const AlignedTriple& t) {
    nlohmann::json j{{"variable", t.variable},
                     {"epoch", t.epoch},
                     {"direction", std::string(to_string(t.direction))},
                     {"flagged", t.flagged}};
    for (auto [name, slot] : {std::pair{"d", &t.d}, std::pair{"n", &t.n}, std::pair{"a", &t.a}})
        j[name] = *slot ? nlohmann::json{{"t", (*slot)->t}, {"v", value_json((*slot)->v)}} : nlohmann::json(nullptr);
    return j;
}

} // namespace pvota::telemetry
