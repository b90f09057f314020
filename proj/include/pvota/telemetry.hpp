#pragma once

// Incident telemetry: field measurements (d), network packet fields (n) and
// application log values (a), plus the benign baseline and the recorded
// incident event sequence.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace pvota::telemetry {

using Value = std::variant<double, std::string>;

enum class Channel { d, n, a };
enum class Direction { response, dispatch, unknown };

std::string_view to_string(Channel c);
std::string_view to_string(Direction d);
std::string format_value(const Value& v);
/// Numbers when the whole text parses as one, strings otherwise.
Value parse_value(const std::string& text);

struct ChannelRecord {
    std::string variable;
    Channel channel = Channel::d;
    std::int64_t t = 0;  ///< milliseconds
    Value v;
};

inline constexpr int kEventTypes = 15;

struct EventInstance {
    int id = 0;
    int type = 0;  ///< 1..15
    std::optional<Value> value;
    std::string description;
};

using EventSequence = std::vector<EventInstance>;

std::string event_name(int type);
/// "E7" -> 7; nullopt for anything outside E1..E15.
std::optional<int> parse_event_type(std::string_view s);

struct BaselineStore {
    std::map<std::string, std::vector<Value>> values;
};

/// `timestamp_ms,variable,value` CSV for channels d and n.
std::vector<ChannelRecord> parse_channel_csv(std::istream& in, Channel channel, const std::string& name = "<input>");
/// `ISO8601 <variable>=<value>` lines; anything else is ignored.
std::vector<ChannelRecord> parse_app_log(std::istream& in, const std::string& name = "<input>");
/// Dispatches on channel: CSV for d and n, application log for a.
std::vector<ChannelRecord> load_channel(const std::string& path, Channel channel);

EventSequence parse_event_sequence(std::istream& in);
EventSequence load_event_sequence(const std::string& path);

BaselineStore parse_baseline(std::istream& in, const std::string& name = "<input>");
BaselineStore load_baseline(const std::string& path);

void write_channel_csv(std::ostream& out, const std::vector<ChannelRecord>& records);
void write_app_log(std::ostream& out, const std::vector<ChannelRecord>& records);
void write_event_sequence(std::ostream& out, const EventSequence& events);
void write_baseline(std::ostream& out, const BaselineStore& baseline);

std::string format_iso8601(std::int64_t ms);
std::optional<std::int64_t> parse_iso8601(std::string_view s);

struct AlignedTriple {
    std::string variable;
    int epoch = 0;
    std::optional<ChannelRecord> d, n, a;
    Direction direction = Direction::unknown;
    bool flagged = false;  ///< mixed timestamp order

    bool complete() const { return d && n && a; }
};

/// Groups the variable's records into observation epochs: records of
/// different channels within `window_ms` of the epoch's first record.
/// Throws AmbiguousAlignment when one channel has two records in an epoch.
std::vector<AlignedTriple> align(const std::vector<ChannelRecord>& records, const std::string& variable,
                                 std::int64_t window_ms = 500);

/// Everything loaded for one incident.
struct RecordStore {
    std::vector<ChannelRecord> records;  ///< all channels, sorted by (t, channel, variable)
    BaselineStore baseline;
    EventSequence events;

    std::vector<std::string> variables(Channel c) const;
    /// Latest application-log value of a variable.
    std::optional<Value> app_value(const std::string& variable) const;

    nlohmann::json to_json() const;
    static RecordStore from_json(const nlohmann::json& j);
};

nlohmann::json to_json(const AlignedTriple& t);

} // namespace pvota::telemetry
