#pragma once

// Global (cross-channel) and local (per graph node) pattern matching, and
// selection of incident paths through the simplified graph by the recorded
// event sequence.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvota/deviation.hpp"
#include "pvota/taint.hpp"
#include "pvota/telemetry.hpp"

namespace pvota::pattern {

using deviation::Degree;
using taint::NodeId;
using telemetry::Direction;

enum class GlobalPattern { GPTN1 = 1, GPTN2, GPTN3, GPTN4, GPTN5, GPTN6, GPTN7, GPTN8 };
enum class LocalPattern { LPTN1 = 1, LPTN2, LPTN3, LPTN4, LPTN5 };

std::string to_string(GlobalPattern p);
std::string to_string(LocalPattern p);
GlobalPattern parse_global(std::string_view s);
LocalPattern parse_local(std::string_view s);

struct GlobalTriple {
    bool dn_consistent = true;
    bool na_consistent = true;
    bool deviated = false;
};

/// "<C_dn, I_na, Y>" style rendering.
std::string describe(const GlobalTriple& t);
/// Defining triple of a pattern as listed in the pattern table.
GlobalTriple definition(GlobalPattern p);
bool dispatch_specific(GlobalPattern p);
/// Whether `p` covers the triple observed in the given direction. Exactly one
/// pattern covers any input. Dispatch triples with C_dn and I_na go to
/// GPTN7/8; an inconsistent packet on both sides counts as GPTN1/2.
bool covers(GlobalPattern p, const GlobalTriple& t, Direction dir);
GlobalPattern classify_triple(const GlobalTriple& t, Direction dir);

enum class ValueKind { F, S, Others };
enum class Availability { Logged, Estimated, None };

std::string_view to_string(ValueKind k);
std::string_view to_string(Availability a);

bool covers(LocalPattern p, ValueKind kind, Availability avail, bool as_expected);
LocalPattern classify_node(ValueKind kind, Availability avail, bool as_expected);

struct MessageGroup {
    std::string name;
    std::string node;                 ///< graph entity holding the message
    std::vector<std::string> fields;  ///< channel variables in the message
};

struct MatchConfig {
    deviation::Thresholds thresholds;
    double tolerance = 1e-9;
    std::int64_t window_ms = 500;
    std::vector<MessageGroup> groups;
    std::map<std::string, std::string> aliases;          ///< program variable -> telemetry variable
    std::map<std::string, std::vector<int>> node_events;  ///< graph entity -> producible event types

    static MatchConfig defaults();
    static MatchConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct GlobalMatch {
    std::string group;
    int epoch = 0;
    GlobalPattern pattern = GlobalPattern::GPTN6;
    GlobalTriple triple;
    Direction direction = Direction::unknown;
    std::map<std::string, deviation::DeviationScore> scores;  ///< d-channel score per field
    std::vector<telemetry::ChannelRecord> evidence;
    std::optional<int> event;
};

struct GlobalResult {
    std::vector<GlobalMatch> matches;
    std::vector<std::string> incomplete;  ///< "group@epoch: missing ..."
    std::vector<std::string> flagged;     ///< mixed timestamp order
};

GlobalResult match_global(const telemetry::RecordStore& store, const deviation::ModelSet& models,
                          const MatchConfig& cfg);

struct SelectedPath {
    std::vector<NodeId> nodes;
    int score = 0;
    std::vector<std::pair<std::size_t, NodeId>> assignment;  ///< event index -> node
};

struct PathSelection {
    std::vector<SelectedPath> selected;
    std::vector<SelectedPath> excluded;
    std::vector<std::string> excluded_reasons;
    bool no_match = false;  ///< events given but none producible along any path
    bool forced = false;
    bool truncated = false;

    std::vector<NodeId> nodes() const;  ///< union of selected nodes
    /// Event indices matched by some selected path, ascending.
    std::vector<std::size_t> matched_events() const;
};

/// Scores every source-to-sink path by the longest order-preserving
/// subsequence of events producible along it, one node absorbing any run of
/// consecutive events. Keeps all best paths except those that merely extend
/// another best path upstream.
PathSelection select_paths(const taint::TaintGraph& graph, const telemetry::EventSequence& events,
                           const std::map<std::string, std::vector<int>>& node_events,
                           std::size_t max_paths = 100000);
/// Analyst override: `labels` must form a directed path in the graph.
PathSelection forced_path(const taint::TaintGraph& graph, const std::vector<std::string>& labels,
                          const telemetry::EventSequence& events,
                          const std::map<std::string, std::vector<int>>& node_events);

struct LocalMatch {
    NodeId node = -1;
    std::string label;
    std::string entity;
    LocalPattern pattern = LocalPattern::LPTN4;
    ValueKind kind = ValueKind::F;
    Availability availability = Availability::None;
    std::optional<Degree> observed;
    std::optional<Degree> expected;
    std::vector<int> events;
    std::string note;
};

std::vector<LocalMatch> match_local(const taint::TaintGraph& graph, const PathSelection& selection,
                                    const telemetry::RecordStore& store, const deviation::ModelSet& models,
                                    const MatchConfig& cfg);

/// Everything the classifier needs, serializable between CLI stages.
struct MatchLedger {
    GlobalResult global;
    PathSelection selection;
    std::vector<LocalMatch> local;
    std::vector<int> event_sequence;  ///< matched event types in input order

    nlohmann::json to_json() const;
    static MatchLedger from_json(const nlohmann::json& j);
};

MatchLedger match_all(const taint::TaintGraph& graph, const telemetry::RecordStore& store,
                      const deviation::ModelSet& models, const MatchConfig& cfg,
                      const std::vector<std::string>& path_override = {});

/// Consecutive duplicates collapsed: E1, E1, E3 -> "E1→E3".
std::string format_sequence(const std::vector<int>& types);

} // namespace pvota::pattern
