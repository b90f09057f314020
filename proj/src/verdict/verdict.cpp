#include <algorithm>
#include <set>
#include <sstream>

#include "pvota/error.hpp"
#include "pvota/verdict.hpp"

namespace pvota::verdict {

using pattern::GlobalPattern;
using pattern::LocalPattern;

std::string_view to_string(Cause c) {
    switch (c) {
    case Cause::SystemFault: return "SystemFault";
    case Cause::FDI: return "FDI";
    case Cause::MemoryCorruption: return "MemoryCorruption";
    case Cause::SuspectedAppLogManipulation: return "SuspectedAppLogManipulation";
    case Cause::SuspectedDispatchManipulation: return "SuspectedDispatchManipulation";
    case Cause::BenignOrInconclusive: return "BenignOrInconclusive";
    }
    return "?";
}

std::string_view to_string(Confidence c) { return c == Confidence::conclusive ? "conclusive" : "suspected"; }

Cause parse_cause(std::string_view s) {
    for (Cause c : {Cause::SystemFault, Cause::FDI, Cause::MemoryCorruption, Cause::SuspectedAppLogManipulation,
                    Cause::SuspectedDispatchManipulation, Cause::BenignOrInconclusive})
        if (to_string(c) == s) return c;
    throw ConfigError("unknown cause '" + std::string(s) + "'");
}

int exit_code(Cause c) {
    switch (c) {
    case Cause::BenignOrInconclusive: return 0;
    case Cause::SystemFault: return 10;
    case Cause::FDI: return 11;
    case Cause::MemoryCorruption: return 12;
    case Cause::SuspectedAppLogManipulation: return 13;
    case Cause::SuspectedDispatchManipulation: return 14;
    }
    return 1;
}

nlohmann::json Verdict::to_json() const {
    nlohmann::json g = nlohmann::json::array();
    for (auto p : matched_global) g.push_back(pattern::to_string(p));
    nlohmann::json ls = nlohmann::json::object();
    for (const auto& [p, n] : local_summary) ls[pattern::to_string(p)] = n;
    nlohmann::json ev = nlohmann::json::array();
    for (int t : event_sequence) ev.push_back(telemetry::event_name(t));
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : reasoning) rs.push_back({{"rule", r.rule}, {"status", r.status}, {"detail", r.detail}});
    return {{"cause", std::string(to_string(cause))},
            {"confidence", std::string(to_string(confidence))},
            {"matched_global", g},
            {"local_summary", ls},
            {"event_sequence", ev},
            {"event_chain", pattern::format_sequence(event_sequence)},
            {"reasoning", rs},
            {"first_ued", first_ued ? nlohmann::json(*first_ued) : nlohmann::json(nullptr)}};
}

namespace {

std::string join_patterns(const std::vector<GlobalPattern>& ps, const char* none) {
    if (ps.empty()) return none;
    std::string out = "global ";
    for (std::size_t i = 0; i < ps.size(); ++i) out += (i ? ", " : "") + pattern::to_string(ps[i]);
    return out;
}

} // namespace

Verdict classify(const std::vector<GlobalPattern>& global, const std::vector<pattern::LocalMatch>& local,
                 const std::vector<int>& events) {
    Verdict v;
    std::set<GlobalPattern> gs(global.begin(), global.end());
    v.matched_global.assign(gs.begin(), gs.end());
    for (const auto& m : local) ++v.local_summary[m.pattern];
    v.event_sequence = events;

    // First UED in path order: the ledger lists locals in node order, so the
    // smallest label wins regardless of the input permutation.
    auto label_key = [](const std::string& l) {
        if (l.size() > 1 && (l[0] == 'N' || l[0] == 'U')) return std::pair{l[0] == 'N' ? 0 : 1, std::stoi(l.substr(1))};
        return std::pair{2, 0};
    };
    for (const auto& m : local)
        if (m.pattern == LocalPattern::LPTN2 || m.pattern == LocalPattern::LPTN3)
            if (!v.first_ued || label_key(m.label) < label_key(*v.first_ued)) v.first_ued = m.label;

    auto count = [&](LocalPattern p) {
        auto it = v.local_summary.find(p);
        return it == v.local_summary.end() ? 0 : it->second;
    };
    auto has = [&](std::initializer_list<GlobalPattern> ps) {
        std::vector<GlobalPattern> hit;
        for (auto p : ps)
            if (gs.contains(p)) hit.push_back(p);
        return hit;
    };

    int ued = count(LocalPattern::LPTN2) + count(LocalPattern::LPTN3);
    auto fdi = has({GlobalPattern::GPTN1, GlobalPattern::GPTN2});
    auto applog = has({GlobalPattern::GPTN3, GlobalPattern::GPTN4});
    auto dispatch = has({GlobalPattern::GPTN7, GlobalPattern::GPTN8});
    bool fault = gs.contains(GlobalPattern::GPTN5) && ued == 0;

    struct Rule {
        const char* id;
        bool holds;
        Cause cause;
        Confidence conf;
        std::string detail;
    };
    std::vector<Rule> rules{
        {"R1", ued > 0, Cause::MemoryCorruption, Confidence::conclusive,
         std::to_string(count(LocalPattern::LPTN2)) + " LPTN2 and " + std::to_string(count(LocalPattern::LPTN3)) +
             " LPTN3 local matches"},
        {"R2", !fdi.empty(), Cause::FDI, Confidence::conclusive, join_patterns(fdi, "no GPTN1/GPTN2")},
        {"R3", !applog.empty(), Cause::SuspectedAppLogManipulation, Confidence::suspected,
         join_patterns(applog, "no GPTN3/GPTN4")},
        {"R4", !dispatch.empty(), Cause::SuspectedDispatchManipulation, Confidence::suspected,
         join_patterns(dispatch, "no GPTN7/GPTN8")},
        {"R5", fault, Cause::SystemFault, Confidence::conclusive, "GPTN5 with locals limited to LPTN1/LPTN4/LPTN5"},
        {"R6", true, Cause::BenignOrInconclusive, Confidence::suspected, "no decisive pattern"},
    };
    const Rule* winner = nullptr;
    for (const auto& r : rules) {
        std::string status;
        if (r.holds && !winner) {
            winner = &r;
            status = "fired";
        } else if (r.holds) {
            status = std::string("suppressed by ") + winner->id;
        } else {
            status = "not applicable";
        }
        v.reasoning.push_back(RuleFiring{r.id, status, r.detail});
    }
    v.cause = winner->cause;
    v.confidence = winner->conf;
    return v;
}

Verdict classify(const pattern::MatchLedger& ledger) {
    std::vector<GlobalPattern> gs;
    for (const auto& m : ledger.global.matches) gs.push_back(m.pattern);
    return classify(gs, ledger.local, ledger.event_sequence);
}

namespace {

std::string degree_text(const std::optional<deviation::Degree>& d) {
    return d ? std::string(deviation::to_string(*d)) : "⊤";
}

// Collapses consecutive labels sharing a pattern: N2, N3, N4 -> "N2–N4".
std::vector<std::pair<std::string, LocalPattern>> summarize(const std::vector<pattern::LocalMatch>& local) {
    std::vector<std::pair<std::string, LocalPattern>> rows;
    std::size_t i = 0;
    auto number = [](const std::string& l) { return l.size() > 1 && l[0] == 'N' ? std::stoi(l.substr(1)) : -10; };
    while (i < local.size()) {
        std::size_t j = i;
        while (j + 1 < local.size() && local[j + 1].pattern == local[i].pattern &&
               number(local[j + 1].label) == number(local[j].label) + 1 && number(local[j].label) >= 0)
            ++j;
        std::string range = local[i].label + (j > i ? "–" + local[j].label : "");
        rows.emplace_back(range, local[i].pattern);
        i = j + 1;
    }
    return rows;
}

} // namespace

std::string render_markdown(const Verdict& v, const pattern::MatchLedger& ledger, const std::string& dot_ref) {
    std::ostringstream out;
    out << "# Incident verdict\n\n";
    out << "**Cause:** " << to_string(v.cause) << " (" << to_string(v.confidence) << ")\n\n";
    out << "**Matched event sequence:** " << (v.event_sequence.empty() ? "none" : pattern::format_sequence(v.event_sequence))
        << "\n\n";
    if (v.first_ued) out << "**First unexpected deviation:** " << *v.first_ued << "\n\n";
    if (!dot_ref.empty()) out << "**Graph:** " << dot_ref << "\n\n";

    out << "## Global patterns\n\n";
    if (ledger.global.matches.empty()) {
        out << "No global pattern matched.\n\n";
    } else {
        out << "| Group | Epoch | Direction | Triple | Pattern |\n|---|---|---|---|---|\n";
        for (const auto& m : ledger.global.matches)
            out << "| " << m.group << " | " << m.epoch << " | " << telemetry::to_string(m.direction) << " | "
                << pattern::describe(m.triple) << " | " << pattern::to_string(m.pattern) << " |\n";
        out << "\n";
        for (const auto& m : ledger.global.matches)
            for (const auto& [f, s] : m.scores)
                out << "- " << f << ": Δ = " << deviation::to_string(s.degree)
                    << (s.bin ? ", bin " + std::to_string(*s.bin + 1) : std::string(", out of range")) << "\n";
        if (std::any_of(ledger.global.matches.begin(), ledger.global.matches.end(),
                        [](const auto& m) { return m.pattern == GlobalPattern::GPTN6; }))
            out << "\nNote: the all-consistent, non-deviated triple <C_dn, C_na, N> is GPTN6 in the pattern table; "
                   "some case descriptions call the same triple GPTN4.\n";
        out << "\n";
    }
    for (const auto& s : ledger.global.incomplete) out << "- incomplete: " << s << "\n";
    for (const auto& s : ledger.global.flagged) out << "- mixed timestamp order: " << s << "\n";

    out << "## Local patterns\n\n";
    if (ledger.local.empty()) {
        out << "No path nodes matched.\n\n";
    } else {
        out << "| Nodes | Pattern |\n|---|---|\n";
        for (const auto& [range, p] : summarize(ledger.local)) out << "| " << range << " | " << pattern::to_string(p) << " |\n";
        out << "\n| Node | Entity | Kind | Log | Δ observed | Δ expected | Pattern | Events |\n"
               "|---|---|---|---|---|---|---|---|\n";
        for (const auto& m : ledger.local) {
            std::string evs;
            for (int t : m.events) evs += (evs.empty() ? "" : " ") + telemetry::event_name(t);
            out << "| " << m.label << " | `" << m.entity << "` | " << pattern::to_string(m.kind) << " | "
                << pattern::to_string(m.availability) << " | " << degree_text(m.observed) << " | "
                << degree_text(m.expected) << " | " << pattern::to_string(m.pattern) << " | " << evs << " |\n";
        }
        out << "\n";
    }

    out << "## Path selection\n\n";
    out << ledger.selection.selected.size() << " path(s) selected, " << ledger.selection.excluded.size()
        << " excluded.";
    if (ledger.selection.forced) out << " Path forced by analyst override.";
    if (ledger.selection.no_match) out << " No path produces any recorded event.";
    if (ledger.selection.truncated) out << " Path enumeration truncated.";
    out << "\n\n";

    out << "## Rule trace\n\n";
    for (const auto& r : v.reasoning) out << "- " << r.rule << " " << r.status << ": " << r.detail << "\n";
    return out.str();
}

nlohmann::json render_json(const Verdict& v, const pattern::MatchLedger& ledger, const std::string& dot_ref) {
    nlohmann::json j = v.to_json();
    j["matches"] = ledger.to_json();
    if (!dot_ref.empty()) j["graph"] = dot_ref;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [range, p] : summarize(ledger.local)) rows.push_back({{"nodes", range}, {"pattern", pattern::to_string(p)}});
    j["local_table"] = rows;
    return j;
}

} // namespace pvota::verdict
