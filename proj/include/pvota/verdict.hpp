#pragma once

// Root-cause verdict from matched global and local patterns.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvota/pattern.hpp"

namespace pvota::verdict {

enum class Cause {
    SystemFault,
    FDI,
    MemoryCorruption,
    SuspectedAppLogManipulation,
    SuspectedDispatchManipulation,
    BenignOrInconclusive
};
enum class Confidence { conclusive, suspected };

std::string_view to_string(Cause c);
std::string_view to_string(Confidence c);
Cause parse_cause(std::string_view s);

/// Process exit status for a verdict: 0 for benign/inconclusive, 10.. otherwise.
int exit_code(Cause c);

struct RuleFiring {
    std::string rule;     ///< R1..R6
    std::string status;   ///< fired, suppressed, not applicable
    std::string detail;
};

struct Verdict {
    Cause cause = Cause::BenignOrInconclusive;
    Confidence confidence = Confidence::suspected;
    std::vector<pattern::GlobalPattern> matched_global;     ///< distinct, ascending
    std::map<pattern::LocalPattern, int> local_summary;     ///< count per pattern
    std::vector<int> event_sequence;
    std::vector<RuleFiring> reasoning;
    std::optional<std::string> first_ued;                   ///< label of the first LPTN2/LPTN3 node

    nlohmann::json to_json() const;
};

/// First matching rule wins:
///   R1 any LPTN2/LPTN3          -> MemoryCorruption
///   R2 any GPTN1/GPTN2          -> FDI
///   R3 any GPTN3/GPTN4          -> SuspectedAppLogManipulation
///   R4 any GPTN7/GPTN8          -> SuspectedDispatchManipulation
///   R5 GPTN5 and locals only LPTN1/4/5 -> SystemFault
///   R6 otherwise                -> BenignOrInconclusive
Verdict classify(const std::vector<pattern::GlobalPattern>& global, const std::vector<pattern::LocalMatch>& local,
                 const std::vector<int>& events);
Verdict classify(const pattern::MatchLedger& ledger);

std::string render_markdown(const Verdict& v, const pattern::MatchLedger& ledger, const std::string& dot_ref = {});
nlohmann::json render_json(const Verdict& v, const pattern::MatchLedger& ledger, const std::string& dot_ref = {});

} // namespace pvota::verdict
