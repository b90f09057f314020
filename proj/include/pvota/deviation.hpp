#pragma once

// Histogram deviation models over benign baseline values.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvota/telemetry.hpp"

namespace pvota::deviation {

using telemetry::Value;

enum class Degree { None, L, M, H };

std::string_view to_string(Degree d);
Degree parse_degree(std::string_view s);

struct Thresholds {
    double tau_h = 0.02;
    double tau_m = 0.10;
    double tau_l = 0.25;

    /// Throws ConfigError unless 0 < tau_h < tau_m < tau_l < 1.
    void validate() const;
};

struct DeviationModel {
    std::string variable;
    bool numeric = true;              ///< F when true, S otherwise
    std::vector<double> edges;        ///< m + 1 strictly increasing edges
    std::vector<std::size_t> counts;  ///< per bin
    std::size_t n = 0;
    std::vector<double> ratios;
    std::set<std::string> strings;    ///< benign strings for S models

    std::size_t bins() const { return counts.size(); }
    /// Bin holding v, or nullopt when v lies outside [edges.front(), edges.back()].
    std::optional<std::size_t> locate(double v) const;

    nlohmann::json to_json() const;
    static DeviationModel from_json(const nlohmann::json& j);
};

struct DeviationScore {
    bool deviated = false;
    Degree degree = Degree::None;
    std::optional<std::size_t> bin;  ///< nullopt when out of range or S
    double p = 0;
};

struct FitOptions {
    int bins = 20;
    std::size_t min_samples = 30;
    std::map<std::string, int> bins_per_variable;
};

/// Equal-width bins over [min, max] for numbers, a membership set for strings.
/// Throws InsufficientBaseline when fewer than `min_samples` numbers are given.
DeviationModel fit(const std::string& variable, const std::vector<Value>& values, int bins = 20,
                   std::size_t min_samples = 30);
DeviationScore score(const DeviationModel& model, const Value& v, const Thresholds& th = {});
Degree degree_for(double p, const Thresholds& th);

using ModelSet = std::map<std::string, DeviationModel>;

ModelSet fit_all(const telemetry::BaselineStore& baseline, const FitOptions& opts = {});
nlohmann::json to_json(const ModelSet& models);
ModelSet models_from_json(const nlohmann::json& j);

} // namespace pvota::deviation
