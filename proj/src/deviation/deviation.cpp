#include <algorithm>
#include <cmath>

#include "pvota/deviation.hpp"
#include "pvota/error.hpp"

namespace pvota::deviation {

std::string_view to_string(Degree d) {
    switch (d) {
    case Degree::None: return "None";
    case Degree::L: return "L";
    case Degree::M: return "M";
    case Degree::H: return "H";
    }
    return "?";
}

Degree parse_degree(std::string_view s) {
    if (s == "None") return Degree::None;
    if (s == "L") return Degree::L;
    if (s == "M") return Degree::M;
    if (s == "H") return Degree::H;
    throw ConfigError("unknown deviation degree '" + std::string(s) + "'");
}

void Thresholds::validate() const {
    if (!(0 < tau_h && tau_h < tau_m && tau_m < tau_l && tau_l < 1))
        throw ConfigError("thresholds must satisfy 0 < tau_h < tau_m < tau_l < 1");
}

std::optional<std::size_t> DeviationModel::locate(double v) const {
    if (edges.size() < 2 || v < edges.front() || v > edges.back()) return std::nullopt;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t i = static_cast<std::size_t>(it - edges.begin());
    // upper_bound is one past the bin; the top edge closes the last bin.
    return std::min(i == 0 ? 0 : i - 1, counts.size() - 1);
}

nlohmann::json DeviationModel::to_json() const {
    nlohmann::json j{{"variable", variable}, {"value_type", numeric ? "F" : "S"}, {"n", n}};
    if (numeric) {
        j["edges"] = edges;
        j["counts"] = counts;
        j["ratios"] = ratios;
    } else {
        j["strings"] = strings;
    }
    return j;
}

DeviationModel DeviationModel::from_json(const nlohmann::json& j) {
    DeviationModel m;
    m.variable = j.at("variable").get<std::string>();
    m.numeric = j.at("value_type").get<std::string>() == "F";
    m.n = j.at("n").get<std::size_t>();
    if (m.numeric) {
        m.edges = j.at("edges").get<std::vector<double>>();
        m.counts = j.at("counts").get<std::vector<std::size_t>>();
        m.ratios = j.at("ratios").get<std::vector<double>>();
        if (m.edges.size() != m.counts.size() + 1 || m.ratios.size() != m.counts.size())
            throw ConfigError("malformed model for '" + m.variable + "'");
    } else {
        m.strings = j.at("strings").get<std::set<std::string>>();
    }
    return m;
}

DeviationModel fit(const std::string& variable, const std::vector<Value>& values, int bins,
                   std::size_t min_samples) {
    DeviationModel m;
    m.variable = variable;
    m.n = values.size();
    bool any_string = std::any_of(values.begin(), values.end(),
                                  [](const Value& v) { return std::holds_alternative<std::string>(v); });
    if (any_string) {
        m.numeric = false;
        for (const auto& v : values) {
            if (!std::holds_alternative<std::string>(v)) throw TypeMismatch(variable);
            m.strings.insert(std::get<std::string>(v));
        }
        return m;
    }
    if (values.size() < min_samples || values.empty()) throw InsufficientBaseline(variable, values.size());
    if (bins < 1) throw ConfigError("bin count must be positive");

    std::vector<double> xs;
    for (const auto& v : values) xs.push_back(std::get<double>(v));
    auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    double lo = *lo_it, hi = *hi_it;
    if (lo == hi) {
        // A point mass still needs a non-empty range; centre it in one bin.
        double half = std::max(std::abs(lo) * 1e-9, 1e-9) * bins;
        lo -= half;
        hi += half;
    }
    double width = (hi - lo) / bins;
    m.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) m.edges[static_cast<std::size_t>(i)] = lo + width * i;
    m.edges.back() = hi;
    m.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double x : xs) ++m.counts[*m.locate(x)];
    for (auto c : m.counts) m.ratios.push_back(static_cast<double>(c) / static_cast<double>(m.n));
    return m;
}

Degree degree_for(double p, const Thresholds& th) {
    if (p < th.tau_h) return Degree::H;
    if (p < th.tau_m) return Degree::M;
    if (p < th.tau_l) return Degree::L;
    return Degree::None;
}

DeviationScore score(const DeviationModel& model, const Value& v, const Thresholds& th) {
    DeviationScore s;
    if (!model.numeric) {
        const auto* str = std::get_if<std::string>(&v);
        if (!str) throw TypeMismatch(model.variable);
        if (!model.strings.contains(*str)) {
            s.deviated = true;
            s.degree = Degree::H;
        }
        return s;
    }
    const auto* x = std::get_if<double>(&v);
    if (!x) throw TypeMismatch(model.variable);
    s.bin = model.locate(*x);
    if (!s.bin) {
        s.deviated = true;
        s.degree = Degree::H;
        return s;
    }
    s.p = model.ratios[*s.bin];
    s.degree = degree_for(s.p, th);
    s.deviated = s.degree != Degree::None;
    return s;
}

ModelSet fit_all(const telemetry::BaselineStore& baseline, const FitOptions& opts) {
    ModelSet out;
    for (const auto& [var, vals] : baseline.values) {
        auto it = opts.bins_per_variable.find(var);
        out.emplace(var, fit(var, vals, it == opts.bins_per_variable.end() ? opts.bins : it->second, opts.min_samples));
    }
    return out;
}

nlohmann::json to_json(const ModelSet& models) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [var, m] : models) j[var] = m.to_json();
    return j;
}

ModelSet models_from_json(const nlohmann::json& j) {
    ModelSet out;
    for (const auto& [var, jm] : j.items()) out.emplace(var, DeviationModel::from_json(jm));
    return out;
}

} // namespace pvota::deviation
