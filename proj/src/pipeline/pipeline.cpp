#include <fstream>
#include <sstream>

#include "pvota/error.hpp"
#include "pvota/pipeline.hpp"

namespace pvota {

namespace fs = std::filesystem;

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
    return (base / p).lexically_normal().string();
}

taint::ValueType parse_value_type(const std::string& s) {
    if (s == "F") return taint::ValueType::F;
    if (s == "S") return taint::ValueType::S;
    if (s == "Other") return taint::ValueType::Other;
    throw ConfigError("unknown value type '" + s + "'");
}

template <class F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(name, e.what());
    }
}

} // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, const fs::path& base) {
    RunConfig c;
    if (j.contains("source")) {
        const auto& s = j.at("source");
        if (s.is_string())
            c.sources.push_back(resolve(base, s.get<std::string>()));
        else
            for (const auto& p : s) c.sources.push_back(resolve(base, p.get<std::string>()));
    }
    c.p_vars = j.value("p_vars", std::vector<std::string>{});
    if (j.contains("catalogs")) c.catalogs = taint::Catalogs::from_json(j.at("catalogs"));
    if (j.contains("value_types"))
        for (const auto& [k, v] : j.at("value_types").items()) c.value_types[k] = parse_value_type(v.get<std::string>());
    for (auto [key, field] : {std::pair{"field", &c.field}, std::pair{"network", &c.network},
                              std::pair{"applog", &c.applog}, std::pair{"baseline", &c.baseline},
                              std::pair{"events", &c.events}})
        if (j.contains(key)) *field = resolve(base, j.at(key).get<std::string>());
    c.fit.bins = j.value("bins", c.fit.bins);
    c.fit.min_samples = j.value("min_samples", c.fit.min_samples);
    if (j.contains("bins_per_variable"))
        c.fit.bins_per_variable = j.at("bins_per_variable").get<std::map<std::string, int>>();
    c.match = pattern::MatchConfig::from_json(j);
    if (j.contains("prune")) c.prune = simplify::PrunePolicy::from_json(j.at("prune"));
    c.path = j.value("path", std::vector<std::string>{});
    return c;
}

RunConfig RunConfig::load(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
    return from_json(j, file.parent_path());
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j = match.to_json();
    j["source"] = sources;
    j["p_vars"] = p_vars;
    j["catalogs"] = catalogs.to_json();
    nlohmann::json vt = nlohmann::json::object();
    for (const auto& [k, v] : value_types) vt[k] = std::string(taint::to_string(v));
    j["value_types"] = vt;
    j["field"] = field;
    j["network"] = network;
    j["applog"] = applog;
    j["baseline"] = baseline;
    j["events"] = events;
    j["bins"] = fit.bins;
    j["min_samples"] = fit.min_samples;
    if (!fit.bins_per_variable.empty()) j["bins_per_variable"] = fit.bins_per_variable;
    j["prune"] = prune.to_json();
    if (!path.empty()) j["path"] = path;
    return j;
}

void RunConfig::validate() const {
    match.thresholds.validate();
    if (fit.bins < 1) throw ConfigError("bin count must be positive");
    if (sources.empty()) throw ConfigError("no source files given");
    if (p_vars.empty()) throw ConfigError("no virtual physical variables given");
    for (const auto& s : sources)
        if (!fs::exists(s)) throw ConfigError("source file not found: " + s);
    std::set<std::string> incident;
    for (const auto* p : {&field, &network, &applog, &events}) {
        if (p->empty()) continue;
        if (!fs::exists(*p)) throw ConfigError("file not found: " + *p);
        incident.insert(fs::weakly_canonical(*p).string());
    }
    if (!baseline.empty()) {
        if (!fs::exists(baseline)) throw ConfigError("file not found: " + baseline);
        if (incident.contains(fs::weakly_canonical(baseline).string()))
            throw ConfigError("baseline file is also an incident telemetry file: " + baseline);
    }
}

taint::BuildOptions RunConfig::build_options() const {
    taint::BuildOptions o;
    o.catalogs = catalogs;
    o.value_types = value_types;
    return o;
}

script::ScriptProgram load_program(const std::vector<std::string>& paths) {
    std::vector<script::SourceFile> files;
    for (const auto& p : paths) {
        std::ifstream in(p);
        if (!in) throw Error("parse", "cannot open " + p);
        std::stringstream ss;
        ss << in.rdbuf();
        files.push_back({p, ss.str()});
    }
    return script::parse_sources(files);
}

taint::TaintGraph build_graph_stage(const RunConfig& cfg) {
    auto prog = stage("parse", [&] { return load_program(cfg.sources); });
    return stage("graph", [&] { return taint::build_graph(prog, cfg.p_vars, cfg.build_options()); });
}

telemetry::RecordStore ingest_stage(const RunConfig& cfg) {
    return stage("ingest", [&] {
        telemetry::RecordStore s;
        for (auto [path, ch] : {std::pair{&cfg.field, telemetry::Channel::d},
                                std::pair{&cfg.network, telemetry::Channel::n},
                                std::pair{&cfg.applog, telemetry::Channel::a}}) {
            if (path->empty()) continue;
            auto recs = telemetry::load_channel(*path, ch);
            s.records.insert(s.records.end(), recs.begin(), recs.end());
        }
        std::stable_sort(s.records.begin(), s.records.end(), [](const auto& x, const auto& y) {
            if (x.t != y.t) return x.t < y.t;
            if (x.channel != y.channel) return x.channel < y.channel;
            return x.variable < y.variable;
        });
        if (!cfg.baseline.empty()) s.baseline = telemetry::load_baseline(cfg.baseline);
        if (!cfg.events.empty()) s.events = telemetry::load_event_sequence(cfg.events);
        return s;
    });
}

RunArtifacts run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    RunArtifacts a;
    a.graph = build_graph_stage(cfg);
    auto [pruned, report] = stage("prune", [&] { return simplify::simplify(a.graph, cfg.prune); });
    a.pruned = std::move(pruned);
    a.prune_report = std::move(report);
    taint::assign_labels(a.pruned);
    a.store = ingest_stage(cfg);
    a.models = stage("deviation", [&] { return deviation::fit_all(a.store.baseline, cfg.fit); });
    a.ledger = stage("match", [&] { return pattern::match_all(a.pruned, a.store, a.models, cfg.match, cfg.path); });
    a.verdict = verdict::classify(a.ledger);
    return a;
}

} // namespace pvota
