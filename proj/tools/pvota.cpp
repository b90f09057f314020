// pvota: root-cause analysis of incidents in grid control software.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pvota/error.hpp"
#include "pvota/fixture.hpp"
#include "pvota/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pvota;

namespace {

constexpr int kUsageError = 2;

struct Inputs {
    std::string config, case_dir;
    std::vector<std::string> sources, p_vars;
    std::string field, network, applog, baseline, events;
    std::optional<int> bins;
    std::optional<double> tau_h, tau_m, tau_l;
    std::vector<std::string> path;
};

void add_program_flags(CLI::App* cmd, Inputs& in) {
    cmd->add_option("--source", in.sources, "Program source files")->delimiter(',');
    cmd->add_option("--p-vars", in.p_vars, "Virtual physical variables")->delimiter(',');
}

void add_telemetry_flags(CLI::App* cmd, Inputs& in) {
    cmd->add_option("--field", in.field, "Field device telemetry CSV");
    cmd->add_option("--network", in.network, "Network capture CSV");
    cmd->add_option("--applog", in.applog, "Application log");
    cmd->add_option("--baseline", in.baseline, "Benign baseline CSV");
    cmd->add_option("--events", in.events, "Event sequence CSV");
}

void add_match_flags(CLI::App* cmd, Inputs& in) {
    cmd->add_option("--bins", in.bins, "Histogram bin count");
    cmd->add_option("--tau-h", in.tau_h, "Probability threshold for H");
    cmd->add_option("--tau-m", in.tau_m, "Probability threshold for M");
    cmd->add_option("--tau-l", in.tau_l, "Probability threshold for L");
    cmd->add_option("--path", in.path, "Force the matched path (node labels)")->delimiter(',');
}

// Config file first (--case, --config or PVOTA_CONFIG), then flags on top.
RunConfig resolve(const Inputs& in) {
    RunConfig cfg;
    std::string file = in.config;
    if (!in.case_dir.empty()) file = (fs::path(in.case_dir) / "config.json").string();
    if (file.empty())
        if (const char* env = std::getenv("PVOTA_CONFIG")) file = env;
    if (!file.empty()) cfg = RunConfig::load(file);
    if (!in.sources.empty()) cfg.sources = in.sources;
    if (!in.p_vars.empty()) cfg.p_vars = in.p_vars;
    for (auto [flag, field] : {std::pair{&in.field, &cfg.field}, std::pair{&in.network, &cfg.network},
                               std::pair{&in.applog, &cfg.applog}, std::pair{&in.baseline, &cfg.baseline},
                               std::pair{&in.events, &cfg.events}})
        if (!flag->empty()) *field = *flag;
    if (in.bins) cfg.fit.bins = *in.bins;
    if (in.tau_h) cfg.match.thresholds.tau_h = *in.tau_h;
    if (in.tau_m) cfg.match.thresholds.tau_m = *in.tau_m;
    if (in.tau_l) cfg.match.thresholds.tau_l = *in.tau_l;
    if (!in.path.empty()) cfg.path = in.path;
    return cfg;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("output", "cannot write " + path.string());
    f << text;
}

// "-" or empty means stdout.
void emit(const std::string& target, const std::string& text) {
    if (target.empty() || target == "-")
        std::cout << text;
    else
        write_file(target, text);
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Root-cause analysis of grid control software incidents"};
    app.require_subcommand(1);
    Inputs in;

    auto* analyze = app.add_subcommand("analyze", "Run the full pipeline and print a verdict");
    analyze->add_option("--case", in.case_dir, "Case directory holding config.json");
    analyze->add_option("--config", in.config, "Run configuration file");
    add_program_flags(analyze, in);
    add_telemetry_flags(analyze, in);
    add_match_flags(analyze, in);
    std::string out_dir, dot_out;
    bool as_json = false;
    analyze->add_option("--out", out_dir, "Directory for stage artifacts");
    analyze->add_option("--dot", dot_out, "Write the pruned graph as DOT");
    analyze->add_flag("--json", as_json, "Print the verdict as JSON");

    auto* graph = app.add_subcommand("graph", "Build the taint graph");
    graph->add_option("--config", in.config, "Run configuration file");
    add_program_flags(graph, in);
    std::string json_out;
    graph->add_option("--dot", dot_out, "DOT output file");
    graph->add_option("--json", json_out, "JSON output file");

    auto* prune = app.add_subcommand("prune", "Simplify a taint graph");
    std::string graph_in, report_out;
    prune->add_option("--graph", graph_in, "Graph JSON from `graph`")->required();
    prune->add_option("--json", json_out, "Pruned graph JSON output");
    prune->add_option("--report", report_out, "Prune report JSON output");
    prune->add_option("--dot", dot_out, "Pruned graph DOT output");

    auto* ingest = app.add_subcommand("ingest", "Parse telemetry into a record store");
    ingest->add_option("--config", in.config, "Run configuration file");
    add_telemetry_flags(ingest, in);
    ingest->add_option("--json", json_out, "Record store JSON output");

    auto* match = app.add_subcommand("match", "Match patterns on a pruned graph and record store");
    std::string records_in;
    match->add_option("--config", in.config, "Run configuration file");
    match->add_option("--graph", graph_in, "Pruned graph JSON")->required();
    match->add_option("--records", records_in, "Record store JSON from `ingest`")->required();
    add_match_flags(match, in);
    match->add_option("--json", json_out, "Match ledger JSON output");

    auto* classify = app.add_subcommand("classify", "Classify a match ledger");
    std::string ledger_in;
    classify->add_option("--ledger", ledger_in, "Match ledger JSON from `match`")->required();
    classify->add_flag("--json", as_json, "Print the verdict as JSON");

    auto* gen = app.add_subcommand("gen-fixture", "Generate a reference case");
    int case_id = 1;
    std::uint64_t seed = 20240601;
    std::string gen_out, program = "../soap_server.der";
    gen->add_option("--case", case_id, "Case number")->required()->check(CLI::Range(1, 4));
    gen->add_option("--seed", seed, "Random seed");
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--program", program, "Program path recorded in config.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kUsageError;
    }

    try {
        if (*analyze) {
            RunConfig cfg = resolve(in);
            auto a = run_pipeline(cfg);
            std::string dot = taint::to_dot(a.pruned);
            if (!dot_out.empty()) write_file(dot_out, dot);
            std::string dot_ref = dot_out.empty() && !out_dir.empty() ? "pruned.dot" : dot_out;
            if (!out_dir.empty()) {
                fs::path o(out_dir);
                write_file(o / "config.json", dump(cfg.to_json()));
                write_file(o / "graph.json", dump(taint::to_json(a.graph)));
                write_file(o / "graph.dot", taint::to_dot(a.graph));
                write_file(o / "pruned.json", dump(taint::to_json(a.pruned)));
                write_file(o / "pruned.dot", dot);
                write_file(o / "prune_report.json", dump(a.prune_report.to_json()));
                write_file(o / "records.json", dump(a.store.to_json()));
                write_file(o / "models.json", dump(deviation::to_json(a.models)));
                write_file(o / "ledger.json", dump(a.ledger.to_json()));
                write_file(o / "verdict.json", dump(verdict::render_json(a.verdict, a.ledger, dot_ref)));
                write_file(o / "report.md", verdict::render_markdown(a.verdict, a.ledger, dot_ref));
            }
            if (as_json)
                std::cout << dump(verdict::render_json(a.verdict, a.ledger, dot_ref));
            else
                std::cout << verdict::render_markdown(a.verdict, a.ledger, dot_ref);
            return verdict::exit_code(a.verdict.cause);
        }
        if (*graph) {
            RunConfig cfg = resolve(in);
            if (cfg.sources.empty() || cfg.p_vars.empty()) throw ConfigError("graph needs --source and --p-vars");
            auto g = build_graph_stage(cfg);
            if (!dot_out.empty()) emit(dot_out, taint::to_dot(g));
            if (!json_out.empty() || dot_out.empty()) emit(json_out, dump(taint::to_json(g)));
            std::size_t sources = 0, sinks = 0;
            for (const auto& [id, n] : g.nodes()) {
                sources += n.kind == taint::NodeKind::Source;
                sinks += n.kind == taint::NodeKind::Sink;
            }
            std::cerr << g.nodes().size() << " nodes, " << sources << " source(s), " << sinks << " sink(s)\n";
            return 0;
        }
        if (*prune) {
            auto g = taint::graph_from_json(read_json(graph_in));
            auto [pruned, report] = simplify::simplify(g);
            taint::assign_labels(pruned);
            if (!report_out.empty()) emit(report_out, dump(report.to_json()));
            if (!dot_out.empty()) emit(dot_out, taint::to_dot(pruned));
            if (!json_out.empty() || dot_out.empty()) emit(json_out, dump(taint::to_json(pruned)));
            std::cerr << report.before_count << " -> " << report.after_count << " nodes\n";
            return 0;
        }
        if (*ingest) {
            RunConfig cfg = resolve(in);
            emit(json_out, dump(ingest_stage(cfg).to_json()));
            return 0;
        }
        if (*match) {
            RunConfig cfg = resolve(in);
            cfg.match.thresholds.validate();
            auto g = taint::graph_from_json(read_json(graph_in));
            auto store = telemetry::RecordStore::from_json(read_json(records_in));
            auto models = deviation::fit_all(store.baseline, cfg.fit);
            auto ledger = pattern::match_all(g, store, models, cfg.match, cfg.path);
            emit(json_out, dump(ledger.to_json()));
            return 0;
        }
        if (*classify) {
            auto ledger = pattern::MatchLedger::from_json(read_json(ledger_in));
            auto v = verdict::classify(ledger);
            if (as_json)
                std::cout << dump(verdict::render_json(v, ledger));
            else
                std::cout << verdict::render_markdown(v, ledger);
            return verdict::exit_code(v.cause);
        }
        if (*gen) {
            fixture::write(fixture::generate(case_id, seed, program), gen_out);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kUsageError;
}
