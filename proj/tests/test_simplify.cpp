#include "support.hpp"
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "pvota/error.hpp"
#include "pvota/simplify.hpp"

using namespace pvota;
using namespace pvota::taint;
using simplify::PruneOp;

namespace {

NodeId add(TaintGraph& g, const std::string& entity, int stmt, NodeKind kind, Subgraph sub = Subgraph::USG,
           bool copy = false) {
    NodeId id = g.add_node(entity, stmt);
    auto& n = g.node(id);
    n.kind = kind;
    n.subgraph = sub;
    n.pure_copy = copy;
    return id;
}

std::vector<PruneOp> ops(const simplify::PruneReport& r) {
    std::vector<PruneOp> out;
    for (const auto& x : r.removed) out.push_back(x.op);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

namespace std {
inline ostream& operator<<(ostream& os, PruneOp op) { return os << pvota::simplify::to_string(op); }
} // namespace std

TEST_CASE("copy chain between source and P_var collapses") {
    TaintGraph g;
    NodeId s = add(g, "api.read()", 0, NodeKind::Source);
    NodeId a = add(g, "a", 1, NodeKind::Auxiliary, Subgraph::USG, true);
    NodeId b = add(g, "b", 2, NodeKind::Auxiliary, Subgraph::USG, true);
    NodeId p = add(g, "p", 3, NodeKind::VirtualPhysical);
    g.add_edge(s, a, EdgeLabel::Assign);
    g.add_edge(a, b, EdgeLabel::Assign);
    g.add_edge(b, p, EdgeLabel::Assign);

    auto [out, rep] = simplify::simplify(g);
    CHECK(ops(rep) == std::vector<PruneOp>{PruneOp::ChainCollapse, PruneOp::ChainCollapse});
    CHECK(out.size() == 2);
    CHECK(out.has_edge(s, p));
    CHECK(rep.before_count == 4);
    CHECK(rep.after_count == 2);
    CHECK(rep.reduction_ratio() == doctest::Approx(0.5));
}

TEST_CASE("graph of protected nodes is left alone") {
    TaintGraph g;
    NodeId s = add(g, "api.read()", 0, NodeKind::Source);
    NodeId p = add(g, "p", 1, NodeKind::VirtualPhysical);
    NodeId k = add(g, "conn.send(p)", 2, NodeKind::Sink, Subgraph::LSG);
    g.add_edge(s, p, EdgeLabel::Assign);
    g.add_edge(p, k, EdgeLabel::ArgPass);
    auto [out, rep] = simplify::simplify(g);
    CHECK(rep.removed.empty());
    CHECK(out.size() == 3);
    CHECK(out.edge_count() == 2);
}

TEST_CASE("redefinition merges into one node") {
    TaintGraph g;
    NodeId p = add(g, "p", 0, NodeKind::VirtualPhysical);
    NodeId d1 = add(g, "d", 1, NodeKind::Auxiliary, Subgraph::LSG);
    NodeId d2 = add(g, "d", 2, NodeKind::Auxiliary, Subgraph::LSG);
    NodeId k = add(g, "conn.send(d)", 3, NodeKind::Sink, Subgraph::LSG);
    g.add_edge(p, d1, EdgeLabel::Assign);
    g.add_edge(d1, d2, EdgeLabel::Assign);
    g.add_edge(d2, k, EdgeLabel::ArgPass);
    auto [out, rep] = simplify::simplify(g);
    REQUIRE(rep.removed.size() == 1);
    CHECK(rep.removed[0].op == PruneOp::DuplicateMerge);
    CHECK(rep.removed[0].node == d2);
    CHECK(rep.removed[0].merged_into == d1);
    CHECK(out.has_edge(d1, k));
}

TEST_CASE("merge is refused when it would join parallel paths") {
    TaintGraph g;
    NodeId p = add(g, "p", 0, NodeKind::VirtualPhysical);
    NodeId d1 = add(g, "d", 1, NodeKind::ArrayObjectRef, Subgraph::LSG);
    NodeId d2 = add(g, "d", 2, NodeKind::ArrayObjectRef, Subgraph::LSG);
    NodeId k = add(g, "conn.send(d)", 3, NodeKind::Sink, Subgraph::LSG);
    g.add_edge(p, d1, EdgeLabel::Assign);
    g.add_edge(d1, d2, EdgeLabel::Assign);
    g.add_edge(d1, k, EdgeLabel::ArgPass);
    g.add_edge(d2, k, EdgeLabel::ArgPass);
    auto [out, rep] = simplify::simplify(g);
    CHECK(rep.removed.empty());
}

TEST_CASE("dead branches go only when a sink exists") {
    TaintGraph g;
    NodeId p = add(g, "p", 0, NodeKind::VirtualPhysical);
    NodeId x = add(g, "x", 1, NodeKind::Auxiliary, Subgraph::LSG);
    g.add_edge(p, x, EdgeLabel::Assign);
    CHECK(simplify::simplify(g).second.removed.empty());

    NodeId k = add(g, "conn.send(p)", 2, NodeKind::Sink, Subgraph::LSG);
    g.add_edge(p, k, EdgeLabel::ArgPass);
    auto [out, rep] = simplify::simplify(g);
    CHECK(ops(rep) == std::vector<PruneOp>{PruneOp::DeadBranchDrop});
    CHECK_FALSE(out.contains(x));
}

TEST_CASE("disabled operations are skipped") {
    TaintGraph g;
    NodeId s = add(g, "api.read()", 0, NodeKind::Source);
    NodeId a = add(g, "a", 1, NodeKind::Auxiliary, Subgraph::USG, true);
    NodeId p = add(g, "p", 2, NodeKind::VirtualPhysical);
    g.add_edge(s, a, EdgeLabel::Assign);
    g.add_edge(a, p, EdgeLabel::Assign);
    simplify::PrunePolicy policy;
    policy.chain_collapse = false;
    CHECK(simplify::simplify(g, policy).second.removed.empty());
    auto pj = simplify::PrunePolicy::from_json(policy.to_json());
    CHECK_FALSE(pj.chain_collapse);
    CHECK(pj.dead_branch_drop);
}

TEST_CASE("fixture graph shrinks from 57 to 41 and stays stable") {
    auto prog = script::parse_source(read_file(std::string(PVOTA_FIXTURE_DIR) + "/soap_server.der"));
    auto g = build_graph(prog, {"equipment_p_meas", "equipment_q_meas"});
    CHECK(g.size() == 57);
    CHECK(g.sources().size() == 2);
    CHECK(g.sinks().size() == 1);
    auto [out, rep] = simplify::simplify(g);
    CHECK(out.size() == 41);

    // Reachability among survivors is unchanged.
    for (const auto& [a, na] : out.nodes())
        for (const auto& [b, nb] : out.nodes())
            if (a != b) CHECK(g.reaches(a, b) == out.reaches(a, b));

    auto [again, rep2] = simplify::simplify(out);
    CHECK(rep2.removed.empty());
    CHECK(again.size() == out.size());

    assign_labels(out);
    std::map<std::string, std::string> labels;
    for (const auto& [id, n] : out.nodes()) labels[n.label] = n.entity;
    CHECK(labels["N0"] == "conn.get_response(t.TIMESERIES, message)");
    CHECK(labels["N8"] == "equipment_p_meas");
    CHECK(labels["N17"] == "reverse_value");
    CHECK(labels["N18"] == "forward_value");
    CHECK(labels["N19"] == "diff_msg");
    CHECK(labels["N27"] == "conn.send(input_topic, message)");
}

TEST_CASE("merge refused when it would connect a new source to a sink") {
    TaintGraph g;
    auto s1 = add(g, "api.read()", 0, NodeKind::Source);
    auto s2 = add(g, "api.poll()", 1, NodeKind::Source);
    auto a = add(g, "x", 2, NodeKind::Auxiliary);
    auto b = add(g, "x", 3, NodeKind::Auxiliary);
    auto t1 = add(g, "send(x)", 4, NodeKind::Sink);
    auto t2 = add(g, "emit(x)", 5, NodeKind::Sink);
    g.add_edge(s1, a, EdgeLabel::Assign);
    g.add_edge(a, t1, EdgeLabel::ArgPass);
    g.add_edge(a, b, EdgeLabel::Assign);
    g.add_edge(s2, b, EdgeLabel::Assign);
    g.add_edge(b, t2, EdgeLabel::ArgPass);
    auto [out, report] = simplify::simplify(g);
    CHECK(report.removed.empty());
    CHECK_FALSE(out.reaches(s2, t1));
}
