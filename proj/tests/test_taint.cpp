#include "support.hpp"
#include <doctest.h>

#include <algorithm>

#include "pvota/error.hpp"
#include "pvota/taint.hpp"

using namespace pvota;
using namespace pvota::taint;

namespace {

std::vector<std::string> entities(const TaintGraph& g, NodeKind k) {
    std::vector<std::string> out;
    for (const auto& [id, n] : g.nodes())
        if (n.kind == k) out.push_back(n.entity);
    std::sort(out.begin(), out.end());
    return out;
}

NodeId node_named(const TaintGraph& g, const std::string& entity) {
    for (const auto& [id, n] : g.nodes())
        if (n.entity == entity) return id;
    FAIL("missing node " << entity);
    return -1;
}

const char* kProgram =
    "from gridappsd import GridAPPSD, topics as t\n"
    "import json\n"
    "def f5(x, y):\n"
    "    d = x + y\n"
    "    d = d + 1\n"
    "    return d\n"
    "def run():\n"
    "    username = 'system'\n"
    "    password = 'manager'\n"
    "    conn = GridAPPSD(username, password)\n"
    "    message = {'q': 1}\n"
    "    response = conn.get_response(t.TIMESERIES, message)\n"
    "    a = response['data']\n"
    "    c = 2\n"
    "    z = f5(a, c)\n"
    "    p = z\n"
    "    out = p * 2\n"
    "    conn.send('topic', json.dumps(out))\n";

} // namespace

TEST_CASE("weights along a three node chain") {
    auto prog = script::parse_source("import api\nv = api.read()\nw = v\np = w\n");
    auto chains = script::defuse_chains(prog);
    auto g = build_usg(prog, chains, {"p"});
    assign_weights(g);
    CHECK(g.node(node_named(g, "p")).weight == 1.0);
    CHECK(g.node(node_named(g, "w")).weight == 1.5);
    CHECK(g.node(node_named(g, "v")).weight == 2.0);
    CHECK(g.node(node_named(g, "api.read()")).weight == 3.0);
}

TEST_CASE("P_var assigned from a literal is a single node") {
    auto prog = script::parse_source("p = 5\n");
    auto chains = script::defuse_chains(prog);
    auto g = build_usg(prog, chains, {"p"});
    CHECK(g.size() == 1);
    assign_weights(g);
    CHECK(trim_to_sources(g) == 1);
    CHECK(g.size() == 1);
    CHECK_THROWS_AS(build_usg(prog, chains, {"q"}), PVarNotFound);
}

TEST_CASE("backtracking enters callees at return statements") {
    auto prog = script::parse_source(kProgram);
    auto g = build_graph(prog, {"p"});
    CHECK(entities(g, NodeKind::Source) ==
          std::vector<std::string>{"GridAPPSD(username, password)", "conn.get_response(t.TIMESERIES, message)"});
    CHECK(entities(g, NodeKind::Sink) == std::vector<std::string>{"conn.send('topic', json.dumps(out))"});
    NodeId ret = node_named(g, "return d");
    NodeId call = node_named(g, "f5(a, c)");
    CHECK(g.has_edge(ret, call));
    NodeId x = node_named(g, "x");
    CHECK(g.has_edge(node_named(g, "a"), x));
    // `y` receives only the constant `c`, which lies above every source.
    for (const auto& [id, n] : g.nodes()) CHECK(n.entity != "c");
    for (const auto& [id, n] : g.nodes()) CAPTURE(n.entity);
}

TEST_CASE("forward tracking through tainted parameters only") {
    auto prog = script::parse_source(
        "import api\n"
        "def my_func(x, y, z):\n"
        "    r = x\n"
        "    q = y\n"
        "    return r\n"
        "p = api.read()\n"
        "k = my_func(p, 1, 2)\n"
        "api.send(k)\n");
    auto chains = script::defuse_chains(prog);
    TaintGraph g;
    build_lsg(prog, chains, {"p"}, g);
    CHECK(g.find("x", 1));
    CHECK_FALSE(g.find("y", 1));
    CHECK_FALSE(g.find("q", 3));
    CHECK(g.find("k", 6));
    CHECK(entities(g, NodeKind::Sink) == std::vector<std::string>{"api.send(k)"});
}

TEST_CASE("unread P_var is an unterminated single node") {
    auto prog = script::parse_source("import api\np = api.read()\n");
    auto chains = script::defuse_chains(prog);
    TaintGraph g;
    build_lsg(prog, chains, {"p"}, g);
    REQUIRE(g.size() == 1);
    CHECK(g.nodes().begin()->second.unterminated);
}

TEST_CASE("callbacks attach through tainted members in name order") {
    auto prog = script::parse_source(
        "import api\n"
        "class App:\n"
        "    def __init__(self):\n"
        "        self.conn = api.connect()\n"
        "    def start(self):\n"
        "        p = api.read()\n"
        "        self.last = p\n"
        "    def _on_tick(self, m):\n"
        "        self.conn.send(self.last)\n"
        "    def _on_message(self, m):\n"
        "        v = self.last\n"
        "        self.conn.publish(v)\n"
        "    def _on_idle(self, m):\n"
        "        w = self.conn\n");
    auto chains = script::defuse_chains(prog);
    TaintGraph g;
    build_lsg(prog, chains, {"p"}, g);
    CHECK(g.sinks().empty());
    auto attached = attach_callbacks(prog, chains, g);
    CHECK(attached == std::vector<std::string>{"App._on_message", "App._on_tick"});
    CHECK(g.sinks().size() == 2);
}
