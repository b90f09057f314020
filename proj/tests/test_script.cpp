#include "support.hpp"
#include <doctest.h>

#include "pvota/defuse.hpp"
#include "pvota/error.hpp"
#include "pvota/script.hpp"

using namespace pvota::script;

namespace {

std::vector<StmtId> reaching(const ScriptProgram& prog, const DefUseChains& c, StmtId stmt, std::string_view name) {
    const Stmt& s = prog.stmt(stmt);
    for (std::size_t i = 0; i < s.sources.size(); ++i)
        if (s.sources[i].name == name) return c.def_stmts(UseSite{stmt, static_cast<int>(i)});
    FAIL("no source " << name);
    return {};
}

} // namespace

TEST_CASE("straight-line def-use") {
    auto prog = parse_source("x = get_input()\nz = x\nw = y + z\n");
    auto c = defuse_chains(prog);
    CHECK(reaching(prog, c, 1, "x") == std::vector<StmtId>{0});
    CHECK(reaching(prog, c, 2, "z") == std::vector<StmtId>{1});
    CHECK(reaching(prog, c, 2, "y").empty());
    REQUIRE(prog.warnings.size() == 1);
    CHECK(prog.warnings[0].message.find("'y'") != std::string::npos);
}

TEST_CASE("redefinition kills earlier definition") {
    auto prog = parse_source("x = 1\nx = 2\ny = x\n");
    auto c = defuse_chains(prog);
    CHECK(reaching(prog, c, 2, "x") == std::vector<StmtId>{1});
}

TEST_CASE("loop self dependence") {
    auto prog = parse_source("d = 0\nwhile d < 10:\n    d = d + 1\n");
    auto c = defuse_chains(prog);
    CHECK(reaching(prog, c, 2, "d") == std::vector<StmtId>{0, 2});
}

TEST_CASE("both branches reach the join") {
    auto prog = parse_source("if c:\n    a = 1\nelse:\n    a = 2\nb = a\n");
    auto c = defuse_chains(prog);
    CHECK(reaching(prog, c, 3, "a") == std::vector<StmtId>{1, 2});
}

TEST_CASE("strict names") {
    ParseOptions opts;
    opts.strict_names = true;
    CHECK_THROWS_AS(parse_source("a = b\n", opts), pvota::UnresolvedName);
    CHECK_NOTHROW(parse_source("import json\na = json.dumps(1)\n", opts));
}

TEST_CASE("rejects constructs outside the subset") {
    for (const char* src : {"try:\n    a = 1\nexcept E:\n    pass\n", "f = lambda x: x\n", "a = [x for x in y]\n",
                            "with open(p) as f:\n    pass\n", "@dec\ndef f():\n    pass\n", "a = b if c else d\n",
                            "a = f\"{x}\"\n", "a = b[1:2]\n", "def f(*args):\n    pass\n"}) {
        CAPTURE(src);
        CHECK_THROWS_AS(parse_source(src), pvota::SyntaxOutsideSubset);
    }
}

TEST_CASE("print then parse is idempotent") {
    const char* src =
        "import json\n"
        "from gridappsd import GridAPPSD, topics as t\n"
        "class App(object):\n"
        "    def __init__(self, conn, n=3):\n"
        "        self.conn = conn\n"
        "        self.values = [1, 2.5, 'a']\n"
        "    def run(self, x):\n"
        "        for i in range(len(self.values)):\n"
        "            if x > 2 and not i:\n"
        "                x += -i ** 2\n"
        "            elif x == 1:\n"
        "                self.values[i] = {'k': (x, i)}\n"
        "            else:\n"
        "                pass\n"
        "        return self.conn.send('topic', json.dumps(x, indent=2))\n"
        "app = App(GridAPPSD('u', 'p'))\n"
        "app.run((1 + 2) * 3)\n";
    auto p1 = parse_source(src);
    std::string once = print_program(p1);
    auto p2 = parse_source(once);
    CHECK(print_program(p2) == once);
    CHECK(to_json(p1, false) == to_json(p2, false));
}

TEST_CASE("call resolution and keyword normalization") {
    auto prog = parse_source(
        "def f(a, b):\n    return a\n"
        "class C:\n    def __init__(self, v):\n        self.v = v\n    def g(self):\n        return self.h(1)\n"
        "    def h(self, q):\n        return self.v\n"
        "r = f(b=2, a=1)\nc = C(3)\n");
    const Stmt& call = prog.stmt(prog.top_level[2]);
    REQUIRE(call.callee());
    CHECK(*call.callee()->resolved_function == "f");
    REQUIRE(call.callee()->args.size() == 2);
    CHECK(render(*call.callee()->args[0]) == "1");
    const Stmt& ctor = prog.stmt(prog.top_level[3]);
    CHECK(ctor.callee()->constructor);
    CHECK(*ctor.callee()->resolved_function == "C.__init__");
    const FunctionDef* g = prog.function("C.g");
    REQUIRE(g);
    CHECK(*prog.stmt(g->body[0]).callee()->resolved_function == "C.h");

    auto c = defuse_chains(prog);
    const FunctionDef* h = prog.function("C.h");
    CHECK(reaching(prog, c, h->body[0], "self.v") == std::vector<StmtId>{prog.function("C.__init__")->body[0]});
}

TEST_CASE("object-bound call statements define the receiver weakly") {
    auto prog = parse_source("m = Msg()\nm.add(1, 2)\nm.flush()\nz = m.items\n");
    CHECK(prog.stmt(1).targets.size() == 1);
    CHECK(prog.stmt(1).targets[0].mutation);
    CHECK(prog.stmt(2).targets.empty());
    auto c = defuse_chains(prog);
    CHECK(reaching(prog, c, 3, "m.items") == std::vector<StmtId>{0, 1});
}
