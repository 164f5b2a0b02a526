#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pudsim/netlist.hpp"

using namespace pudsim;

namespace {

const char* kFullAdder =
    "# one-bit full adder\n"
    "input a b cin\n"
    "t1 = XOR a b\n"
    "sum = XOR t1 cin\n"
    "t2 = AND a b\n"
    "t3 = AND t1 cin\n"
    "cout = OR t2 t3\n"
    "output sum cout\n";

} // namespace

TEST_CASE("single-gate netlist parses") {
    auto nl = parse_netlist("input x y\no = AND x y\noutput o\n");
    REQUIRE(nl.gates.size() == 1);
    REQUIRE(nl.inputs.size() == 2);
    REQUIRE(nl.outputs == std::vector<std::string>{"o"});
    REQUIRE(nl.gates[0].op == GateOp::And2);
}

TEST_CASE("full adder: five gates, eleven after XOR expansion") {
    auto nl = parse_netlist(kFullAdder);
    REQUIRE(nl.gates.size() == 5);
    auto expanded = expand_xor(nl);
    REQUIRE(expanded.gates.size() == 11); // each XOR becomes OR + AND + NOT + AND
    for (const Gate& g : expanded.gates) REQUIRE(g.op != GateOp::Xor2);
}

TEST_CASE("parse errors carry line numbers") {
    SECTION("forward reference reads as a cycle or missing definition") {
        try {
            parse_netlist("input a\nx = AND a y\ny = AND a x\noutput x\n");
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SECTION("arity mismatch") {
        CHECK_THROWS_AS(parse_netlist("input a\nx = NOT a a\noutput x\n"), ValidationError);
        CHECK_THROWS_AS(parse_netlist("input a b\nx = AND a\noutput x\n"), ValidationError);
    }
    SECTION("unknown operator") {
        CHECK_THROWS_AS(parse_netlist("input a b\nx = NAND a b\noutput x\n"),
                        ValidationError);
    }
    SECTION("redefinition") {
        CHECK_THROWS_AS(parse_netlist("input a\na = NOT a\noutput a\n"), ValidationError);
    }
    SECTION("undeclared output") {
        CHECK_THROWS_AS(parse_netlist("input a\nx = NOT a\noutput y\n"), ValidationError);
    }
}

TEST_CASE("full adder truth tables match host arithmetic") {
    auto nl = parse_netlist(kFullAdder);
    auto tts = netlist_truth_tables(nl);
    REQUIRE(tts.size() == 2);
    for (std::uint64_t row = 0; row < 8; ++row) {
        int a = row & 1, b = (row >> 1) & 1, cin = (row >> 2) & 1;
        int total = a + b + cin;
        REQUIRE(tt_bit(tts[0], row) == ((total & 1) != 0)); // sum
        REQUIRE(tt_bit(tts[1], row) == (total >= 2));       // cout
    }
}

TEST_CASE("XOR expansion preserves the function") {
    auto nl = parse_netlist(kFullAdder);
    auto before = netlist_truth_tables(nl);
    auto after = netlist_truth_tables(expand_xor(nl));
    REQUIRE(before == after);
}

TEST_CASE("point evaluation agrees with truth tables") {
    auto nl = parse_netlist(kFullAdder);
    auto tts = netlist_truth_tables(nl);
    for (std::uint64_t row = 0; row < 8; ++row) {
        auto vals = netlist_eval(nl, row);
        REQUIRE(vals[0] == tt_bit(tts[0], row));
        REQUIRE(vals[1] == tt_bit(tts[1], row));
    }
}

TEST_CASE("variable tables beyond six inputs use whole-word blocks") {
    const int n = 8;
    for (int i = 0; i < n; ++i) {
        auto t = tt_var(i, n);
        REQUIRE(t.size() == static_cast<size_t>(tt_words(n)));
        for (std::uint64_t row = 0; row < (1u << n); ++row)
            REQUIRE(tt_bit(t, row) == (((row >> i) & 1) != 0));
    }
}
