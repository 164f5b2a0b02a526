#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pudsim/compiler.hpp"

using namespace pudsim;

TEST_CASE("one-bit AND schedules to the canonical staging sequence") {
    auto nl = parse_netlist("input x y\nout = AND x y\noutput out\n");
    auto res = compile_netlist(nl);
    REQUIRE(res.program.serialize() ==
            "uprogram v1\n"
            "opcode bbop_out\n"
            "in x 1\n"
            "in y 1\n"
            "out out 1\n"
            "tmps 0\n"
            "acts 10\n"
            "set r.c0 0\n"
            "copy x.0 r.b0\n"
            "copy y.0 r.b1\n"
            "copy r.c0 r.b2\n"
            "tra r.b0 r.b1 r.b2\n"
            "copy r.b0 out.0\n"
            "end\n");
    REQUIRE(res.program.declared_acts == 10);
}

TEST_CASE("microprogram text round-trips and validates") {
    auto res = compile_netlist(parse_netlist(
        "input a b cin\n"
        "t1 = XOR a b\n"
        "sum = XOR t1 cin\n"
        "t2 = AND a b\n"
        "t3 = AND t1 cin\n"
        "cout = OR t2 t3\n"
        "output sum cout\n"));
    std::string text = res.program.serialize();
    auto parsed = MicroProgram::parse(text);
    REQUIRE(parsed.serialize() == text);

    SECTION("a tampered activation count is rejected") {
        auto broken = text;
        auto pos = broken.find("acts ");
        broken.replace(pos, broken.find('\n', pos) - pos, "acts 9999");
        CHECK_THROWS_AS(MicroProgram::parse(broken), ValidationError);
    }
    SECTION("missing end is rejected") {
        auto broken = text.substr(0, text.size() - 4);
        CHECK_THROWS_AS(MicroProgram::parse(broken), ValidationError);
    }
}

TEST_CASE("a majority chain stays within the staging pool") {
    auto nl = parse_netlist(
        "input a b x y z\n"
        "c = AND a b\n"
        "d = AND c x\n"
        "e = AND d y\n"
        "f = AND e z\n"
        "output f\n");
    auto res = compile_netlist(nl);
    REQUIRE(res.program.tmp_count <= 1);
}

TEST_CASE("seven simultaneously live values force a spill") {
    // Seven independent products, all still needed when the first OR runs.
    std::string text = "input";
    for (int i = 0; i < 7; ++i)
        text += " a" + std::to_string(i) + " b" + std::to_string(i);
    text += "\n";
    for (int i = 0; i < 7; ++i)
        text += "t" + std::to_string(i) + " = AND a" + std::to_string(i) + " b" +
                std::to_string(i) + "\n";
    std::string acc = "t0";
    for (int i = 1; i < 7; ++i) {
        std::string next = "o" + std::to_string(i);
        text += next + " = OR " + acc + " t" + std::to_string(i) + "\n";
        acc = next;
    }
    text += "output " + acc + "\n";
    auto res = compile_netlist(parse_netlist(text));
    REQUIRE(res.program.tmp_count >= 1);
    long spills = 0;
    for (const auto& op : res.program.ops)
        if (op.kind == UopKind::Copy && op.b.kind == RowSlot::Kind::Tmp) spills++;
    REQUIRE(spills >= 1);
}

TEST_CASE("optimized programs never need more activations") {
    std::vector<std::string> corpus = {
        "input a b cin\n"
        "t1 = XOR a b\nsum = XOR t1 cin\nt2 = AND a b\nt3 = AND t1 cin\n"
        "cout = OR t2 t3\noutput sum cout\n",
        "input a b c d\nx = AND a b\ny = AND c d\nz = OR x y\noutput z\n",
        "input a\nx = NOT a\ny = NOT x\noutput y\n",
    };
    for (const auto& text : corpus) {
        auto nl = parse_netlist(text);
        CompileOptions raw;
        raw.optimize = false;
        auto unopt = compile_netlist(nl, raw);
        auto opt = compile_netlist(nl);
        REQUIRE(opt.program.declared_acts <= unopt.program.declared_acts);
    }
    // The full adder strictly improves.
    auto nl = parse_netlist(corpus[0]);
    CompileOptions raw;
    raw.optimize = false;
    REQUIRE(compile_netlist(nl).program.declared_acts <
            compile_netlist(nl, raw).program.declared_acts);
}

TEST_CASE("compute region must hold at least three TRA rows") {
    CompileOptions opts;
    opts.region.b_rows = 2;
    CHECK_THROWS_AS(
        compile_netlist(parse_netlist("input x y\no = AND x y\noutput o\n"), opts),
        ValidationError);
}

namespace {

/// Host-side oracle for the ripple netlists, over every input pair.
void check_bitserial_tables(BitSerialOp op, int width) {
    auto nl = bitserial_netlist(op, width);
    auto tts = netlist_truth_tables(nl);
    const std::uint64_t lanes = 1ull << (2 * width);
    const std::uint64_t mask = width == 64 ? ~0ull : (1ull << width) - 1;
    for (std::uint64_t row = 0; row < lanes; ++row) {
        std::uint64_t a = row & mask;
        std::uint64_t b = (row >> width) & mask;
        std::uint64_t want = 0;
        switch (op) {
            case BitSerialOp::Add: want = (a + b) & mask; break;
            case BitSerialOp::Sub: want = (a - b) & mask; break;
            case BitSerialOp::And: want = a & b; break;
            case BitSerialOp::Or: want = a | b; break;
            case BitSerialOp::Xor: want = a ^ b; break;
            case BitSerialOp::Lt: want = a < b ? 1 : 0; break;
        }
        std::uint64_t got = 0;
        for (size_t o = 0; o < tts.size(); ++o)
            got |= static_cast<std::uint64_t>(tt_bit(tts[o], row)) << o;
        INFO("op " << to_string(op) << " w=" << width << " a=" << a << " b=" << b);
        REQUIRE(got == want);
    }
}

} // namespace

TEST_CASE("ripple netlists match host arithmetic") {
    for (int w : {1, 2, 3, 5}) {
        check_bitserial_tables(BitSerialOp::Add, w);
        check_bitserial_tables(BitSerialOp::Sub, w);
        check_bitserial_tables(BitSerialOp::Lt, w);
        check_bitserial_tables(BitSerialOp::And, w);
        check_bitserial_tables(BitSerialOp::Or, w);
        check_bitserial_tables(BitSerialOp::Xor, w);
    }
}

TEST_CASE("bitwise ops cost one staged majority per bit") {
    for (int w : {1, 2, 4, 8}) {
        auto res = compile_bitserial(BitSerialOp::And, w);
        REQUIRE(res.program.declared_acts == 9 * w + 1);
        REQUIRE(res.program.opcode == "bbop_and" + std::to_string(w));
    }
}

TEST_CASE("compilation is deterministic") {
    auto once = [] {
        return compile_bitserial(BitSerialOp::Add, 4).program.serialize();
    };
    REQUIRE(once() == once());
}
