#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include "oracles.hpp"
#include "pudsim/primitives.hpp"

using namespace pudsim;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string golden_path(const std::string& name) {
    return std::string(PUDSIM_TEST_DATA_DIR) + "/golden/" + name;
}

} // namespace

TEST_CASE("row_clone copies and leaves the source intact") {
    auto g = oracles::small_geometry();

    SECTION("explicit pattern") {
        auto chip = oracles::make_chip(g);
        CommandEngine eng(chip);
        std::vector<std::uint8_t> bits{1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0, 1};
        chip.write_row_logical({0, 0, 2}, bits);
        row_clone(eng, {0, 0, 2}, {0, 0, 9});
        REQUIRE(chip.read_row_bits({0, 0, 9}) == bits);
        REQUIRE(chip.read_row_bits({0, 0, 2}) == bits);
    }
    SECTION("self copy is the identity") {
        auto chip = oracles::make_chip(g, 0.0, 5, DataPattern::Random);
        auto before = chip.snapshot();
        CommandEngine eng(chip);
        row_clone(eng, {0, 0, 4}, {0, 0, 4});
        REQUIRE(chip.serialize_str() == before.serialize_str());
    }
    SECTION("random contents match the host copy oracle over 100 seeds") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto chip = oracles::make_chip(g, 0.0, seed, DataPattern::Random);
            CommandEngine eng(chip);
            auto src = chip.read_row_bits({0, 0, 3});
            row_clone(eng, {0, 0, 3}, {0, 0, 11});
            REQUIRE(chip.read_row_bits({0, 0, 11}) == src);
            REQUIRE(chip.read_row_bits({0, 0, 3}) == src);
        }
    }
    SECTION("cross-subarray copies are rejected") {
        auto chip = oracles::make_chip(g);
        CommandEngine eng(chip);
        CHECK_THROWS_AS(row_clone(eng, {0, 0, 1}, {0, 1, 1}), ValidationError);
    }
}

TEST_CASE("not_op complements") {
    ChipGeometry g = oracles::small_geometry();
    g.subarrays_per_bank = 3;

    SECTION("all zeros become all ones") {
        auto chip = oracles::make_chip(g);
        CommandEngine eng(chip);
        not_op(eng, {0, 0, 2}, {0, 1, 6});
        for (auto b : chip.read_row_bits({0, 1, 6})) REQUIRE(b == 1);
    }
    SECTION("double negation restores the value") {
        auto chip = oracles::make_chip(g, 0.0, 3, DataPattern::Random);
        CommandEngine eng(chip);
        auto original = chip.read_row_bits({0, 0, 5});
        not_op(eng, {0, 0, 5}, {0, 1, 5});
        not_op(eng, {0, 1, 5}, {0, 2, 5});
        REQUIRE(chip.read_row_bits({0, 2, 5}) == original);
    }
    SECTION("random rows match the host complement oracle over 100 seeds") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto chip = oracles::make_chip(g, 0.0, seed, DataPattern::Random);
            CommandEngine eng(chip);
            auto src = chip.read_row_bits({0, 0, 7});
            not_op(eng, {0, 0, 7}, {0, 1, 9});
            auto dst = chip.read_row_bits({0, 1, 9});
            for (size_t c = 0; c < src.size(); ++c) REQUIRE(dst[c] == 1 - src[c]);
            REQUIRE(chip.read_row_bits({0, 0, 7}) == src);
        }
    }
    SECTION("destination on the source side is an addressing error") {
        auto chip = oracles::make_chip(g);
        CommandEngine eng(chip);
        CHECK_THROWS_AS(not_op(eng, {0, 0, 2}, {0, 0, 6}), ValidationError);
    }
    SECTION("dual-contact mode: same result, shorter ACT-ACT-PRE trace") {
        auto chip = oracles::make_chip(g, 0.0, 9, DataPattern::Random);
        CommandEngine eng(chip);
        auto src = chip.read_row_bits({0, 0, 3});
        RowAddr dcc{0, 0, g.rows_per_subarray - 1};
        auto cmds = not_op(eng, {0, 0, 3}, dcc, NotMode::DccRow);
        auto dst = chip.read_row_bits(dcc);
        for (size_t c = 0; c < src.size(); ++c) REQUIRE(dst[c] == 1 - src[c]);
        REQUIRE(cmds.size() == 3);
        REQUIRE(cmds[0].kind == CommandKind::ACT);
        REQUIRE(cmds[1].kind == CommandKind::ACT);
        REQUIRE(cmds[2].kind == CommandKind::PRE);
        CHECK_THROWS_AS(not_op(eng, {0, 0, 3}, {0, 0, 6}, NotMode::DccRow),
                        ValidationError);
    }
}

TEST_CASE("multi_row_copy fans one row out") {
    auto g = oracles::wide_geometry(64);

    SECTION("ones into 31 zeroed rows") {
        auto chip = oracles::make_chip(g);
        CommandEngine eng(chip);
        chip.write_row_logical({0, 0, 0},
                               std::vector<std::uint8_t>(g.subarray_columns(), 1));
        std::vector<RowAddr> dsts;
        for (int r = 1; r <= 31; ++r) dsts.push_back({0, 0, r});
        multi_row_copy(eng, {0, 0, 0}, dsts);
        for (int r = 0; r <= 31; ++r)
            for (auto b : chip.read_row_bits({0, 0, r})) REQUIRE(b == 1);
    }
    SECTION("empty destination set only refreshes the source") {
        auto chip = oracles::make_chip(g, 0.0, 7, DataPattern::Random);
        auto before = chip.snapshot();
        CommandEngine eng(chip);
        auto cmds = multi_row_copy(eng, {0, 0, 5}, {});
        REQUIRE(chip.serialize_str() == before.serialize_str());
        REQUIRE(cmds.size() == 2);
    }
    SECTION("random sources, destination counts 1/7/15/31") {
        for (int n : {1, 7, 15, 31}) {
            auto chip = oracles::make_chip(g, 0.0, 100 + n, DataPattern::Random);
            CommandEngine eng(chip);
            auto src = chip.read_row_bits({0, 0, 40});
            std::vector<RowAddr> dsts;
            for (int r = 0; r < n; ++r) dsts.push_back({0, 0, r});
            multi_row_copy(eng, {0, 0, 40}, dsts);
            REQUIRE(chip.read_row_bits({0, 0, 40}) == src);
            for (const auto& d : dsts) REQUIRE(chip.read_row_bits(d) == src);
        }
    }
    SECTION("applying twice equals applying once") {
        auto once = [&](int times) {
            auto chip = oracles::make_chip(g, 0.0, 55, DataPattern::Random);
            CommandEngine eng(chip);
            std::vector<RowAddr> dsts{{0, 0, 1}, {0, 0, 2}, {0, 0, 3}};
            for (int i = 0; i < times; ++i) multi_row_copy(eng, {0, 0, 0}, dsts);
            return chip.serialize_str();
        };
        REQUIRE(once(1) == once(2));
    }
    SECTION("more than 31 destinations is unsupported") {
        auto chip = oracles::make_chip(g);
        CommandEngine eng(chip);
        std::vector<RowAddr> dsts;
        for (int r = 1; r <= 32; ++r) dsts.push_back({0, 0, r});
        CHECK_THROWS_AS(multi_row_copy(eng, {0, 0, 0}, dsts), ValidationError);
    }
}

TEST_CASE("tra_maj3 truth table and absorption") {
    auto g = oracles::small_geometry();

    SECTION("brute force over all 8 combinations") {
        for (int combo = 0; combo < 8; ++combo) {
            auto chip = oracles::make_chip(g);
            CommandEngine eng(chip);
            const int W = g.subarray_columns();
            int a = combo & 1, b = (combo >> 1) & 1, c = (combo >> 2) & 1;
            chip.write_row_logical({0, 0, 0}, std::vector<std::uint8_t>(W, a));
            chip.write_row_logical({0, 0, 1}, std::vector<std::uint8_t>(W, b));
            chip.write_row_logical({0, 0, 2}, std::vector<std::uint8_t>(W, c));
            tra_maj3(eng, {RowAddr{0, 0, 0}, RowAddr{0, 0, 1}, RowAddr{0, 0, 2}});
            int want = oracles::majority3(a, b, c);
            for (int r = 0; r < 3; ++r)
                for (auto bit : chip.read_row_bits({0, 0, r}))
                    REQUIRE(static_cast<int>(bit) == want);
        }
    }
    SECTION("majority absorbs a duplicated operand") {
        // M(x,x,y) = x for all four (x,y) combinations, checked bitwise.
        for (int x = 0; x <= 1; ++x)
            for (int y = 0; y <= 1; ++y) {
                auto chip = oracles::make_chip(g);
                CommandEngine eng(chip);
                const int W = g.subarray_columns();
                chip.write_row_logical({0, 0, 0}, std::vector<std::uint8_t>(W, x));
                chip.write_row_logical({0, 0, 1}, std::vector<std::uint8_t>(W, x));
                chip.write_row_logical({0, 0, 2}, std::vector<std::uint8_t>(W, y));
                tra_maj3(eng, {RowAddr{0, 0, 0}, RowAddr{0, 0, 1}, RowAddr{0, 0, 2}});
                for (auto bit : chip.read_row_bits({0, 0, 0}))
                    REQUIRE(static_cast<int>(bit) == x);
            }
    }
    SECTION("AND and OR fall out of presetting the third row") {
        for (int preset = 0; preset <= 1; ++preset) {
            for (int combo = 0; combo < 4; ++combo) {
                auto chip = oracles::make_chip(g);
                CommandEngine eng(chip);
                const int W = g.subarray_columns();
                int a = combo & 1, b = (combo >> 1) & 1;
                chip.write_row_logical({0, 0, 0}, std::vector<std::uint8_t>(W, a));
                chip.write_row_logical({0, 0, 1}, std::vector<std::uint8_t>(W, b));
                chip.write_row_logical({0, 0, 2}, std::vector<std::uint8_t>(W, preset));
                tra_maj3(eng, {RowAddr{0, 0, 0}, RowAddr{0, 0, 1}, RowAddr{0, 0, 2}});
                int want = preset ? (a | b) : (a & b);
                REQUIRE(static_cast<int>(chip.read_row_bits({0, 0, 0})[0]) == want);
            }
        }
    }
}

TEST_CASE("reference compositions discriminate every input weight") {
    // Enumerate all compute-side weights for each supported fan-in and check
    // the reference level separates exactly the right cases.
    for (int n : {2, 4, 8, 16}) {
        auto and_comp = RefComposition::for_op(MultiOpKind::And, n);
        REQUIRE(and_comp.vdd_rows == n - 1);
        REQUIRE(and_comp.frac_rows == 1);
        double v_and = and_comp.v_ref();
        REQUIRE(v_and > static_cast<double>(n - 1) / n);
        REQUIRE(v_and < 1.0);
        for (int w = 0; w <= n; ++w) {
            bool com_wins = static_cast<double>(w) / n > v_and;
            REQUIRE(com_wins == (w == n));
        }

        auto or_comp = RefComposition::for_op(MultiOpKind::Or, n);
        double v_or = or_comp.v_ref();
        REQUIRE(v_or > 0.0);
        REQUIRE(v_or < 1.0 / n);
        for (int w = 0; w <= n; ++w) {
            bool com_wins = static_cast<double>(w) / n > v_or;
            REQUIRE(com_wins == (w >= 1));
        }
    }
    REQUIRE(RefComposition::for_op(MultiOpKind::And, 2).v_ref() == 0.75);
    REQUIRE(RefComposition::for_op(MultiOpKind::And, 16).v_ref() == 31.0 / 32.0);
    REQUIRE(RefComposition::for_op(MultiOpKind::Or, 16).v_ref() == 1.0 / 32.0);

    RefComposition bad;
    bad.n_inputs = 4;
    bad.vdd_rows = 2;
    bad.frac_rows = 0;
    bad.gnd_rows = 2; // v_ref = 0.5, not in (3/4, 1)
    bad.op_kind = MultiOpKind::And;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

namespace {

struct MultiOpFixture {
    MultiOpFixture(int n, ChipGeometry g)
        : geom(g), chip(oracles::make_chip(geom)), eng(chip), n(n) {
        for (int r = 0; r < n; ++r) {
            inputs.push_back({0, 0, r});
            refs.push_back({0, 1, r});
        }
    }
    /// Writes per-column weights: column c gets `weight[c]` ones across inputs.
    void load_weights(const std::vector<int>& weights) {
        const int W = geom.subarray_columns();
        for (int r = 0; r < n; ++r) {
            std::vector<std::uint8_t> bits(W, 0);
            for (int c = 0; c < W; ++c) bits[c] = r < weights[c] ? 1 : 0;
            chip.write_row_logical(inputs[r], bits);
        }
    }
    ChipGeometry geom;
    ChipState chip;
    CommandEngine eng;
    int n;
    std::vector<RowAddr> inputs, refs;
};

} // namespace

TEST_CASE("multi-input AND/NAND/OR/NOR over exhaustive per-bitline weights") {
    for (int n : {2, 4, 8, 16}) {
        // Enough columns so every weight 0..n appears.
        auto g = oracles::wide_geometry(64, 3, 8);
        MultiOpFixture fx(n, g);
        const int W = g.subarray_columns();
        std::vector<int> weights(W);
        for (int c = 0; c < W; ++c) weights[c] = c % (n + 1);
        fx.load_weights(weights);

        SECTION("and/nand n=" + std::to_string(n)) {
            make_reference(fx.chip, RefComposition::for_op(MultiOpKind::And, n), fx.refs);
            multi_input_op(fx.eng, MultiOpKind::And, fx.inputs, fx.refs);
            auto com = fx.chip.read_row_bits(fx.inputs[0]);
            auto ref = fx.chip.read_row_bits(fx.refs[0]);
            for (int c = 0; c < W; ++c) {
                REQUIRE(static_cast<int>(com[c]) == (weights[c] == n ? 1 : 0));
                REQUIRE(static_cast<int>(ref[c]) == (weights[c] == n ? 0 : 1));
            }
        }
        SECTION("or/nor n=" + std::to_string(n)) {
            make_reference(fx.chip, RefComposition::for_op(MultiOpKind::Or, n), fx.refs);
            multi_input_op(fx.eng, MultiOpKind::Or, fx.inputs, fx.refs);
            auto com = fx.chip.read_row_bits(fx.inputs[0]);
            auto ref = fx.chip.read_row_bits(fx.refs[0]);
            for (int c = 0; c < W; ++c) {
                REQUIRE(static_cast<int>(com[c]) == (weights[c] >= 1 ? 1 : 0));
                REQUIRE(static_cast<int>(ref[c]) == (weights[c] >= 1 ? 0 : 1));
            }
        }
    }
}

TEST_CASE("the classic two-input walkthrough") {
    auto g = oracles::small_geometry();
    auto run = [&](int x, int y) {
        MultiOpFixture fx(2, g);
        std::vector<int> weights(g.subarray_columns(), x + y);
        fx.load_weights(weights);
        make_reference(fx.chip, RefComposition::for_op(MultiOpKind::And, 2), fx.refs);
        multi_input_op(fx.eng, MultiOpKind::And, fx.inputs, fx.refs);
        return std::pair(fx.chip.read_row_bits(fx.inputs[0])[0],
                         fx.chip.read_row_bits(fx.refs[0])[0]);
    };
    REQUIRE(run(1, 1) == std::pair<std::uint8_t, std::uint8_t>(1, 0));
    REQUIRE(run(0, 1) == std::pair<std::uint8_t, std::uint8_t>(0, 1));
}

TEST_CASE("reference must be composed before a multi-input op") {
    auto g = oracles::small_geometry();
    MultiOpFixture fx(2, g);
    fx.load_weights(std::vector<int>(g.subarray_columns(), 2));
    CHECK_THROWS_AS(multi_input_op(fx.eng, MultiOpKind::And, fx.inputs, fx.refs),
                    ValidationError);
    std::vector<RowAddr> three{{0, 0, 0}, {0, 0, 1}, {0, 0, 2}};
    CHECK_THROWS_AS(multi_input_op(fx.eng, MultiOpKind::And, three, fx.refs),
                    ValidationError);
}

TEST_CASE("NAND row equals a hardware NOT of the AND row") {
    // De Morgan on hardware, for every fan-in and a few random data draws.
    for (int n : {2, 4, 8, 16}) {
        ChipGeometry g = oracles::wide_geometry(64, 3, 8);
        g.subarrays_per_bank = 3;
        std::mt19937_64 rng(n);
        MultiOpFixture fx(n, g);
        const int W = g.subarray_columns();
        std::vector<int> weights(W);
        for (int c = 0; c < W; ++c) weights[c] = static_cast<int>(rng() % (n + 1));
        fx.load_weights(weights);
        make_reference(fx.chip, RefComposition::for_op(MultiOpKind::And, n), fx.refs);
        multi_input_op(fx.eng, MultiOpKind::And, fx.inputs, fx.refs);

        auto nand_row = fx.chip.read_row_bits(fx.refs[0]);
        // NOT the COM output (subarray 0) into a spare row of subarray 1.
        not_op(fx.eng, fx.inputs[0], {0, 1, 40});
        REQUIRE(fx.chip.read_row_bits({0, 1, 40}) == nand_row);
    }
}

TEST_CASE("trng sampling") {
    auto g = oracles::small_geometry();
    auto balanced_reset = [&](ChipState& chip) {
        const int W = g.subarray_columns();
        for (int r = 0; r < 4; ++r)
            chip.write_row_logical({0, 0, r},
                                   std::vector<std::uint8_t>(W, r % 2 == 0 ? 1 : 0));
    };
    std::vector<RowAddr> rows{{0, 0, 0}, {0, 0, 1}, {0, 0, 2}, {0, 0, 3}};

    SECTION("zero noise is a deterministic tie") {
        auto chip = oracles::make_chip(g, 0.0);
        CommandEngine eng(chip);
        balanced_reset(chip);
        CHECK_THROWS_AS(trng_sample(eng, rows), TieError);
    }
    SECTION("a balanced source is unbiased") {
        auto chip = oracles::make_chip(g, 0.05, 2024);
        CommandEngine eng(chip);
        long ones = 0, total = 0;
        for (int s = 0; s < 3000; ++s) {
            balanced_reset(chip);
            auto bits = trng_sample(eng, rows);
            for (auto b : bits) ones += b;
            total += static_cast<long>(bits.size());
        }
        double f = static_cast<double>(ones) / total;
        REQUIRE(f > 0.49);
        REQUIRE(f < 0.51);
    }
    SECTION("a planted offset biases one column by the closed-form amount") {
        const double sigma = 0.05, offset = 0.05;
        auto chip = oracles::make_chip(g, sigma, 77);
        chip.plant_bitline_offset(0, 0, 3, offset);
        CommandEngine eng(chip);
        long ones = 0, total = 0;
        for (int s = 0; s < 30000; ++s) {
            balanced_reset(chip);
            auto bits = trng_sample(eng, rows);
            ones += bits[3];
            total += 1;
        }
        // Both stripe wires take independent noise, so the threshold contest
        // sees the offset against sigma * sqrt(2).
        double expect = oracles::phi(offset / (sigma * std::sqrt(2.0)));
        double f = static_cast<double>(ones) / total;
        REQUIRE(std::abs(f - expect) < 0.01);
    }
    SECTION("unbalanced composition warns but still samples") {
        auto chip = oracles::make_chip(g, 0.05, 5);
        CommandEngine eng(chip);
        const int W = g.subarray_columns();
        for (int r = 0; r < 4; ++r)
            chip.write_row_logical({0, 0, r},
                                   std::vector<std::uint8_t>(W, r == 0 ? 1 : 0));
        std::ostringstream diag;
        auto bits = trng_sample(eng, rows, &diag);
        REQUIRE(bits.size() == static_cast<size_t>(W));
        REQUIRE(diag.str().find("biased") != std::string::npos);
    }
}

TEST_CASE("golden command traces") {
    SECTION("not") {
        auto g = oracles::small_geometry();
        auto chip = oracles::make_chip(g);
        CommandEngine eng(chip);
        auto cmds = not_op(eng, {0, 0, 2}, {0, 1, 6});
        REQUIRE(print_trace(cmds, g) == read_file(golden_path("not.trace")));
    }
    SECTION("multi_row_copy 31") {
        auto g = oracles::wide_geometry(64);
        auto chip = oracles::make_chip(g);
        CommandEngine eng(chip);
        std::vector<RowAddr> dsts;
        for (int r = 1; r <= 31; ++r) dsts.push_back({0, 0, r});
        auto cmds = multi_row_copy(eng, {0, 0, 0}, dsts);
        REQUIRE(print_trace(cmds, g) == read_file(golden_path("multicopy31.trace")));
    }
    SECTION("and16") {
        auto g = oracles::wide_geometry(64, 3, 8);
        MultiOpFixture fx(16, g);
        fx.load_weights(std::vector<int>(g.subarray_columns(), 16));
        make_reference(fx.chip, RefComposition::for_op(MultiOpKind::And, 16), fx.refs);
        auto cmds = multi_input_op(fx.eng, MultiOpKind::And, fx.inputs, fx.refs);
        REQUIRE(print_trace(cmds, fx.geom) == read_file(golden_path("and16.trace")));
    }
}

TEST_CASE("primitives refuse to run under a latched partial sector mask") {
    auto g = oracles::small_geometry();
    auto chip = oracles::make_chip(g);
    CommandEngine eng(chip);
    eng.issue(Command::pre({true, false}, TimingParams{}.tRP_ns));
    CHECK_THROWS_AS(row_clone(eng, {0, 0, 1}, {0, 0, 2}), ProtocolError);
    eng.issue(Command::pre(TimingParams{}.tRP_ns));
    CHECK_NOTHROW(row_clone(eng, {0, 0, 1}, {0, 0, 2}));
}
