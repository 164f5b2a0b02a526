#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pudsim/chip.hpp"

using namespace pudsim;

TEST_CASE("geometry validation rejects bad configs") {
    ChipGeometry g = oracles::small_geometry();
    CHECK_NOTHROW(g.validate());

    ChipGeometry zero = g;
    zero.mats_per_subarray = 0;
    CHECK_THROWS_AS(zero.validate(), ValidationError);

    ChipGeometry odd = g;
    odd.rows_per_subarray = 15;
    CHECK_THROWS_AS(odd.validate(), ValidationError);

    ChipGeometry hff = g;
    hff.hff_width_bits = 3; // does not divide 8
    CHECK_THROWS_AS(hff.validate(), ValidationError);
}

TEST_CASE("init patterns") {
    ChipGeometry g = oracles::small_geometry();

    SECTION("all zeros") {
        auto chip = oracles::make_chip(g, 0.0, 7, DataPattern::AllZeros);
        for (int s = 0; s < g.subarrays_per_bank; ++s)
            for (int r = 0; r < g.rows_per_subarray; ++r)
                for (int c = 0; c < g.subarray_columns(); ++c)
                    REQUIRE(chip.cell({0, s, r}, c) == 0.0);
    }
    SECTION("checkerboard is (r+c) mod 2") {
        auto chip = oracles::make_chip(g, 0.0, 7, DataPattern::Checkerboard);
        for (int r = 0; r < g.rows_per_subarray; ++r)
            for (int c = 0; c < g.subarray_columns(); ++c)
                REQUIRE(chip.cell({0, 0, r}, c) == ((r + c) % 2 ? 1.0 : 0.0));
    }
    SECTION("seeded random is reproducible") {
        auto a = oracles::make_chip(g, 0.0, 7, DataPattern::Random);
        auto b = oracles::make_chip(g, 0.0, 7, DataPattern::Random);
        REQUIRE(a.serialize_str() == b.serialize_str());
    }
}

TEST_CASE("logical write/read round trip") {
    ChipGeometry g = oracles::small_geometry();
    auto chip = oracles::make_chip(g);
    const int W = g.subarray_columns();

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 3; ++trial) {
        auto bits = oracles::random_bits(W, rng);
        RowAddr r{0, 1, 2 + trial};
        chip.write_row_logical(r, bits);
        auto back = chip.read_row_bits(r);
        REQUIRE(back == bits);
    }

    CHECK_THROWS_AS(chip.write_row_logical({0, 0, 0}, std::vector<std::uint8_t>(W - 1, 0)),
                    ValidationError);
}

TEST_CASE("read of all-ones row and frac indeterminacy") {
    ChipGeometry g = oracles::small_geometry();
    auto chip = oracles::make_chip(g, 0.0, 1, DataPattern::AllOnes);
    auto tri = chip.read_row_logical({0, 0, 3});
    for (auto b : tri) REQUIRE(b == Bit3::One);

    chip.store_frac({0, 0, 3}, {5});
    tri = chip.read_row_logical({0, 0, 3});
    REQUIRE(tri[5] == Bit3::Frac);
    REQUIRE(tri[4] == Bit3::One);
    CHECK_THROWS_AS(chip.read_row_bits({0, 0, 3}), ProtocolError);
}

TEST_CASE("store_frac parks a whole row at VDD/2") {
    ChipGeometry g = oracles::small_geometry();
    auto chip = oracles::make_chip(g);
    chip.store_frac_row({0, 0, 4});
    for (auto b : chip.read_row_logical({0, 0, 4})) REQUIRE(b == Bit3::Frac);
}

TEST_CASE("snapshot and restore are exact") {
    ChipGeometry g = oracles::small_geometry();
    auto chip = oracles::make_chip(g, 0.05, 11, DataPattern::Random);
    for (int trial = 0; trial < 3; ++trial) {
        auto snap = chip.snapshot();
        std::mt19937_64 rng(trial);
        chip.write_row_logical({0, 0, trial}, oracles::random_bits(g.subarray_columns(), rng));
        REQUIRE(chip.serialize_str() != snap.serialize_str());
        chip.restore(snap);
        REQUIRE(chip.serialize_str() == snap.serialize_str());
        REQUIRE(chip.state_hash() == snap.state_hash());
    }
}

TEST_CASE("serialization format is canonical") {
    ChipGeometry g;
    g.banks = 1;
    g.subarrays_per_bank = 1;
    g.mats_per_subarray = 1;
    g.rows_per_subarray = 2;
    g.columns_per_mat = 4;
    g.hff_width_bits = 4;
    g.dcc_rows_per_subarray = 0;
    auto chip = oracles::make_chip(g, 0.0, 1, DataPattern::Checkerboard);
    chip.store_frac({0, 0, 0}, {0});
    std::string expect =
        "pudsim-chip v1\n"
        "geometry banks=1 subarrays=1 mats=1 rows=2 cols=4 hff=4 dcc=0\n"
        "bank 0 subarray 0\n"
        "0.5000 1.0000 0.0000 1.0000\n"
        "1.0000 0.0000 1.0000 0.0000\n";
    REQUIRE(chip.serialize_str() == expect);
}

TEST_CASE("planted bitline offsets are queryable") {
    ChipGeometry g = oracles::small_geometry();
    auto chip = oracles::make_chip(g);
    REQUIRE(chip.bitline_offset(0, 0, 3) == 0.0);
    chip.plant_bitline_offset(0, 0, 3, 0.25);
    REQUIRE(chip.bitline_offset(0, 0, 3) == 0.25);
}
