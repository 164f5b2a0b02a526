#pragma once

#include <cstdint>
#include <string>

#include "pudsim/errors.hpp"

namespace pudsim {

/// Physical organization of one simulated chip.
///
/// A bank is a stack of subarrays; a subarray is a row of mats sharing a row
/// address space; a mat contributes columns_per_mat bitlines and one
/// hff_width_bits-wide helper flip-flop at its column interface.
///
/// The top dcc_rows_per_subarray rows of every subarray are dual-contact
/// cells: each has a second, negation wordline that connects the cell to the
/// bitline-bar side of its sense-amp stripe. Negation wordlines are addressed
/// as alias row ids [rows_per_subarray, rows_per_subarray + dcc), aliasing
/// cells [rows - dcc, rows). Activating a cell's data id puts it on the true
/// wire; activating its negation id puts it on the bar wire.
struct ChipGeometry {
    int banks = 1;
    int subarrays_per_bank = 2;
    int mats_per_subarray = 2;
    int rows_per_subarray = 16;
    int columns_per_mat = 8;
    int hff_width_bits = 4;
    int dcc_rows_per_subarray = 2;

    int subarray_columns() const { return mats_per_subarray * columns_per_mat; }
    int rows_per_bank() const { return subarrays_per_bank * rows_per_subarray; }
    int total_rows() const { return banks * rows_per_bank(); }

    /// Row ids addressable by commands: data wordlines plus negation aliases.
    int row_addr_span() const { return rows_per_subarray + dcc_rows_per_subarray; }

    bool is_dcc_cell(int row) const {
        return row >= rows_per_subarray - dcc_rows_per_subarray && row < rows_per_subarray;
    }
    bool is_negation_row(int row) const { return row >= rows_per_subarray; }
    /// Negation wordline id for a dual-contact cell.
    int negation_row(int row) const { return row + dcc_rows_per_subarray; }
    /// Cell (data row) a command row id refers to.
    int data_row_of(int row) const {
        return is_negation_row(row) ? row - dcc_rows_per_subarray : row;
    }

    void validate() const {
        if (banks < 1 || subarrays_per_bank < 1 || mats_per_subarray < 1 ||
            rows_per_subarray < 1 || columns_per_mat < 1 || hff_width_bits < 1)
            throw ValidationError("chip geometry: all counts must be >= 1");
        if (rows_per_subarray % 2 != 0)
            throw ValidationError("chip geometry: rows_per_subarray must be even");
        if (columns_per_mat % hff_width_bits != 0)
            throw ValidationError("chip geometry: hff_width_bits must divide columns_per_mat");
        if (dcc_rows_per_subarray < 0 || dcc_rows_per_subarray >= rows_per_subarray)
            throw ValidationError("chip geometry: dcc_rows_per_subarray out of range");
    }
};

/// Address of one row: (bank, subarray, row-within-subarray).
/// Serialized as a single flat id so trace files stay one-token-per-row.
struct RowAddr {
    int bank = 0;
    int subarray = 0;
    int row = 0;

    friend bool operator==(const RowAddr&, const RowAddr&) = default;
    friend auto operator<=>(const RowAddr&, const RowAddr&) = default;

    long flat(const ChipGeometry& g) const {
        return (static_cast<long>(bank) * g.subarrays_per_bank + subarray) *
                   g.row_addr_span() + row;
    }
    static RowAddr from_flat(const ChipGeometry& g, long id) {
        RowAddr a;
        a.row = static_cast<int>(id % g.row_addr_span());
        id /= g.row_addr_span();
        a.subarray = static_cast<int>(id % g.subarrays_per_bank);
        a.bank = static_cast<int>(id / g.subarrays_per_bank);
        return a;
    }
    std::string str(const ChipGeometry& g) const { return std::to_string(flat(g)); }
};

/// Per-bitline disturbance model. sigma is the std-dev of the Gaussian added
/// to every participating bitline immediately before sensing (VDD units).
/// Fixed per-bitline offsets are drawn once per chip with std-dev offset_sigma.
/// sigma == 0 and offset_sigma == 0 gives a fully deterministic chip.
struct NoiseModel {
    double sigma = 0.0;
    double offset_sigma = 0.0;
    std::uint64_t seed = 0;
    double environment_factor = 1.0; // scales sigma; stand-in for temperature/voltage stress

    double effective_sigma() const { return sigma * environment_factor; }

    void validate() const {
        if (sigma < 0 || offset_sigma < 0)
            throw ValidationError("noise model: sigma values must be >= 0");
        if (environment_factor < 0)
            throw ValidationError("noise model: environment_factor must be >= 0");
    }
};

enum class DataPattern { AllZeros, AllOnes, Checkerboard, Random };

inline const char* to_string(DataPattern p) {
    switch (p) {
        case DataPattern::AllZeros: return "all0";
        case DataPattern::AllOnes: return "all1";
        case DataPattern::Checkerboard: return "checker";
        case DataPattern::Random: return "random";
    }
    return "?";
}

inline DataPattern data_pattern_from_string(const std::string& s) {
    if (s == "all0" || s == "zeros") return DataPattern::AllZeros;
    if (s == "all1" || s == "ones") return DataPattern::AllOnes;
    if (s == "checker" || s == "checkerboard") return DataPattern::Checkerboard;
    if (s == "random") return DataPattern::Random;
    throw ValidationError("unknown data pattern: " + s);
}

} // namespace pudsim
