#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pudsim/command.hpp"
#include "pudsim/errors.hpp"
#include "pudsim/geometry.hpp"

namespace pudsim {

/// Tri-state logical cell readout. Frac denotes a cell parked at VDD/2, where
/// thresholding is undefined.
enum class Bit3 : std::int8_t { Zero = 0, One = 1, Frac = -1 };

namespace detail {

/// Box-Muller without the usual second-value cache: every call consumes
/// exactly two engine outputs, which keeps draw sequences reproducible across
/// snapshots and independent of the sigma they are later scaled by.
inline double unit_normal(std::mt19937_64& rng) {
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    double u1 = (static_cast<double>(rng()) + 1.0) / (static_cast<double>(std::mt19937_64::max()) + 2.0);
    double u2 = (static_cast<double>(rng()) + 1.0) / (static_cast<double>(std::mt19937_64::max()) + 2.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace detail

/// 4-bit helper flip-flop at one mat's column interface. A column RD latches
/// it; with the enable held high the latch survives a precharge and drives the
/// next same-mat WR instead of the command's data.
struct HffLatch {
    std::uint32_t value = 0;
    bool enabled = false;
};

/// Electrical state of one subarray: cell voltages (row-major), the per-column
/// bitline wire, and which rows are currently connected (with the mat mask in
/// force when each row connected).
struct SubarrayState {
    std::vector<double> cells;        // rows * columns
    std::vector<double> bitline_v;    // per column
    std::vector<bool> precharged;     // per column
    std::map<int, std::vector<bool>> connected; // row -> per-mat connectivity
    std::vector<HffLatch> hffs;       // per mat
};

/// Bookkeeping for the one in-flight activation window. `wires` are bitline
/// wire ids (wire i = subarray i's bitline; wire == subarrays_per_bank is the
/// dummy reference strip closing the last open-bitline pair). Rails hold the
/// sensed full-rail value per wire per column once the operation latches.
struct ActiveOp {
    enum class Phase { Sharing, Latched };
    int bank = 0;
    std::set<int> wires;
    Phase phase = Phase::Sharing;
    bool interrupt_armed = false;
    std::map<int, std::vector<std::int8_t>> rails; // wire -> per column (-1 none, 0, 1)
};

/// Full state of one simulated chip. One ChipState is owned by one execution
/// context; independent chips may run in parallel freely.
class ChipState {
public:
    ChipState(ChipGeometry geometry, NoiseModel noise,
              DataPattern init = DataPattern::AllZeros)
        : geom_(geometry), noise_(noise), rng_(noise.seed) {
        geom_.validate();
        noise_.validate();
        const int W = geom_.subarray_columns();
        subarrays_.resize(static_cast<size_t>(geom_.banks) * geom_.subarrays_per_bank);
        for (auto& sa : subarrays_) {
            sa.cells.assign(static_cast<size_t>(geom_.rows_per_subarray) * W, 0.0);
            sa.bitline_v.assign(W, 0.5);
            sa.precharged.assign(W, true);
            sa.hffs.assign(geom_.mats_per_subarray, HffLatch{});
        }
        dummy_bitline_.assign(static_cast<size_t>(geom_.banks) * W, 0.5);
        pending_sector_.assign(geom_.mats_per_subarray, true);
        trace.per_mat_acts.assign(geom_.mats_per_subarray, 0);

        std::mt19937_64 offset_rng(noise_.seed ^ 0x0ff5e75f00dULL);
        offsets_.assign(subarrays_.size() * W, 0.0);
        if (noise_.offset_sigma > 0)
            for (double& o : offsets_) o = noise_.offset_sigma * detail::unit_normal(offset_rng);

        init_pattern(init);
    }

    const ChipGeometry& geometry() const { return geom_; }
    const NoiseModel& noise() const { return noise_; }

    // --- cell access ---------------------------------------------------------

    /// Accepts negation-wordline aliases and resolves them to the cell.
    double cell(const RowAddr& r, int col) const {
        return sub(r.bank, r.subarray).cells[cell_index(geom_.data_row_of(r.row), col)];
    }
    void set_cell(const RowAddr& r, int col, double v) {
        sub(r.bank, r.subarray).cells[cell_index(geom_.data_row_of(r.row), col)] = v;
    }

    SubarrayState& sub(int bank, int subarray) {
        check_addr(bank, subarray);
        return subarrays_[static_cast<size_t>(bank) * geom_.subarrays_per_bank + subarray];
    }
    const SubarrayState& sub(int bank, int subarray) const {
        check_addr(bank, subarray);
        return subarrays_[static_cast<size_t>(bank) * geom_.subarrays_per_bank + subarray];
    }

    // --- logical (memory-controller) interface -------------------------------

    /// Threshold read of a quiescent row. Cells at exactly 0.5 report Frac.
    std::vector<Bit3> read_row_logical(const RowAddr& r) const {
        check_row(r);
        const SubarrayState& sa = sub(r.bank, r.subarray);
        if (!sa.connected.empty())
            throw ProtocolError("read_row_logical: subarray has an activation in flight");
        std::vector<Bit3> out(geom_.subarray_columns());
        for (int c = 0; c < geom_.subarray_columns(); ++c) {
            double v = sa.cells[cell_index(r.row, c)];
            out[c] = v > 0.5 ? Bit3::One : (v < 0.5 ? Bit3::Zero : Bit3::Frac);
        }
        return out;
    }

    /// Strict variant: indeterminate cells are an error.
    std::vector<std::uint8_t> read_row_bits(const RowAddr& r) const {
        auto tri = read_row_logical(r);
        std::vector<std::uint8_t> out(tri.size());
        for (size_t i = 0; i < tri.size(); ++i) {
            if (tri[i] == Bit3::Frac)
                throw ProtocolError("read_row_bits: indeterminate cell at column " +
                                    std::to_string(i));
            out[i] = tri[i] == Bit3::One ? 1 : 0;
        }
        return out;
    }

    void write_row_logical(const RowAddr& r, const std::vector<std::uint8_t>& bits) {
        check_row(r);
        if (static_cast<int>(bits.size()) != geom_.subarray_columns())
            throw ValidationError("write_row_logical: bit vector length " +
                                  std::to_string(bits.size()) + " != subarray width " +
                                  std::to_string(geom_.subarray_columns()));
        SubarrayState& sa = sub(r.bank, r.subarray);
        if (sa.connected.count(r.row))
            throw ProtocolError("write_row_logical: row is activated");
        for (int c = 0; c < geom_.subarray_columns(); ++c)
            sa.cells[cell_index(r.row, c)] = bits[c] ? 1.0 : 0.0;
    }

    /// Parks the selected cells at exactly VDD/2 (an interrupted-restore store,
    /// modeled as an atomic primitive).
    void store_frac(const RowAddr& r, const std::vector<int>& columns) {
        check_row(r);
        SubarrayState& sa = sub(r.bank, r.subarray);
        if (sa.connected.count(r.row))
            throw ProtocolError("store_frac: row is activated");
        for (int c : columns) {
            check_col(c);
            sa.cells[cell_index(r.row, c)] = 0.5;
        }
    }

    void store_frac_row(const RowAddr& r) {
        std::vector<int> cols(geom_.subarray_columns());
        for (int c = 0; c < geom_.subarray_columns(); ++c) cols[c] = c;
        store_frac(r, cols);
    }

    // --- snapshots ------------------------------------------------------------

    ChipState snapshot() const { return *this; }
    void restore(const ChipState& snap) { *this = snap; }

    // --- noise ----------------------------------------------------------------

    double bitline_offset(int bank, int subarray, int col) const {
        check_addr(bank, subarray);
        check_col(col);
        return offsets_[(static_cast<size_t>(bank) * geom_.subarrays_per_bank + subarray) *
                            geom_.subarray_columns() + col];
    }
    /// Test hook: force a specific fixed offset onto one bitline.
    void plant_bitline_offset(int bank, int subarray, int col, double offset) {
        check_addr(bank, subarray);
        check_col(col);
        offsets_[(static_cast<size_t>(bank) * geom_.subarrays_per_bank + subarray) *
                     geom_.subarray_columns() + col] = offset;
    }

    double draw_unit_normal() { return detail::unit_normal(rng_); }

    // --- wire-level state (used by the command engine) -------------------------

    double dummy_wire(int bank, int col) const {
        return dummy_bitline_[static_cast<size_t>(bank) * geom_.subarray_columns() + col];
    }
    void set_dummy_wire(int bank, int col, double v) {
        dummy_bitline_[static_cast<size_t>(bank) * geom_.subarray_columns() + col] = v;
    }

    std::vector<bool> pending_sector() const { return pending_sector_; }
    void set_pending_sector(std::vector<bool> mask) { pending_sector_ = std::move(mask); }

    std::optional<ActiveOp>& active_op() { return active_op_; }
    const std::optional<ActiveOp>& active_op() const { return active_op_; }

    std::uint32_t io_latch = 0;   // last column data moved over the global I/O path
    CommandTrace trace;           // cumulative command log for this chip
    bool record_commands = true;  // counters always run; harness loops can skip the list

    // --- serialization ----------------------------------------------------------

    /// Structured-text dump: geometry header plus row-major cell voltages at
    /// fixed 4-decimal precision. Intended for golden-file comparisons, so the
    /// format is canonical byte-for-byte.
    void serialize(std::ostream& os) const {
        os << "pudsim-chip v1\n";
        os << "geometry banks=" << geom_.banks << " subarrays=" << geom_.subarrays_per_bank
           << " mats=" << geom_.mats_per_subarray << " rows=" << geom_.rows_per_subarray
           << " cols=" << geom_.columns_per_mat << " hff=" << geom_.hff_width_bits
           << " dcc=" << geom_.dcc_rows_per_subarray << "\n";
        char buf[16];
        for (int b = 0; b < geom_.banks; ++b) {
            for (int s = 0; s < geom_.subarrays_per_bank; ++s) {
                os << "bank " << b << " subarray " << s << "\n";
                const SubarrayState& sa = sub(b, s);
                for (int r = 0; r < geom_.rows_per_subarray; ++r) {
                    for (int c = 0; c < geom_.subarray_columns(); ++c) {
                        std::snprintf(buf, sizeof(buf), "%.4f", sa.cells[cell_index(r, c)]);
                        if (c) os << ' ';
                        os << buf;
                    }
                    os << "\n";
                }
            }
        }
    }

    std::string serialize_str() const {
        std::ostringstream os;
        serialize(os);
        return os.str();
    }

    std::string state_hash() const {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(detail::fnv1a(serialize_str())));
        return buf;
    }

private:
    size_t cell_index(int row, int col) const {
        return static_cast<size_t>(row) * geom_.subarray_columns() + col;
    }
    void check_addr(int bank, int subarray) const {
        if (bank < 0 || bank >= geom_.banks || subarray < 0 ||
            subarray >= geom_.subarrays_per_bank)
            throw ValidationError("bad bank/subarray address");
    }
    void check_row(const RowAddr& r) const {
        check_addr(r.bank, r.subarray);
        if (r.row < 0 || r.row >= geom_.rows_per_subarray)
            throw ValidationError("row index out of range: " + std::to_string(r.row));
    }
    void check_col(int col) const {
        if (col < 0 || col >= geom_.subarray_columns())
            throw ValidationError("column index out of range: " + std::to_string(col));
    }

    void init_pattern(DataPattern p) {
        std::mt19937_64 init_rng(noise_.seed ^ 0xa5a5a5a51234ULL);
        for (auto& sa : subarrays_) {
            for (int r = 0; r < geom_.rows_per_subarray; ++r) {
                for (int c = 0; c < geom_.subarray_columns(); ++c) {
                    double v = 0.0;
                    switch (p) {
                        case DataPattern::AllZeros: v = 0.0; break;
                        case DataPattern::AllOnes: v = 1.0; break;
                        case DataPattern::Checkerboard: v = ((r + c) % 2) ? 1.0 : 0.0; break;
                        case DataPattern::Random: v = (init_rng() & 1) ? 1.0 : 0.0; break;
                    }
                    sa.cells[cell_index(r, c)] = v;
                }
            }
        }
    }

    ChipGeometry geom_;
    NoiseModel noise_;
    std::vector<SubarrayState> subarrays_;
    std::vector<double> dummy_bitline_;
    std::vector<double> offsets_;
    std::vector<bool> pending_sector_;
    std::optional<ActiveOp> active_op_;
    std::mt19937_64 rng_;
};

} // namespace pudsim
