#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pudsim/chip.hpp"
#include "pudsim/command.hpp"
#include "pudsim/errors.hpp"

namespace pudsim {

struct EngineConfig {
    TimingParams timing;
    /// Bitline-to-cell capacitance ratio. 0 makes charge sharing the plain
    /// mean of the connected cells; values in (0,1) blend in the precharge
    /// level for sensitivity studies.
    double bitline_cap_ratio = 0.0;

    void validate() const {
        timing.validate();
        if (bitline_cap_ratio < 0.0 || bitline_cap_ratio >= 1.0)
            throw ValidationError("engine: bitline_cap_ratio must lie in [0,1)");
    }
};

struct ExecReport {
    long acts = 0;
    long pres = 0;
    long rds = 0;
    long wrs = 0;
    double simulated_ns = 0.0;
    std::string state_hash;
};

/// Returns the simultaneous row set a hierarchical row decoder produces when
/// an interrupted precharge glitches it between addresses r1 and r2: the whole
/// 2^k-aligned block containing both. Real chips differ in which address bits
/// co-activate; an explicit caller-specified set is the escape hatch.
inline std::vector<RowAddr> decoder_rowset(const ChipGeometry& g, RowAddr r1, RowAddr r2,
                                           int block_log2) {
    if (r1.bank != r2.bank || r1.subarray != r2.subarray)
        throw ValidationError("decoder_rowset: rows must share a subarray");
    if (block_log2 < 0 || (1 << block_log2) > 32)
        throw ValidationError("decoder_rowset: sets larger than 32 rows are unsupported");
    int block = 1 << block_log2;
    int base = r1.row & ~(block - 1);
    if (r2.row < base || r2.row >= base + block)
        throw ValidationError("decoder_rowset: r2 outside r1's 2^k block");
    if (base + block > g.rows_per_subarray)
        throw ValidationError("decoder_rowset: block exceeds subarray");
    std::vector<RowAddr> out;
    for (int r = base; r < base + block; ++r)
        out.push_back(RowAddr{r1.bank, r1.subarray, r});
    return out;
}

/// Validates a caller-specified simultaneous row set (explicit decoder mode).
inline std::vector<RowAddr> decoder_rowset_explicit(const ChipGeometry& g,
                                                    std::vector<RowAddr> rows) {
    if (rows.empty()) throw ValidationError("decoder_rowset: empty row set");
    if (rows.size() > 32)
        throw ValidationError("decoder_rowset: sets larger than 32 rows are unsupported");
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    for (const RowAddr& r : rows) {
        if (r.bank != rows[0].bank || r.subarray != rows[0].subarray)
            throw ValidationError("decoder_rowset: rows must share a subarray");
        if (r.row < 0 || r.row >= g.rows_per_subarray)
            throw ValidationError("decoder_rowset: row out of range");
    }
    return rows;
}

/// Interprets timed commands as transitions on one ChipState.
///
/// The engine tracks at most one in-flight activation window. Within it:
///   - an ACT connects rows to their bitline wires (dual-contact rows connect
///     to the stripe's other wire) and equalizes charge,
///   - an ACT with delay >= tRAS resolves: per column the two wires of the
///     engaged open-bitline stripe are compared (idle wire reads as VDD/2),
///     the winner's side is driven to VDD, the loser's to GND, and every
///     connected cell is restored to its wire's rail,
///   - a PRE below the violation threshold interrupts: nothing is equalized,
///     rows stay connected, and the next ACT may extend the row set,
///   - an ACT joining an already-latched window writes the rail into the
///     newly connected cells (the copy mechanism),
///   - an ACT joining an unresolved window requires that interrupted PRE and
///     extends charge sharing (the multi-row activation mechanism).
class CommandEngine {
public:
    explicit CommandEngine(ChipState& chip, EngineConfig cfg = {})
        : chip_(chip), cfg_(cfg) {
        cfg_.validate();
    }

    ChipState& chip() { return chip_; }
    const EngineConfig& config() const { return cfg_; }

    void issue(const Command& cmd) {
        log(cmd);
        switch (cmd.kind) {
            case CommandKind::ACT: do_act(cmd); break;
            case CommandKind::PRE: do_pre(cmd); break;
            case CommandKind::RD: do_rd(cmd); break;
            case CommandKind::WR: do_wr(cmd); break;
            case CommandKind::NOP: break;
        }
    }

    ExecReport run_trace(const std::vector<Command>& cmds) {
        const long acts = chip_.trace.acts, pres = chip_.trace.pres;
        const long rds = chip_.trace.rds, wrs = chip_.trace.wrs;
        const double ns = chip_.trace.simulated_ns;
        for (const Command& c : cmds) issue(c);
        ExecReport r;
        r.acts = chip_.trace.acts - acts;
        r.pres = chip_.trace.pres - pres;
        r.rds = chip_.trace.rds - rds;
        r.wrs = chip_.trace.wrs - wrs;
        r.simulated_ns = chip_.trace.simulated_ns - ns;
        r.state_hash = chip_.state_hash();
        return r;
    }

    void run(const std::vector<Command>& cmds) {
        for (const Command& c : cmds) issue(c);
    }

private:
    const ChipGeometry& geom() const { return chip_.geometry(); }
    int width() const { return chip_.geometry().subarray_columns(); }
    int dummy_wire_id() const { return geom().subarrays_per_bank; }

    void log(const Command& cmd) {
        if (chip_.record_commands) chip_.trace.commands.push_back(cmd);
        switch (cmd.kind) {
            case CommandKind::ACT: {
                chip_.trace.acts++;
                auto mask = chip_.pending_sector();
                for (int m = 0; m < geom().mats_per_subarray; ++m)
                    if (mask[m]) chip_.trace.per_mat_acts[m]++;
                chip_.trace.simulated_ns += cmd.delay_after_ns;
                break;
            }
            case CommandKind::PRE:
                chip_.trace.pres++;
                chip_.trace.simulated_ns += cmd.delay_after_ns;
                break;
            case CommandKind::RD:
                chip_.trace.rds++;
                chip_.trace.simulated_ns += cfg_.timing.tRD_ns;
                break;
            case CommandKind::WR:
                chip_.trace.wrs++;
                chip_.trace.simulated_ns += cfg_.timing.tWR_ns;
                break;
            case CommandKind::NOP:
                chip_.trace.simulated_ns += cmd.delay_after_ns;
                break;
        }
    }

    // Wire a command row id lands on: the subarray's own bitline for data
    // wordlines, the stripe partner's (bar) for negation wordlines.
    int wire_of(const RowAddr& r) const {
        return r.subarray + (geom().is_negation_row(r.row) ? 1 : 0);
    }

    double wire_voltage(int bank, int wire, int col) const {
        if (wire == dummy_wire_id()) return chip_.dummy_wire(bank, col);
        return chip_.sub(bank, wire).bitline_v[col];
    }
    void set_wire_voltage(int bank, int wire, int col, double v) {
        if (wire == dummy_wire_id()) {
            chip_.set_dummy_wire(bank, col, v);
        } else {
            auto& sa = chip_.sub(bank, wire);
            sa.bitline_v[col] = v;
            sa.precharged[col] = false;
        }
    }
    double wire_offset(int bank, int wire, int col) const {
        if (wire == dummy_wire_id()) return 0.0;
        return chip_.bitline_offset(bank, wire, col);
    }

    // Counts and sums cell charge connected to `wire` at `col`, optionally
    // skipping rows listed in `exclude` (the rows being joined right now).
    struct WireLoad {
        int count = 0;
        double sum = 0.0;
    };
    WireLoad wire_load(int bank, int wire, int col) const {
        WireLoad load;
        const int mat = col / geom().columns_per_mat;
        auto scan = [&](int subarray, bool negation_side) {
            if (subarray < 0 || subarray >= geom().subarrays_per_bank) return;
            const SubarrayState& sa = chip_.sub(bank, subarray);
            for (const auto& [row, mats] : sa.connected) {
                if (geom().is_negation_row(row) != negation_side) continue;
                if (!mats[mat]) continue;
                load.count++;
                load.sum += sa.cells[static_cast<size_t>(geom().data_row_of(row)) * width() + col];
            }
        };
        scan(wire, false);     // data wordlines of this subarray
        scan(wire - 1, true);  // negation wordlines of the stripe partner
        return load;
    }

    void restore_wire_cells(int bank, int wire, int col, double v) {
        const int mat = col / geom().columns_per_mat;
        auto drive = [&](int subarray, bool negation_side) {
            if (subarray < 0 || subarray >= geom().subarrays_per_bank) return;
            SubarrayState& sa = chip_.sub(bank, subarray);
            for (auto& [row, mats] : sa.connected) {
                if (geom().is_negation_row(row) != negation_side) continue;
                if (!mats[mat]) continue;
                sa.cells[static_cast<size_t>(geom().data_row_of(row)) * width() + col] = v;
            }
        };
        drive(wire, false);
        drive(wire - 1, true);
    }

    void validate_act_rows(const std::vector<RowAddr>& rows) const {
        if (rows.empty()) throw ValidationError("ACT: empty row set");
        if (rows.size() > 32)
            throw ValidationError("ACT: row sets larger than 32 are unsupported");
        for (const RowAddr& r : rows) {
            if (r.bank != rows[0].bank || r.subarray != rows[0].subarray)
                throw ValidationError("ACT: all rows must lie in one subarray");
            if (r.bank < 0 || r.bank >= geom().banks || r.subarray < 0 ||
                r.subarray >= geom().subarrays_per_bank || r.row < 0 ||
                r.row >= geom().row_addr_span())
                throw ValidationError("ACT: row address out of range");
        }
        // Both wordlines of one dual-contact cell must never be up at once.
        for (const RowAddr& r : rows) {
            int other = -1;
            if (geom().is_negation_row(r.row)) other = r.row - geom().dcc_rows_per_subarray;
            else if (geom().is_dcc_cell(r.row)) other = geom().negation_row(r.row);
            if (other < 0) continue;
            const auto& sa = chip_.sub(r.bank, r.subarray);
            bool clash = sa.connected.count(other) > 0;
            for (const RowAddr& q : rows) clash = clash || q.row == other;
            if (clash)
                throw ProtocolError("ACT: both wordlines of dual-contact cell " +
                                    std::to_string(geom().data_row_of(r.row)) +
                                    " would be raised");
        }
    }

    // Connects rows under the current sector mask and equalizes charge on each
    // touched wire. Incremental joins are exact: a wire's accumulated charge
    // (cells plus bitline capacitance) is conserved, so the running mean over
    // join events equals the one-shot mean over all contributors.
    void connect_and_share(const std::vector<RowAddr>& rows) {
        ActiveOp& op = *chip_.active_op();
        const auto mask = chip_.pending_sector();
        const double beta = cfg_.bitline_cap_ratio;
        const int bank = rows[0].bank;

        // Which cells newly join, grouped by wire.
        struct Join {
            RowAddr row;
            std::vector<bool> added;
        };
        std::vector<Join> joins;
        for (const RowAddr& r : rows) {
            SubarrayState& sa = chip_.sub(r.bank, r.subarray);
            auto it = sa.connected.find(r.row);
            std::vector<bool> added(geom().mats_per_subarray, false);
            bool any = false;
            for (int m = 0; m < geom().mats_per_subarray; ++m) {
                bool had = it != sa.connected.end() && it->second[m];
                if (mask[m] && !had) {
                    added[m] = true;
                    any = true;
                }
            }
            if (!any) continue;
            joins.push_back({r, added});
        }

        for (const Join& j : joins) op.wires.insert(wire_of(j.row));
        if (!op.wires.empty() && *op.wires.rbegin() - *op.wires.begin() > 1)
            throw ProtocolError("ACT: rows do not share a sense-amp stripe");

        // Per column, fold the new charge into each touched wire.
        for (int col = 0; col < width(); ++col) {
            const int mat = col / geom().columns_per_mat;
            for (int wire : op.wires) {
                int n_add = 0;
                double sum_add = 0.0;
                for (const Join& j : joins) {
                    if (wire_of(j.row) != wire || !j.added[mat]) continue;
                    n_add++;
                    sum_add += chip_.cell(j.row, col);
                }
                if (n_add == 0) continue;
                // Joining rows are registered only after this loop, so the
                // load scan sees exactly the previously-connected cells.
                WireLoad prior = wire_load(bank, wire, col);
                double v_prior = wire_voltage(bank, wire, col);
                double v = (sum_add + (prior.count + beta) * v_prior) /
                           (prior.count + n_add + beta);
                set_wire_voltage(bank, wire, col, v);
                // All cells on the wire equalize with it.
                restore_wire_cells(bank, wire, col, v);
                for (const Join& j : joins)
                    if (wire_of(j.row) == wire && j.added[mat]) chip_.set_cell(j.row, col, v);
            }
        }

        for (const Join& j : joins) {
            SubarrayState& sa = chip_.sub(j.row.bank, j.row.subarray);
            auto& mats = sa.connected.try_emplace(j.row.row,
                             std::vector<bool>(geom().mats_per_subarray, false))
                             .first->second;
            for (int m = 0; m < geom().mats_per_subarray; ++m)
                if (j.added[m]) mats[m] = true;
        }

        if (op.wires.empty())
            throw ProtocolError("ACT: the sector mask excludes every mat");
    }

    std::pair<int, int> stripe_of(const ActiveOp& op) const {
        int lo, hi;
        if (op.wires.size() == 2) {
            lo = *op.wires.begin();
            hi = *op.wires.rbegin();
        } else {
            int w = *op.wires.begin();
            if (w == dummy_wire_id()) {
                lo = w - 1;
                hi = w;
            } else {
                lo = w;
                hi = w + 1;
            }
        }
        return {lo, hi};
    }

    void resolve(ActiveOp& op) {
        auto [lo, hi] = stripe_of(op);
        const int bank = op.bank;
        const double sigma = chip_.noise().effective_sigma();
        auto& rail_lo = op.rails.try_emplace(lo, std::vector<std::int8_t>(width(), -1))
                            .first->second;
        auto& rail_hi = op.rails.try_emplace(hi, std::vector<std::int8_t>(width(), -1))
                            .first->second;
        for (int col = 0; col < width(); ++col) {
            WireLoad load_lo = wire_load(bank, lo, col);
            WireLoad load_hi = wire_load(bank, hi, col);
            if (load_lo.count == 0 && load_hi.count == 0) continue;
            double v_lo = load_lo.count > 0 ? wire_voltage(bank, lo, col) : 0.5;
            double v_hi = load_hi.count > 0 ? wire_voltage(bank, hi, col) : 0.5;
            double z_lo = chip_.draw_unit_normal();
            double z_hi = chip_.draw_unit_normal();
            double e_lo = v_lo + wire_offset(bank, lo, col) + sigma * z_lo;
            double e_hi = v_hi + wire_offset(bank, hi, col) + sigma * z_hi;
            if (e_lo == e_hi)
                throw TieError("sensing tie: bitline equals reference at bank " +
                                   std::to_string(bank) + " subarray " + std::to_string(lo) +
                                   " column " + std::to_string(col),
                               bank, lo, col);
            bool lo_wins = e_lo > e_hi;
            rail_lo[col] = lo_wins ? 1 : 0;
            rail_hi[col] = lo_wins ? 0 : 1;
            set_wire_voltage(bank, lo, col, lo_wins ? 1.0 : 0.0);
            set_wire_voltage(bank, hi, col, lo_wins ? 0.0 : 1.0);
            restore_wire_cells(bank, lo, col, lo_wins ? 1.0 : 0.0);
            restore_wire_cells(bank, hi, col, lo_wins ? 0.0 : 1.0);
        }
        op.wires = {lo, hi};
        op.phase = ActiveOp::Phase::Latched;
    }

    // Joining rows onto a latched window: the driven rails overwrite the new
    // cells immediately, independent of their prior contents.
    void join_latched(const std::vector<RowAddr>& rows) {
        ActiveOp& op = *chip_.active_op();
        const auto mask = chip_.pending_sector();
        auto [lo, hi] = stripe_of(op);
        for (const RowAddr& r : rows) {
            int w = wire_of(r);
            if (w != lo && w != hi)
                throw ProtocolError("ACT: row joins a different sense-amp stripe than the "
                                    "latched operation");
            SubarrayState& sa = chip_.sub(r.bank, r.subarray);
            auto& mats = sa.connected.try_emplace(r.row,
                             std::vector<bool>(geom().mats_per_subarray, false))
                             .first->second;
            const auto& rails = op.rails.at(w);
            for (int m = 0; m < geom().mats_per_subarray; ++m) {
                if (!mask[m]) continue;
                mats[m] = true;
                for (int col = m * geom().columns_per_mat;
                     col < (m + 1) * geom().columns_per_mat; ++col) {
                    if (rails[col] < 0) continue; // column was never sensed
                    chip_.set_cell(r, col, rails[col] ? 1.0 : 0.0);
                }
            }
        }
    }

    void do_act(const Command& cmd) {
        validate_act_rows(cmd.rows);
        auto& slot = chip_.active_op();
        if (!slot) {
            slot.emplace();
            slot->bank = cmd.rows[0].bank;
            connect_and_share(cmd.rows);
            if (cmd.delay_after_ns >= cfg_.timing.tRAS_ns) resolve(*slot);
        } else {
            ActiveOp& op = *slot;
            if (op.bank != cmd.rows[0].bank)
                throw ProtocolError("ACT: another bank has an operation in flight");
            if (op.phase == ActiveOp::Phase::Latched) {
                join_latched(cmd.rows);
            } else {
                if (!op.interrupt_armed)
                    throw ProtocolError("ACT: subarray already has an unresolved activation; "
                                        "a violated PRE is required to extend it");
                connect_and_share(cmd.rows);
                if (cmd.delay_after_ns >= cfg_.timing.tRAS_ns) resolve(op);
            }
        }
        slot->interrupt_armed = false;
    }

    void do_pre(const Command& cmd) {
        if (cmd.sector) {
            if (static_cast<int>(cmd.sector->size()) != geom().mats_per_subarray)
                throw ValidationError("PRE: sector bitmask length != mats_per_subarray");
            chip_.set_pending_sector(*cmd.sector);
        } else {
            chip_.set_pending_sector(std::vector<bool>(geom().mats_per_subarray, true));
        }
        auto& slot = chip_.active_op();
        if (!slot) return;
        if (cmd.delay_after_ns < cfg_.timing.violation_threshold_ns) {
            slot->interrupt_armed = true;
            return;
        }
        // Completed precharge: disconnect everything and equalize the wires.
        const int bank = slot->bank;
        for (int s = 0; s < geom().subarrays_per_bank; ++s) {
            SubarrayState& sa = chip_.sub(bank, s);
            if (sa.connected.empty() && !slot->wires.count(s)) continue;
            sa.connected.clear();
            std::fill(sa.bitline_v.begin(), sa.bitline_v.end(), 0.5);
            std::fill(sa.precharged.begin(), sa.precharged.end(), true);
        }
        for (int col = 0; col < width(); ++col) chip_.set_dummy_wire(bank, col, 0.5);
        slot.reset();
    }

    std::pair<SubarrayState*, int> column_target(const Command& cmd) {
        auto& slot = chip_.active_op();
        if (!slot || slot->phase != ActiveOp::Phase::Latched)
            throw ProtocolError("RD/WR: no latched activation");
        if (geom().is_negation_row(cmd.row.row))
            throw ValidationError("RD/WR: negation wordlines have no column access");
        SubarrayState& sa = chip_.sub(cmd.row.bank, cmd.row.subarray);
        auto it = sa.connected.find(cmd.row.row);
        if (it == sa.connected.end())
            throw ProtocolError("RD/WR: row is not activated");
        if (cmd.col < 0 || cmd.col + geom().hff_width_bits > width() ||
            cmd.col % geom().hff_width_bits != 0)
            throw ValidationError("RD/WR: column must be hff-aligned and in range");
        int mat = cmd.col / geom().columns_per_mat;
        if (!it->second[mat])
            throw ProtocolError("RD/WR: row is not connected in the target mat");
        return {&sa, mat};
    }

    void do_rd(const Command& cmd) {
        auto [sa, mat] = column_target(cmd);
        ActiveOp& op = *chip_.active_op();
        int w = wire_of(cmd.row);
        const auto& rails = op.rails.at(w);
        std::uint32_t v = 0;
        for (int k = 0; k < geom().hff_width_bits; ++k) {
            if (rails[cmd.col + k] < 0)
                throw ProtocolError("RD: column " + std::to_string(cmd.col + k) +
                                    " was never sensed");
            v |= static_cast<std::uint32_t>(rails[cmd.col + k]) << k;
        }
        chip_.io_latch = v;
        sa->hffs[mat].value = v;
        sa->hffs[mat].enabled = cmd.hold_hff;
    }

    void do_wr(const Command& cmd) {
        auto [sa, mat] = column_target(cmd);
        ActiveOp& op = *chip_.active_op();
        std::uint32_t bits = cmd.value;
        HffLatch& hff = sa->hffs[mat];
        if (hff.enabled) {
            bits = hff.value;
            hff.enabled = false;
        }
        auto [lo, hi] = stripe_of(op);
        int w = wire_of(cmd.row);
        int other = w == lo ? hi : lo;
        auto& rails_w = op.rails.at(w);
        auto& rails_o = op.rails.at(other);
        const int bank = cmd.row.bank;
        for (int k = 0; k < geom().hff_width_bits; ++k) {
            int col = cmd.col + k;
            int bit = (bits >> k) & 1;
            rails_w[col] = static_cast<std::int8_t>(bit);
            rails_o[col] = static_cast<std::int8_t>(1 - bit);
            set_wire_voltage(bank, w, col, bit);
            set_wire_voltage(bank, other, col, 1 - bit);
            restore_wire_cells(bank, w, col, bit);
            restore_wire_cells(bank, other, col, 1 - bit);
        }
    }

    ChipState& chip_;
    EngineConfig cfg_;
};

} // namespace pudsim
