#pragma once

#include <array>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include "pudsim/engine.hpp"

namespace pudsim {

enum class MultiOpKind { And, Nand, Or, Nor };

inline const char* to_string(MultiOpKind k) {
    switch (k) {
        case MultiOpKind::And: return "and";
        case MultiOpKind::Nand: return "nand";
        case MultiOpKind::Or: return "or";
        case MultiOpKind::Nor: return "nor";
    }
    return "?";
}

/// How the reference subarray is loaded for an N-input operation. The bitline
/// mean (vdd_rows + 0.5*frac_rows)/n must fall strictly inside the window that
/// separates the two compute-side levels to discriminate: ((n-1)/n, 1) for
/// AND/NAND, (0, 1/n) for OR/NOR.
struct RefComposition {
    int n_inputs = 2;
    int vdd_rows = 1;
    int frac_rows = 1;
    int gnd_rows = 0;
    MultiOpKind op_kind = MultiOpKind::And;

    double v_ref() const { return (vdd_rows + 0.5 * frac_rows) / n_inputs; }

    void validate() const {
        if (n_inputs < 2 || vdd_rows < 0 || frac_rows < 0 || gnd_rows < 0)
            throw ValidationError("reference composition: bad row counts");
        if (vdd_rows + frac_rows + gnd_rows != n_inputs)
            throw ValidationError("reference composition: rows must sum to n_inputs");
        double v = v_ref();
        double lo, hi;
        if (op_kind == MultiOpKind::And || op_kind == MultiOpKind::Nand) {
            lo = static_cast<double>(n_inputs - 1) / n_inputs;
            hi = 1.0;
        } else {
            lo = 0.0;
            hi = 1.0 / n_inputs;
        }
        if (!(v > lo && v < hi))
            throw ValidationError("reference composition: v_ref outside discrimination window");
    }

    /// The canonical composition: one frac row tips the reference off every
    /// level the compute side can reach.
    static RefComposition for_op(MultiOpKind kind, int n) {
        RefComposition c;
        c.n_inputs = n;
        c.op_kind = kind;
        if (kind == MultiOpKind::And || kind == MultiOpKind::Nand) {
            c.vdd_rows = n - 1;
            c.frac_rows = 1;
            c.gnd_rows = 0;
        } else {
            c.vdd_rows = 0;
            c.frac_rows = 1;
            c.gnd_rows = n - 1;
        }
        c.validate();
        return c;
    }
};

enum class NotMode {
    CrossSubarray, // destination row in the stripe partner, reached by ACT -> violated PRE -> ACT
    DccRow         // destination is a dual-contact cell of the source subarray, reached by ACT -> ACT
};

namespace detail {

inline void require_full_sector(const ChipState& chip, const char* who) {
    for (bool b : chip.pending_sector())
        if (!b)
            throw ProtocolError(std::string(who) +
                                ": a partial sector mask is latched; issue a plain PRE first");
}

inline void require_data_row(const ChipGeometry& g, const RowAddr& r, const char* who) {
    if (r.row < 0 || r.row >= g.rows_per_subarray)
        throw ValidationError(std::string(who) + ": row " + std::to_string(r.row) +
                              " is not a data wordline");
}

inline double violated_gap(const CommandEngine& e) {
    return e.config().timing.violation_threshold_ns * 0.5;
}

} // namespace detail

/// In-subarray row copy via back-to-back activations: the first ACT latches
/// src on the stripe, the second connects dst while the rails are driven.
inline std::vector<Command> row_clone(CommandEngine& eng, RowAddr src, RowAddr dst) {
    const ChipGeometry& g = eng.chip().geometry();
    if (src.bank != dst.bank || src.subarray != dst.subarray)
        throw ValidationError("row_clone: cross-subarray copy is unsupported here");
    detail::require_data_row(g, src, "row_clone");
    detail::require_data_row(g, dst, "row_clone");
    detail::require_full_sector(eng.chip(), "row_clone");
    const TimingParams& t = eng.config().timing;
    std::vector<Command> cmds{
        Command::act({src}, t.tRAS_ns),
        Command::act({dst}, t.tRAS_ns),
        Command::pre(t.tRP_ns),
    };
    eng.run(cmds);
    return cmds;
}

/// dst = NOT(src). In CrossSubarray mode dst sits in the next subarray and is
/// reached through an interrupted precharge; in DccRow mode dst is a
/// dual-contact row of src's own subarray and a plain second ACT connects it
/// to the bar wire. Same result, different command shape.
inline std::vector<Command> not_op(CommandEngine& eng, RowAddr src, RowAddr dst,
                                   NotMode mode = NotMode::CrossSubarray) {
    const ChipGeometry& g = eng.chip().geometry();
    detail::require_data_row(g, src, "not_op");
    detail::require_full_sector(eng.chip(), "not_op");
    const TimingParams& t = eng.config().timing;
    std::vector<Command> cmds;
    if (mode == NotMode::CrossSubarray) {
        if (src.bank != dst.bank || dst.subarray != src.subarray + 1)
            throw ValidationError("not_op: dst must lie in src's stripe partner subarray");
        detail::require_data_row(g, dst, "not_op");
        cmds = {
            Command::act({src}, t.tRAS_ns),
            Command::pre(detail::violated_gap(eng)),
            Command::act({dst}, t.tRAS_ns),
            Command::pre(t.tRP_ns),
        };
    } else {
        if (src.bank != dst.bank || dst.subarray != src.subarray)
            throw ValidationError("not_op: dcc mode needs dst in src's subarray");
        if (!g.is_dcc_cell(dst.row))
            throw ValidationError("not_op: dcc mode needs a dual-contact destination cell");
        // Raise the destination cell's negation wordline so it latches the bar.
        RowAddr neg = dst;
        neg.row = g.negation_row(dst.row);
        cmds = {
            Command::act({src}, t.tRAS_ns),
            Command::act({neg}, t.tRAS_ns),
            Command::pre(t.tRP_ns),
        };
    }
    eng.run(cmds);
    return cmds;
}

/// Copies src into up to 31 destination rows at once: latch src, interrupt the
/// precharge, activate the whole destination set while the rails are driven.
inline std::vector<Command> multi_row_copy(CommandEngine& eng, RowAddr src,
                                           std::vector<RowAddr> dsts) {
    const ChipGeometry& g = eng.chip().geometry();
    detail::require_data_row(g, src, "multi_row_copy");
    detail::require_full_sector(eng.chip(), "multi_row_copy");
    if (dsts.size() > 31)
        throw ValidationError("multi_row_copy: more than 31 destination rows is unsupported");
    for (const RowAddr& d : dsts) {
        if (d.bank != src.bank || d.subarray != src.subarray)
            throw ValidationError("multi_row_copy: destinations must share src's subarray");
        detail::require_data_row(g, d, "multi_row_copy");
    }
    const TimingParams& t = eng.config().timing;
    std::vector<Command> cmds;
    if (dsts.empty()) {
        cmds = {Command::act({src}, t.tRAS_ns), Command::pre(t.tRP_ns)};
    } else {
        dsts = decoder_rowset_explicit(g, std::move(dsts));
        cmds = {
            Command::act({src}, t.tRAS_ns),
            Command::pre(detail::violated_gap(eng)),
            Command::act(dsts, t.tRAS_ns),
            Command::pre(t.tRP_ns),
        };
    }
    eng.run(cmds);
    return cmds;
}

/// Triple-row activation: all three rows end up holding the bitwise majority
/// of their previous contents. Destructive by design; callers stage copies.
inline std::vector<Command> tra_maj3(CommandEngine& eng, std::array<RowAddr, 3> rows) {
    const ChipGeometry& g = eng.chip().geometry();
    detail::require_full_sector(eng.chip(), "tra_maj3");
    std::vector<RowAddr> set(rows.begin(), rows.end());
    set = decoder_rowset_explicit(g, std::move(set));
    if (set.size() != 3)
        throw ValidationError("tra_maj3: needs three distinct rows");
    for (const RowAddr& r : set) detail::require_data_row(g, r, "tra_maj3");
    const TimingParams& t = eng.config().timing;
    std::vector<Command> cmds{
        Command::act(set, t.tRAS_ns),
        Command::pre(t.tRP_ns),
    };
    eng.run(cmds);
    return cmds;
}

/// Loads the reference subarray rows for an N-input operation: vdd_rows rows
/// of ones, then frac_rows rows parked at VDD/2, then gnd_rows rows of zeros.
inline void make_reference(ChipState& chip, const RefComposition& comp,
                           const std::vector<RowAddr>& ref_rows) {
    comp.validate();
    if (static_cast<int>(ref_rows.size()) != comp.n_inputs)
        throw ValidationError("make_reference: need exactly n_inputs reference rows");
    const ChipGeometry& g = chip.geometry();
    const int W = g.subarray_columns();
    int i = 0;
    for (; i < comp.vdd_rows; ++i)
        chip.write_row_logical(ref_rows[i], std::vector<std::uint8_t>(W, 1));
    for (; i < comp.vdd_rows + comp.frac_rows; ++i) {
        chip.write_row_logical(ref_rows[i], std::vector<std::uint8_t>(W, 0));
        chip.store_frac_row(ref_rows[i]);
    }
    for (; i < comp.n_inputs; ++i)
        chip.write_row_logical(ref_rows[i], std::vector<std::uint8_t>(W, 0));
}

/// N-input AND/NAND/OR/NOR across a sense-amp pair: one multi-row activation
/// charge-shares both subarrays, and differential sensing leaves AND (or OR)
/// in the compute-side rows and its complement in the reference-side rows.
/// For Nand/Nor the result is read from the reference rows.
inline std::vector<Command> multi_input_op(CommandEngine& eng, MultiOpKind kind,
                                           const std::vector<RowAddr>& input_rows,
                                           const std::vector<RowAddr>& ref_rows) {
    const ChipGeometry& g = eng.chip().geometry();
    detail::require_full_sector(eng.chip(), "multi_input_op");
    const size_t n = input_rows.size();
    if (n != ref_rows.size())
        throw ValidationError("multi_input_op: input and reference sets differ in size");
    if (n != 2 && n != 4 && n != 8 && n != 16)
        throw ValidationError("multi_input_op: n must be one of 2, 4, 8, 16");
    auto inputs = decoder_rowset_explicit(g, input_rows);
    auto refs = decoder_rowset_explicit(g, ref_rows);
    if (inputs.size() != n || refs.size() != n)
        throw ValidationError("multi_input_op: duplicate rows in operand set");
    for (const RowAddr& r : inputs) detail::require_data_row(g, r, "multi_input_op");
    for (const RowAddr& r : refs) detail::require_data_row(g, r, "multi_input_op");
    if (inputs[0].bank != refs[0].bank ||
        std::abs(inputs[0].subarray - refs[0].subarray) != 1)
        throw ValidationError("multi_input_op: compute and reference subarrays must form "
                              "a sense-amp pair");

    // The reference must already be composed; check its per-column mean.
    double lo = (kind == MultiOpKind::And || kind == MultiOpKind::Nand)
                    ? static_cast<double>(n - 1) / n : 0.0;
    double hi = (kind == MultiOpKind::And || kind == MultiOpKind::Nand)
                    ? 1.0 : 1.0 / n;
    for (int c = 0; c < g.subarray_columns(); ++c) {
        double sum = 0.0;
        for (const RowAddr& r : refs) sum += eng.chip().cell(r, c);
        double v = sum / static_cast<double>(n);
        if (!(v > lo && v < hi))
            throw ValidationError("multi_input_op: reference subarray is not composed for " +
                                  std::string(to_string(kind)) + std::to_string(n) +
                                  " at column " + std::to_string(c));
    }

    const TimingParams& t = eng.config().timing;
    std::vector<Command> cmds{
        Command::act(refs, detail::violated_gap(eng)),
        Command::pre(detail::violated_gap(eng)),
        Command::act(inputs, t.tRAS_ns),
        Command::pre(t.tRP_ns),
    };
    eng.run(cmds);
    return cmds;
}

/// One multi-row-activation TRNG sample: the balanced row set drags the
/// bitline to ~VDD/2 and sensing amplifies noise into one random bit per
/// column. Cells end up holding the sampled values, so callers re-initialize
/// between samples. Unbalanced compositions are sampled anyway but flagged.
inline std::vector<std::uint8_t> trng_sample(CommandEngine& eng,
                                             const std::vector<RowAddr>& rows,
                                             std::ostream* diag = nullptr) {
    const ChipGeometry& g = eng.chip().geometry();
    detail::require_full_sector(eng.chip(), "trng_sample");
    auto set = decoder_rowset_explicit(g, rows);
    for (const RowAddr& r : set) detail::require_data_row(g, r, "trng_sample");

    for (int c = 0; c < g.subarray_columns(); ++c) {
        double sum = 0.0;
        for (const RowAddr& r : set) sum += eng.chip().cell(r, c);
        if (sum * 2.0 != static_cast<double>(set.size())) {
            if (diag)
                *diag << "trng_sample: warning: column " << c
                      << " is not balanced; the source is biased\n";
            break;
        }
    }

    const TimingParams& t = eng.config().timing;
    std::vector<Command> cmds{
        Command::act({set[0]}, detail::violated_gap(eng)),
        Command::pre(detail::violated_gap(eng)),
        Command::act(set, t.tRAS_ns),
        Command::pre(t.tRP_ns),
    };
    eng.run(cmds);
    return eng.chip().read_row_bits(set[0]);
}

} // namespace pudsim
