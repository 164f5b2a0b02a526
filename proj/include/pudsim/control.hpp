#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pudsim/compiler.hpp"
#include "pudsim/engine.hpp"
#include "pudsim/microprogram.hpp"

namespace pudsim {

/// Where a microprogram's symbolic rows live in one subarray. The reserved
/// block sits at the top of the row space: staging rows, the two constant
/// rows, then the dual-contact cells; scratch rows grow downward from just
/// below it.
struct ComputeRowBinding {
    int bank = 0;
    int subarray = 0;
    std::vector<int> b_rows;
    int c0_row = 0;
    int c1_row = 0;
    std::vector<int> n_cells;
    int tmp_top = 0; // tmp k binds to row tmp_top - k

    static ComputeRowBinding defaults_for(const ChipGeometry& g, int bank = 0,
                                          int subarray = 0, int b_rows = 6) {
        ComputeRowBinding b;
        b.bank = bank;
        b.subarray = subarray;
        const int R = g.rows_per_subarray;
        const int dcc = g.dcc_rows_per_subarray;
        for (int k = 0; k < dcc; ++k) b.n_cells.push_back(R - dcc + k);
        b.c1_row = R - dcc - 1;
        b.c0_row = R - dcc - 2;
        for (int k = 0; k < b_rows; ++k) b.b_rows.push_back(R - dcc - 2 - b_rows + k);
        b.tmp_top = R - dcc - 2 - b_rows - 1;
        return b;
    }

    int reserved_floor() const { return b_rows.empty() ? c0_row : b_rows.front(); }

    void validate(const ChipGeometry& g) const {
        if (bank < 0 || bank >= g.banks || subarray < 0 ||
            subarray >= g.subarrays_per_bank)
            throw ValidationError("row binding: bad bank/subarray");
        for (int r : b_rows)
            if (r < 0 || r >= g.rows_per_subarray || g.is_dcc_cell(r))
                throw ValidationError("row binding: staging rows must be plain data rows");
        for (int r : n_cells)
            if (!g.is_dcc_cell(r))
                throw ValidationError("row binding: n-cells must be dual-contact cells");
        if (tmp_top >= reserved_floor())
            throw ValidationError("row binding: scratch rows overlap the compute region");
    }
};

enum class ExecMode { Simdram, Mimdram };

struct ExecStats {
    long activations = 0;
    long commands = 0;
    double simulated_ns = 0.0;
    long lanes_used = 0;
    long lanes_useful = 0;
    double simd_utilization = 0.0;
};

/// Bulk-bitwise instruction as dispatched to the in-memory control unit.
/// Row addresses are bases of vertically laid out operands inside the
/// control unit's subarray; [mat_begin, mat_end] is inclusive.
struct BbopInstruction {
    std::string opcode;
    std::vector<int> src_rows;
    std::vector<int> dst_rows;
    int mat_begin = 0;
    int mat_end = -1; // -1: all mats
    int element_width = 1;
    long vector_len = 0;
};

class MicroStore {
public:
    void register_program(MicroProgram prog) {
        prog.validate();
        if (store_.count(prog.opcode))
            throw ValidationError("microprogram store: opcode '" + prog.opcode +
                                  "' already registered");
        store_.emplace(prog.opcode, std::move(prog));
    }
    const MicroProgram& lookup(const std::string& opcode) const {
        auto it = store_.find(opcode);
        if (it == store_.end())
            throw ValidationError("microprogram store: unknown opcode '" + opcode + "'");
        return it->second;
    }
    bool contains(const std::string& opcode) const { return store_.count(opcode) > 0; }

private:
    std::map<std::string, MicroProgram> store_;
};

// --- host-side vertical layout helpers ---------------------------------------------

/// bit i of element j lands in row image i, column j.
inline std::vector<std::vector<std::uint8_t>> transpose_to_rows(
    const std::vector<std::uint64_t>& values, int width, int row_width) {
    if (static_cast<int>(values.size()) > row_width)
        throw ValidationError("transpose: more elements than columns");
    std::vector<std::vector<std::uint8_t>> rows(
        width, std::vector<std::uint8_t>(row_width, 0));
    for (int i = 0; i < width; ++i)
        for (size_t j = 0; j < values.size(); ++j)
            rows[i][j] = (values[j] >> i) & 1;
    return rows;
}

inline std::vector<std::uint64_t> transpose_from_rows(
    const std::vector<std::vector<std::uint8_t>>& rows, int n_elements) {
    std::vector<std::uint64_t> out(n_elements, 0);
    for (size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < n_elements; ++j)
            out[j] |= static_cast<std::uint64_t>(rows[i][j] & 1) << i;
    return out;
}

/// Writes elements in vertical layout: lane j = column mat_begin*cpm + j,
/// rows [base, base+width). Columns beyond the elements are zeroed.
inline void write_vertical(ChipState& chip, int bank, int subarray, int base_row,
                           int width, int mat_begin,
                           const std::vector<std::uint64_t>& values) {
    const ChipGeometry& g = chip.geometry();
    auto rows = transpose_to_rows(values, width,
                                  g.subarray_columns() - mat_begin * g.columns_per_mat);
    for (int i = 0; i < width; ++i) {
        std::vector<std::uint8_t> bits(g.subarray_columns(), 0);
        for (size_t c = 0; c < rows[i].size(); ++c)
            bits[mat_begin * g.columns_per_mat + c] = rows[i][c];
        chip.write_row_logical({bank, subarray, base_row + i}, bits);
    }
}

inline std::vector<std::uint64_t> read_vertical(const ChipState& chip, int bank,
                                                int subarray, int base_row, int width,
                                                int mat_begin, int n_elements) {
    const ChipGeometry& g = chip.geometry();
    std::vector<std::vector<std::uint8_t>> rows;
    for (int i = 0; i < width; ++i) {
        auto bits = chip.read_row_bits({bank, subarray, base_row + i});
        rows.emplace_back(bits.begin() + mat_begin * g.columns_per_mat, bits.end());
    }
    return transpose_from_rows(rows, n_elements);
}

// --- the control unit ------------------------------------------------------------

/// Executes stored microprograms over row and mat ranges, moves data between
/// columns and mats, and reports lane-utilization statistics.
class ControlUnit {
public:
    ControlUnit(CommandEngine& eng, ComputeRowBinding binding,
                ExecMode mode = ExecMode::Mimdram)
        : eng_(eng), binding_(std::move(binding)), mode_(mode) {
        binding_.validate(eng_.chip().geometry());
    }

    MicroStore& store() { return store_; }
    const ComputeRowBinding& binding() const { return binding_; }
    ExecMode mode() const { return mode_; }
    void set_mode(ExecMode m) { mode_ = m; }

    ExecStats execute(const BbopInstruction& insn) {
        const ChipGeometry& g = eng_.chip().geometry();
        const MicroProgram& prog = store_.lookup(insn.opcode);

        auto [lo, hi] = effective_mats(insn);
        validate_insn(insn, prog, lo, hi);

        std::vector<Command> cmds = lower_program(prog, insn, lo, hi);

        long acts0 = eng_.chip().trace.acts;
        long cmds0 = count_commands();
        double ns0 = eng_.chip().trace.simulated_ns;
        eng_.run(cmds);

        ExecStats st;
        st.activations = eng_.chip().trace.acts - acts0;
        st.commands = count_commands() - cmds0;
        st.simulated_ns = eng_.chip().trace.simulated_ns - ns0;
        st.lanes_used = static_cast<long>(hi - lo + 1) * g.columns_per_mat;
        st.lanes_useful = insn.vector_len;
        st.simd_utilization =
            st.lanes_used ? static_cast<double>(st.lanes_useful) / st.lanes_used : 0.0;
        return st;
    }

    /// Moves one helper-flip-flop word (hff_width_bits) between two columns of
    /// the same mat: ACT-RD-PRE with the HFF enable held, then ACT-WR-PRE.
    /// Column offsets are mat-local and must be hff-aligned.
    std::vector<Command> lc_mov(int mat, int src_row, int src_col, int dst_row,
                                int dst_col) {
        const ChipGeometry& g = eng_.chip().geometry();
        const TimingParams& t = eng_.config().timing;
        check_mat(mat);
        check_local_col(src_col);
        check_local_col(dst_col);
        RowAddr src{binding_.bank, binding_.subarray, src_row};
        RowAddr dst{binding_.bank, binding_.subarray, dst_row};
        int gsrc = mat * g.columns_per_mat + src_col;
        int gdst = mat * g.columns_per_mat + dst_col;

        std::vector<Command> cmds;
        cmds.push_back(Command::act({src}, t.tRAS_ns));
        cmds.push_back(Command::rd(src, gsrc, /*hold=*/true));
        cmds.push_back(Command::pre(t.tRP_ns));
        eng_.run(cmds);
        // The held latch drives the write; record the moved bits for the trace.
        Command wr = Command::wr(dst, gdst, eng_.chip().io_latch);
        std::vector<Command> phase2{Command::act({dst}, t.tRAS_ns), wr,
                                    Command::pre(t.tRP_ns)};
        eng_.run(phase2);
        cmds.insert(cmds.end(), phase2.begin(), phase2.end());
        return cmds;
    }

    /// Moves a mat-local column range of one row into the same column range of
    /// a destination row in a mat to the right, one hff word per chain pass.
    /// Each word costs one RD plus one WR per hop; hops beyond the first are
    /// accounted with a trailing NOP delay.
    std::vector<Command> gb_mov(int src_mat, int dst_mat, int src_row, int dst_row,
                                int col_lo, int col_hi) {
        const ChipGeometry& g = eng_.chip().geometry();
        const TimingParams& t = eng_.config().timing;
        check_mat(src_mat);
        check_mat(dst_mat);
        if (dst_mat <= src_mat)
            throw ValidationError("gb_mov: data moves through neighboring sense-amp "
                                  "sets toward higher mat indices");
        if (col_lo < 0 || col_hi > g.columns_per_mat || col_lo >= col_hi ||
            col_lo % g.hff_width_bits != 0)
            throw ValidationError("gb_mov: bad mat-local column range");
        const int hops = dst_mat - src_mat;
        const int hff = g.hff_width_bits;
        RowAddr src{binding_.bank, binding_.subarray, src_row};
        RowAddr dst{binding_.bank, binding_.subarray, dst_row};

        std::vector<Command> all;
        auto step = [&](const Command& c) {
            eng_.issue(c);
            all.push_back(c);
        };

        // Read every word out of the source row first.
        std::vector<std::uint32_t> words;
        step(Command::act({src}, t.tRAS_ns));
        for (int c = col_lo; c < col_hi; c += hff) {
            step(Command::rd(src, src_mat * g.columns_per_mat + c));
            words.push_back(eng_.chip().io_latch);
        }
        step(Command::pre(t.tRP_ns));

        // Then chain them into the destination mat.
        step(Command::act({dst}, t.tRAS_ns));
        int wi = 0;
        for (int c = col_lo; c < col_hi; c += hff, ++wi)
            step(Command::wr(dst, dst_mat * g.columns_per_mat + c, words[wi]));
        if (hops > 1)
            step(Command::nop((hops - 1) * (t.tRD_ns + t.tWR_ns) *
                              static_cast<double>(words.size())));
        step(Command::pre(t.tRP_ns));
        return all;
    }

    /// Same-mat moves lower to lc_mov, cross-mat moves to gb_mov.
    std::vector<Command> move_words(int src_mat, int src_row, int src_col, int dst_mat,
                                    int dst_row, int dst_col, int nbits) {
        const ChipGeometry& g = eng_.chip().geometry();
        if (nbits <= 0 || nbits % g.hff_width_bits != 0)
            throw ValidationError("move: size must be a multiple of the hff width");
        if (src_mat == dst_mat) {
            std::vector<Command> all;
            for (int off = 0; off < nbits; off += g.hff_width_bits) {
                auto cmds = lc_mov(src_mat, src_row, src_col + off, dst_row, dst_col + off);
                all.insert(all.end(), cmds.begin(), cmds.end());
            }
            return all;
        }
        if (src_col != dst_col)
            throw ValidationError("move: cross-mat moves keep the mat-local column");
        return gb_mov(src_mat, dst_mat, src_row, dst_row, src_col, src_col + nbits);
    }

    /// Bits needed so a sum of n (elem_width + 1)-bit terms cannot overflow.
    static int reduce_width(int elem_width, long n_elems) {
        int lg = 0;
        while ((1l << lg) < n_elems) ++lg;
        return elem_width + 1 + lg;
    }

    struct ReduceResult {
        ExecStats stats;
        std::uint64_t value = 0;
    };

    /// Reduction out = sum(A[i] + B[i]) in three phases: an element-wise add
    /// across the mat range, an iterative fold of every mat's partials into
    /// the highest-indexed mat over the inter-mat chain, and a lane-halving
    /// fold inside that mat. Inputs must be laid out vertically at
    /// reduce_width() bits (zero-extended) starting at mat_begin; the caller
    /// provides 2*W scratch rows and W output rows, all mutually disjoint.
    /// Lane shifts below the hff granularity take the column-access path (the
    /// controller reads, shifts, and writes words back).
    ReduceResult vector_reduce(int a_base, int b_base, int scratch_base, int out_base,
                               int elem_width, long n_elems, int mat_begin,
                               int mat_end) {
        const ChipGeometry& g = eng_.chip().geometry();
        const int cpm = g.columns_per_mat;
        const int W = reduce_width(elem_width, n_elems);
        if (n_elems < 1) throw ValidationError("vector_reduce: empty input");
        if (W > 60) throw ValidationError("vector_reduce: accumulator width too large");
        long need_mats = (n_elems + cpm - 1) / cpm;
        if (mat_end - mat_begin + 1 != need_mats)
            throw ValidationError("vector_reduce: mat range does not match the element "
                                  "count");
        auto disjoint = [&](int x, int y) { return x + W <= y || y + W <= x; };
        int acc2 = scratch_base + W;
        for (int base : {a_base, b_base, scratch_base, acc2, out_base})
            if (base < 0 || base + W > g.rows_per_subarray)
                throw ValidationError("vector_reduce: row region out of range");
        if (!disjoint(out_base, scratch_base) || !disjoint(out_base, acc2) ||
            !disjoint(a_base, out_base) || !disjoint(b_base, out_base))
            throw ValidationError("vector_reduce: row regions overlap");

        const std::string opcode = "bbop_add" + std::to_string(W);
        if (!store_.contains(opcode))
            store_.register_program(compile_bitserial(BitSerialOp::Add, W).program);

        long acts0 = eng_.chip().trace.acts;
        long cmds0 = count_commands();
        double ns0 = eng_.chip().trace.simulated_ns;

        const int target = mat_end;
        int acc = out_base;
        int other = acc2;

        BbopInstruction add1;
        add1.opcode = opcode;
        add1.src_rows = {a_base, b_base};
        add1.dst_rows = {acc};
        add1.mat_begin = mat_begin;
        add1.mat_end = mat_end;
        add1.element_width = W;
        add1.vector_len = n_elems;
        execute(add1);

        // Fold every lower mat's partials into the target mat.
        for (int m = target - 1; m >= mat_begin; --m) {
            for (int i = 0; i < W; ++i)
                gb_mov(m, target, acc + i, scratch_base + i, 0, cpm);
            BbopInstruction fold;
            fold.opcode = opcode;
            fold.src_rows = {acc, scratch_base};
            fold.dst_rows = {other};
            fold.mat_begin = target;
            fold.mat_end = target;
            fold.element_width = W;
            fold.vector_len = cpm;
            execute(fold);
            std::swap(acc, other);
        }

        // Halve the live lanes inside the target mat until one remains.
        long lanes = std::min<long>(n_elems, cpm);
        while (lanes > 1) {
            long half = (lanes + 1) / 2;
            for (int i = 0; i < W; ++i)
                shifted_lane_copy(target, acc + i, scratch_base + i,
                                  static_cast<int>(half));
            BbopInstruction fold;
            fold.opcode = opcode;
            fold.src_rows = {acc, scratch_base};
            fold.dst_rows = {other};
            fold.mat_begin = target;
            fold.mat_end = target;
            fold.element_width = W;
            fold.vector_len = half;
            execute(fold);
            std::swap(acc, other);
            lanes = half;
        }

        if (acc != out_base) {
            // Masked copy of the result rows back into the output region.
            const TimingParams& t = eng_.config().timing;
            std::vector<bool> mask(g.mats_per_subarray, false);
            mask[target] = true;
            std::vector<Command> cmds;
            cmds.push_back(Command::pre(mask, t.tRP_ns));
            for (int i = 0; i < W; ++i) {
                cmds.push_back(Command::act(
                    {{binding_.bank, binding_.subarray, acc + i}}, t.tRAS_ns));
                cmds.push_back(Command::act(
                    {{binding_.bank, binding_.subarray, out_base + i}}, t.tRAS_ns));
                cmds.push_back(Command::pre(mask, t.tRP_ns));
            }
            cmds.push_back(Command::pre(t.tRP_ns));
            eng_.run(cmds);
        }

        ReduceResult res;
        res.value = read_vertical(eng_.chip(), binding_.bank, binding_.subarray,
                                  out_base, W, target, 1)[0];
        res.stats.activations = eng_.chip().trace.acts - acts0;
        res.stats.commands = count_commands() - cmds0;
        res.stats.simulated_ns = eng_.chip().trace.simulated_ns - ns0;
        res.stats.lanes_used = (mat_end - mat_begin + 1) * static_cast<long>(cpm);
        res.stats.lanes_useful = n_elems;
        res.stats.simd_utilization =
            static_cast<double>(res.stats.lanes_useful) / res.stats.lanes_used;
        return res;
    }

private:
    long count_commands() const {
        const auto& tr = eng_.chip().trace;
        return tr.acts + tr.pres + tr.rds + tr.wrs;
    }

    /// dst lane l = src lane (l + shift), zeros beyond; word-granular column
    /// reads and writes with the shift applied in the controller.
    void shifted_lane_copy(int mat, int src_row, int dst_row, int shift) {
        const ChipGeometry& g = eng_.chip().geometry();
        const TimingParams& t = eng_.config().timing;
        const int cpm = g.columns_per_mat;
        const int hff = g.hff_width_bits;
        RowAddr src{binding_.bank, binding_.subarray, src_row};
        RowAddr dst{binding_.bank, binding_.subarray, dst_row};

        std::vector<std::uint8_t> bits(cpm, 0);
        eng_.issue(Command::act({src}, t.tRAS_ns));
        for (int c = 0; c < cpm; c += hff) {
            eng_.issue(Command::rd(src, mat * cpm + c));
            for (int k = 0; k < hff; ++k) bits[c + k] = (eng_.chip().io_latch >> k) & 1;
        }
        eng_.issue(Command::pre(t.tRP_ns));

        eng_.issue(Command::act({dst}, t.tRAS_ns));
        for (int c = 0; c < cpm; c += hff) {
            std::uint32_t word = 0;
            for (int k = 0; k < hff; ++k) {
                int from = c + k + shift;
                if (from < cpm && bits[from]) word |= 1u << k;
            }
            eng_.issue(Command::wr(dst, mat * cpm + c, word));
        }
        eng_.issue(Command::pre(t.tRP_ns));
    }

    void check_mat(int mat) const {
        if (mat < 0 || mat >= eng_.chip().geometry().mats_per_subarray)
            throw ValidationError("mat index out of range");
    }
    void check_local_col(int col) const {
        const ChipGeometry& g = eng_.chip().geometry();
        if (col < 0 || col + g.hff_width_bits > g.columns_per_mat ||
            col % g.hff_width_bits != 0)
            throw ValidationError("mat-local column must be hff-aligned and in range");
    }

    std::pair<int, int> effective_mats(const BbopInstruction& insn) const {
        const ChipGeometry& g = eng_.chip().geometry();
        int declared_end = insn.mat_end < 0 ? g.mats_per_subarray - 1 : insn.mat_end;
        if (mode_ == ExecMode::Simdram) return {0, g.mats_per_subarray - 1};
        long need = (insn.vector_len + g.columns_per_mat - 1) / g.columns_per_mat;
        need = std::max(need, 1l);
        int end = insn.mat_begin + static_cast<int>(need) - 1;
        if (end > declared_end)
            throw ValidationError("bbop: vector does not fit the declared mat range");
        return {insn.mat_begin, end};
    }

    void validate_insn(const BbopInstruction& insn, const MicroProgram& prog, int lo,
                       int hi) const {
        const ChipGeometry& g = eng_.chip().geometry();
        int declared_end = insn.mat_end < 0 ? g.mats_per_subarray - 1 : insn.mat_end;
        if (insn.mat_begin < 0 || insn.mat_begin > declared_end ||
            declared_end >= g.mats_per_subarray)
            throw ValidationError("bbop: bad mat range");
        if (insn.vector_len < 1 ||
            insn.vector_len > static_cast<long>(declared_end - insn.mat_begin + 1) *
                                  g.columns_per_mat)
            throw ValidationError("bbop: vector_len exceeds the lanes in the mat range");
        if (insn.src_rows.size() != prog.ingroups.size())
            throw ValidationError("bbop: operand count mismatch (" +
                                  std::to_string(insn.src_rows.size()) + " vs " +
                                  std::to_string(prog.ingroups.size()) + " inputs)");
        if (insn.dst_rows.size() != prog.outgroups.size())
            throw ValidationError("bbop: destination count mismatch");
        for (const auto& gr : prog.ingroups)
            if (gr.bits != insn.element_width)
                throw ValidationError("bbop: element width " +
                                      std::to_string(insn.element_width) +
                                      " does not match operand '" + gr.name + "' (" +
                                      std::to_string(gr.bits) + " bits)");
        // Operand rows must stay clear of the compute region and scratch rows.
        const int scratch_floor = binding_.tmp_top - prog.tmp_count + 1;
        auto check_range = [&](int base, int bits, const std::string& what) {
            if (base < 0 || base + bits > g.rows_per_subarray)
                throw ValidationError("bbop: " + what + " rows out of range");
            if (base + bits > scratch_floor)
                throw ValidationError("bbop: " + what +
                                      " rows collide with the compute/scratch region");
        };
        for (size_t i = 0; i < insn.src_rows.size(); ++i)
            check_range(insn.src_rows[i], prog.ingroups[i].bits, "source");
        for (size_t i = 0; i < insn.dst_rows.size(); ++i)
            check_range(insn.dst_rows[i], prog.outgroups[i].bits, "destination");

        (void)lo;
        (void)hi;
    }

    int bind_row(const MicroProgram& prog, const BbopInstruction& insn,
                 const RowSlot& slot) const {
        switch (slot.kind) {
            case RowSlot::Kind::In: return insn.src_rows[slot.group] + slot.index;
            case RowSlot::Kind::Out: return insn.dst_rows[slot.group] + slot.index;
            case RowSlot::Kind::Tmp: return binding_.tmp_top - slot.index;
            case RowSlot::Kind::B:
                if (slot.index >= static_cast<int>(binding_.b_rows.size()))
                    throw ValidationError("bbop: program needs more staging rows than "
                                          "the binding provides");
                return binding_.b_rows[slot.index];
            case RowSlot::Kind::C0: return binding_.c0_row;
            case RowSlot::Kind::C1: return binding_.c1_row;
            case RowSlot::Kind::N:
                if (slot.index >= static_cast<int>(binding_.n_cells.size()))
                    throw ValidationError("bbop: program needs more negation cells than "
                                          "the binding provides");
                return binding_.n_cells[slot.index];
        }
        return -1;
    }

    std::vector<Command> lower_program(const MicroProgram& prog,
                                       const BbopInstruction& insn, int lo, int hi) {
        const ChipGeometry& g = eng_.chip().geometry();
        const TimingParams& t = eng_.config().timing;
        const bool masked = mode_ == ExecMode::Mimdram &&
                            !(lo == 0 && hi == g.mats_per_subarray - 1);
        std::vector<bool> mask(g.mats_per_subarray, false);
        for (int m = lo; m <= hi; ++m) mask[m] = true;

        auto pre = [&]() {
            return masked ? Command::pre(mask, t.tRP_ns) : Command::pre(t.tRP_ns);
        };
        auto addr = [&](const RowSlot& slot) {
            return RowAddr{binding_.bank, binding_.subarray,
                           bind_row(prog, insn, slot)};
        };

        std::vector<Command> cmds;
        cmds.push_back(pre()); // arm the sector mask before the first ACT
        for (const MicroOp& op : prog.ops) {
            switch (op.kind) {
                case UopKind::Set: {
                    RowAddr row = addr(op.a);
                    cmds.push_back(Command::act({row}, t.tRAS_ns));
                    std::uint32_t word =
                        op.value ? (1u << g.hff_width_bits) - 1 : 0u;
                    for (int m = lo; m <= hi; ++m)
                        for (int c = 0; c < g.columns_per_mat; c += g.hff_width_bits)
                            cmds.push_back(
                                Command::wr(row, m * g.columns_per_mat + c, word));
                    cmds.push_back(pre());
                    break;
                }
                case UopKind::Copy: {
                    cmds.push_back(Command::act({addr(op.a)}, t.tRAS_ns));
                    cmds.push_back(Command::act({addr(op.b)}, t.tRAS_ns));
                    cmds.push_back(pre());
                    break;
                }
                case UopKind::Not: {
                    RowAddr dst = addr(op.b);
                    if (!g.is_dcc_cell(dst.row))
                        throw ValidationError("bbop: NOT destination is not a "
                                              "dual-contact cell");
                    dst.row = g.negation_row(dst.row);
                    cmds.push_back(Command::act({addr(op.a)}, t.tRAS_ns));
                    cmds.push_back(Command::act({dst}, t.tRAS_ns));
                    cmds.push_back(pre());
                    break;
                }
                case UopKind::Tra: {
                    cmds.push_back(Command::act(
                        {addr(op.a), addr(op.b), addr(op.c)}, t.tRAS_ns));
                    cmds.push_back(pre());
                    break;
                }
            }
        }
        if (masked) cmds.push_back(Command::pre(t.tRP_ns)); // drop the mask
        return cmds;
    }

    CommandEngine& eng_;
    ComputeRowBinding binding_;
    ExecMode mode_;
    MicroStore store_;
};

} // namespace pudsim
