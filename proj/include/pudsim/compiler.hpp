#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pudsim/microprogram.hpp"
#include "pudsim/mig.hpp"
#include "pudsim/netlist.hpp"

namespace pudsim {

/// Sizing of the designated compute-row group a program is scheduled against:
/// b_rows TRA-capable staging rows plus two constant rows plus n_rows
/// negation-capable cells.
struct ComputeRegion {
    int b_rows = 6;
    int n_rows = 2;

    void validate() const {
        if (b_rows < 3)
            throw ValidationError("compute region: fewer than 3 TRA rows cannot stage a "
                                  "majority operation");
        if (n_rows < 1)
            throw ValidationError("compute region: at least one negation-capable cell "
                                  "is required");
    }
};

struct CompileOptions {
    bool optimize = true;
    ComputeRegion region;
    std::string opcode; // empty: derived from the first output group
};

struct CompileResult {
    MicroProgram program;
    MigCost raw_cost;
    MigCost final_cost;
};

namespace detail {

/// Splits a signal name into (group, bit): a trailing ".<digits>" suffix is
/// the bit index, everything else is a 1-bit group of its own.
inline std::pair<std::string, int> split_group(const std::string& name) {
    auto dot = name.rfind('.');
    if (dot != std::string::npos && dot + 1 < name.size()) {
        bool digits = true;
        for (size_t i = dot + 1; i < name.size(); ++i)
            digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
        if (digits) return {name.substr(0, dot), std::stoi(name.substr(dot + 1))};
    }
    return {name, 0};
}

inline std::vector<OperandGroup> build_groups(const std::vector<std::string>& names,
                                              std::map<std::string, RowSlot>& slot_of,
                                              bool is_input) {
    std::vector<OperandGroup> groups;
    std::map<std::string, int> index_of;
    std::map<std::string, std::set<int>> bits_seen;
    for (const std::string& name : names) {
        auto [group, bit] = split_group(name);
        if (!index_of.count(group)) {
            index_of[group] = static_cast<int>(groups.size());
            groups.push_back({group, 0});
        }
        int gi = index_of[group];
        if (!bits_seen[group].insert(bit).second)
            throw ValidationError("operand group '" + group + "' declares bit " +
                                  std::to_string(bit) + " twice");
        groups[gi].bits = std::max(groups[gi].bits, bit + 1);
        slot_of[name] = is_input ? RowSlot::in(gi, bit) : RowSlot::out(gi, bit);
    }
    for (const auto& g : groups) {
        const auto& seen = bits_seen[g.name];
        for (int b = 0; b < g.bits; ++b)
            if (!seen.count(b))
                throw ValidationError("operand group '" + g.name + "' is missing bit " +
                                      std::to_string(b));
    }
    return groups;
}

/// Greedy register-style scheduler: walks the MIG in topological order,
/// stages TRA operands into the b-row pool (consuming a value in place on its
/// last use), sends inversions through the negation cells, and spills the
/// farthest-next-used value to a scratch row when the pool is full.
class RowAllocator {
public:
    RowAllocator(const MIGraph& g, const ComputeRegion& region,
                 const std::map<int, RowSlot>& fixed_slots)
        : g_(g), region_(region), loc_(g.nodes.size()), uses_(g.nodes.size()) {
        region_.validate();
        for (const auto& [node, slot] : fixed_slots) loc_[node] = slot;
        b_pool_.assign(region_.b_rows, -1);
        n_pool_.assign(region_.n_rows, -1);

        // Use positions per value: schedule position of each consumer, with
        // output copies as trailing pseudo-positions.
        int pos = 0;
        for (size_t id = 0; id < g_.nodes.size(); ++id) {
            const auto& n = g_.nodes[id];
            if (n.kind != MIGraph::Kind::Maj && n.kind != MIGraph::Kind::Inv) continue;
            schedule_.push_back(static_cast<int>(id));
            for (int f : n.fanin)
                if (f >= 0) uses_[f].push_back(pos);
            ++pos;
        }
        epilogue_start_ = pos;
        for (size_t i = 0; i < g_.outputs.size(); ++i) {
            uses_[g_.outputs[i]].push_back(pos++);
            output_of_[g_.outputs[i]].push_back(static_cast<int>(i));
        }
        emitted_out_.assign(g_.outputs.size(), false);
    }

    std::vector<MicroOp> run() {
        std::vector<MicroOp> ops;
        int pos = 0;
        for (int id : schedule_) {
            const auto& n = g_.nodes[id];
            if (n.kind == MIGraph::Kind::Maj)
                schedule_maj(ops, id, pos);
            else
                schedule_inv(ops, id, pos);
            flush_outputs(ops, id, pos);
            ++pos;
        }
        // Outputs fed straight from inputs or constants were never scheduled.
        for (size_t i = 0; i < g_.outputs.size(); ++i) {
            if (emitted_out_[i]) continue;
            MicroOp copy;
            copy.kind = UopKind::Copy;
            copy.a = value_slot(g_.outputs[i]);
            copy.b = out_slots_.at(static_cast<int>(i));
            ops.push_back(copy);
        }
        // Constants used anywhere get a SET prologue, in c0/c1 order.
        std::vector<MicroOp> prologue;
        if (used_c0_) prologue.push_back({UopKind::Set, RowSlot::c0(), {}, {}, 0});
        if (used_c1_) prologue.push_back({UopKind::Set, RowSlot::c1(), {}, {}, 1});
        prologue.insert(prologue.end(), ops.begin(), ops.end());
        return prologue;
    }

    void bind_output(int index, RowSlot slot) { out_slots_[index] = slot; }
    int tmp_watermark() const { return tmp_watermark_; }

private:
    RowSlot value_slot(int node) {
        const auto& n = g_.nodes[node];
        if (n.kind == MIGraph::Kind::Const0) {
            used_c0_ = true;
            return RowSlot::c0();
        }
        if (n.kind == MIGraph::Kind::Const1) {
            used_c1_ = true;
            return RowSlot::c1();
        }
        if (!loc_[node])
            throw ValidationError("row allocation: value has no location (internal)");
        return *loc_[node];
    }

    int next_use_after(int node, int pos) const {
        for (int u : uses_[node])
            if (u > pos) return u;
        return std::numeric_limits<int>::max();
    }
    bool is_last_use(int node, int pos) const {
        return next_use_after(node, pos) == std::numeric_limits<int>::max();
    }

    int tmp_alloc() {
        if (!tmp_free_.empty()) {
            int t = tmp_free_.back();
            tmp_free_.pop_back();
            return t;
        }
        return tmp_watermark_++;
    }

    /// Frees or spills one b-row, never touching rows claimed by the current op.
    int make_room_b(std::vector<MicroOp>& ops, const std::vector<bool>& claimed, int pos) {
        int victim = -1;
        int victim_use = -1;
        for (int k = 0; k < region_.b_rows; ++k) {
            if (claimed[k]) continue;
            if (b_pool_[k] < 0) return k; // already free
            int use = next_use_after(b_pool_[k], pos - 1);
            if (use == std::numeric_limits<int>::max()) {
                b_pool_[k] = -1; // dead value, reuse silently
                return k;
            }
            if (use > victim_use) {
                victim_use = use;
                victim = k;
            }
        }
        if (victim < 0)
            throw ValidationError("row allocation: compute region exhausted (internal)");
        int t = tmp_alloc();
        MicroOp spill;
        spill.kind = UopKind::Copy;
        spill.a = RowSlot::b(victim);
        spill.b = RowSlot::tmp(t);
        ops.push_back(spill);
        loc_[b_pool_[victim]] = spill.b;
        b_pool_[victim] = -1;
        return victim;
    }

    void schedule_maj(std::vector<MicroOp>& ops, int id, int pos) {
        const auto& n = g_.nodes[id];
        std::vector<bool> claimed(region_.b_rows, false);
        std::array<int, 3> rows{};
        for (int i = 0; i < 3; ++i) {
            int f = n.fanin[i];
            RowSlot src = value_slot(f);
            bool in_b = src.kind == RowSlot::Kind::B;
            if (in_b && is_last_use(f, pos) && !claimed[src.index] &&
                b_pool_[src.index] == f) {
                rows[i] = src.index;       // consume in place
                claimed[src.index] = true;
                continue;
            }
            int k = make_room_b(ops, claimed, pos);
            MicroOp copy;
            copy.kind = UopKind::Copy;
            copy.a = src;
            copy.b = RowSlot::b(k);
            ops.push_back(copy);
            rows[i] = k;
            claimed[k] = true;
            b_pool_[k] = -2; // staged operand copy, not a live value home
        }
        MicroOp tra;
        tra.kind = UopKind::Tra;
        tra.a = RowSlot::b(rows[0]);
        tra.b = RowSlot::b(rows[1]);
        tra.c = RowSlot::b(rows[2]);
        ops.push_back(tra);

        // The row trio now holds the result; home it in the first row and
        // release every operand whose last use this was.
        for (int i = 0; i < 3; ++i) b_pool_[rows[i]] = -1;
        for (int f : n.fanin)
            if (f >= 0 && is_last_use(f, pos)) release_value(f);
        b_pool_[rows[0]] = id;
        loc_[id] = RowSlot::b(rows[0]);
    }

    void schedule_inv(std::vector<MicroOp>& ops, int id, int pos) {
        const auto& n = g_.nodes[id];
        RowSlot src = value_slot(n.fanin[0]);
        int k = -1;
        for (int j = 0; j < region_.n_rows; ++j) {
            if (n_pool_[j] < 0) {
                k = j;
                break;
            }
            if (next_use_after(n_pool_[j], pos - 1) == std::numeric_limits<int>::max()) {
                n_pool_[j] = -1;
                k = j;
                break;
            }
        }
        if (k < 0) {
            // spill the farthest-next-used negation cell to scratch
            int victim = 0;
            int best = -1;
            for (int j = 0; j < region_.n_rows; ++j) {
                int use = next_use_after(n_pool_[j], pos - 1);
                if (use > best) {
                    best = use;
                    victim = j;
                }
            }
            int t = tmp_alloc();
            MicroOp spill;
            spill.kind = UopKind::Copy;
            spill.a = RowSlot::n(victim);
            spill.b = RowSlot::tmp(t);
            ops.push_back(spill);
            loc_[n_pool_[victim]] = spill.b;
            n_pool_[victim] = -1;
            k = victim;
        }
        MicroOp notop;
        notop.kind = UopKind::Not;
        notop.a = src;
        notop.b = RowSlot::n(k);
        ops.push_back(notop);
        if (is_last_use(n.fanin[0], pos)) release_value(n.fanin[0]);
        n_pool_[k] = id;
        loc_[id] = RowSlot::n(k);
    }

    /// Copies a freshly computed output value out of the compute region right
    /// away, so its staging row frees as soon as compute consumers are done.
    void flush_outputs(std::vector<MicroOp>& ops, int id, int pos) {
        auto it = output_of_.find(id);
        if (it == output_of_.end()) return;
        for (int oi : it->second) {
            MicroOp copy;
            copy.kind = UopKind::Copy;
            copy.a = value_slot(id);
            copy.b = out_slots_.at(oi);
            ops.push_back(copy);
            emitted_out_[oi] = true;
        }
        auto& u = uses_[id];
        u.erase(std::remove_if(u.begin(), u.end(),
                               [&](int p) { return p >= epilogue_start_; }),
                u.end());
        if (next_use_after(id, pos) == std::numeric_limits<int>::max()) release_value(id);
    }

    void release_value(int node) {
        if (!loc_[node]) return;
        if (loc_[node]->kind == RowSlot::Kind::Tmp) tmp_free_.push_back(loc_[node]->index);
        if (loc_[node]->kind == RowSlot::Kind::B) {
            for (int k = 0; k < region_.b_rows; ++k)
                if (b_pool_[k] == node) b_pool_[k] = -1;
        }
        if (loc_[node]->kind == RowSlot::Kind::N) {
            for (int k = 0; k < region_.n_rows; ++k)
                if (n_pool_[k] == node) n_pool_[k] = -1;
        }
    }

    const MIGraph& g_;
    ComputeRegion region_;
    std::vector<std::optional<RowSlot>> loc_;
    std::vector<std::vector<int>> uses_;
    std::vector<int> schedule_;
    std::vector<int> b_pool_; // node id, -1 free, -2 staged copy
    std::vector<int> n_pool_;
    std::map<int, RowSlot> out_slots_;
    std::map<int, std::vector<int>> output_of_;
    std::vector<bool> emitted_out_;
    int epilogue_start_ = 0;
    std::vector<int> tmp_free_;
    int tmp_watermark_ = 0;
    bool used_c0_ = false;
    bool used_c1_ = false;
};

} // namespace detail

/// Schedules an MIG onto the compute region and emits the stored program.
inline MicroProgram emit_microprogram(const MIGraph& g, const ComputeRegion& region,
                                      const std::string& opcode) {
    MicroProgram prog;
    prog.opcode = opcode;

    std::map<std::string, RowSlot> slot_of;
    std::vector<std::string> input_names;
    for (const auto& [name, id] : g.inputs) input_names.push_back(name);
    prog.ingroups = detail::build_groups(input_names, slot_of, /*is_input=*/true);
    prog.outgroups = detail::build_groups(g.output_names, slot_of, /*is_input=*/false);

    std::map<int, RowSlot> fixed;
    for (const auto& [name, id] : g.inputs) fixed[id] = slot_of.at(name);

    detail::RowAllocator alloc(g, region, fixed);
    for (size_t i = 0; i < g.output_names.size(); ++i)
        alloc.bind_output(static_cast<int>(i), slot_of.at(g.output_names[i]));
    prog.ops = alloc.run();
    prog.tmp_count = alloc.tmp_watermark();
    prog.declared_acts = prog.computed_acts();
    prog.validate();
    return prog;
}

inline CompileResult compile_netlist(const Netlist& nl, const CompileOptions& opts = {}) {
    CompileResult res;
    MIGraph raw = to_mig(nl);
    res.raw_cost = mig_cost(raw);
    MIGraph final_graph = opts.optimize ? optimize_mig(raw) : std::move(raw);
    res.final_cost = mig_cost(final_graph);
    std::string opcode = opts.opcode;
    if (opcode.empty())
        opcode = "bbop_" + detail::split_group(final_graph.output_names.at(0)).first;
    res.program = emit_microprogram(final_graph, opts.region, opcode);
    return res;
}

// --- built-in bit-serial operations ----------------------------------------------

enum class BitSerialOp { Add, Sub, And, Or, Xor, Lt };

inline const char* to_string(BitSerialOp op) {
    switch (op) {
        case BitSerialOp::Add: return "add";
        case BitSerialOp::Sub: return "sub";
        case BitSerialOp::And: return "and";
        case BitSerialOp::Or: return "or";
        case BitSerialOp::Xor: return "xor";
        case BitSerialOp::Lt: return "lt";
    }
    return "?";
}

/// Builds the ripple netlist for a width-w element-wise operation on the
/// vertical layout (bit i of every lane lives in row base+i). ADD/SUB wrap
/// modulo 2^w; LT produces one unsigned comparison bit.
inline Netlist bitserial_netlist(BitSerialOp op, int width) {
    if (width < 1 || width > 64)
        throw ValidationError("bit-serial width must be in [1, 64]");
    Netlist nl;
    auto in = [&](const std::string& g, int i) { return g + "." + std::to_string(i); };
    for (int i = 0; i < width; ++i) nl.inputs.push_back(in("a", i));
    for (int i = 0; i < width; ++i) nl.inputs.push_back(in("b", i));
    auto gate = [&](const std::string& out, GateOp g, std::vector<std::string> args) {
        nl.gates.push_back({out, g, std::move(args), 0});
        return out;
    };

    switch (op) {
        case BitSerialOp::And:
        case BitSerialOp::Or:
        case BitSerialOp::Xor: {
            GateOp g = op == BitSerialOp::And ? GateOp::And2
                       : op == BitSerialOp::Or ? GateOp::Or2
                                               : GateOp::Xor2;
            for (int i = 0; i < width; ++i) {
                gate(in("o", i), g, {in("a", i), in("b", i)});
                nl.outputs.push_back(in("o", i));
            }
            break;
        }
        case BitSerialOp::Add: {
            std::string carry;
            for (int i = 0; i < width; ++i) {
                std::string ai = in("a", i), bi = in("b", i);
                if (i == 0) {
                    gate(in("s", 0), GateOp::Xor2, {ai, bi});
                    if (width > 1) carry = gate("c1", GateOp::And2, {ai, bi});
                } else {
                    std::string p = gate("p" + std::to_string(i), GateOp::Xor2, {ai, bi});
                    gate(in("s", i), GateOp::Xor2, {p, carry});
                    if (i + 1 < width) {
                        std::string g0 = gate("g" + std::to_string(i), GateOp::And2, {ai, bi});
                        std::string t = gate("t" + std::to_string(i), GateOp::And2, {p, carry});
                        carry = gate("c" + std::to_string(i + 1), GateOp::Or2, {g0, t});
                    }
                }
                nl.outputs.push_back(in("s", i));
            }
            break;
        }
        case BitSerialOp::Sub:
        case BitSerialOp::Lt: {
            // a - b with a borrow ripple:
            //   d_i = a_i ^ b_i ^ bor_i
            //   bor_{i+1} = (!a_i & b_i) | (!(a_i ^ b_i) & bor_i)
            // LT keeps only the final borrow (unsigned a < b).
            std::string borrow;
            for (int i = 0; i < width; ++i) {
                std::string ai = in("a", i), bi = in("b", i);
                std::string x = gate("x" + std::to_string(i), GateOp::Xor2, {ai, bi});
                if (op == BitSerialOp::Sub) {
                    if (i == 0)
                        gate(in("d", 0), GateOp::Xor2, {ai, bi});
                    else
                        gate(in("d", i), GateOp::Xor2, {x, borrow});
                    nl.outputs.push_back(in("d", i));
                }
                bool need_borrow = i + 1 < width || op == BitSerialOp::Lt;
                if (!need_borrow) continue;
                std::string borrow_out =
                    (op == BitSerialOp::Lt && i + 1 == width) ? in("lt", 0)
                                                              : "w" + std::to_string(i + 1);
                std::string na = gate("na" + std::to_string(i), GateOp::Not, {ai});
                if (i == 0) {
                    borrow = gate(borrow_out, GateOp::And2, {na, bi});
                } else {
                    std::string u = gate("u" + std::to_string(i), GateOp::And2, {na, bi});
                    std::string nx = gate("nx" + std::to_string(i), GateOp::Not, {x});
                    std::string v = gate("v" + std::to_string(i), GateOp::And2, {nx, borrow});
                    borrow = gate(borrow_out, GateOp::Or2, {u, v});
                }
            }
            if (op == BitSerialOp::Lt) nl.outputs.push_back(in("lt", 0));
            break;
        }
    }
    return nl;
}

inline CompileResult compile_bitserial(BitSerialOp op, int width,
                                       CompileOptions opts = {}) {
    if (opts.opcode.empty())
        opts.opcode = "bbop_" + std::string(to_string(op)) + std::to_string(width);
    return compile_netlist(bitserial_netlist(op, width), opts);
}

} // namespace pudsim
