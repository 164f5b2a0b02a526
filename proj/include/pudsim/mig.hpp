#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "pudsim/netlist.hpp"

namespace pudsim {

/// Majority-inverter graph: MAJ3 and INV nodes over inputs and the two
/// constants. Node ids are topological (fanins precede users).
struct MIGraph {
    enum class Kind : std::uint8_t { Input, Const0, Const1, Maj, Inv };
    struct Node {
        Kind kind = Kind::Const0;
        std::array<int, 3> fanin{-1, -1, -1};
    };
    std::vector<Node> nodes;
    std::vector<std::pair<std::string, int>> inputs; // declaration order
    std::vector<int> outputs;
    std::vector<std::string> output_names;

    int input_index(int node_id) const {
        for (size_t i = 0; i < inputs.size(); ++i)
            if (inputs[i].second == node_id) return static_cast<int>(i);
        return -1;
    }
};

struct MigCost {
    long maj = 0;
    long inv = 0;
    friend bool operator==(const MigCost&, const MigCost&) = default;
    friend auto operator<=>(const MigCost& a, const MigCost& b) {
        return std::tie(a.maj, a.inv) <=> std::tie(b.maj, b.inv);
    }
};

/// Live node counts, following only edges reachable from the outputs.
inline MigCost mig_cost(const MIGraph& g) {
    std::vector<bool> live(g.nodes.size(), false);
    std::vector<int> stack(g.outputs.begin(), g.outputs.end());
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        if (id < 0 || live[id]) continue;
        live[id] = true;
        for (int f : g.nodes[id].fanin)
            if (f >= 0) stack.push_back(f);
    }
    MigCost c;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        if (!live[i]) continue;
        if (g.nodes[i].kind == MIGraph::Kind::Maj) c.maj++;
        if (g.nodes[i].kind == MIGraph::Kind::Inv) c.inv++;
    }
    return c;
}

/// Incremental graph constructor. With rules enabled it hash-conses nodes and
/// applies the local axioms on the fly:
///   M(a,a,b) = a          M(a,!a,b) = b          M(0,1,x) = x
///   INV(INV(x)) = x       INV(const) = const'
class MigBuilder {
public:
    explicit MigBuilder(bool use_rules) : use_rules_(use_rules) {}

    MIGraph take() { return std::move(g_); }
    const MIGraph& graph() const { return g_; }

    int add_input(const std::string& name) {
        int id = append({MIGraph::Kind::Input, {-1, -1, -1}});
        g_.inputs.emplace_back(name, id);
        return id;
    }

    int get_const(bool v) {
        int& slot = v ? c1_ : c0_;
        if (slot < 0)
            slot = append({v ? MIGraph::Kind::Const1 : MIGraph::Kind::Const0, {-1, -1, -1}});
        return slot;
    }

    int add_inv(int a) {
        if (use_rules_) {
            const auto& n = g_.nodes[a];
            if (n.kind == MIGraph::Kind::Inv) return n.fanin[0];
            if (n.kind == MIGraph::Kind::Const0) return get_const(true);
            if (n.kind == MIGraph::Kind::Const1) return get_const(false);
            auto key = std::make_tuple(1, a, -1, -1);
            auto it = hash_.find(key);
            if (it != hash_.end()) return it->second;
            int id = append({MIGraph::Kind::Inv, {a, -1, -1}});
            hash_[key] = id;
            return id;
        }
        return append({MIGraph::Kind::Inv, {a, -1, -1}});
    }

    int add_maj(int a, int b, int c) {
        if (use_rules_) {
            int f[3] = {a, b, c};
            std::sort(f, f + 3);
            a = f[0];
            b = f[1];
            c = f[2];
            if (a == b) return a;
            if (b == c) return b;
            if (complement_pair(a, b)) return c;
            if (complement_pair(a, c)) return b;
            if (complement_pair(b, c)) return a;
            if (const_pair(a, b)) return c;
            if (const_pair(a, c)) return b;
            if (const_pair(b, c)) return a;
            auto key = std::make_tuple(2, a, b, c);
            auto it = hash_.find(key);
            if (it != hash_.end()) return it->second;
            int id = append({MIGraph::Kind::Maj, {a, b, c}});
            hash_[key] = id;
            return id;
        }
        return append({MIGraph::Kind::Maj, {a, b, c}});
    }

    void add_output(const std::string& name, int id) {
        g_.outputs.push_back(id);
        g_.output_names.push_back(name);
    }

private:
    int append(MIGraph::Node n) {
        g_.nodes.push_back(n);
        return static_cast<int>(g_.nodes.size()) - 1;
    }
    bool complement_pair(int x, int y) const {
        const auto& nx = g_.nodes[x];
        const auto& ny = g_.nodes[y];
        return (nx.kind == MIGraph::Kind::Inv && nx.fanin[0] == y) ||
               (ny.kind == MIGraph::Kind::Inv && ny.fanin[0] == x);
    }
    bool const_pair(int x, int y) const {
        auto kx = g_.nodes[x].kind;
        auto ky = g_.nodes[y].kind;
        return (kx == MIGraph::Kind::Const0 && ky == MIGraph::Kind::Const1) ||
               (kx == MIGraph::Kind::Const1 && ky == MIGraph::Kind::Const0);
    }

    MIGraph g_;
    bool use_rules_;
    int c0_ = -1;
    int c1_ = -1;
    std::map<std::tuple<int, int, int, int>, int> hash_;
};

/// Lowers a netlist to a raw MIG: AND(a,b) = MAJ(a,b,0), OR(a,b) = MAJ(a,b,1),
/// NOT = INV. XOR is expanded first. No sharing or rewriting happens here;
/// that is the optimizer's job.
inline MIGraph to_mig(const Netlist& netlist) {
    Netlist nl = expand_xor(netlist);
    MigBuilder b(/*use_rules=*/false);
    std::map<std::string, int> sig;
    for (const std::string& in : nl.inputs) sig[in] = b.add_input(in);
    for (const Gate& gate : nl.gates) {
        int id = -1;
        switch (gate.op) {
            case GateOp::And2:
                id = b.add_maj(sig.at(gate.args[0]), sig.at(gate.args[1]), b.get_const(false));
                break;
            case GateOp::Or2:
                id = b.add_maj(sig.at(gate.args[0]), sig.at(gate.args[1]), b.get_const(true));
                break;
            case GateOp::Not:
                id = b.add_inv(sig.at(gate.args[0]));
                break;
            case GateOp::Xor2:
                throw ValidationError("to_mig: XOR must be expanded first");
        }
        sig[gate.out] = id;
    }
    for (const std::string& o : nl.outputs) b.add_output(o, sig.at(o));
    return b.take();
}

// --- evaluation ----------------------------------------------------------------

inline std::vector<TruthTable> mig_truth_tables(const MIGraph& g) {
    const int n = static_cast<int>(g.inputs.size());
    if (n > 16) throw ValidationError("truth tables limited to 16 inputs");
    const std::uint64_t mask = tt_final_mask(n);
    std::vector<TruthTable> val(g.nodes.size());
    for (size_t id = 0; id < g.nodes.size(); ++id) {
        const auto& node = g.nodes[id];
        switch (node.kind) {
            case MIGraph::Kind::Const0: val[id] = tt_const(false, n); break;
            case MIGraph::Kind::Const1: val[id] = tt_const(true, n); break;
            case MIGraph::Kind::Input:
                val[id] = tt_var(g.input_index(static_cast<int>(id)), n);
                break;
            case MIGraph::Kind::Inv: {
                const TruthTable& a = val[node.fanin[0]];
                TruthTable r(a.size());
                for (size_t w = 0; w < r.size(); ++w) r[w] = ~a[w];
                r.back() &= mask;
                val[id] = std::move(r);
                break;
            }
            case MIGraph::Kind::Maj: {
                const TruthTable& a = val[node.fanin[0]];
                const TruthTable& b = val[node.fanin[1]];
                const TruthTable& c = val[node.fanin[2]];
                TruthTable r(a.size());
                for (size_t w = 0; w < r.size(); ++w)
                    r[w] = (a[w] & b[w]) | (a[w] & c[w]) | (b[w] & c[w]);
                val[id] = std::move(r);
                break;
            }
        }
    }
    std::vector<TruthTable> out;
    for (int o : g.outputs) out.push_back(val[o]);
    return out;
}

// --- optimal three-input structures ----------------------------------------------
//
// For rewriting small cones we precompute, for every 3-variable function, a
// minimum-cost MAJ/INV tree (cost ordered by MAJ count, then INV count). Built
// once by relaxation over all 256 truth tables.

namespace detail {

struct Mig3Entry {
    std::uint8_t maj = 255;
    std::uint8_t inv = 255;
    std::uint8_t op = 0;   // 0 leaf/const, 1 inv, 2 maj
    std::uint8_t a = 0, b = 0, c = 0;
    bool known() const { return maj != 255; }
    bool better_than(const Mig3Entry& o) const {
        return !o.known() || maj < o.maj || (maj == o.maj && inv < o.inv);
    }
};

inline const std::array<Mig3Entry, 256>& mig3_table() {
    static const std::array<Mig3Entry, 256> table = [] {
        std::array<Mig3Entry, 256> t{};
        auto relax = [&](int tt, Mig3Entry e) {
            if (e.better_than(t[tt])) {
                t[tt] = e;
                return true;
            }
            return false;
        };
        // leaves: constants and projections (a=0xaa, b=0xcc, c=0xf0)
        const std::uint8_t proj[3] = {0xaa, 0xcc, 0xf0};
        relax(0x00, {0, 0, 0, 3, 0, 0});
        relax(0xff, {0, 0, 0, 4, 0, 0});
        for (int v = 0; v < 3; ++v)
            relax(proj[v], {0, 0, 0, static_cast<std::uint8_t>(v), 0, 0});
        for (bool changed = true; changed;) {
            changed = false;
            for (int f = 0; f < 256; ++f) {
                if (!t[f].known()) continue;
                Mig3Entry inv{t[f].maj, static_cast<std::uint8_t>(t[f].inv + 1), 1,
                              static_cast<std::uint8_t>(f), 0, 0};
                changed |= relax(~f & 0xff, inv);
            }
            for (int f = 0; f < 256; ++f) {
                if (!t[f].known()) continue;
                for (int g = f; g < 256; ++g) {
                    if (!t[g].known()) continue;
                    for (int h = g; h < 256; ++h) {
                        if (!t[h].known()) continue;
                        int m = (f & g) | (f & h) | (g & h);
                        int maj_cost = t[f].maj + t[g].maj + t[h].maj + 1;
                        int inv_cost = t[f].inv + t[g].inv + t[h].inv;
                        if (maj_cost > 254 || inv_cost > 254) continue;
                        Mig3Entry e{static_cast<std::uint8_t>(maj_cost),
                                    static_cast<std::uint8_t>(inv_cost), 2,
                                    static_cast<std::uint8_t>(f),
                                    static_cast<std::uint8_t>(g),
                                    static_cast<std::uint8_t>(h)};
                        changed |= relax(m, e);
                    }
                }
            }
        }
        return t;
    }();
    return table;
}

/// Materializes the table recipe for `tt` over the given variable node ids.
inline int materialize_mig3(MigBuilder& b, int tt, const std::array<int, 3>& vars) {
    const auto& t = mig3_table();
    const Mig3Entry& e = t[tt & 0xff];
    switch (e.op) {
        case 0:
            if (e.a == 3) return b.get_const(false);
            if (e.a == 4) return b.get_const(true);
            return vars[e.a];
        case 1:
            return b.add_inv(materialize_mig3(b, e.a, vars));
        default:
            return b.add_maj(materialize_mig3(b, e.a, vars),
                             materialize_mig3(b, e.b, vars),
                             materialize_mig3(b, e.c, vars));
    }
}

} // namespace detail

// --- optimization ------------------------------------------------------------------

namespace detail {

/// Rebuilds `g` through a rule-applying builder. When `rewrite_node` >= 0 that
/// node is replaced by the optimal small-cone structure `rewrite_tt` over
/// `rewrite_vars` (old input node ids). Unreachable nodes are dropped.
inline MIGraph rebuild(const MIGraph& g, int rewrite_node = -1, int rewrite_tt = 0,
                       std::array<int, 3> rewrite_vars = {-1, -1, -1}) {
    MigBuilder b(/*use_rules=*/true);
    std::vector<int> map(g.nodes.size(), -1);
    // Inputs keep the external interface regardless of liveness.
    for (const auto& [name, id] : g.inputs) map[id] = b.add_input(name);
    for (size_t id = 0; id < g.nodes.size(); ++id) {
        const auto& n = g.nodes[id];
        if (n.kind == MIGraph::Kind::Input) continue;
        if (static_cast<int>(id) == rewrite_node) {
            std::array<int, 3> vars{-1, -1, -1};
            for (int v = 0; v < 3; ++v)
                if (rewrite_vars[v] >= 0) vars[v] = map[rewrite_vars[v]];
            map[id] = materialize_mig3(b, rewrite_tt, vars);
            continue;
        }
        switch (n.kind) {
            case MIGraph::Kind::Const0: map[id] = b.get_const(false); break;
            case MIGraph::Kind::Const1: map[id] = b.get_const(true); break;
            case MIGraph::Kind::Inv: map[id] = b.add_inv(map[n.fanin[0]]); break;
            case MIGraph::Kind::Maj:
                map[id] = b.add_maj(map[n.fanin[0]], map[n.fanin[1]], map[n.fanin[2]]);
                break;
            case MIGraph::Kind::Input: break;
        }
    }
    // Only referenced nodes survive: rebuild from scratch keeping live cone.
    MIGraph mid = b.take();
    for (size_t i = 0; i < g.outputs.size(); ++i) {
        mid.outputs.push_back(map[g.outputs[i]]);
        mid.output_names.push_back(g.output_names[i]);
    }

    // Strip dead nodes with a second structural pass.
    std::vector<bool> live(mid.nodes.size(), false);
    std::vector<int> stack(mid.outputs.begin(), mid.outputs.end());
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        if (id < 0 || live[id]) continue;
        live[id] = true;
        for (int f : mid.nodes[id].fanin)
            if (f >= 0) stack.push_back(f);
    }
    for (const auto& [name, id] : mid.inputs) live[id] = true;

    MIGraph out;
    std::vector<int> remap(mid.nodes.size(), -1);
    for (size_t id = 0; id < mid.nodes.size(); ++id) {
        if (!live[id]) continue;
        MIGraph::Node n = mid.nodes[id];
        for (int& f : n.fanin)
            if (f >= 0) f = remap[f];
        remap[id] = static_cast<int>(out.nodes.size());
        out.nodes.push_back(n);
    }
    for (const auto& [name, id] : mid.inputs) out.inputs.emplace_back(name, remap[id]);
    for (size_t i = 0; i < mid.outputs.size(); ++i) {
        out.outputs.push_back(remap[mid.outputs[i]]);
        out.output_names.push_back(mid.output_names[i]);
    }
    return out;
}

/// Input support of every node, as sorted input-node-id lists capped at 4.
inline std::vector<std::vector<int>> supports(const MIGraph& g) {
    std::vector<std::vector<int>> sup(g.nodes.size());
    for (size_t id = 0; id < g.nodes.size(); ++id) {
        const auto& n = g.nodes[id];
        if (n.kind == MIGraph::Kind::Input) {
            sup[id] = {static_cast<int>(id)};
            continue;
        }
        std::set<int> merged;
        for (int f : n.fanin) {
            if (f < 0) continue;
            for (int v : sup[f]) {
                merged.insert(v);
                if (merged.size() > 3) break;
            }
            if (merged.size() > 3) break;
        }
        if (merged.size() > 3)
            sup[id] = {-1, -1, -1, -1}; // sentinel: too wide to rewrite
        else
            sup[id].assign(merged.begin(), merged.end());
    }
    return sup;
}

/// Local truth table of `node` over its (<= 3) support variables. Nodes whose
/// support is not covered by `vars` evaluate to -1 and poison their users.
inline int cone_tt(const MIGraph& g, int node, const std::vector<int>& vars) {
    const std::uint8_t proj[3] = {0xaa, 0xcc, 0xf0};
    std::vector<int> memo(g.nodes.size(), -1);
    // fanins precede users, so one pass in id order evaluates the cone
    for (int id = 0; id <= node; ++id) {
        const auto& n = g.nodes[id];
        int v = -1;
        switch (n.kind) {
            case MIGraph::Kind::Const0: v = 0x00; break;
            case MIGraph::Kind::Const1: v = 0xff; break;
            case MIGraph::Kind::Input: {
                for (size_t k = 0; k < vars.size(); ++k)
                    if (vars[k] == id) v = proj[k];
                break;
            }
            case MIGraph::Kind::Inv:
                if (memo[n.fanin[0]] >= 0) v = ~memo[n.fanin[0]] & 0xff;
                break;
            case MIGraph::Kind::Maj: {
                int a = memo[n.fanin[0]], b = memo[n.fanin[1]], c = memo[n.fanin[2]];
                if (a >= 0 && b >= 0 && c >= 0) v = (a & b) | (a & c) | (b & c);
                break;
            }
        }
        memo[id] = v;
    }
    return memo[node];
}

} // namespace detail

/// Applies the algebraic rules to fixpoint, then repeatedly rewrites small
/// cones (input support of at most three variables) with precomputed optimal
/// structures while that strictly lowers (MAJ count, INV count). Preserves the
/// function; never increases the MAJ count.
inline MIGraph optimize_mig(const MIGraph& input) {
    MIGraph g = detail::rebuild(input);
    for (int pass = 0; pass < 8; ++pass) {
        MIGraph next = detail::rebuild(g);
        if (next.nodes.size() == g.nodes.size()) {
            g = std::move(next);
            break;
        }
        g = std::move(next);
    }

    bool improved = true;
    while (improved) {
        improved = false;
        MigCost best = mig_cost(g);
        auto sup = detail::supports(g);
        for (size_t id = 0; id < g.nodes.size() && !improved; ++id) {
            if (g.nodes[id].kind != MIGraph::Kind::Maj) continue;
            if (sup[id].size() > 3 || (!sup[id].empty() && sup[id][0] < 0)) continue;
            int tt = detail::cone_tt(g, static_cast<int>(id), sup[id]);
            if (tt < 0) continue;
            std::array<int, 3> vars{-1, -1, -1};
            for (size_t k = 0; k < sup[id].size(); ++k) vars[k] = sup[id][k];
            MIGraph candidate = detail::rebuild(g, static_cast<int>(id), tt, vars);
            if (mig_cost(candidate) < best) {
                g = std::move(candidate);
                improved = true;
            }
        }
    }
    return g;
}

} // namespace pudsim
