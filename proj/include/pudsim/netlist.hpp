#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pudsim/errors.hpp"

namespace pudsim {

// Structural netlist format, one definition per line:
//
//   input <name> [<name> ...]
//   output <name> [<name> ...]
//   <name> = <AND|OR|NOT|XOR> <operand> [<operand>]
//
// '#' starts a comment. Every operand must be defined on an earlier line, so
// well-formed files are acyclic by construction. XOR is surface sugar and is
// expanded to AND/OR/NOT before lowering.

enum class GateOp { And2, Or2, Not, Xor2 };

struct Gate {
    std::string out;
    GateOp op = GateOp::And2;
    std::vector<std::string> args;
    int line = 0;
};

struct Netlist {
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<Gate> gates; // definition order; operands always precede uses
};

namespace detail {

inline bool valid_signal_name(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
            return false;
    return true;
}

} // namespace detail

inline Netlist parse_netlist(const std::string& text) {
    Netlist nl;
    std::set<std::string> defined;
    std::set<std::string> outputs_seen;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;

    auto fail = [&](const std::string& why) -> ValidationError {
        return ValidationError("netlist parse: line " + std::to_string(lineno) + ": " + why);
    };

    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;

        if (tok == "input" || tok == "output") {
            bool is_input = tok == "input";
            std::string name;
            bool any = false;
            while (ls >> name) {
                any = true;
                if (!detail::valid_signal_name(name)) throw fail("bad signal name '" + name + "'");
                if (is_input) {
                    if (defined.count(name)) throw fail("signal '" + name + "' redefined");
                    defined.insert(name);
                    nl.inputs.push_back(name);
                } else {
                    if (outputs_seen.count(name)) throw fail("output '" + name + "' listed twice");
                    outputs_seen.insert(name);
                    nl.outputs.push_back(name);
                }
            }
            if (!any) throw fail("empty " + tok + " list");
            continue;
        }

        // gate definition: <name> = <OP> <args...>
        Gate g;
        g.out = tok;
        g.line = lineno;
        if (!detail::valid_signal_name(g.out)) throw fail("bad signal name '" + g.out + "'");
        if (!(ls >> tok) || tok != "=") throw fail("expected '=' after '" + g.out + "'");
        std::string op;
        if (!(ls >> op)) throw fail("missing gate operator");
        int arity;
        if (op == "AND") { g.op = GateOp::And2; arity = 2; }
        else if (op == "OR") { g.op = GateOp::Or2; arity = 2; }
        else if (op == "XOR") { g.op = GateOp::Xor2; arity = 2; }
        else if (op == "NOT") { g.op = GateOp::Not; arity = 1; }
        else throw fail("unknown gate operator '" + op + "'");
        std::string arg;
        while (ls >> arg) {
            if (!defined.count(arg))
                throw fail("operand '" + arg + "' is undefined here (missing definition "
                           "or a cycle)");
            g.args.push_back(arg);
        }
        if (static_cast<int>(g.args.size()) != arity)
            throw fail(op + " takes " + std::to_string(arity) + " operand(s), got " +
                       std::to_string(g.args.size()));
        if (defined.count(g.out)) throw fail("signal '" + g.out + "' redefined");
        defined.insert(g.out);
        nl.gates.push_back(std::move(g));
    }

    if (nl.outputs.empty()) throw ValidationError("netlist parse: no outputs declared");
    for (const std::string& o : nl.outputs)
        if (!defined.count(o))
            throw ValidationError("netlist parse: output '" + o + "' is never produced");
    return nl;
}

/// Rewrites every XOR gate as AND(OR(a,b), NOT(AND(a,b))). Generated signal
/// names carry a '$' prefix, which the surface grammar cannot produce.
inline Netlist expand_xor(const Netlist& in) {
    Netlist out;
    out.inputs = in.inputs;
    out.outputs = in.outputs;
    int fresh = 0;
    for (const Gate& g : in.gates) {
        if (g.op != GateOp::Xor2) {
            out.gates.push_back(g);
            continue;
        }
        std::string base = "$x" + std::to_string(fresh++);
        Gate g_or{base + ".or", GateOp::Or2, {g.args[0], g.args[1]}, g.line};
        Gate g_and{base + ".and", GateOp::And2, {g.args[0], g.args[1]}, g.line};
        Gate g_not{base + ".nand", GateOp::Not, {g_and.out}, g.line};
        Gate g_fin{g.out, GateOp::And2, {g_or.out, g_not.out}, g.line};
        out.gates.push_back(g_or);
        out.gates.push_back(g_and);
        out.gates.push_back(g_not);
        out.gates.push_back(g_fin);
    }
    return out;
}

// --- truth tables -------------------------------------------------------------
//
// A truth table over n inputs is 2^n bits packed into 64-bit words; bit r is
// the value under the assignment where input i (declaration order) takes bit i
// of r. Used as the reference semantics for equivalence checking.

using TruthTable = std::vector<std::uint64_t>;

inline int tt_words(int n_inputs) {
    return n_inputs <= 6 ? 1 : (1 << (n_inputs - 6));
}

inline std::uint64_t tt_final_mask(int n_inputs) {
    return n_inputs >= 6 ? ~0ull : ((1ull << (1 << n_inputs)) - 1);
}

inline TruthTable tt_var(int i, int n_inputs) {
    static const std::uint64_t kPatterns[6] = {
        0xaaaaaaaaaaaaaaaaull, 0xccccccccccccccccull, 0xf0f0f0f0f0f0f0f0ull,
        0xff00ff00ff00ff00ull, 0xffff0000ffff0000ull, 0xffffffff00000000ull,
    };
    TruthTable t(tt_words(n_inputs));
    for (size_t w = 0; w < t.size(); ++w)
        t[w] = i < 6 ? kPatterns[i] : ((w >> (i - 6)) & 1 ? ~0ull : 0ull);
    t.back() &= tt_final_mask(n_inputs);
    return t;
}

inline TruthTable tt_const(bool v, int n_inputs) {
    TruthTable t(tt_words(n_inputs), v ? ~0ull : 0ull);
    t.back() &= tt_final_mask(n_inputs);
    return t;
}

inline bool tt_bit(const TruthTable& t, std::uint64_t row) {
    return (t[row >> 6] >> (row & 63)) & 1;
}

/// Evaluates every signal; returns the outputs' tables in declaration order.
inline std::vector<TruthTable> netlist_truth_tables(const Netlist& nl) {
    const int n = static_cast<int>(nl.inputs.size());
    if (n > 16) throw ValidationError("truth tables limited to 16 inputs");
    std::map<std::string, TruthTable> val;
    for (int i = 0; i < n; ++i) val[nl.inputs[i]] = tt_var(i, n);
    const std::uint64_t mask = tt_final_mask(n);
    for (const Gate& g : nl.gates) {
        const TruthTable& a = val.at(g.args[0]);
        TruthTable r(a.size());
        switch (g.op) {
            case GateOp::Not:
                for (size_t w = 0; w < r.size(); ++w) r[w] = ~a[w];
                break;
            case GateOp::And2: {
                const TruthTable& b = val.at(g.args[1]);
                for (size_t w = 0; w < r.size(); ++w) r[w] = a[w] & b[w];
                break;
            }
            case GateOp::Or2: {
                const TruthTable& b = val.at(g.args[1]);
                for (size_t w = 0; w < r.size(); ++w) r[w] = a[w] | b[w];
                break;
            }
            case GateOp::Xor2: {
                const TruthTable& b = val.at(g.args[1]);
                for (size_t w = 0; w < r.size(); ++w) r[w] = a[w] ^ b[w];
                break;
            }
        }
        r.back() &= mask;
        val[g.out] = std::move(r);
    }
    std::vector<TruthTable> out;
    for (const std::string& o : nl.outputs) out.push_back(val.at(o));
    return out;
}

/// Point evaluation of all outputs under one input assignment.
inline std::vector<bool> netlist_eval(const Netlist& nl, std::uint64_t assignment) {
    std::map<std::string, bool> val;
    for (size_t i = 0; i < nl.inputs.size(); ++i)
        val[nl.inputs[i]] = (assignment >> i) & 1;
    for (const Gate& g : nl.gates) {
        bool a = val.at(g.args[0]);
        bool r = false;
        switch (g.op) {
            case GateOp::Not: r = !a; break;
            case GateOp::And2: r = a && val.at(g.args[1]); break;
            case GateOp::Or2: r = a || val.at(g.args[1]); break;
            case GateOp::Xor2: r = a != val.at(g.args[1]); break;
        }
        val[g.out] = r;
    }
    std::vector<bool> out;
    for (const std::string& o : nl.outputs) out.push_back(val.at(o));
    return out;
}

} // namespace pudsim
