#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pudsim/errors.hpp"

namespace pudsim {

/// Symbolic row reference inside a stored microprogram. Physical rows are
/// bound only at execution time:
///   In/Out: bit `index` of operand group `group` (vertical layout: row =
///           operand base + bit),
///   Tmp:    scratch data-region row,
///   B:      one of the designated TRA-capable compute rows,
///   C0/C1:  the constant rows,
///   N:      a dual-contact (negation-capable) cell.
struct RowSlot {
    enum class Kind : std::uint8_t { In, Out, Tmp, B, C0, C1, N };
    Kind kind = Kind::B;
    int group = 0;
    int index = 0;

    friend bool operator==(const RowSlot&, const RowSlot&) = default;

    static RowSlot in(int group, int bit) { return {Kind::In, group, bit}; }
    static RowSlot out(int group, int bit) { return {Kind::Out, group, bit}; }
    static RowSlot tmp(int k) { return {Kind::Tmp, 0, k}; }
    static RowSlot b(int k) { return {Kind::B, 0, k}; }
    static RowSlot c0() { return {Kind::C0, 0, 0}; }
    static RowSlot c1() { return {Kind::C1, 0, 0}; }
    static RowSlot n(int k) { return {Kind::N, 0, k}; }
};

enum class UopKind : std::uint8_t { Set, Copy, Tra, Not };

/// One micro-operation. Activation costs: SET and TRA take one row
/// activation, COPY and NOT take two.
struct MicroOp {
    UopKind kind = UopKind::Copy;
    RowSlot a, b, c; // Set: a (+value); Copy/Not: a -> b; Tra: a,b,c
    int value = 0;   // Set only

    long activations() const {
        switch (kind) {
            case UopKind::Set: return 1;
            case UopKind::Tra: return 1;
            case UopKind::Copy: return 2;
            case UopKind::Not: return 2;
        }
        return 0;
    }
};

struct OperandGroup {
    std::string name;
    int bits = 1;
    friend bool operator==(const OperandGroup&, const OperandGroup&) = default;
};

/// A stored bulk-bitwise operation: ordered micro-ops over symbolic rows,
/// plus the operand groups that bind to row bases when dispatched.
struct MicroProgram {
    std::string opcode;
    std::vector<OperandGroup> ingroups;
    std::vector<OperandGroup> outgroups;
    int tmp_count = 0;
    long declared_acts = 0;
    std::vector<MicroOp> ops;

    long computed_acts() const {
        long total = 0;
        for (const MicroOp& op : ops) total += op.activations();
        return total;
    }

    void validate() const {
        if (opcode.empty()) throw ValidationError("microprogram: empty opcode");
        if (declared_acts != computed_acts())
            throw ValidationError("microprogram: declared activation count " +
                                  std::to_string(declared_acts) + " != computed " +
                                  std::to_string(computed_acts()));
        std::set<std::string> names;
        for (const auto& g : ingroups)
            if (!names.insert(g.name).second)
                throw ValidationError("microprogram: duplicate group '" + g.name + "'");
        for (const auto& g : outgroups)
            if (!names.insert(g.name).second)
                throw ValidationError("microprogram: duplicate group '" + g.name + "'");
        for (const auto& g : ingroups) check_group_name(g.name);
        for (const auto& g : outgroups) check_group_name(g.name);
        for (const MicroOp& op : ops) {
            check_slot(op.a);
            if (op.kind != UopKind::Set) check_slot(op.b);
            if (op.kind == UopKind::Tra) check_slot(op.c);
            if (op.kind == UopKind::Not && op.b.kind != RowSlot::Kind::N)
                throw ValidationError("microprogram: NOT destination must be an n-slot");
            if (op.kind == UopKind::Tra &&
                (op.a.kind != RowSlot::Kind::B || op.b.kind != RowSlot::Kind::B ||
                 op.c.kind != RowSlot::Kind::B))
                throw ValidationError("microprogram: TRA operands must be b-slots");
        }
    }

    // --- text format ----------------------------------------------------------
    //
    //   uprogram v1
    //   opcode <name>
    //   in <group> <bits>      (repeated, operand order)
    //   out <group> <bits>
    //   tmps <count>
    //   acts <count>
    //   set r.c0 <0|1>
    //   copy <slot> <slot>
    //   tra <slot> <slot> <slot>
    //   not <slot> <slot>
    //   end
    //
    // Slots: <group>.<bit> | t<k> | r.b<k> | r.c0 | r.c1 | r.n<k>

    std::string slot_str(const RowSlot& s) const {
        switch (s.kind) {
            case RowSlot::Kind::In: return ingroups[s.group].name + "." + std::to_string(s.index);
            case RowSlot::Kind::Out:
                return outgroups[s.group].name + "." + std::to_string(s.index);
            case RowSlot::Kind::Tmp: return "t" + std::to_string(s.index);
            case RowSlot::Kind::B: return "r.b" + std::to_string(s.index);
            case RowSlot::Kind::C0: return "r.c0";
            case RowSlot::Kind::C1: return "r.c1";
            case RowSlot::Kind::N: return "r.n" + std::to_string(s.index);
        }
        return "?";
    }

    std::string serialize() const {
        std::ostringstream os;
        os << "uprogram v1\n";
        os << "opcode " << opcode << "\n";
        for (const auto& g : ingroups) os << "in " << g.name << " " << g.bits << "\n";
        for (const auto& g : outgroups) os << "out " << g.name << " " << g.bits << "\n";
        os << "tmps " << tmp_count << "\n";
        os << "acts " << declared_acts << "\n";
        for (const MicroOp& op : ops) {
            switch (op.kind) {
                case UopKind::Set:
                    os << "set " << slot_str(op.a) << " " << op.value << "\n";
                    break;
                case UopKind::Copy:
                    os << "copy " << slot_str(op.a) << " " << slot_str(op.b) << "\n";
                    break;
                case UopKind::Tra:
                    os << "tra " << slot_str(op.a) << " " << slot_str(op.b) << " "
                       << slot_str(op.c) << "\n";
                    break;
                case UopKind::Not:
                    os << "not " << slot_str(op.a) << " " << slot_str(op.b) << "\n";
                    break;
            }
        }
        os << "end\n";
        return os.str();
    }

    static MicroProgram parse(const std::string& text);

private:
    static void check_group_name(const std::string& name) {
        if (name.empty() || name == "r")
            throw ValidationError("microprogram: reserved group name '" + name + "'");
        if (name[0] == 't') {
            bool digits = name.size() > 1;
            for (size_t i = 1; i < name.size(); ++i)
                digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
            if (digits)
                throw ValidationError("microprogram: group name '" + name +
                                      "' collides with tmp slots");
        }
        if (name.find('.') != std::string::npos)
            throw ValidationError("microprogram: group name may not contain '.'");
    }

    void check_slot(const RowSlot& s) const {
        switch (s.kind) {
            case RowSlot::Kind::In:
                if (s.group < 0 || s.group >= static_cast<int>(ingroups.size()) ||
                    s.index < 0 || s.index >= ingroups[s.group].bits)
                    throw ValidationError("microprogram: input slot out of range");
                break;
            case RowSlot::Kind::Out:
                if (s.group < 0 || s.group >= static_cast<int>(outgroups.size()) ||
                    s.index < 0 || s.index >= outgroups[s.group].bits)
                    throw ValidationError("microprogram: output slot out of range");
                break;
            case RowSlot::Kind::Tmp:
                if (s.index < 0 || s.index >= tmp_count)
                    throw ValidationError("microprogram: tmp slot out of range");
                break;
            default:
                if (s.index < 0)
                    throw ValidationError("microprogram: negative slot index");
                break;
        }
    }
};

inline MicroProgram MicroProgram::parse(const std::string& text) {
    MicroProgram p;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& why) -> ValidationError {
        return ValidationError("microprogram parse: line " + std::to_string(lineno) + ": " +
                               why);
    };

    auto parse_slot = [&](const std::string& tok) -> RowSlot {
        if (tok == "r.c0") return RowSlot::c0();
        if (tok == "r.c1") return RowSlot::c1();
        if (tok.rfind("r.b", 0) == 0) return RowSlot::b(std::stoi(tok.substr(3)));
        if (tok.rfind("r.n", 0) == 0) return RowSlot::n(std::stoi(tok.substr(3)));
        if (tok[0] == 't' && tok.size() > 1 &&
            std::all_of(tok.begin() + 1, tok.end(),
                        [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            return RowSlot::tmp(std::stoi(tok.substr(1)));
        auto dot = tok.rfind('.');
        if (dot == std::string::npos || dot + 1 >= tok.size())
            throw fail("bad slot '" + tok + "'");
        std::string group = tok.substr(0, dot);
        int bit = std::stoi(tok.substr(dot + 1));
        for (size_t i = 0; i < p.ingroups.size(); ++i)
            if (p.ingroups[i].name == group) return RowSlot::in(static_cast<int>(i), bit);
        for (size_t i = 0; i < p.outgroups.size(); ++i)
            if (p.outgroups[i].name == group) return RowSlot::out(static_cast<int>(i), bit);
        throw fail("unknown operand group in slot '" + tok + "'");
    };

    bool saw_header = false, saw_end = false;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (!saw_header) {
            std::string v;
            ls >> v;
            if (tok != "uprogram" || v != "v1") throw fail("expected 'uprogram v1' header");
            saw_header = true;
            continue;
        }
        if (saw_end) throw fail("content after 'end'");
        if (tok == "opcode") {
            if (!(ls >> p.opcode)) throw fail("missing opcode name");
        } else if (tok == "in" || tok == "out") {
            OperandGroup g;
            if (!(ls >> g.name >> g.bits) || g.bits < 1) throw fail("bad group line");
            (tok == "in" ? p.ingroups : p.outgroups).push_back(g);
        } else if (tok == "tmps") {
            if (!(ls >> p.tmp_count)) throw fail("bad tmps line");
        } else if (tok == "acts") {
            if (!(ls >> p.declared_acts)) throw fail("bad acts line");
        } else if (tok == "set") {
            MicroOp op;
            op.kind = UopKind::Set;
            std::string slot;
            if (!(ls >> slot >> op.value) || (op.value != 0 && op.value != 1))
                throw fail("bad set line");
            op.a = parse_slot(slot);
            p.ops.push_back(op);
        } else if (tok == "copy" || tok == "not") {
            MicroOp op;
            op.kind = tok == "copy" ? UopKind::Copy : UopKind::Not;
            std::string s1, s2;
            if (!(ls >> s1 >> s2)) throw fail("bad " + tok + " line");
            op.a = parse_slot(s1);
            op.b = parse_slot(s2);
            p.ops.push_back(op);
        } else if (tok == "tra") {
            MicroOp op;
            op.kind = UopKind::Tra;
            std::string s1, s2, s3;
            if (!(ls >> s1 >> s2 >> s3)) throw fail("bad tra line");
            op.a = parse_slot(s1);
            op.b = parse_slot(s2);
            op.c = parse_slot(s3);
            p.ops.push_back(op);
        } else if (tok == "end") {
            saw_end = true;
        } else {
            throw fail("unknown directive '" + tok + "'");
        }
    }
    if (!saw_header) throw ValidationError("microprogram parse: missing header");
    if (!saw_end) throw ValidationError("microprogram parse: missing 'end'");
    p.validate();
    return p;
}

} // namespace pudsim
