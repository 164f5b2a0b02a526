#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pudsim/geometry.hpp"

namespace pudsim {

/// Timing knobs the command stream is judged against. Delays are logical
/// annotations, not an event calendar: what matters is violated-vs-respected.
///   - an ACT whose delay_after is below tRAS leaves sensing unresolved,
///   - a PRE whose delay_after is below violation_threshold is interrupted
///     (rows stay connected and the next ACT joins the in-flight operation).
/// tRD/tWR are the nominal column access costs used for simulated-time
/// accounting only.
struct TimingParams {
    double tRAS_ns = 35.0;
    double tRP_ns = 15.0;
    double violation_threshold_ns = 3.0;
    double tRD_ns = 15.0;
    double tWR_ns = 15.0;

    void validate() const {
        if (tRAS_ns <= 0 || tRP_ns <= 0 || violation_threshold_ns <= 0 ||
            tRD_ns <= 0 || tWR_ns <= 0)
            throw ValidationError("timing: all parameters must be positive");
        if (violation_threshold_ns >= tRP_ns)
            throw ValidationError("timing: violation_threshold_ns must be below tRP_ns");
    }
};

enum class CommandKind { ACT, PRE, RD, WR, NOP };

/// One DRAM command. Field usage by kind:
///   ACT: rows (non-empty, one subarray), delay_after_ns
///   PRE: sector (optional per-mat mask), delay_after_ns
///   RD:  row, col (hff-aligned), hold_hff
///   WR:  row, col (hff-aligned), value
///   NOP: delay_after_ns
struct Command {
    CommandKind kind = CommandKind::NOP;
    std::vector<RowAddr> rows;                  // ACT
    std::optional<std::vector<bool>> sector;    // PRE
    RowAddr row;                                // RD/WR
    int col = 0;                                // RD/WR
    std::uint32_t value = 0;                    // WR
    bool hold_hff = false;                      // RD
    double delay_after_ns = 0.0;

    static Command act(std::vector<RowAddr> rows, double delay_ns) {
        Command c;
        c.kind = CommandKind::ACT;
        c.rows = std::move(rows);
        c.delay_after_ns = delay_ns;
        return c;
    }
    static Command pre(double delay_ns) {
        Command c;
        c.kind = CommandKind::PRE;
        c.delay_after_ns = delay_ns;
        return c;
    }
    static Command pre(std::vector<bool> sector_bits, double delay_ns) {
        Command c = pre(delay_ns);
        c.sector = std::move(sector_bits);
        return c;
    }
    static Command rd(RowAddr row, int col, bool hold = false) {
        Command c;
        c.kind = CommandKind::RD;
        c.row = row;
        c.col = col;
        c.hold_hff = hold;
        return c;
    }
    static Command wr(RowAddr row, int col, std::uint32_t value) {
        Command c;
        c.kind = CommandKind::WR;
        c.row = row;
        c.col = col;
        c.value = value;
        return c;
    }
    static Command nop(double delay_ns) {
        Command c;
        c.delay_after_ns = delay_ns;
        return c;
    }
};

/// Running totals over an ordered command list. The counters always equal a
/// recomputation from the list; per-mat activation counts attribute each ACT
/// to the mats selected by the sector mask in force at that point.
struct CommandTrace {
    std::vector<Command> commands;
    long acts = 0;
    long pres = 0;
    long rds = 0;
    long wrs = 0;
    double simulated_ns = 0.0;
    std::vector<long> per_mat_acts;

    void clear() {
        commands.clear();
        acts = pres = rds = wrs = 0;
        simulated_ns = 0.0;
        per_mat_acts.assign(per_mat_acts.size(), 0);
    }

    void append(const CommandTrace& other) {
        commands.insert(commands.end(), other.commands.begin(), other.commands.end());
        acts += other.acts;
        pres += other.pres;
        rds += other.rds;
        wrs += other.wrs;
        simulated_ns += other.simulated_ns;
        if (per_mat_acts.size() < other.per_mat_acts.size())
            per_mat_acts.resize(other.per_mat_acts.size(), 0);
        for (size_t i = 0; i < other.per_mat_acts.size(); ++i)
            per_mat_acts[i] += other.per_mat_acts[i];
    }

    /// Rebuild all counters from the raw list (used to check the bookkeeping
    /// invariant and by trace-file consumers).
    static CommandTrace recount(const std::vector<Command>& commands,
                                const ChipGeometry& geom, const TimingParams& timing) {
        CommandTrace t;
        t.commands = commands;
        t.per_mat_acts.assign(geom.mats_per_subarray, 0);
        std::vector<bool> mask(geom.mats_per_subarray, true);
        for (const Command& c : commands) {
            switch (c.kind) {
                case CommandKind::ACT:
                    t.acts++;
                    for (int m = 0; m < geom.mats_per_subarray; ++m)
                        if (mask[m]) t.per_mat_acts[m]++;
                    t.simulated_ns += c.delay_after_ns;
                    break;
                case CommandKind::PRE:
                    t.pres++;
                    mask = c.sector ? *c.sector : std::vector<bool>(geom.mats_per_subarray, true);
                    t.simulated_ns += c.delay_after_ns;
                    break;
                case CommandKind::RD:
                    t.rds++;
                    t.simulated_ns += timing.tRD_ns;
                    break;
                case CommandKind::WR:
                    t.wrs++;
                    t.simulated_ns += timing.tWR_ns;
                    break;
                case CommandKind::NOP:
                    t.simulated_ns += c.delay_after_ns;
                    break;
            }
        }
        return t;
    }
};

// --- trace file grammar -----------------------------------------------------
//
// One command per line:
//   ACT r=<flat-row>[,<flat-row>...] d=<ns>
//   PRE [s=<mat-bitmask>] d=<ns>
//   RD r=<flat-row> c=<col> [h=1]
//   WR r=<flat-row> c=<col> v=<hex-nibble>
//   NOP d=<ns>
// Row ids are flat ((bank*subarrays + subarray)*rows + row); the mat bitmask
// is one '0'/'1' character per mat, index 0 first; delays print as %.4f.
// '#' starts a comment. The printer emits a canonical form that round-trips
// byte-exactly.

namespace detail {

inline std::string format_ns(double ns) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4f", ns);
    return buf;
}

inline std::string nibble_hex(std::uint32_t v, int bits) {
    int digits = (bits + 3) / 4;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%0*x", digits, v);
    return buf;
}

} // namespace detail

inline std::string print_command(const Command& c, const ChipGeometry& g,
                                 int hff_bits) {
    std::ostringstream os;
    switch (c.kind) {
        case CommandKind::ACT: {
            os << "ACT r=";
            for (size_t i = 0; i < c.rows.size(); ++i) {
                if (i) os << ',';
                os << c.rows[i].flat(g);
            }
            os << " d=" << detail::format_ns(c.delay_after_ns);
            break;
        }
        case CommandKind::PRE: {
            os << "PRE";
            if (c.sector) {
                os << " s=";
                for (bool b : *c.sector) os << (b ? '1' : '0');
            }
            os << " d=" << detail::format_ns(c.delay_after_ns);
            break;
        }
        case CommandKind::RD:
            os << "RD r=" << c.row.flat(g) << " c=" << c.col;
            if (c.hold_hff) os << " h=1";
            break;
        case CommandKind::WR:
            os << "WR r=" << c.row.flat(g) << " c=" << c.col
               << " v=" << detail::nibble_hex(c.value, hff_bits);
            break;
        case CommandKind::NOP:
            os << "NOP d=" << detail::format_ns(c.delay_after_ns);
            break;
    }
    return os.str();
}

inline std::string print_trace(const std::vector<Command>& cmds, const ChipGeometry& g) {
    std::string out;
    for (const Command& c : cmds) {
        out += print_command(c, g, g.hff_width_bits);
        out += '\n';
    }
    return out;
}

namespace detail {

inline bool take_field(std::istringstream& is, const std::string& key, std::string& out) {
    std::string tok;
    if (!(is >> tok)) return false;
    if (tok.rfind(key + "=", 0) != 0)
        throw ValidationError("trace parse: expected '" + key + "=', got '" + tok + "'");
    out = tok.substr(key.size() + 1);
    return true;
}

} // namespace detail

inline Command parse_command_line(const std::string& line, const ChipGeometry& g,
                                  int lineno = 0) {
    auto fail = [&](const std::string& why) -> ValidationError {
        return ValidationError("trace parse: line " + std::to_string(lineno) + ": " + why);
    };
    std::istringstream is(line);
    std::string op;
    is >> op;
    std::string f;
    if (op == "ACT") {
        if (!detail::take_field(is, "r", f)) throw fail("ACT missing r=");
        Command c;
        c.kind = CommandKind::ACT;
        std::istringstream rs(f);
        std::string tok;
        while (std::getline(rs, tok, ','))
            c.rows.push_back(RowAddr::from_flat(g, std::stol(tok)));
        if (!detail::take_field(is, "d", f)) throw fail("ACT missing d=");
        c.delay_after_ns = std::stod(f);
        return c;
    }
    if (op == "PRE") {
        Command c;
        c.kind = CommandKind::PRE;
        std::string tok;
        if (!(is >> tok)) throw fail("PRE missing d=");
        if (tok.rfind("s=", 0) == 0) {
            std::vector<bool> mask;
            for (char ch : tok.substr(2)) {
                if (ch != '0' && ch != '1') throw fail("bad sector bitmask");
                mask.push_back(ch == '1');
            }
            if (static_cast<int>(mask.size()) != g.mats_per_subarray)
                throw fail("sector bitmask length != mats_per_subarray");
            c.sector = std::move(mask);
            if (!(is >> tok)) throw fail("PRE missing d=");
        }
        if (tok.rfind("d=", 0) != 0) throw fail("PRE expected d=");
        c.delay_after_ns = std::stod(tok.substr(2));
        return c;
    }
    if (op == "RD" || op == "WR") {
        Command c;
        c.kind = op == "RD" ? CommandKind::RD : CommandKind::WR;
        if (!detail::take_field(is, "r", f)) throw fail(op + " missing r=");
        c.row = RowAddr::from_flat(g, std::stol(f));
        if (!detail::take_field(is, "c", f)) throw fail(op + " missing c=");
        c.col = std::stoi(f);
        if (op == "WR") {
            if (!detail::take_field(is, "v", f)) throw fail("WR missing v=");
            c.value = static_cast<std::uint32_t>(std::stoul(f, nullptr, 16));
        } else {
            std::string tok;
            if (is >> tok) {
                if (tok != "h=1") throw fail("RD trailing token '" + tok + "'");
                c.hold_hff = true;
            }
        }
        return c;
    }
    if (op == "NOP") {
        Command c;
        if (!detail::take_field(is, "d", f)) throw fail("NOP missing d=");
        c.delay_after_ns = std::stod(f);
        return c;
    }
    throw fail("unknown command '" + op + "'");
}

inline std::vector<Command> parse_trace(const std::string& text, const ChipGeometry& g) {
    std::vector<Command> cmds;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
        if (blank) continue;
        cmds.push_back(parse_command_line(line, g, lineno));
    }
    return cmds;
}

} // namespace pudsim
