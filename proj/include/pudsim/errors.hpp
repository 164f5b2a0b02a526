#pragma once

#include <stdexcept>
#include <string>

namespace pudsim {

/// Bad inputs: malformed config, file syntax, addressing, arity. Maps to CLI exit 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Illegal command sequences and runtime state violations. Maps to CLI exit 2.
class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a bitline voltage exactly equals its reference at zero noise.
/// Silent coin-flips would mask mis-built reference compositions, so a tie is
/// always reported with the offending bitline.
class TieError : public ProtocolError {
public:
    TieError(const std::string& msg, int bank, int subarray, int column)
        : ProtocolError(msg), bank(bank), subarray(subarray), column(column) {}
    int bank;
    int subarray;
    int column;
};

} // namespace pudsim
