#pragma once

#include <stdexcept>
#include <string>

namespace spikemon {

// Invalid argument values (non-finite numbers, out-of-range inputs).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Inconsistent or unusable configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed input files. Carries the 1-based row of the offending line when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t row = 0)
        : std::runtime_error(row ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

    // Same error with a location prefix such as a file name.
    static ParseError with_context(const std::string& prefix, const ParseError& inner) {
        ParseError e(prefix + ": " + inner.what());
        e.row_ = inner.row_;
        return e;
    }

private:
    std::size_t row_;
};

// Failed or diverging numerical procedures.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spikemon
