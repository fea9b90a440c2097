#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dinsat {

// Error categories. The CLI maps each category to a distinct exit code.
enum class ErrorKind {
    Config,            // invalid configuration or flag set
    InvalidDataset,    // missing truth, empty split, bad ROI
    EmptyInput,
    Shape,             // dimension mismatch
    Numeric,           // non-finite values, divergence
    Contract,          // API misuse (e.g. backward on non-scalar)
    Parse,             // malformed text input
    CorruptFile,       // size mismatch, truncated data
    UnsupportedFormat,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

}  // namespace dinsat
