#pragma once

#include <stdexcept>
#include <string>

namespace igs {

// Exit codes used by the CLI; library code throws, the CLI maps to codes.
enum class ExitCode : int {
    ok = 0,
    usage = 2,
    validation = 3,
    numerical = 4,
    io = 5,
};

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : Error {
    using Error::Error;
};

// Bad inputs: malformed config, inconsistent dataset, out-of-range arguments.
struct ValidationError : Error {
    using Error::Error;
};

// Non-finite loss or gradient, divergence.
struct NumericalError : Error {
    using Error::Error;
};

enum class IoCode {
    generic,
    missing,
    truncated,
    bad_magic,
    bad_version,
    crc_mismatch,
    level_mismatch,
    hierarchy_mismatch,
    malformed,
};

struct IoError : Error {
    IoCode code;
    explicit IoError(IoCode c, const std::string& msg) : Error(msg), code(c) {}
    explicit IoError(const std::string& msg) : Error(msg), code(IoCode::generic) {}
};

inline const char* io_code_name(IoCode c) {
    switch (c) {
        case IoCode::generic: return "generic";
        case IoCode::missing: return "missing";
        case IoCode::truncated: return "truncated";
        case IoCode::bad_magic: return "bad_magic";
        case IoCode::bad_version: return "bad_version";
        case IoCode::crc_mismatch: return "crc_mismatch";
        case IoCode::level_mismatch: return "level_mismatch";
        case IoCode::hierarchy_mismatch: return "hierarchy_mismatch";
        case IoCode::malformed: return "malformed";
    }
    return "generic";
}

}  // namespace igs
