#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace orthant {

/// Error kinds surfaced to callers and to the CLI exit status.
enum class ErrorKind {
    InvalidArgument,
    InvalidConfig,
    EnumerationTooLarge,
    BracketFailure,
    RoundCapExceeded,
    InsufficientData,
    TruncationDominated,
    Io,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::EnumerationTooLarge: return "EnumerationTooLarge";
        case ErrorKind::BracketFailure: return "BracketFailure";
        case ErrorKind::RoundCapExceeded: return "RoundCapExceeded";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::TruncationDominated: return "TruncationDominated";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/// Process exit code for each kind; 0 is reserved for success, 1 for unexpected failures.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return 2;
        case ErrorKind::InvalidConfig: return 2;
        case ErrorKind::EnumerationTooLarge: return 3;
        case ErrorKind::BracketFailure: return 4;
        case ErrorKind::RoundCapExceeded: return 5;
        case ErrorKind::InsufficientData: return 6;
        case ErrorKind::TruncationDominated: return 7;
        case ErrorKind::Io: return 8;
    }
    return 1;
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw Error(ErrorKind::InvalidArgument, message);
}

}  // namespace orthant
