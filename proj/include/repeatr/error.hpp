#ifndef REPEATR_ERROR_HPP
#define REPEATR_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace repeatr {

/// Every failure the library can report. The names double as the
/// machine-readable `error` field emitted by the CLI.
enum class ErrorKind {
    MissingCell,
    DuplicateCell,
    NonFiniteValue,
    RaggedRow,
    TooFewSubjects,
    TooFewSessions,
    DuplicateLabel,
    ParseError,
    IoError,
    ConstantVector,
    DimensionTooSmall,
    DimensionError,
    ShapeError,
    SameSession,
    DegenerateData,
    RankDeficient,
    DomainError,
    NotPositiveDefinite,
    EigenFailure,
    ConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Whether an error is a problem with the caller's input (as opposed to a
/// failure during computation). The CLI maps this to its exit code.
bool is_validation_error(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace repeatr

#endif
