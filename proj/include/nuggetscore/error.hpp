#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nuggetscore {

enum class ErrorCode {
    IoError,
    ParseError,
    ValidationError,
    UnknownNugget,
    NonFiniteScore,
    EmptyCandidates,
    EmptyTurnPerturbation,
    ScorerFailure,
    ScorerTimeout,
    ScorerProtocol,
    ScorerRejected,
    EmptyReport,
    InvalidArgument,
};

/// Wire/diagnostic spelling, e.g. "SCORER_TIMEOUT".
std::string_view to_string(ErrorCode code);

/// Base exception for every failure the toolkit reports.
///
/// `cause` carries the underlying code when an error wraps another one
/// (SCORER_FAILURE wrapping SCORER_TIMEOUT, for instance).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<ErrorCode> cause = std::nullopt)
        : std::runtime_error(message), code_(code), cause_(cause) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<ErrorCode> cause() const noexcept { return cause_; }

private:
    ErrorCode code_;
    std::optional<ErrorCode> cause_;
};

} // namespace nuggetscore
