#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bularag {

enum class ErrorCode {
    UnreadableFile,
    EmptyDocument,
    InvalidArgument,
    EmptyInput,
    DimensionMismatch,
    ZeroVector,
    RemoteUnavailable,
    CorruptBundle,
    VersionUnsupported,
    InvalidPattern,
    ProviderError,
    EmptyCompletion,
    LengthMismatch,
    OutOfRange,
    MalformedCsv,
    InvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (CLI, HTTP service, tests) can branch on kind rather than text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bularag
