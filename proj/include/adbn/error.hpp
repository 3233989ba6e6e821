#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adbn {

enum class ErrorCode {
    dimension_mismatch,
    invalid_argument,
    enumeration_limit,
    parse_error,
    io_error,
    format_error,
    schema_mismatch,
    degenerate_data,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this type; `code()` lets callers branch
// without parsing the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

}  // namespace adbn
