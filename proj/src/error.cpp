#include "adbn/error.hpp"

namespace adbn {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::dimension_mismatch: return "dimension mismatch";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::enumeration_limit: return "enumeration limit";
    case ErrorCode::parse_error: return "parse error";
    case ErrorCode::io_error: return "i/o error";
    case ErrorCode::format_error: return "format error";
    case ErrorCode::schema_mismatch: return "model/data schema mismatch";
    case ErrorCode::degenerate_data: return "degenerate data";
    }
    return "error";
}

}  // namespace adbn
