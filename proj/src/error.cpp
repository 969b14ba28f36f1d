#include "mathforge/error.hpp"

namespace mathforge {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnreadableFile: return "UNREADABLE_FILE";
    case ErrorCode::SchemaMismatch: return "SCHEMA_MISMATCH";
    case ErrorCode::EmptyDataset: return "EMPTY_DATASET";
    case ErrorCode::OverlappingSpans: return "OVERLAPPING_SPANS";
    case ErrorCode::NameCollision: return "NAME_COLLISION";
    case ErrorCode::MissingAssignment: return "MISSING_ASSIGNMENT";
    case ErrorCode::FormatMismatch: return "FORMAT_MISMATCH";
    case ErrorCode::MissingSection: return "MISSING_SECTION";
    case ErrorCode::BadNumberLiteral: return "BAD_NUMBER_LITERAL";
    case ErrorCode::PlaceholderMismatch: return "PLACEHOLDER_MISMATCH";
    case ErrorCode::TemplateInvalid: return "TEMPLATE_INVALID";
    case ErrorCode::NoPriorRound: return "NO_PRIOR_ROUND";
    case ErrorCode::ClientError: return "CLIENT_ERROR";
    case ErrorCode::CacheMiss: return "CACHE_MISS";
    case ErrorCode::UnterminatedString: return "UNTERMINATED_STRING";
    case ErrorCode::BadIndent: return "BAD_INDENT";
    case ErrorCode::NotFunctionForm: return "NOT_FUNCTION_FORM";
    case ErrorCode::DocstringParamMissing: return "DOCSTRING_PARAM_MISSING";
    case ErrorCode::DocstringInvalid: return "DOCSTRING_INVALID";
    case ErrorCode::UnusedParameter: return "UNUSED_PARAMETER";
    case ErrorCode::ParameterRebound: return "PARAMETER_REBOUND";
    case ErrorCode::DeniedIdentifier: return "DENIED_IDENTIFIER";
    case ErrorCode::LexError: return "LEX_ERROR";
    case ErrorCode::SelectorNotSubset: return "SELECTOR_NOT_SUBSET";
    case ErrorCode::MissingValue: return "MISSING_VALUE";
    case ErrorCode::SubstitutionCollision: return "SUBSTITUTION_COLLISION";
    case ErrorCode::KOutOfRange: return "K_OUT_OF_RANGE";
    case ErrorCode::SandboxFailure: return "SANDBOX_FAILURE";
    case ErrorCode::MissingConstraint: return "MISSING_CONSTRAINT";
    case ErrorCode::MalformedLine: return "MALFORMED_LINE";
    case ErrorCode::OriginalValueViolates: return "ORIGINAL_VALUE_VIOLATES";
    case ErrorCode::SamplingExhausted: return "SAMPLING_EXHAUSTED";
    case ErrorCode::UnknownGroupId: return "UNKNOWN_GROUP_ID";
    case ErrorCode::EmptyInput: return "EMPTY_INPUT";
    case ErrorCode::ZeroQuestions: return "ZERO_QUESTIONS";
    case ErrorCode::UsageError: return "USAGE_ERROR";
    case ErrorCode::ConfigInvalid: return "CONFIG_INVALID";
    case ErrorCode::IoError: return "IO_ERROR";
    }
    return "UNKNOWN";
}

namespace {

std::string compose(ErrorCode code, const std::string& detail) {
    std::string out(to_string(code));
    if (!detail.empty()) {
        out += ": ";
        out += detail;
    }
    return out;
}

} // namespace

Error::Error(ErrorCode code, std::string detail)
    : std::runtime_error(compose(code, detail)), code_(code), detail_(std::move(detail)) {}

} // namespace mathforge
