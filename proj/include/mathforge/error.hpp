#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mathforge {

enum class ErrorCode {
    // corpus
    UnreadableFile,
    SchemaMismatch,
    EmptyDataset,
    // masking
    OverlappingSpans,
    NameCollision,
    MissingAssignment,
    FormatMismatch,
    // synthesis
    MissingSection,
    BadNumberLiteral,
    PlaceholderMismatch,
    TemplateInvalid,
    NoPriorRound,
    ClientError,
    CacheMiss,
    // template
    UnterminatedString,
    BadIndent,
    NotFunctionForm,
    DocstringParamMissing,
    DocstringInvalid,
    UnusedParameter,
    ParameterRebound,
    DeniedIdentifier,
    LexError,
    SelectorNotSubset,
    MissingValue,
    SubstitutionCollision,
    KOutOfRange,
    // verify
    SandboxFailure,
    // scale
    MissingConstraint,
    MalformedLine,
    OriginalValueViolates,
    SamplingExhausted,
    // perturb
    UnknownGroupId,
    // emit
    EmptyInput,
    ZeroQuestions,
    // cli
    UsageError,
    ConfigInvalid,
    IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string detail);

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace mathforge
