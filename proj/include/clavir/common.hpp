#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace clavir {

struct SourcePos {
    int line = 0;
    int col = 0;

    bool known() const { return line > 0; }
};

enum class ErrorKind {
    ParseError,
    SemanticError,
    IoError,
    InvalidArgument,
    // kb
    DuplicateId,
    InvalidLevel,
    UnknownNode,
    LevelMismatch,
    WrongLevel,
    // perf models
    UnboundIdentifier,
    DivisionByZero,
    NegativeEstimate,
    NonFinite,
    // workflows
    DuplicateStepId,
    CycleDetected,
    // vso
    TranslationError,
    NotNumericTarget,
    EmptySweep,
    // planner
    InvariantViolation,
    UnboundParameter,
    NoCandidateService,
    TooLarge,
    UnknownMethod,
    UnknownPackage,
    NoSolutions,
    // executor
    InfeasiblePlan,
    CommandSpawnError,
    WorkdirError,
};

std::string_view to_string(ErrorKind kind);

/// The single exception type thrown by the library. `kind()` identifies the
/// failure class; `pos()` is set for errors tied to a source location.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, SourcePos pos = {});

    ErrorKind kind() const { return kind_; }
    SourcePos pos() const { return pos_; }
    const std::string& detail() const { return detail_; }

private:
    ErrorKind kind_;
    SourcePos pos_;
    std::string detail_;
};

enum class Severity { Warning, Error };

std::string_view to_string(Severity severity);

/// Validation finding. Validators return these as data instead of throwing.
struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;
    std::string message;
    SourcePos pos;

    bool operator==(const Diagnostic&) const = default;
};

using Diagnostics = std::vector<Diagnostic>;

Diagnostic make_error(std::string code, std::string message, SourcePos pos = {});
Diagnostic make_warning(std::string code, std::string message, SourcePos pos = {});

bool has_errors(const Diagnostics& diags);
std::size_t count_code(const Diagnostics& diags, std::string_view code);

/// `<file>:<line>:<col>: <severity>: <message>`
std::string format_diagnostic(const std::string& file, const Diagnostic& diag);

/// Scalar literal used for attributes, defaults and bindings.
using Scalar = std::variant<bool, std::int64_t, double, std::string>;

bool is_numeric(const Scalar& value);
double as_double(const Scalar& value);

/// Shortest round-trip text for a double. Integral values keep a ".0" suffix so
/// the literal reads back as a float.
std::string format_double(double value);

/// Shortest round-trip text without the float marker (may print "2" for 2.0).
std::string format_number(double value);

std::string quote(std::string_view text);
std::string format_scalar(const Scalar& value);

bool is_identifier(std::string_view text);

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace clavir
