#include "clavir/common.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace clavir {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SemanticError: return "SemanticError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::InvalidLevel: return "InvalidLevel";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::LevelMismatch: return "LevelMismatch";
    case ErrorKind::WrongLevel: return "WrongLevel";
    case ErrorKind::UnboundIdentifier: return "UnboundIdentifier";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::NegativeEstimate: return "NegativeEstimate";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::DuplicateStepId: return "DuplicateStepId";
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::TranslationError: return "TranslationError";
    case ErrorKind::NotNumericTarget: return "NotNumericTarget";
    case ErrorKind::EmptySweep: return "EmptySweep";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::UnboundParameter: return "UnboundParameter";
    case ErrorKind::NoCandidateService: return "NoCandidateService";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::UnknownMethod: return "UnknownMethod";
    case ErrorKind::UnknownPackage: return "UnknownPackage";
    case ErrorKind::NoSolutions: return "NoSolutions";
    case ErrorKind::InfeasiblePlan: return "InfeasiblePlan";
    case ErrorKind::CommandSpawnError: return "CommandSpawnError";
    case ErrorKind::WorkdirError: return "WorkdirError";
    }
    return "Error";
}

namespace {

std::string compose(ErrorKind kind, const std::string& message, SourcePos pos) {
    std::string out;
    if (pos.known()) {
        out += std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": ";
    }
    out += to_string(kind);
    out += ": ";
    out += message;
    return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, SourcePos pos)
    : std::runtime_error(compose(kind, message, pos)), kind_(kind), pos_(pos), detail_(message) {}

std::string_view to_string(Severity severity) {
    return severity == Severity::Error ? "error" : "warning";
}

Diagnostic make_error(std::string code, std::string message, SourcePos pos) {
    return Diagnostic{Severity::Error, std::move(code), std::move(message), pos};
}

Diagnostic make_warning(std::string code, std::string message, SourcePos pos) {
    return Diagnostic{Severity::Warning, std::move(code), std::move(message), pos};
}

bool has_errors(const Diagnostics& diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::size_t count_code(const Diagnostics& diags, std::string_view code) {
    return static_cast<std::size_t>(
        std::count_if(diags.begin(), diags.end(), [&](const Diagnostic& d) { return d.code == code; }));
}

std::string format_diagnostic(const std::string& file, const Diagnostic& diag) {
    std::ostringstream os;
    os << file << ':' << std::max(diag.pos.line, 1) << ':' << std::max(diag.pos.col, 1) << ": "
       << to_string(diag.severity) << ": " << diag.code << ": " << diag.message;
    return os.str();
}

bool is_numeric(const Scalar& value) {
    return std::holds_alternative<std::int64_t>(value) || std::holds_alternative<double>(value);
}

double as_double(const Scalar& value) {
    if (const auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&value)) return *d;
    throw Error(ErrorKind::InvalidArgument, "value is not numeric");
}

std::string format_number(double value) {
    if (!std::isfinite(value)) {
        throw Error(ErrorKind::NonFinite, "cannot format non-finite number");
    }
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

std::string format_double(double value) {
    std::string text = format_number(value);
    if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
    return text;
}

std::string quote(std::string_view text) {
    std::string out = "\"";
    for (char c : text) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
        }
    }
    out += '"';
    return out;
}

std::string format_scalar(const Scalar& value) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                return format_double(v);
            } else {
                return quote(v);
            }
        },
        value);
}

bool is_identifier(std::string_view text) {
    if (text.empty()) return false;
    auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    if (!alpha(text.front())) return false;
    return std::all_of(text.begin() + 1, text.end(),
                       [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(ErrorKind::IoError, "cannot read " + path.string());
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::IoError, "cannot rename onto " + path.string());
    }
}

}  // namespace clavir
