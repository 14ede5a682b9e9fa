#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clavir/common.hpp"
#include "clavir/kb.hpp"
#include "clavir/perf.hpp"

namespace clavir::pkg {

enum class ParamKind { Float, Int, String, File };

std::string_view to_string(ParamKind kind);
std::optional<ParamKind> parse_kind(std::string_view text);
inline bool is_numeric(ParamKind k) { return k == ParamKind::Float || k == ParamKind::Int; }

/// Whether a literal is acceptable for a parameter of `kind`. Ints widen to float.
bool literal_fits(ParamKind kind, const Scalar& value);

struct ParameterSpec {
    std::string name;
    ParamKind kind = ParamKind::Float;
    std::optional<std::string> unit;
    std::optional<std::string> format;
    std::optional<Scalar> default_value;
    std::optional<std::pair<double, double>> range;
    std::optional<std::string> semantic;
    SourcePos pos;

    bool required() const { return !default_value.has_value(); }

    bool operator==(const ParameterSpec& o) const {
        return name == o.name && kind == o.kind && unit == o.unit && format == o.format &&
               default_value == o.default_value && range == o.range && semantic == o.semantic;
    }
};

/// The only performance model name accepted.
inline constexpr std::string_view kPerfName = "time_s";

struct PackageDescriptor {
    std::string name;
    std::string version;
    std::optional<std::string> concept_id;
    std::string description;
    std::vector<ParameterSpec> inputs;
    std::vector<ParameterSpec> outputs;
    std::optional<perf::Expr> perf;
    SourcePos pos;

    const ParameterSpec* input(std::string_view n) const;
    const ParameterSpec* output(std::string_view n) const;

    bool operator==(const PackageDescriptor& o) const {
        return name == o.name && version == o.version && concept_id == o.concept_id && description == o.description &&
               inputs == o.inputs && outputs == o.outputs && perf == o.perf;
    }
};

using PackageMap = std::map<std::string, PackageDescriptor, std::less<>>;

/// Throws ParseError (positioned, with an expected-token hint) or
/// SemanticError for invariant violations.
PackageDescriptor parse_package(std::string_view text);

std::string print_package(const PackageDescriptor& desc);

/// Invariant checks plus the concept link into the knowledge base.
Diagnostics validate_package(const PackageDescriptor& desc, const kb::KnowledgeBase& kb);
/// Invariant checks only.
Diagnostics check_package(const PackageDescriptor& desc);

/// One field per input in declaration order; each field carries exactly
/// name, kind, unit, default, min, max, required, semantic.
nlohmann::ordered_json form_schema(const PackageDescriptor& desc);

PackageDescriptor load_package(const std::filesystem::path& path);
/// Loads every `*.pkg` in `dir`, keyed by package name. Throws SemanticError on
/// duplicate names.
PackageMap load_package_dir(const std::filesystem::path& dir);

}  // namespace clavir::pkg
