#include "clavir/package.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "clavir/lexer.hpp"

namespace clavir::pkg {

using text::Tok;

std::string_view to_string(ParamKind kind) {
    switch (kind) {
    case ParamKind::Float: return "float";
    case ParamKind::Int: return "int";
    case ParamKind::String: return "string";
    case ParamKind::File: return "file";
    }
    return "?";
}

std::optional<ParamKind> parse_kind(std::string_view text) {
    for (ParamKind k : {ParamKind::Float, ParamKind::Int, ParamKind::String, ParamKind::File}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

bool literal_fits(ParamKind kind, const Scalar& value) {
    switch (kind) {
    case ParamKind::Float: return clavir::is_numeric(value);
    case ParamKind::Int: return std::holds_alternative<std::int64_t>(value);
    case ParamKind::String:
    case ParamKind::File: return std::holds_alternative<std::string>(value);
    }
    return false;
}

const ParameterSpec* PackageDescriptor::input(std::string_view n) const {
    auto it = std::find_if(inputs.begin(), inputs.end(), [&](const ParameterSpec& p) { return p.name == n; });
    return it == inputs.end() ? nullptr : &*it;
}

const ParameterSpec* PackageDescriptor::output(std::string_view n) const {
    auto it = std::find_if(outputs.begin(), outputs.end(), [&](const ParameterSpec& p) { return p.name == n; });
    return it == outputs.end() ? nullptr : &*it;
}

namespace {

ParameterSpec parse_parameter(text::TokenStream& ts) {
    ParameterSpec p;
    text::Token name = ts.expect(Tok::Ident, "parameter name");
    p.name = name.text;
    p.pos = name.pos;
    ts.expect(Tok::Colon);
    text::Token kind = ts.expect(Tok::Ident, "parameter kind (float, int, string, file)");
    auto parsed = parse_kind(kind.text);
    if (!parsed) {
        ts.fail_at(kind.pos, ErrorKind::ParseError,
                   "unknown parameter kind '" + kind.text + "', expected float, int, string or file");
    }
    p.kind = *parsed;

    for (;;) {
        SourcePos at = ts.peek().pos;
        if (ts.accept_keyword("unit")) {
            if (p.unit) ts.fail_at(at, ErrorKind::ParseError, "duplicate 'unit'");
            p.unit = ts.expect_string("unit string");
        } else if (ts.accept_keyword("format")) {
            if (p.format) ts.fail_at(at, ErrorKind::ParseError, "duplicate 'format'");
            p.format = ts.expect_string("format string");
        } else if (ts.accept_keyword("default")) {
            if (p.default_value) ts.fail_at(at, ErrorKind::ParseError, "duplicate 'default'");
            Scalar v = text::parse_literal(ts);
            // float parameters store their default as a double
            if (p.kind == ParamKind::Float && std::holds_alternative<std::int64_t>(v)) v = as_double(v);
            p.default_value = std::move(v);
        } else {
            break;
        }
    }

    if (ts.accept(Tok::LBrace)) {
        for (;;) {
            SourcePos at = ts.peek().pos;
            if (ts.accept_keyword("range")) {
                if (p.range) ts.fail_at(at, ErrorKind::ParseError, "duplicate 'range'");
                double lo = ts.expect_signed_number("range minimum").number;
                ts.expect(Tok::DotDot, "'..'");
                double hi = ts.expect_signed_number("range maximum").number;
                p.range = std::make_pair(lo, hi);
            } else if (ts.accept_keyword("semantic")) {
                if (p.semantic) ts.fail_at(at, ErrorKind::ParseError, "duplicate 'semantic'");
                p.semantic = ts.expect_string("semantic tag string");
            } else {
                ts.expect(Tok::RBrace, "'range', 'semantic' or '}'");
                break;
            }
        }
    }
    return p;
}

void check_parameter(const ParameterSpec& p, Diagnostics& diags) {
    const std::string who = "parameter '" + p.name + "'";
    if (!is_identifier(p.name)) diags.push_back(make_error("InvalidName", who + " is not an identifier", p.pos));
    if (p.unit && !is_numeric(p.kind)) {
        diags.push_back(make_error("UnitOnNonNumeric", who + " of kind " + std::string(to_string(p.kind)) +
                                                           " cannot carry a unit", p.pos));
    }
    if (p.kind == ParamKind::File && !p.format) {
        diags.push_back(make_error("MissingFormat", "file " + who + " needs a format", p.pos));
    }
    if (p.kind != ParamKind::File && p.format) {
        diags.push_back(make_error("UnexpectedFormat", who + " is not a file but declares a format", p.pos));
    }
    if (p.range) {
        if (!is_numeric(p.kind)) {
            diags.push_back(make_error("RangeOnNonNumeric", who + " is not numeric but declares a range", p.pos));
        } else if (p.range->first > p.range->second) {
            diags.push_back(make_error("InvalidRange", who + " has range min > max", p.pos));
        }
    }
    if (p.default_value) {
        if (!literal_fits(p.kind, *p.default_value)) {
            diags.push_back(make_error("DefaultKind", who + " default " + format_scalar(*p.default_value) +
                                                          " does not match kind " + std::string(to_string(p.kind)),
                                       p.pos));
        } else if (p.range && clavir::is_numeric(*p.default_value)) {
            double d = as_double(*p.default_value);
            if (d < p.range->first || d > p.range->second) {
                diags.push_back(make_error("DefaultOutOfRange",
                                           who + " default " + format_scalar(*p.default_value) +
                                               " is outside range " + format_number(p.range->first) + " .. " +
                                               format_number(p.range->second),
                                           p.pos));
            }
        }
    }
}

void print_parameter(std::ostream& os, std::string_view dir, const ParameterSpec& p) {
    os << "  " << dir << ' ' << p.name << " : " << to_string(p.kind);
    if (p.unit) os << " unit " << quote(*p.unit);
    if (p.format) os << " format " << quote(*p.format);
    if (p.default_value) os << " default " << format_scalar(*p.default_value);
    if (p.range || p.semantic) {
        os << " {";
        if (p.range) os << " range " << format_number(p.range->first) << " .. " << format_number(p.range->second);
        if (p.semantic) os << " semantic " << quote(*p.semantic);
        os << " }";
    }
    os << '\n';
}

nlohmann::ordered_json bound_json(const ParameterSpec& p, double v) {
    if (p.kind == ParamKind::Int && v == static_cast<double>(static_cast<std::int64_t>(v))) {
        return static_cast<std::int64_t>(v);
    }
    return v;
}

}  // namespace

PackageDescriptor parse_package(std::string_view source) {
    text::TokenStream ts(source);
    PackageDescriptor d;
    d.pos = ts.peek().pos;
    ts.expect_keyword("package");
    d.name = ts.expect_string("package name string");
    ts.expect_keyword("version");
    d.version = ts.expect_string("version string");
    ts.expect(Tok::LBrace);
    bool have_description = false;
    while (!ts.accept(Tok::RBrace)) {
        SourcePos at = ts.peek().pos;
        if (ts.accept_keyword("description")) {
            if (have_description) ts.fail_at(at, ErrorKind::SemanticError, "duplicate description");
            have_description = true;
            d.description = ts.expect_string("description string");
        } else if (ts.accept_keyword("concept")) {
            if (d.concept_id) ts.fail_at(at, ErrorKind::SemanticError, "duplicate concept");
            d.concept_id = ts.expect_string("concept id string");
        } else if (ts.accept_keyword("input")) {
            d.inputs.push_back(parse_parameter(ts));
        } else if (ts.accept_keyword("output")) {
            d.outputs.push_back(parse_parameter(ts));
        } else if (ts.accept_keyword("perf")) {
            text::Token name = ts.expect(Tok::Ident, "performance model name");
            if (name.text != kPerfName) {
                ts.fail_at(name.pos, ErrorKind::SemanticError,
                           "unsupported performance model '" + name.text + "', only time_s is supported");
            }
            if (d.perf) ts.fail_at(at, ErrorKind::SemanticError, "duplicate perf time_s");
            ts.expect(Tok::Equals);
            d.perf = perf::parse_expr(ts);
        } else {
            ts.fail("'description', 'concept', 'input', 'output', 'perf' or '}'");
        }
    }
    if (!ts.at(Tok::End)) ts.fail("end of input");

    Diagnostics diags = check_package(d);
    for (const auto& diag : diags) {
        if (diag.severity == Severity::Error) throw Error(ErrorKind::SemanticError, diag.code + ": " + diag.message, diag.pos);
    }
    return d;
}

Diagnostics check_package(const PackageDescriptor& d) {
    Diagnostics diags;
    if (!is_identifier(d.name)) {
        diags.push_back(make_error("InvalidName", "package name '" + d.name + "' is not an identifier", d.pos));
    }
    std::set<std::string> seen;
    for (const auto* list : {&d.inputs, &d.outputs}) {
        for (const auto& p : *list) {
            if (!seen.insert(p.name).second) {
                diags.push_back(make_error("DuplicateParameter", "duplicate parameter '" + p.name + "'", p.pos));
            }
            check_parameter(p, diags);
        }
    }
    if (d.perf) {
        for (const auto& id : perf::param_names(*d.perf)) {
            const ParameterSpec* in = d.input(id);
            if (!in) {
                diags.push_back(make_error("UndeclaredIdentifier",
                                           "perf references undeclared identifier '" + id + "'", d.pos));
            } else if (!is_numeric(in->kind)) {
                diags.push_back(make_error("UndeclaredIdentifier",
                                           "perf references non-numeric input '" + id + "'", in->pos));
            }
        }
    }
    return diags;
}

Diagnostics validate_package(const PackageDescriptor& desc, const kb::KnowledgeBase& kb) {
    Diagnostics diags = check_package(desc);
    if (desc.concept_id) {
        const kb::ConceptNode* node = kb.find(*desc.concept_id);
        if (!node) {
            diags.push_back(make_error("UnknownConcept", "package '" + desc.name + "' names unknown concept '" +
                                                             *desc.concept_id + "'", desc.pos));
        } else if (node->level != kb::kPackageLevel) {
            diags.push_back(make_error("WrongLevel", "package '" + desc.name + "' concept '" + *desc.concept_id +
                                                         "' is at level " + std::to_string(node->level) +
                                                         ", expected 4", desc.pos));
        }
    }
    return diags;
}

std::string print_package(const PackageDescriptor& d) {
    std::ostringstream os;
    os << "package " << quote(d.name) << " version " << quote(d.version) << " {\n";
    if (!d.description.empty()) os << "  description " << quote(d.description) << '\n';
    if (d.concept_id) os << "  concept " << quote(*d.concept_id) << '\n';
    for (const auto& p : d.inputs) print_parameter(os, "input", p);
    for (const auto& p : d.outputs) print_parameter(os, "output", p);
    if (d.perf) os << "  perf " << kPerfName << " = " << perf::print_expr(*d.perf) << '\n';
    os << "}\n";
    return os.str();
}

nlohmann::ordered_json form_schema(const PackageDescriptor& d) {
    using json = nlohmann::ordered_json;
    json fields = json::array();
    for (const auto& p : d.inputs) {
        json f;
        f["name"] = p.name;
        f["kind"] = to_string(p.kind);
        f["unit"] = p.unit ? json(*p.unit) : json(nullptr);
        if (p.default_value) {
            f["default"] = std::visit([](const auto& v) { return json(v); }, *p.default_value);
        } else {
            f["default"] = nullptr;
        }
        f["min"] = p.range ? bound_json(p, p.range->first) : json(nullptr);
        f["max"] = p.range ? bound_json(p, p.range->second) : json(nullptr);
        f["required"] = p.required();
        f["semantic"] = p.semantic ? json(*p.semantic) : json(nullptr);
        fields.push_back(std::move(f));
    }
    json doc;
    doc["package"] = d.name;
    doc["version"] = d.version;
    doc["fields"] = std::move(fields);
    return doc;
}

PackageDescriptor load_package(const std::filesystem::path& path) { return parse_package(read_file(path)); }

PackageMap load_package_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw Error(ErrorKind::IoError, "package directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pkg") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    PackageMap out;
    for (const auto& f : files) {
        PackageDescriptor d;
        try {
            d = load_package(f);
        } catch (const Error& e) {
            throw Error(e.kind(), f.string() + ": " + e.detail(), e.pos());
        }
        std::string name = d.name;
        if (!out.emplace(name, std::move(d)).second) {
            throw Error(ErrorKind::SemanticError, "duplicate package name '" + name + "' in " + f.string());
        }
    }
    return out;
}

}  // namespace clavir::pkg
