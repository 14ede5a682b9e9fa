#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clavir/common.hpp"

namespace clavir::cli {

inline constexpr std::string_view kConfigName = "clavir.toml";

/// Exit codes. Nothing else is ever returned.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitEnvironment = 2;

struct ProjectConfig {
    std::optional<std::filesystem::path> kb;
    std::optional<std::filesystem::path> packages;   // directory of *.pkg
    std::optional<std::filesystem::path> resources;  // resource-base JSON
    std::optional<std::filesystem::path> workdir;
    std::vector<std::filesystem::path> library;      // .vso files or directories holding objects
    double noise = 0.0;
    std::uint64_t seed = 0;
    int max_parallel = 4;
};

/// `key = value` lines; `#` comments, blank lines and `[section]` headers are
/// ignored, values may be double-quoted. Relative paths resolve against `base`.
/// `library` takes a comma-separated list. Throws ParseError on unknown keys
/// or malformed values.
ProjectConfig parse_config(std::string_view text, const std::filesystem::path& base);

/// 2 for environment failures (I/O, work directory, process spawn), 1 otherwise.
int exit_code_for(ErrorKind kind);

/// Whole command line, `argv[0]` included. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clavir::cli
