#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fbd::cli {

struct ConfigFile {
  nlohmann::json json = nlohmann::json::object();
  std::filesystem::path dir = ".";  // relative file references resolve against this
  std::string name = "<defaults>";
};

/// Empty path: an empty object. Parse errors become ConfigError "file: ... at line L, column C".
ConfigFile load_config(const std::string& path);

/// Parses JSON from a file referenced by a config (resolved against cfg.dir).
nlohmann::json load_referenced(const ConfigFile& cfg, const std::string& ref);

/// Throws ConfigError naming the first key of `j` (recursively through objects) absent from
/// `known` or whose JSON type disagrees with the value in `known` (null accepts anything).
/// `extra` lists additional top-level keys, which are not checked.
void reject_unknown(const nlohmann::json& j, const nlohmann::json& known, const std::string& where,
                    const std::vector<std::string>& extra = {});

/// Runs `fn`, turning json, FormatError and InvalidArgument failures into ConfigError prefixed by `where`.
void with_field_diagnostics(const std::string& where, const std::function<void()>& fn);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace fbd::cli
