#include "config_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fbd/error.hpp"

namespace fbd::cli {

namespace {

nlohmann::json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

const char* kind_of(const nlohmann::json& v) {
  switch (v.type()) {
    case nlohmann::json::value_t::object: return "object";
    case nlohmann::json::value_t::array: return "array";
    case nlohmann::json::value_t::string: return "string";
    case nlohmann::json::value_t::boolean: return "boolean";
    case nlohmann::json::value_t::null: return "null";
    case nlohmann::json::value_t::number_float: return "number";
    default: return "integer";
  }
}

void check_type(const nlohmann::json& v, const nlohmann::json& k, const std::string& at) {
  if (k.is_null()) return;
  bool ok = false;
  if (k.is_number_integer() || k.is_number_unsigned()) {
    ok = v.is_number_integer() || v.is_number_unsigned();
    if (k.is_number_unsigned() && v.is_number_integer() && !v.is_number_unsigned()) ok = v.get<long long>() >= 0;
  } else if (k.is_number()) {
    ok = v.is_number();
  } else if (k.is_array()) {
    ok = v.is_array() || v.is_number();  // complex scalars may be plain reals
  } else {
    ok = v.type() == k.type();
  }
  if (!ok) {
    const bool negative = k.is_number_unsigned() && v.is_number_integer();
    throw ConfigError(at + ": expected " + (negative ? "a non-negative integer" : std::string(kind_of(k))) +
                      ", got " + v.dump());
  }
}

void reject_rec(const nlohmann::json& j, const nlohmann::json& known, const std::string& at,
                const std::vector<std::string>& extra) {
  if (!j.is_object() || !known.is_object()) return;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (std::find(extra.begin(), extra.end(), k) != extra.end()) continue;
    if (!known.contains(k)) throw ConfigError(at + ": unknown field '" + k + "'");
    check_type(it.value(), known.at(k), at + " /" + k);
    reject_rec(it.value(), known.at(k), at + " /" + k, {});
  }
}

}  // namespace

ConfigFile load_config(const std::string& path) {
  ConfigFile c;
  if (path.empty()) return c;
  c.json = parse_file(path);
  if (!c.json.is_object()) throw ConfigError(path + ": top level must be an object");
  c.dir = std::filesystem::path(path).parent_path();
  if (c.dir.empty()) c.dir = ".";
  c.name = path;
  return c;
}

nlohmann::json load_referenced(const ConfigFile& cfg, const std::string& ref) {
  std::filesystem::path p(ref);
  if (p.is_relative()) p = cfg.dir / p;
  return parse_file(p);
}

void reject_unknown(const nlohmann::json& j, const nlohmann::json& known, const std::string& where,
                    const std::vector<std::string>& extra) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  reject_rec(j, known, where, extra);
}

void with_field_diagnostics(const std::string& where, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const DimensionMismatch& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace fbd::cli
