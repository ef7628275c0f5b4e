#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "derail/error.hpp"

namespace derail::detail {

inline std::string field_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(Errc::SchemaViolation, path + ": " + what);
}

inline const nlohmann::json& require(const nlohmann::json& obj, const std::string& key,
                                     const std::string& base) {
  if (!obj.is_object()) schema_error(base.empty() ? "<root>" : base, "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(field_path(base, key), "missing field");
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const std::string& key,
                                  const std::string& base) {
  const auto& v = require(obj, key, base);
  if (!v.is_string()) schema_error(field_path(base, key), "expected string");
  return v.get<std::string>();
}

inline bool require_bool(const nlohmann::json& obj, const std::string& key, const std::string& base) {
  const auto& v = require(obj, key, base);
  if (!v.is_boolean()) schema_error(field_path(base, key), "expected boolean");
  return v.get<bool>();
}

inline double require_number(const nlohmann::json& obj, const std::string& key,
                             const std::string& base) {
  const auto& v = require(obj, key, base);
  if (!v.is_number()) schema_error(field_path(base, key), "expected number");
  return v.get<double>();
}

inline std::int64_t require_int(const nlohmann::json& obj, const std::string& key,
                                const std::string& base) {
  const auto& v = require(obj, key, base);
  if (!v.is_number_integer()) schema_error(field_path(base, key), "expected integer");
  return v.get<std::int64_t>();
}

// Rethrows an Error from a nested parser with the field path prepended.
template <typename F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaViolation) throw;
    throw Error(Errc::SchemaViolation, path + ": " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + what + " " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content, const std::string& what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + what + " " + path.string());
  out << content;
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

// Calls f(json, line_no) for every non-blank line. Errors are prefixed with
// "line N: ".
template <typename F>
void for_each_jsonl(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::MalformedJson, where + "malformed JSON");
    try {
      f(j, line_no);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::SchemaViolation, where + e.what());
    }
  }
}

inline std::string dump_line(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

}  // namespace derail::detail
