#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "derail/error.hpp"

namespace derail::detail {

inline std::string enum_key(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ' || c == '/') continue;
    out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
  }
  return out;
}

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "unknown";
}

template <typename E, std::size_t N>
E parse_enum(const NameTable<E, N>& table, std::string_view s, std::string_view what) {
  const std::string key = enum_key(s);
  for (const auto& [v, name] : table) {
    if (enum_key(name) == key) return v;
  }
  throw Error(Errc::UnknownEnumValue, "unknown " + std::string(what) + ": \"" + std::string(s) + "\"");
}

}  // namespace derail::detail
