#pragma once

#include <map>
#include <string>
#include <string_view>

#include "derail/error.hpp"

namespace derail::resources {

// Generated from templates/*.txt and data/lexicons/*.txt at build time.
const std::map<std::string, std::string_view>& table_templates();
const std::map<std::string, std::string_view>& table_lexicons();

inline std::string_view get(const std::map<std::string, std::string_view>& table, const std::string& key) {
  auto it = table.find(key);
  if (it == table.end()) throw Error(Errc::Io, "embedded resource missing: " + key);
  return it->second;
}

}  // namespace derail::resources
