#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "derail/corpus.hpp"

namespace derail::test {

inline std::filesystem::path data_dir() { return DERAIL_TEST_DATA_DIR; }
inline std::filesystem::path fixture(const std::string& name) { return data_dir() / "fixtures" / name; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() / ("derail-" + tag + "-" + std::to_string(rng()));
  std::filesystem::create_directories(p);
  return p;
}

inline Timestamp at(const char* iso) { return parse_iso8601(iso); }

inline Comment make_comment(std::string id, std::string author, std::string assoc, std::string body,
                            Timestamp when, bool toxic = false) {
  Comment c;
  c.id = std::move(id);
  c.author_handle = std::move(author);
  c.author_association = std::move(assoc);
  c.body = std::move(body);
  c.created_at = when;
  c.is_toxic = toxic;
  if (toxic) c.tbdfs.insert(Tbdf::Insulting);
  return c;
}

// n comments an hour apart, alternating between two authors. Comments listed
// in `toxic` are marked toxic.
inline ConversationThread make_thread(std::string repo, std::int64_t number, std::size_t n,
                                      std::initializer_list<std::size_t> toxic = {}) {
  ConversationThread t;
  t.repo = std::move(repo);
  t.number = number;
  t.title = "Thread " + std::to_string(number);
  const Timestamp base = at("2024-01-01T00:00:00Z");
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_toxic = std::find(toxic.begin(), toxic.end(), i) != toxic.end();
    t.comments.push_back(make_comment(std::to_string(number) + "-" + std::to_string(i),
                                      i % 2 == 0 ? "opener" : "helper", i % 2 == 0 ? "NONE" : "MEMBER",
                                      "comment " + std::to_string(i), base + std::chrono::hours(i), is_toxic));
  }
  return t;
}

}  // namespace derail::test
