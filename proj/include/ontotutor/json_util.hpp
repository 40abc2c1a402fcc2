#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ontotutor/error.hpp"

namespace ontotutor::detail {

using json = nlohmann::json;

// Translate a byte offset into a 1-based (line, column) pair.
inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports the offset one past the offending byte.
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    auto [line, column] = line_column(text, offset);
    throw ParseError(e.what(), line, column);
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

// Structural failures inside an otherwise well-formed JSON document are
// reported as parse errors without a meaningful position.
[[noreturn]] inline void schema_fail(const std::string& what) { throw ParseError(what, 0, 0); }

inline const json& require(const json& obj, std::string_view key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(std::string(where) + ": missing key '" + std::string(key) + "'");
  return *it;
}

inline void require_object(const json& j, std::string_view where) {
  if (!j.is_object()) schema_fail(std::string(where) + ": expected an object");
}

inline void require_array(const json& j, std::string_view where) {
  if (!j.is_array()) schema_fail(std::string(where) + ": expected an array");
}

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      schema_fail(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
T get_as(const json& j, std::string_view where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    schema_fail(std::string(where) + ": " + e.what());
  }
}

}  // namespace ontotutor::detail
