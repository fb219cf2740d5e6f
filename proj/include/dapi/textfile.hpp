#pragma once

// Reader for the line-oriented key-value format used by network and scenario
// files:
//
//   # comment
//   key = value            top-level setting
//   [section]
//   key = value            section setting
//   1 2 0.5                section row (whitespace-separated tokens)
//   3 inertia=2e5          rows may carry key=value options
//
// Every entry remembers its line number for diagnostics.

#include <cctype>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "dapi/errors.hpp"

namespace dapi::text {

struct Setting {
  std::string key;
  std::string value;
  int line = 0;
};

struct Row {
  std::vector<std::string> tokens;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Setting> settings;
  std::vector<Row> rows;
};

class Document {
 public:
  std::string file;
  std::vector<Setting> settings;  ///< top level
  std::vector<Section> sections;

  const Section* section(std::string_view name) const {
    for (const auto& s : sections) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  [[noreturn]] void fail(int line, const std::string& message) const {
    throw ParseError(file, static_cast<std::size_t>(line > 0 ? line : 0), message);
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s.front())) || s.front() == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

/// Parses `content`; `file` is used only in error messages.
inline Document parse(std::string_view content, std::string file) {
  Document doc;
  doc.file = std::move(file);
  Section* current = nullptr;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const std::size_t end = content.find('\n', pos);
    std::string_view line = content.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? content.size() + 1 : end + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') doc.fail(line_no, "unterminated section header");
      const std::string_view name = detail::trim(line.substr(1, line.size() - 2));
      if (!detail::is_identifier(name)) doc.fail(line_no, "invalid section name '" + std::string(name) + "'");
      if (doc.section(name) != nullptr) doc.fail(line_no, "duplicate section [" + std::string(name) + "]");
      doc.sections.push_back({std::string(name), line_no, {}, {}});
      current = &doc.sections.back();
      continue;
    }

    const auto eq = line.find('=');
    if (eq != std::string_view::npos && detail::is_identifier(detail::trim(line.substr(0, eq)))) {
      Setting s{std::string(detail::trim(line.substr(0, eq))), std::string(detail::trim(line.substr(eq + 1))), line_no};
      if (s.value.empty()) doc.fail(line_no, "missing value for '" + s.key + "'");
      auto& list = current ? current->settings : doc.settings;
      for (const auto& other : list) {
        if (other.key == s.key) doc.fail(line_no, "duplicate key '" + s.key + "'");
      }
      list.push_back(std::move(s));
      continue;
    }

    if (current == nullptr) doc.fail(line_no, "expected 'key = value' outside of a section");
    current->rows.push_back({detail::split_ws(line), line_no});
  }
  return doc;
}

inline Document parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

/// Strict number parsing: the whole token must be consumed.
inline bool to_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const char* first = token.data();
  const char* last = first + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline bool to_int(std::string_view token, long long& out) {
  const char* first = token.data();
  const char* last = first + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

/// Typed access to the settings of one block with diagnostics.
class Settings {
 public:
  Settings(const Document& doc, const std::vector<Setting>& list, std::string where)
      : doc_(doc), list_(list), where_(std::move(where)) {}

  const Setting* find(std::string_view key) const {
    for (const auto& s : list_) {
      if (s.key == key) return &s;
    }
    return nullptr;
  }

  bool has(std::string_view key) const { return find(key) != nullptr; }

  const Setting& require(std::string_view key, int fallback_line = 0) const {
    const Setting* s = find(key);
    if (s == nullptr) doc_.fail(fallback_line, "missing required key '" + std::string(key) + "'" + where_);
    return *s;
  }

  double number(const Setting& s) const {
    double v = 0.0;
    if (!to_double(s.value, v)) doc_.fail(s.line, "'" + s.key + "': expected a number, got '" + s.value + "'");
    return v;
  }

  double number_or(std::string_view key, double fallback) const {
    const Setting* s = find(key);
    return s ? number(*s) : fallback;
  }

  std::vector<double> numbers(const Setting& s) const {
    std::vector<double> out;
    for (const auto& tok : detail::split_ws(s.value)) {
      double v = 0.0;
      if (!to_double(tok, v)) doc_.fail(s.line, "'" + s.key + "': expected numbers, got '" + tok + "'");
      out.push_back(v);
    }
    return out;
  }

  /// Rejects keys outside `allowed`.
  void only(std::initializer_list<std::string_view> allowed) const {
    for (const auto& s : list_) {
      bool ok = false;
      for (auto a : allowed) ok = ok || s.key == a;
      if (!ok) doc_.fail(s.line, "unknown key '" + s.key + "'" + where_);
    }
  }

 private:
  const Document& doc_;
  const std::vector<Setting>& list_;
  std::string where_;
};

}  // namespace dapi::text
