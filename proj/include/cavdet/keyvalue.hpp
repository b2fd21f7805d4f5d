#pragma once

// Flat "key = value" text with [section] headers. Used for configuration,
// stream sidecars, manifests and summaries. Keys are addressed as
// "section.key"; entries keep their source line for error messages and are
// written back in insertion order so output is byte-stable.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cavdet/errors.hpp"

namespace cavdet {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

class KeyValueDocument {
 public:
  struct Entry {
    std::string key;  // section.key
    std::string value;
    std::size_t line = 0;
  };

  static KeyValueDocument parse(std::string_view text) {
    KeyValueDocument doc;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      const auto line = detail::trim(text.substr(pos, nl - pos));
      ++line_no;
      pos = nl + 1;
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(line_no, "", "unterminated section header");
        section = std::string(detail::trim(line.substr(1, line.size() - 2)));
        if (section.empty()) throw ConfigError(line_no, "", "empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError(line_no, std::string(line), "expected key = value");
      const auto bare = detail::trim(line.substr(0, eq));
      if (bare.empty()) throw ConfigError(line_no, "", "empty key");
      std::string key = section.empty() ? std::string(bare) : section + "." + std::string(bare);
      if (doc.index_.count(key)) throw ConfigError(line_no, key, "duplicate key");
      doc.index_[key] = doc.entries_.size();
      doc.entries_.push_back({key, std::string(detail::trim(line.substr(eq + 1))), line_no});
    }
    return doc;
  }

  static KeyValueDocument load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, path.string(), "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return index_.count(key) != 0; }

  const Entry* find(const std::string& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  const std::vector<Entry>& entries() const { return entries_; }

  /// Inserts or replaces; replacement keeps the original position.
  void set(const std::string& key, std::string value) {
    auto it = index_.find(key);
    if (it != index_.end()) {
      entries_[it->second].value = std::move(value);
      return;
    }
    index_[key] = entries_.size();
    entries_.push_back({key, std::move(value), 0});
  }
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  /// Overlays every entry of `other` onto this document.
  void merge(const KeyValueDocument& other) {
    for (const auto& e : other.entries_) {
      set(e.key, e.value);
      entries_[index_[e.key]].line = e.line;
    }
  }

  std::optional<std::string> get_string(const std::string& key) const {
    const Entry* e = find(key);
    return e ? std::optional<std::string>(e->value) : std::nullopt;
  }

  std::optional<double> get_double(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    double v = 0.0;
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v))
      throw ConfigError(e->line, key, "expected a finite number, got '" + e->value + "'");
    return v;
  }

  std::optional<std::uint64_t> get_uint(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    std::uint64_t v = 0;
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
      throw ConfigError(e->line, key, "expected a non-negative integer, got '" + e->value + "'");
    return v;
  }

  std::optional<bool> get_bool(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    throw ConfigError(e->line, key, "expected true/false, got '" + e->value + "'");
  }

  /// Rejects keys outside `known`.
  void require_known(const std::set<std::string>& known) const {
    for (const auto& e : entries_)
      if (!known.count(e.key)) throw ConfigError(e.line, e.key, "unknown key");
  }

  /// Serializes grouped by section in order of first appearance.
  std::string to_string() const {
    std::vector<std::string> sections;
    std::map<std::string, std::vector<const Entry*>> by_section;
    for (const auto& e : entries_) {
      const auto dot = e.key.find('.');
      std::string sec = dot == std::string::npos ? std::string() : e.key.substr(0, dot);
      if (!by_section.count(sec)) sections.push_back(sec);
      by_section[sec].push_back(&e);
    }
    std::ostringstream out;
    bool first = true;
    for (const auto& sec : sections) {
      if (!first) out << '\n';
      first = false;
      if (!sec.empty()) out << '[' << sec << "]\n";
      for (const Entry* e : by_section[sec]) {
        const std::string bare = sec.empty() ? e->key : e->key.substr(sec.size() + 1);
        out << bare << " = " << e->value << '\n';
      }
    }
    return out.str();
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_string();
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// FNV-1a, 64 bit. Used to fingerprint resolved configurations.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace cavdet
