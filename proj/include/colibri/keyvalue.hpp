// Copyright 2026 The colibri-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Sectioned `key = value` text used by scenario and network description files.
//
//   # comment
//   seed = 42
//   [dvs]
//   theta_on = 0.2
//
// Sections may repeat (e.g. one [layer] per network layer). Every key must be
// consumed by the reader; leftovers are reported as unknown fields.

#ifndef COLIBRI_KEYVALUE_HPP
#define COLIBRI_KEYVALUE_HPP

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace colibri {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KeyValueSection {
 public:
  KeyValueSection(std::string source, std::string name) : source_(std::move(source)), name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  void insert(const std::string& key, std::string value, std::size_t line) {
    if (!entries_.emplace(key, Entry{std::move(value), line}).second) {
      throw ConfigError(source_ + ":" + std::to_string(line) + ": duplicate field '" + qualified(key) + "'");
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::optional<std::string> find(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.insert(key);
    return it->second.value;
  }

  std::string string(const std::string& key) const {
    auto v = find(key);
    if (!v) throw ConfigError(source_ + ": missing field '" + qualified(key) + "'");
    return *v;
  }

  std::string string_or(const std::string& key, std::string fallback) const {
    auto v = find(key);
    return v ? *v : fallback;
  }

  double real(const std::string& key) const { return parse_real(key, string(key)); }
  double real_or(const std::string& key, double fallback) const {
    auto v = find(key);
    return v ? parse_real(key, *v) : fallback;
  }

  std::int64_t integer(const std::string& key) const { return parse_int(key, string(key)); }
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const {
    auto v = find(key);
    return v ? parse_int(key, *v) : fallback;
  }

  std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) const {
    auto v = find(key);
    return v ? parse_unsigned(key, *v) : fallback;
  }
  std::uint64_t unsigned_value(const std::string& key) const { return parse_unsigned(key, string(key)); }

  bool boolean_or(const std::string& key, bool fallback) const {
    auto v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw invalid(key, *v, "a boolean");
  }

  /// Throws naming the first key that no reader asked for.
  void reject_unused() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) {
        throw ConfigError(source_ + ":" + std::to_string(entry.line) + ": unknown field '" + qualified(key) + "'");
      }
    }
  }

  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  ConfigError invalid(const std::string& key, const std::string& value, const std::string& expected) const {
    return ConfigError(source_ + ": field '" + qualified(key) + "' = '" + value + "' is not " + expected);
  }

 private:
  struct Entry {
    std::string value;
    std::size_t line;
  };

  double parse_real(const std::string& key, const std::string& v) const {
    errno = 0;
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || errno == ERANGE) throw invalid(key, v, "a number");
    return d;
  }

  std::int64_t parse_int(const std::string& key, const std::string& v) const {
    errno = 0;
    char* end = nullptr;
    const long long i = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0' || errno == ERANGE) throw invalid(key, v, "an integer");
    return i;
  }

  std::uint64_t parse_unsigned(const std::string& key, const std::string& v) const {
    errno = 0;
    char* end = nullptr;
    const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || v.front() == '-' || *end != '\0' || errno == ERANGE) {
      throw invalid(key, v, "a non-negative integer");
    }
    return u;
  }

  std::string source_;
  std::string name_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

class KeyValueDocument {
 public:
  static KeyValueDocument parse(std::istream& in, const std::string& source) {
    KeyValueDocument doc;
    doc.source_ = source;
    doc.sections_.emplace_back(source, "");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) {
          throw ConfigError(source + ":" + std::to_string(line_no) + ": malformed section header");
        }
        doc.sections_.emplace_back(source, trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
      }
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
      doc.sections_.back().insert(key, trim(line.substr(eq + 1)), line_no);
    }
    return doc;
  }

  static KeyValueDocument load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    return parse(in, path.string());
  }

  const std::string& source() const { return source_; }
  const KeyValueSection& root() const { return sections_.front(); }

  /// The single section called `name`, or nullptr when absent.
  const KeyValueSection* section(const std::string& name) const {
    const KeyValueSection* found = nullptr;
    for (const auto& s : sections_) {
      if (s.name() != name) continue;
      if (found) throw ConfigError(source_ + ": section [" + name + "] appears more than once");
      found = &s;
    }
    return found;
  }

  std::vector<const KeyValueSection*> sections(const std::string& name) const {
    std::vector<const KeyValueSection*> out;
    for (const auto& s : sections_) {
      if (s.name() == name) out.push_back(&s);
    }
    return out;
  }

  /// Throws on sections outside `known` and on unconsumed keys.
  void reject_unused(const std::set<std::string>& known) const {
    for (const auto& s : sections_) {
      if (!s.name().empty() && !known.count(s.name())) {
        throw ConfigError(source_ + ": unknown section [" + s.name() + "]");
      }
      s.reject_unused();
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::string source_;
  std::vector<KeyValueSection> sections_;
};

}  // namespace colibri

#endif  // COLIBRI_KEYVALUE_HPP
