#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "graspkit/errors.hpp"

namespace graspkit {

/// Flat key-value configuration with INI-style sections. Keys are stored as
/// "section.key"; values are raw strings. Command-line flags override these.
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig parse(std::istream& in) {
    RunConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw ConfigError("bad section header at line " + std::to_string(lineno));
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        continue;
      }
      const size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("expected key = value at line " + std::to_string(lineno));
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
      cfg.values_[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  static std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

 private:
  std::map<std::string, std::string> values_;
};

inline bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError("not a boolean: " + s);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  for (char c : s) {
    if (c == ',') {
      out.push_back(RunConfig::trim(item));
      item.clear();
    } else {
      item += c;
    }
  }
  if (!RunConfig::trim(item).empty() || !out.empty())
    out.push_back(RunConfig::trim(item));
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

}  // namespace graspkit
