#pragma once

// Minimal TOML-subset reader for experiment manifests: [section] headers,
// key = value lines, # comments, and values that are quoted strings, numbers,
// booleans, or flat numeric arrays. Keys are flattened to "section.key".

#include <cctype>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "wavepacket/common.hpp"

namespace wp {

struct ConfigValue {
  enum class Kind { string, number, boolean, array };
  Kind kind = Kind::number;
  std::string str;
  double num = 0.0;
  bool flag = false;
  std::vector<double> list;
};

struct Config {
  std::string raw;  // input bytes, preserved verbatim for the echo
  std::map<std::string, ConfigValue> values;
  std::vector<std::string> overrides;  // applied --set expressions, in order

  bool has(const std::string& key) const { return values.count(key) > 0; }

  const ConfigValue& at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }
  std::string get_string(const std::string& key) const {
    const ConfigValue& v = at(key);
    if (v.kind != ConfigValue::Kind::string)
      throw ConfigError("config key is not a string: " + key);
    return v.str;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }
  double get_number(const std::string& key) const {
    const ConfigValue& v = at(key);
    if (v.kind != ConfigValue::Kind::number)
      throw ConfigError("config key is not a number: " + key);
    return v.num;
  }
  double get_number(const std::string& key, double fallback) const {
    return has(key) ? get_number(key) : fallback;
  }
  long get_int(const std::string& key, long fallback) const {
    return has(key) ? static_cast<long>(get_number(key)) : fallback;
  }
  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const ConfigValue& v = at(key);
    if (v.kind != ConfigValue::Kind::boolean)
      throw ConfigError("config key is not a boolean: " + key);
    return v.flag;
  }
  // a scalar number is accepted as a one-element list
  std::vector<double> get_list(const std::string& key) const {
    const ConfigValue& v = at(key);
    if (v.kind == ConfigValue::Kind::array) return v.list;
    if (v.kind == ConfigValue::Kind::number) return {v.num};
    throw ConfigError("config key is not a numeric list: " + key);
  }
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const {
    return has(key) ? get_list(key) : fallback;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

inline ConfigValue parse_value(const std::string& text, const std::string& key) {
  std::string v = trim(text);
  if (v.empty()) throw ConfigError("empty value for key: " + key);
  ConfigValue out;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ConfigError("unterminated string for key: " + key);
    out.kind = ConfigValue::Kind::string;
    out.str = v.substr(1, v.size() - 2);
    return out;
  }
  if (v == "true" || v == "false") {
    out.kind = ConfigValue::Kind::boolean;
    out.flag = (v == "true");
    return out;
  }
  if (v.front() == '[') {
    if (v.back() != ']') throw ConfigError("unterminated array for key: " + key);
    out.kind = ConfigValue::Kind::array;
    std::string body = v.substr(1, v.size() - 2);
    size_t pos = 0;
    while (pos < body.size()) {
      size_t comma = body.find(',', pos);
      std::string item = trim(body.substr(pos, comma == std::string::npos
                                                   ? std::string::npos
                                                   : comma - pos));
      if (!item.empty()) {
        char* end = nullptr;
        double d = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0')
          throw ConfigError("non-numeric array element for key: " + key);
        out.list.push_back(d);
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  }
  char* end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("cannot parse value for key " + key + ": " + v);
  out.kind = ConfigValue::Kind::number;
  out.num = d;
  return out;
}

}  // namespace detail

inline Config parse_config(const std::string& text) {
  Config cfg;
  cfg.raw = text;
  std::string section;
  size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos
                                                                : nl - pos);
    pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
    ++lineno;
    line = detail::trim(detail::strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    cfg.values[key] = detail::parse_value(line.substr(eq + 1), key);
  }
  return cfg;
}

// --set key=value override; the key uses the flattened section.key form
inline void apply_override(Config& cfg, const std::string& expr) {
  size_t eq = expr.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key=value: " + expr);
  std::string key = detail::trim(expr.substr(0, eq));
  cfg.values[key] = detail::parse_value(expr.substr(eq + 1), key);
  cfg.overrides.push_back(expr);
}

}  // namespace wp
