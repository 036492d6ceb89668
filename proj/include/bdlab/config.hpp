#pragma once

// Line-oriented configuration files.
//
// Grammar:
//   file    := { line '\n' }
//   line    := blank | comment | entry
//   comment := '#' any*
//   entry   := key '=' value [ '#' any* ]
//   key     := segment { '.' segment },  segment := [A-Za-z0-9_-]+
//   value   := any* (surrounding whitespace stripped; may be empty only if quoted "")
// Lists are comma-separated values. Later entries override earlier ones;
// command-line overrides use the same key=value form.

#include "bdlab/core.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace bdlab {

class Config {
public:
  static Config parse(std::istream& in, const std::string& source = "<input>") {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      c.parse_line(line, source + ":" + std::to_string(lineno));
    }
    return c;
  }

  static Config parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  /// Applies one "key=value" override.
  void apply_override(const std::string& kv) {
    if (kv.find('=') == std::string::npos) throw ConfigError("override '" + kv + "' is not of the form key=value");
    parse_line(kv, "override '" + kv + "'");
  }

  void set(const std::string& key, const std::string& value) {
    check_key(key, "set");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& entries() const { return values_; }

  std::string get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

  std::int64_t get_int(const std::string& key) const { return to_int(key, get_string(key)); }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
  }

  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(get_string(key))) out.push_back(to_double(key, item));
    return out;
  }
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? get_doubles(key) : fallback;
  }

  /// Canonical text: sorted "key = value" lines. Equal configs hash equally.
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
    return s;
  }

  /// FNV-1a 64-bit hash of the canonical text, as 16 hex digits.
  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  static std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

private:
  void parse_line(const std::string& raw, const std::string& where) {
    std::string line = raw;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) return;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    check_key(key, where);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    else if (value.empty()) throw ConfigError(where + ": key '" + key + "' has an empty value");
    values_[key] = value;
  }

  static void check_key(const std::string& key, const std::string& where) {
    static const std::regex pattern("[A-Za-z0-9_-]+(\\.[A-Za-z0-9_-]+)*");
    if (!std::regex_match(key, pattern)) throw ConfigError(where + ": malformed key '" + key + "'");
  }

  static double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, x);
    if (r.ec != std::errc() || r.ptr != end) throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    return x;
  }

  static std::int64_t to_int(const std::string& key, const std::string& v) {
    // Accept integral values written in scientific notation, e.g. 1e6.
    const double x = to_double(key, v);
    if (x != std::floor(x) || std::abs(x) > 9e15)
      throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return static_cast<std::int64_t>(x);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace bdlab
