#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polyvem/errors.hpp"

namespace polyvem {

/// Flat `key = value` text with `[section]` headers. `#` starts a comment.
/// Keys are addressed as "section.key" (keys before any header have no prefix).
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& is) {
    ConfigFile c;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (c.values_.count(full)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
      c.values_[full] = value;
      c.lines_[full] = lineno;
    }
    return c;
  }

  static ConfigFile parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    return parse(is);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? to_double(key, require(key)) : (used_.insert(key), fallback);
  }

  long long get_int(const std::string& key, long long fallback) const {
    return has(key) ? to_int(key, require(key)) : (used_.insert(key), fallback);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = require(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(where(key) + "expected a boolean, got '" + v + "'");
  }

  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    std::vector<std::string> out;
    std::string v = require(key);
    for (char& ch : v)
      if (ch == ',') ch = ' ';
    std::istringstream ss(v);
    for (std::string tok; ss >> tok;) out.push_back(tok);
    return out;
  }

  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    std::vector<double> out;
    for (const auto& t : get_list(key, {})) out.push_back(to_double(key, t));
    return out;
  }

  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    std::vector<int> out;
    for (const auto& t : get_list(key, {})) out.push_back(static_cast<int>(to_int(key, t)));
    return out;
  }

  /// Keys present in the file that no getter asked for.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  std::string where(const std::string& key) const {
    auto it = lines_.find(key);
    return it == lines_.end() ? key + ": " : "line " + std::to_string(it->second) + " (" + key + "): ";
  }

  double to_double(const std::string& key, const std::string& v) const {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(where(key) + "expected a number, got '" + v + "'");
  }

  long long to_int(const std::string& key, const std::string& v) const {
    try {
      std::size_t used = 0;
      const long long d = std::stoll(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(where(key) + "expected an integer, got '" + v + "'");
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  mutable std::set<std::string> used_;
};

}  // namespace polyvem
