#pragma once

// Flat key = value configuration files: one assignment per line, '#'
// comments, dotted keys for nesting (bounds.P.low, grid.nx, fno.modes).

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace opforge {

class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    KvConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config: missing '=' at " + path + ":" +
                                 std::to_string(lineno));
      const auto key = trim(trimmed.substr(0, eq));
      const auto value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config: empty key at " + path + ":" +
                                 std::to_string(lineno));
      cfg.values_[key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(it->second, key);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return std::stoull(it->second);
    } catch (...) {
      throw std::runtime_error("config: bad integer for " + key);
    }
  }

  std::vector<std::size_t> get_size_list(const std::string& key,
                                         std::vector<std::size_t> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::size_t> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto t = trim(item);
      if (t.empty()) continue;
      try {
        out.push_back(std::stoull(t));
      } catch (...) {
        throw std::runtime_error("config: bad list entry for " + key);
      }
    }
    if (out.empty()) throw std::runtime_error("config: empty list for " + key);
    return out;
  }

  /// Typo guard: every present key must belong to the allowed set.
  void require_known_keys(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : values_)
      if (!allowed.count(key))
        throw std::runtime_error("config: unknown key '" + key + "'");
  }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  static double parse_double(const std::string& s, const std::string& key) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (...) {
      throw std::runtime_error("config: bad number for " + key);
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace opforge
