#pragma once

#include <map>
#include <set>
#include <string>

namespace fraktur {

// Flat key=value file with optional [section] headers; a header prefixes
// the keys that follow it as "section.key".  '#' and ';' start comments.
struct ConfigMap {
  struct Entry {
    std::string value;
    int line = 0;
  };

  std::string path;
  std::map<std::string, Entry> entries;
  mutable std::set<std::string> consumed;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  int line_of(const std::string& key) const;

  // Typed getters throw ConfigError naming the key (and line when present).
  std::string get_string(const std::string& key) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int_or(const std::string& key, int fallback) const;
  unsigned long long get_u64_or(const std::string& key, unsigned long long fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  // Every key must have been consumed by a getter; otherwise reports the
  // first unknown key with its line so typos fail loudly.
  void reject_unconsumed() const;
};

ConfigMap parse_config_text(const std::string& text, const std::string& path);
ConfigMap parse_config_file(const std::string& path);

}  // namespace fraktur
