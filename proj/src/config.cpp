#include "fraktur/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fraktur/errors.hpp"

namespace fraktur {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_comment(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] == '#' || s[i] == ';') return s.substr(0, i);
  return s;
}

}  // namespace

int ConfigMap::line_of(const std::string& key) const {
  auto it = entries.find(key);
  return it == entries.end() ? 0 : it->second.line;
}

std::string ConfigMap::get_string(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end())
    throw ConfigError(path + ": missing required key '" + key + "'");
  consumed.insert(key);
  return it->second.value;
}

std::string ConfigMap::get_string_or(const std::string& key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  return get_string(key);
}

double ConfigMap::get_double(const std::string& key) const {
  const std::string raw = get_string(key);
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0')
    throw ConfigError(path + ": key '" + key + "' expects a number, got '" + raw + "'",
                      line_of(key));
  return v;
}

double ConfigMap::get_double_or(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  return get_double(key);
}

int ConfigMap::get_int(const std::string& key) const {
  const std::string raw = get_string(key);
  char* end = nullptr;
  const long v = std::strtol(raw.c_str(), &end, 10);
  if (end == raw.c_str() || *end != '\0')
    throw ConfigError(path + ": key '" + key + "' expects an integer, got '" + raw + "'",
                      line_of(key));
  return static_cast<int>(v);
}

int ConfigMap::get_int_or(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  return get_int(key);
}

unsigned long long ConfigMap::get_u64_or(const std::string& key,
                                         unsigned long long fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = get_string(key);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
  if (end == raw.c_str() || *end != '\0')
    throw ConfigError(path + ": key '" + key + "' expects an unsigned integer, got '" + raw + "'",
                      line_of(key));
  return v;
}

bool ConfigMap::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = get_string(key);
  if (raw == "true" || raw == "1" || raw == "on" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "off" || raw == "no") return false;
  throw ConfigError(path + ": key '" + key + "' expects a boolean, got '" + raw + "'",
                    line_of(key));
}

void ConfigMap::reject_unconsumed() const {
  for (const auto& [key, entry] : entries)
    if (!consumed.count(key))
      throw ConfigError(path + ": unknown key '" + key + "'", entry.line);
}

ConfigMap parse_config_text(const std::string& text, const std::string& path) {
  ConfigMap cfg;
  cfg.path = path;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path + ": unterminated section header", lineno);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(path + ": empty section name", lineno);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ": expected key=value, got '" + line + "'", lineno);
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ": empty key", lineno);
    if (!section.empty()) key = section + "." + key;
    if (cfg.entries.count(key))
      throw ConfigError(path + ": duplicate key '" + key + "' (first at line " +
                            std::to_string(cfg.entries[key].line) + ")",
                        lineno);
    cfg.entries[key] = {value, lineno};
  }
  return cfg;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace fraktur
