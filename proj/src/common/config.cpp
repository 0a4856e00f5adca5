#include "c2f/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace c2f {

static std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

Config Config::from_file(const std::string& path) {
  Config c;
  c.load_file(path);
  return c;
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected `key = value`");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void Config::set_kv(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ArgumentError("override must be key=value: " + assignment);
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  require(!key.empty(), "empty config key");
  kv_[key] = value;
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string Config::raw(const std::string& key, const std::string& def) const {
  auto it = kv_.find(key);
  const std::string v = it == kv_.end() ? def : it->second;
  resolved_[key] = v;
  return v;
}

double Config::get(const std::string& key, double def) const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", def);
  const std::string v = raw(key, buf);
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ArgumentError("config key `" + key + "`: bad number `" + v + "`");
  }
}

i64 Config::get(const std::string& key, i64 def) const {
  const double d = get(key, static_cast<double>(def));
  const i64 n = static_cast<i64>(d);
  if (static_cast<double>(n) != d)
    throw ArgumentError("config key `" + key + "`: expected integer");
  return n;
}

int Config::get(const std::string& key, int def) const {
  return static_cast<int>(get(key, static_cast<i64>(def)));
}

bool Config::get(const std::string& key, bool def) const {
  const std::string v = raw(key, def ? "true" : "false");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ArgumentError("config key `" + key + "`: bad boolean `" + v + "`");
}

std::string Config::get(const std::string& key, const std::string& def) const {
  return raw(key, def);
}

std::string Config::get(const std::string& key, const char* def) const {
  return raw(key, def);
}

std::vector<i64> Config::get_list(const std::string& key,
                                  const std::vector<i64>& def) const {
  std::string d;
  for (size_t i = 0; i < def.size(); ++i)
    d += (i ? "," : "") + std::to_string(def[i]);
  const std::string v = raw(key, d);
  std::vector<i64> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(std::stoll(tok));
  }
  return out;
}

std::vector<double> Config::get_dlist(const std::string& key,
                                      const std::vector<double>& def) const {
  std::string d;
  for (size_t i = 0; i < def.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", def[i]);
    d += (i ? std::string(",") : std::string()) + buf;
  }
  const std::string v = raw(key, d);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [k, v] : resolved_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace c2f
