#pragma once
#include <map>
#include <string>
#include <vector>

#include "c2f/common.hpp"

namespace c2f {

// Flat `key = value` configuration. Later assignments win, so CLI overrides
// are applied by re-setting keys after the file is loaded. Every consumer
// pulls its value through a typed getter with a default; get() records the
// resolved value so dump() shows exactly what a run used.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  void load_file(const std::string& path);

  // "key=value" as passed on the command line.
  void set_kv(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;

  double get(const std::string& key, double def) const;
  i64 get(const std::string& key, i64 def) const;
  int get(const std::string& key, int def) const;
  bool get(const std::string& key, bool def) const;
  std::string get(const std::string& key, const std::string& def) const;
  std::string get(const std::string& key, const char* def) const;
  std::vector<i64> get_list(const std::string& key,
                            const std::vector<i64>& def) const;
  std::vector<double> get_dlist(const std::string& key,
                                const std::vector<double>& def) const;

  // Full resolved configuration (requested keys with their effective values),
  // sorted, one `key = value` per line.
  std::string dump() const;

 private:
  std::string raw(const std::string& key, const std::string& def) const;
  std::map<std::string, std::string> kv_;
  mutable std::map<std::string, std::string> resolved_;
};

}  // namespace c2f
