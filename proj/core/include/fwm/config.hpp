// Plain key = value run configuration with command-line overrides. Every run
// writes its fully resolved config next to its outputs.

#pragma once

#include <map>
#include <string>

namespace fwm {

class KvConfig {
 public:
  KvConfig() = default;

  // Lines are "key = value"; '#' starts a comment; blank lines ignored.
  static KvConfig load(const std::string& path);
  static KvConfig parse(const std::string& text);

  // "key=value" override, e.g. from a --set flag.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string serialize() const;
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace fwm
