#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "clslu/tensor.hpp"

namespace clslu {

// Minimal INI-style key-value file: [section] headers, key = value lines,
// '#' or ';' comments. Lookups fall back to supplied defaults.
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile load(const std::filesystem::path& path);
  static ConfigFile parse(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace clslu
