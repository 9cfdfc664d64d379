#pragma once

#include <map>
#include <string>
#include <vector>

namespace streamgp {

// INI-style experiment configuration: `[section]` headers, `key = value`
// lines, `#` or `;` comments.  Keys before any section header land in the
// section "" (callers use "run" by convention, so the parser also treats a
// missing leading section as "run").
//
// Typed getters record which keys were read; unused_keys() then exposes
// anything the consumer never asked about, which the runner turns into an
// unknown-key error so typos do not silently fall back to defaults.
class ConfigMap {
 public:
  void set(const std::string& section, const std::string& key,
           const std::string& value);
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  long get_long(const std::string& section, const std::string& key,
                long fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key,
                                      const std::vector<double>& fallback) const;

  // "section.key" for every entry never touched by a getter.
  std::vector<std::string> unused_keys() const;

 private:
  const std::string* find(const std::string& section,
                          const std::string& key) const;

  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::map<std::string, bool> accessed_;  // "section.key" -> read
};

ConfigMap parse_config_text(const std::string& text,
                            const std::string& origin = "<config>");
ConfigMap parse_config_file(const std::string& path);

}  // namespace streamgp
