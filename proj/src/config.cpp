#include "streamgp/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace streamgp {
namespace {

std::string trimmed(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void ConfigMap::set(const std::string& section, const std::string& key,
                    const std::string& value) {
  values_[section][key] = value;
  accessed_.emplace(section + "." + key, false);
}

const std::string* ConfigMap::find(const std::string& section,
                                   const std::string& key) const {
  const auto sec = values_.find(section);
  if (sec == values_.end()) return nullptr;
  const auto it = sec->second.find(key);
  if (it == sec->second.end()) return nullptr;
  accessed_[section + "." + key] = true;
  return &it->second;
}

bool ConfigMap::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string ConfigMap::get_string(const std::string& section,
                                  const std::string& key,
                                  const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v != nullptr ? *v : fallback;
}

double ConfigMap::get_double(const std::string& section,
                             const std::string& key, double fallback) const {
  const std::string* v = find(section, key);
  if (v == nullptr) return fallback;
  try {
    size_t used = 0;
    const double out = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config: " + section + "." + key +
                             " is not a number: '" + *v + "'");
  }
}

long ConfigMap::get_long(const std::string& section, const std::string& key,
                         long fallback) const {
  const std::string* v = find(section, key);
  if (v == nullptr) return fallback;
  try {
    size_t used = 0;
    const long out = std::stol(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config: " + section + "." + key +
                             " is not an integer: '" + *v + "'");
  }
}

bool ConfigMap::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
  const std::string* v = find(section, key);
  if (v == nullptr) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw std::runtime_error("config: " + section + "." + key +
                           " is not a boolean: '" + *v + "'");
}

std::vector<double> ConfigMap::get_double_list(
    const std::string& section, const std::string& key,
    const std::vector<double>& fallback) const {
  const std::string* v = find(section, key);
  if (v == nullptr) return fallback;
  std::vector<double> out;
  std::istringstream in(*v);
  std::string tok;
  while (in >> tok) {
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::runtime_error("config: " + section + "." + key +
                               " has a non-numeric entry: '" + tok + "'");
    }
  }
  if (out.empty()) {
    throw std::runtime_error("config: " + section + "." + key + " is empty");
  }
  return out;
}

std::vector<std::string> ConfigMap::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [name, read] : accessed_) {
    if (!read) out.push_back(name);
  }
  return out;
}

ConfigMap parse_config_text(const std::string& text,
                            const std::string& origin) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  std::string section = "run";
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trimmed(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                 ": malformed section header '" + line + "'");
      }
      section = trimmed(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": expected key = value, got '" + line + "'");
    }
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": empty key");
    }
    out.set(section, key, value);
  }
  return out;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace streamgp
