#pragma once

#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sarforge/common.hpp"

namespace sarforge {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

// key=value lines; '#' starts a comment, blank lines ignored
inline std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("config: cannot open '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw SpecError("config: '" + path + "' line " + std::to_string(line_no) +
                      ": expected key=value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty())
      throw SpecError("config: '" + path + "' line " + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

// Fully resolved run configuration, echoed next to every output.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void set(const std::string& key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    entries_.emplace_back(key, buf);
  }
  void set(const std::string& key, long long value) { entries_.emplace_back(key, std::to_string(value)); }
  void set(const std::string& key, int value) { entries_.emplace_back(key, std::to_string(value)); }
  void set(const std::string& key, std::uint64_t value) { entries_.emplace_back(key, std::to_string(value)); }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SpecError("manifest: cannot open '" + path + "'");
    auto sorted = entries_;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [k, v] : sorted) out << k << "=" << v << "\n";
    if (!out) throw SpecError("manifest: write failed for '" + path + "'");
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace sarforge
