#include "glassbox/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "glassbox/csv.hpp"

namespace glassbox::config {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

File File::parse(const std::string& text) {
  File f;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::runtime_error("config: malformed section at line " + std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key = value at line " + std::to_string(lineno));
    std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
    if (!section.empty()) key = section + "." + key;
    f.entries_[key] = value;
  }
  return f;
}

File File::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void File::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  // Top-level keys must precede every section header: once a [section] is
  // open there is no way back to the global scope.
  bool wrote_top = false;
  for (const auto& [key, value] : entries_) {
    if (key.find('.') != std::string::npos) continue;
    out << key << " = " << value << "\n";
    wrote_top = true;
  }
  std::string section;
  bool first_section = true;
  for (const auto& [key, value] : entries_) {
    const std::size_t dot = key.find('.');
    if (dot == std::string::npos) continue;
    const std::string sec = key.substr(0, dot);
    if (sec != section || first_section) {
      if (!first_section || wrote_top) out << "\n";
      out << "[" << sec << "]\n";
      section = sec;
      first_section = false;
    }
    out << key.substr(dot + 1) << " = " << value << "\n";
  }
  if (!out) throw std::runtime_error("config: write failed for " + path);
}

bool File::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string File::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

long long File::get_int(const std::string& key, long long fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0' || errno == ERANGE)
    throw std::runtime_error("config: '" + key + "' is not an integer: " + it->second);
  return v;
}

double File::get_real(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  return csv::to_real(it->second);
}

bool File::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config: '" + key + "' is not a boolean: " + v);
}

std::vector<double> File::get_reals(const std::string& key,
                                    const std::vector<double>& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<double> out;
  std::string item;
  std::istringstream in(it->second);
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(csv::to_real(t));
  }
  if (out.empty()) throw std::runtime_error("config: '" + key + "' is an empty list");
  return out;
}

void File::set(const std::string& key, const std::string& value) { entries_[key] = value; }

void File::set_int(const std::string& key, long long value) {
  entries_[key] = std::to_string(value);
}

void File::set_real(const std::string& key, double value) {
  entries_[key] = csv::format_real(value);
}

}  // namespace glassbox::config
