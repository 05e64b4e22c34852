#include "gradlab/config.hpp"

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gradlab {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& tok, double* out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) return false;
  *out = v;
  return true;
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ConfigValue parse_value(const std::string& raw, int line,
                        const std::string& where) {
  ConfigValue v;
  v.line = line;
  std::string t = trim(raw);
  if (t.empty()) throw ConfigError(where + ": empty value");
  if (t == "true" || t == "false") {
    v.kind = ConfigValue::Kind::Boolean;
    v.boolean = t == "true";
    return v;
  }
  if (t.front() == '"') {
    if (t.size() < 2 || t.back() != '"')
      throw ConfigError(where + ": unterminated string");
    v.kind = ConfigValue::Kind::String;
    v.str = t.substr(1, t.size() - 2);
    return v;
  }
  if (t.front() == '[') {
    if (t.back() != ']') throw ConfigError(where + ": unterminated array");
    std::string inner = t.substr(1, t.size() - 2);
    std::stringstream ss(inner);
    std::string item;
    bool string_list = inner.find('"') != std::string::npos;
    v.kind = string_list ? ConfigValue::Kind::StringList
                         : ConfigValue::Kind::NumberList;
    while (std::getline(ss, item, ',')) {
      std::string it = trim(item);
      if (it.empty()) continue;
      if (string_list) {
        if (it.size() < 2 || it.front() != '"' || it.back() != '"')
          throw ConfigError(where + ": array mixes strings and numbers");
        v.str_list.push_back(it.substr(1, it.size() - 2));
      } else {
        double d;
        if (!parse_number(it, &d))
          throw ConfigError(where + ": bad array element '" + it + "'");
        v.list.push_back(d);
      }
    }
    return v;
  }
  double d;
  if (parse_number(t, &d)) {
    v.kind = ConfigValue::Kind::Number;
    v.num = d;
    return v;
  }
  throw ConfigError(where + ": cannot parse value '" + t + "'");
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text,
                            const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    std::size_t hash = t.find('#');
    if (hash != std::string::npos && (hash == 0 || t[hash - 1] != '"'))
      t = trim(t.substr(0, hash));
    if (t.empty()) continue;
    char where_buf[160];
    std::snprintf(where_buf, sizeof where_buf, "%s:%d", origin.c_str(), lineno);
    std::string where = where_buf;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": bad section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      cfg.sections_[section];
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (section.empty())
      throw ConfigError(where + ": key '" + key + "' outside any section");
    auto& sec = cfg.sections_[section];
    if (sec.count(key))
      throw ConfigError(where + ": duplicate key '" + key + "' in [" +
                        section + "]");
    sec[key] = parse_value(t.substr(eq + 1), lineno,
                           where + " ([" + section + "]." + key + ")");
  }
  return cfg;
}

bool Config::has_section(const std::string& s) const {
  return sections_.count(s) > 0;
}

bool Config::has_key(const std::string& s, const std::string& k) const {
  auto it = sections_.find(s);
  return it != sections_.end() && it->second.count(k) > 0;
}

std::vector<std::string> Config::section_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) out.push_back(name);
  return out;
}

std::vector<std::string> Config::sections_with_prefix(
    const std::string& p) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_)
    if (name.compare(0, p.size(), p) == 0) out.push_back(name);
  return out;
}

void Config::missing(const std::string& s, const std::string& k) const {
  throw ConfigError(origin_ + ": missing key '" + k + "' in section [" + s +
                    "]");
}

const ConfigValue& Config::raw(const std::string& s,
                               const std::string& k) const {
  auto it = sections_.find(s);
  if (it == sections_.end()) missing(s, k);
  auto jt = it->second.find(k);
  if (jt == it->second.end()) missing(s, k);
  return jt->second;
}

double Config::number(const std::string& s, const std::string& k) const {
  const auto& v = raw(s, k);
  if (v.kind != ConfigValue::Kind::Number)
    throw ConfigError(origin_ + ": [" + s + "]." + k + " must be a number");
  return v.num;
}

double Config::number_or(const std::string& s, const std::string& k,
                         double dflt) const {
  return has_key(s, k) ? number(s, k) : dflt;
}

std::string Config::str(const std::string& s, const std::string& k) const {
  const auto& v = raw(s, k);
  if (v.kind != ConfigValue::Kind::String)
    throw ConfigError(origin_ + ": [" + s + "]." + k + " must be a string");
  return v.str;
}

std::string Config::str_or(const std::string& s, const std::string& k,
                           const std::string& dflt) const {
  return has_key(s, k) ? str(s, k) : dflt;
}

bool Config::boolean_or(const std::string& s, const std::string& k,
                        bool dflt) const {
  if (!has_key(s, k)) return dflt;
  const auto& v = raw(s, k);
  if (v.kind != ConfigValue::Kind::Boolean)
    throw ConfigError(origin_ + ": [" + s + "]." + k + " must be a boolean");
  return v.boolean;
}

std::vector<double> Config::numbers(const std::string& s,
                                    const std::string& k) const {
  const auto& v = raw(s, k);
  if (v.kind == ConfigValue::Kind::Number) return {v.num};
  if (v.kind != ConfigValue::Kind::NumberList)
    throw ConfigError(origin_ + ": [" + s + "]." + k +
                      " must be a number array");
  return v.list;
}

std::vector<std::string> Config::strings(const std::string& s,
                                         const std::string& k) const {
  const auto& v = raw(s, k);
  if (v.kind == ConfigValue::Kind::String) return {v.str};
  if (v.kind != ConfigValue::Kind::StringList)
    throw ConfigError(origin_ + ": [" + s + "]." + k +
                      " must be a string array");
  return v.str_list;
}

std::string Config::normalized() const {
  std::string out;
  for (const auto& [name, sec] : sections_) {
    out += "[" + name + "]\n";
    for (const auto& [key, v] : sec) {
      out += key + " = ";
      switch (v.kind) {
        case ConfigValue::Kind::Number:
          out += fmt_num(v.num);
          break;
        case ConfigValue::Kind::String:
          out += quote(v.str);
          break;
        case ConfigValue::Kind::Boolean:
          out += v.boolean ? "true" : "false";
          break;
        case ConfigValue::Kind::NumberList: {
          out += "[";
          for (std::size_t i = 0; i < v.list.size(); ++i)
            out += (i ? ", " : "") + fmt_num(v.list[i]);
          out += "]";
          break;
        }
        case ConfigValue::Kind::StringList: {
          out += "[";
          for (std::size_t i = 0; i < v.str_list.size(); ++i)
            out += (i ? ", " : "") + quote(v.str_list[i]);
          out += "]";
          break;
        }
      }
      out += "\n";
    }
  }
  return out;
}

std::string Config::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : normalized()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "fnv1a-%016" PRIx64, h);
  return buf;
}

}  // namespace gradlab
