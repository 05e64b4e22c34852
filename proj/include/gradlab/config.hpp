#pragma once

#include <map>
#include <string>
#include <vector>

#include "gradlab/errors.hpp"

namespace gradlab {

// Minimal TOML-style config: [section] headers (dotted names allowed),
// key = value lines, values being numbers, "strings", booleans or flat
// number/string arrays. Parse errors name the line and key.
struct ConfigValue {
  enum class Kind { Number, String, Boolean, NumberList, StringList };
  Kind kind = Kind::Number;
  double num = 0;
  std::string str;
  bool boolean = false;
  std::vector<double> list;
  std::vector<std::string> str_list;
  int line = 0;
};

class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text,
                             const std::string& origin = "<string>");

  bool has_section(const std::string& s) const;
  bool has_key(const std::string& s, const std::string& k) const;
  std::vector<std::string> section_names() const;
  std::vector<std::string> sections_with_prefix(const std::string& p) const;

  double number(const std::string& s, const std::string& k) const;
  double number_or(const std::string& s, const std::string& k, double dflt) const;
  std::string str(const std::string& s, const std::string& k) const;
  std::string str_or(const std::string& s, const std::string& k,
                     const std::string& dflt) const;
  bool boolean_or(const std::string& s, const std::string& k, bool dflt) const;
  std::vector<double> numbers(const std::string& s, const std::string& k) const;
  std::vector<std::string> strings(const std::string& s,
                                   const std::string& k) const;
  // "C = 1.5" or "C = \"calibrate\"": number when numeric, empty optional via
  // is_string check
  const ConfigValue& raw(const std::string& s, const std::string& k) const;

  // Canonical reparsable dump: sections and keys sorted, numbers with 17
  // significant digits. Byte-stable for identical inputs.
  std::string normalized() const;
  // FNV-1a of the normalized text.
  std::string hash() const;

 private:
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
  std::string origin_;
  [[noreturn]] void missing(const std::string& s, const std::string& k) const;
};

}  // namespace gradlab
