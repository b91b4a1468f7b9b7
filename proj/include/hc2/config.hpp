#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hc2/geometry.hpp"

namespace hc2 {

/// Parsed `key = value` text.  `#` starts a comment; blank lines are ignored.
struct ConfigFile {
    std::map<std::string, std::string> values;
    std::map<std::string, int> lines;  ///< source line of each key

    bool has(const std::string& key) const { return values.count(key) != 0; }
    /// Flag overrides: later assignment wins.
    void set(const std::string& key, const std::string& value) { values[key] = value; }
};

/// Throws ConfigError naming the offending key for keys outside `allowed`,
/// malformed lines and duplicate keys.
ConfigFile parse_config(const std::string& text, const std::set<std::string>& allowed);
ConfigFile load_config(const std::string& path, const std::set<std::string>& allowed);

double parse_double(const std::string& key, const std::string& value);
int parse_int(const std::string& key, const std::string& value);
std::vector<double> parse_double_list(const std::string& key, const std::string& value);
std::vector<int> parse_int_list(const std::string& key, const std::string& value);
/// "disc", "disc:R", "rectangle:WxH"
DomainSpec parse_domain(const std::string& value);
std::string domain_string(const DomainSpec& d);

/// Locale-independent shortest round-trip formatting.
std::string format_double(double v);
std::string format_list(const std::vector<double>& v);

/// FNV-1a 64-bit, as 16 hex digits.
std::string hash_hex(const std::string& text);

} // namespace hc2
