#include "hc2/config.hpp"

#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace hc2 {

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

} // namespace

ConfigFile parse_config(const std::string& text, const std::set<std::string>& allowed) {
    ConfigFile c;
    std::istringstream is(text);
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
        ++no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected `key = value`", no));
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", no));
        if (!allowed.count(key)) throw ConfigError(fmt::format("line {}: unknown key '{}'", no, key));
        if (c.values.count(key)) throw ConfigError(fmt::format("line {}: duplicate key '{}'", no, key));
        c.values[key] = value;
        c.lines[key] = no;
    }
    return c;
}

ConfigFile load_config(const std::string& path, const std::set<std::string>& allowed) {
    std::ifstream f(path);
    if (!f) throw ConfigError(fmt::format("cannot read config file '{}'", path));
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), allowed);
}

double parse_double(const std::string& key, const std::string& value) {
    double v = 0;
    auto s = trim(value);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw ConfigError(fmt::format("{}: '{}' is not a number", key, value));
    return v;
}

int parse_int(const std::string& key, const std::string& value) {
    int v = 0;
    auto s = trim(value);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw ConfigError(fmt::format("{}: '{}' is not an integer", key, value));
    return v;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& t : split(value, ',')) out.push_back(parse_double(key, t));
    if (out.empty()) throw ConfigError(fmt::format("{}: empty list", key));
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& t : split(value, ',')) out.push_back(parse_int(key, t));
    if (out.empty()) throw ConfigError(fmt::format("{}: empty list", key));
    return out;
}

DomainSpec parse_domain(const std::string& value) {
    auto v = trim(value);
    auto colon = v.find(':');
    std::string kind = v.substr(0, colon), arg = colon == std::string::npos ? "" : v.substr(colon + 1);
    if (kind == "disc") return DomainSpec::disc(arg.empty() ? 1.0 : parse_double("domain", arg));
    if (kind == "rectangle") {
        if (arg.empty()) return DomainSpec::rectangle(2.0, 2.0);
        auto x = arg.find('x');
        if (x == std::string::npos) throw ConfigError("domain: rectangle size must be WxH");
        return DomainSpec::rectangle(parse_double("domain", arg.substr(0, x)), parse_double("domain", arg.substr(x + 1)));
    }
    throw ConfigError(fmt::format("domain: unknown domain '{}' (disc, disc:R, rectangle:WxH)", v));
}

std::string domain_string(const DomainSpec& d) {
    if (d.kind == DomainKind::Disc) return "disc:" + format_double(d.a);
    if (d.kind == DomainKind::Rectangle) return "rectangle:" + format_double(d.a) + "x" + format_double(d.b);
    return d.name();
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, p) : "nan";
}

std::string format_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
    return s;
}

std::string hash_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return fmt::format("{:016x}", h);
}

} // namespace hc2
