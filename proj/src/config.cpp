#include "beatnls/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

#include "beatnls/errors.hpp"

namespace beat {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    return true;
}

double to_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    char* end = nullptr;
    const double x = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(x))
        throw InvalidInput("config: " + key + " = '" + v + "' is not a number");
    return x;
}

long to_long(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    long x = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || ec != std::errc{} || p != t.data() + t.size())
        throw InvalidInput("config: " + key + " = '" + v + "' is not an integer");
    return x;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

}  // namespace

RunConfig RunConfig::parse(std::istream& is) {
    RunConfig cfg;
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("config line " + std::to_string(n) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) throw FormatError("config line " + std::to_string(n) + ": bad key '" + key + "'");
        cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

RunConfig RunConfig::parse_text(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("config: cannot open " + path);
    return parse(f);
}

std::string RunConfig::env_name(const std::string& key) {
    std::string s = "BEATNLS_";
    for (char c : key) s += (c == '-' || c == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

void RunConfig::apply_env(const std::vector<std::string>& keys) {
    for (const auto& k : keys)
        if (const char* v = std::getenv(env_name(k).c_str())) values_[k] = trim(v);
}

std::string RunConfig::get_string(const std::string& key, const std::string& def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
}

double RunConfig::get_double(const std::string& key, double def, double lo, double hi) const {
    const auto it = values_.find(key);
    const double x = it == values_.end() ? def : to_double(key, it->second);
    if (!(x >= lo && x <= hi))
        throw InvalidInput("config: " + key + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

long RunConfig::get_int(const std::string& key, long def, long lo, long hi) const {
    const auto it = values_.find(key);
    const long x = it == values_.end() ? def : to_long(key, it->second);
    if (x < lo || x > hi)
        throw InvalidInput("config: " + key + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

bool RunConfig::get_bool(const std::string& key, bool def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw InvalidInput("config: " + key + " = '" + v + "' is not a boolean");
}

std::vector<double> RunConfig::get_doubles(const std::string& key, const std::vector<double>& def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    std::vector<double> out;
    for (const auto& s : split(it->second)) out.push_back(to_double(key, s));
    return out;
}

std::vector<int> RunConfig::get_ints(const std::string& key, const std::vector<int>& def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    std::vector<int> out;
    for (const auto& s : split(it->second)) out.push_back(static_cast<int>(to_long(key, s)));
    return out;
}

}  // namespace beat
