#pragma once

// Flat `key = value` run configuration with `#` comments.
// Environment variables BEATNLS_<KEY> (key upper-cased, '-' and '.' as '_') override file values.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace beat {

class RunConfig {
public:
    static RunConfig parse(std::istream& is);         // FormatError on malformed lines
    static RunConfig parse_text(const std::string& text);
    static RunConfig load(const std::string& path);  // InvalidInput if unreadable

    static std::string env_name(const std::string& key);
    // Applies overrides for every key in `keys` whose variable is set.
    void apply_env(const std::vector<std::string>& keys);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    bool empty() const { return values_.empty(); }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& values() const { return values_; }

    // Typed getters validate syntax and range; both failures throw InvalidInput.
    std::string get_string(const std::string& key, const std::string& def) const;
    double get_double(const std::string& key, double def, double lo, double hi) const;
    long get_int(const std::string& key, long def, long lo, long hi) const;
    bool get_bool(const std::string& key, bool def) const;
    // comma separated
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& def) const;
    std::vector<int> get_ints(const std::string& key, const std::vector<int>& def) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace beat
