#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace penspline {

// Configuration error carrying the offending line number (0 = not line bound).
struct ConfigError : std::runtime_error {
    int line;
    ConfigError(int line_no, const std::string& msg)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
          line(line_no) {}
};

// Flat `key = value` configuration with `#` comments; dotted keys form the
// tree (knot_rule.c, truth.s). Typed getters record which keys were consumed
// so unknown keys can be reported with their line.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_text(const std::string& text);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<long> get_ints(const std::string& key) const;

    int line_of(const std::string& key) const;
    // throws ConfigError naming the first never-consumed key
    void ensure_all_consumed() const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> consumed_;

    const Entry& require(const std::string& key) const;
};

}  // namespace penspline
