#include "penspline/config.hpp"

#include <fstream>
#include <sstream>

namespace penspline {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

Config Config::parse_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line_no, "expected `key = value`, got: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "empty key");
        if (value.empty()) throw ConfigError(line_no, "empty value for key: " + key);
        if (cfg.entries_.count(key))
            throw ConfigError(line_no, "duplicate key: " + key);
        cfg.entries_[key] = Entry{value, line_no};
    }
    return cfg;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

const Config::Entry& Config::require(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(0, "missing required key: " + key);
    consumed_.insert(key);
    return it->second;
}

std::string Config::get_string(const std::string& key) const { return require(key).value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    return get_string(key);
}

double Config::get_double(const std::string& key) const {
    const Entry& e = require(key);
    try {
        size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(e.line, "expected a number for key `" + key + "`, got: " + e.value);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return get_double(key);
}

long Config::get_int(const std::string& key) const {
    const Entry& e = require(key);
    try {
        size_t pos = 0;
        const long v = std::stol(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(e.line, "expected an integer for key `" + key + "`, got: " + e.value);
    }
}

long Config::get_int(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    return get_int(key);
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    const Entry& e = require(key);
    std::istringstream in(e.value);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        try {
            size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ConfigError(e.line, "expected numbers for key `" + key + "`, got: " + tok);
        }
    }
    if (out.empty()) throw ConfigError(e.line, "empty list for key: " + key);
    return out;
}

std::vector<long> Config::get_ints(const std::string& key) const {
    const Entry& e = require(key);
    std::istringstream in(e.value);
    std::vector<long> out;
    std::string tok;
    while (in >> tok) {
        try {
            size_t pos = 0;
            out.push_back(std::stol(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ConfigError(e.line, "expected integers for key `" + key + "`, got: " + tok);
        }
    }
    if (out.empty()) throw ConfigError(e.line, "empty list for key: " + key);
    return out;
}

int Config::line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
}

void Config::ensure_all_consumed() const {
    for (const auto& [key, entry] : entries_)
        if (!consumed_.count(key)) throw ConfigError(entry.line, "unknown key: " + key);
}

}  // namespace penspline
