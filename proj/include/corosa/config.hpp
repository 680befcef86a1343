#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "corosa/grid.hpp"

namespace corosa {

/// Bad or missing configuration; carries the offending key for the CLI.
class config_error : public std::runtime_error {
public:
    config_error(const std::string& key, const std::string& what)
        : std::runtime_error("config key '" + key + "': " + what), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Flat `key = value` text file; '#' starts a comment, blank lines ignored.
/// Sections are spelled as dotted key prefixes (model.*, noise.*, solver.*,
/// method.*).
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open config: " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return from_string(ss.str());
    }

    static Config from_string(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            size_t eq = line.find('=');
            if (eq == std::string::npos) {
                if (line.find_first_not_of(" \t\r") != std::string::npos)
                    throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
                continue;
            }
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (key.empty()) throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
            cfg.kv_[key] = val;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    void set(const std::string& key, const std::string& val) { kv_[key] = val; }

    std::string get_string(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw config_error(key, "missing");
        return it->second;
    }
    std::string get_string(const std::string& key, const std::string& dflt) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : it->second;
    }

    double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
    double get_double(const std::string& key, double dflt) const {
        return has(key) ? to_double(key, get_string(key)) : dflt;
    }

    long get_int(const std::string& key) const { return to_int(key, get_string(key)); }
    long get_int(const std::string& key, long dflt) const {
        return has(key) ? to_int(key, get_string(key)) : dflt;
    }

    const std::map<std::string, std::string>& all() const { return kv_; }

private:
    static std::string trim(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }
    double to_double(const std::string& key, const std::string& v) const {
        try {
            size_t pos;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return d;
        } catch (...) {
            throw config_error(key, "not a number: '" + v + "'");
        }
    }
    long to_int(const std::string& key, const std::string& v) const {
        try {
            size_t pos;
            long d = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return d;
        } catch (...) {
            throw config_error(key, "not an integer: '" + v + "'");
        }
    }

    std::map<std::string, std::string> kv_;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace corosa
