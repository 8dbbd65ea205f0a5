#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "opad/common.hpp"

namespace opad {

// Flat key = value configuration with '#' comments.  Lookups that parse
// report the offending key so config mistakes are easy to track down.
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig parse(const std::string& text) {
        KvConfig cfg;
        std::istringstream in(text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) +
                                  " is not key = value: " + trimmed);
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ConfigError("config line " + std::to_string(line_no) + " has an empty key");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static KvConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing config key: " + key);
        return it->second;
    }

    int get_int(const std::string& key, int fallback) const {
        return has(key) ? require_int(key) : fallback;
    }

    int require_int(const std::string& key) const {
        const std::string raw = require_string(key);
        try {
            size_t used = 0;
            const long long v = std::stoll(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            if (v < INT32_MIN || v > INT32_MAX) throw std::out_of_range(raw);
            return static_cast<int>(v);
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " is not an integer: " + raw);
        }
    }

    long long get_int64(const std::string& key, long long fallback) const {
        return has(key) ? require_int64(key) : fallback;
    }

    long long require_int64(const std::string& key) const {
        const std::string raw = require_string(key);
        try {
            size_t used = 0;
            const long long v = std::stoll(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " is not an integer: " + raw);
        }
    }

    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? require_uint64(key) : fallback;
    }

    std::uint64_t require_uint64(const std::string& key) const {
        const std::string raw = require_string(key);
        try {
            size_t used = 0;
            const unsigned long long v = std::stoull(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return static_cast<std::uint64_t>(v);
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " is not an unsigned integer: " + raw);
        }
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? require_double(key) : fallback;
    }

    double require_double(const std::string& key) const {
        const std::string raw = require_string(key);
        try {
            size_t used = 0;
            const double v = std::stod(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " is not a number: " + raw);
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        return has(key) ? require_bool(key) : fallback;
    }

    bool require_bool(const std::string& key) const {
        const std::string raw = require_string(key);
        if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
        if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
        throw ConfigError("config key " + key + " is not a boolean: " + raw);
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        const auto first = s.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) return {};
        const auto last = s.find_last_not_of(" \t\r\n");
        return s.substr(first, last - first + 1);
    }

    std::map<std::string, std::string> values_;
};

}  // namespace opad
