#ifndef ASG_CONFIG_HPP
#define ASG_CONFIG_HPP

#include "asg/core.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace asg {

/// Plain-text `key = value` configuration. `#` starts a comment; blank lines
/// are ignored; later keys override earlier ones.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::string_view text) {
        KeyValueConfig cfg;
        std::istringstream in{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::string t = trim(line);
            if (t.empty()) continue;
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw Error(Errc::config_error,
                            "line " + std::to_string(lineno) + ": expected key = value");
            std::string key = trim(t.substr(0, eq));
            if (key.empty())
                throw Error(Errc::config_error, "line " + std::to_string(lineno) + ": empty key");
            cfg.values_[key] = trim(t.substr(eq + 1));
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw Error(Errc::config_error, "cannot open config file " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return to_double(key, it->second);
    }

    long get_int(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t used = 0;
            long v = std::stol(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw Error(Errc::config_error, "key '" + key + "' is not an integer: " + it->second);
        }
    }

    /// Whitespace- or comma-separated list of reals.
    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::string s = it->second;
        for (char& c : s)
            if (c == ',') c = ' ';
        std::istringstream in(s);
        std::vector<double> out;
        std::string tok;
        while (in >> tok) out.push_back(to_double(key, tok));
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& key, const std::string& s) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw Error(Errc::config_error, "key '" + key + "' is not a number: " + s);
        }
    }

    std::map<std::string, std::string> values_;
};

} // namespace asg

#endif
