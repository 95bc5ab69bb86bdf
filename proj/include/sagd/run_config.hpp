#pragma once

#include "sagd/csv.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sagd {

/// Flat key=value run configuration.
///
/// Values come from an optional config file plus repeatable --set overrides.
/// Each command restricts the key set up front (unknown keys are rejected),
/// and every key it reads is recorded with its resolved value (defaults
/// included) so the echoed config replays the run exactly.
class RunConfig {
public:
    static RunConfig from_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("config: cannot open " + path);
        RunConfig cfg;
        std::string line;
        long lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            std::string trimmed = trim(line);
            if (trimmed.empty() || trimmed[0] == '#') continue;
            auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config: malformed line " + std::to_string(lineno));
            cfg.values_[trim(trimmed.substr(0, eq))] = trim(trimmed.substr(eq + 1));
        }
        return cfg;
    }

    void apply_set(const std::string& assignment) {
        auto eq = assignment.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got: " + assignment);
        values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    /// Reject provided keys outside the command's vocabulary.
    void restrict_keys(const std::set<std::string>& known) const {
        for (const auto& [k, _] : values_)
            if (!known.count(k)) throw std::invalid_argument("config: unknown key '" + k + "'");
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        std::string v = it != values_.end() ? it->second : fallback;
        resolved_[key] = v;
        return v;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        double v = it != values_.end() ? parse_double(key, it->second) : fallback;
        resolved_[key] = csv_number(v);
        return v;
    }

    long get_long(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        long v = it != values_.end() ? parse_long(key, it->second) : fallback;
        resolved_[key] = std::to_string(v);
        return v;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        auto it = values_.find(key);
        std::uint64_t v = fallback;
        if (it != values_.end()) {
            try {
                v = std::stoull(it->second);
            } catch (...) {
                throw std::invalid_argument("config: bad unsigned for '" + key + "'");
            }
        }
        resolved_[key] = std::to_string(v);
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        bool v = fallback;
        if (it != values_.end()) {
            if (it->second == "true" || it->second == "1") v = true;
            else if (it->second == "false" || it->second == "0") v = false;
            else throw std::invalid_argument("config: bad bool for '" + key + "'");
        }
        resolved_[key] = v ? "true" : "false";
        return v;
    }

    std::vector<long> get_long_list(const std::string& key, const std::vector<long>& fallback) const {
        auto it = values_.find(key);
        std::vector<long> v;
        if (it == values_.end()) {
            v = fallback;
        } else {
            std::stringstream ss(it->second);
            std::string tok;
            while (std::getline(ss, tok, ':')) v.push_back(parse_long(key, tok));
        }
        std::string rendered;
        for (std::size_t i = 0; i < v.size(); ++i)
            rendered += (i ? ":" : "") + std::to_string(v[i]);
        resolved_[key] = rendered;
        return v;
    }

    /// Write every resolved key=value (sorted) to <dir>/config.txt.
    void echo(const std::filesystem::path& dir) const {
        std::ofstream os(dir / "config.txt");
        if (!os) throw std::runtime_error("config: cannot write echo under " + dir.string());
        for (const auto& [k, v] : resolved_) os << k << "=" << v << "\n";
    }

private:
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? "" : s.substr(b, e - b + 1);
    }

    static double parse_double(const std::string& key, const std::string& s) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (...) {
            throw std::invalid_argument("config: bad number for '" + key + "'");
        }
    }

    static long parse_long(const std::string& key, const std::string& s) {
        try {
            std::size_t used = 0;
            long v = std::stol(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (...) {
            throw std::invalid_argument("config: bad integer for '" + key + "'");
        }
    }

    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> resolved_;
};

} // namespace sagd
