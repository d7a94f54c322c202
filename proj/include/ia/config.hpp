#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ia {

/// Plain-text key=value configuration with [sections]. '#' and ';' start
/// comments. Keys may repeat within a section (get_all preserves file order).
class Config {
public:
    static Config parse_string(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            size_t hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            std::string t = trim(line);
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                             ": unterminated section header");
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": expected key=value");
            std::string key = trim(t.substr(0, eq));
            std::string value = trim(t.substr(eq + 1));
            if (key.empty())
                throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
            cfg.entries_.push_back({section, key, value});
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str(), path);
    }

    bool has(const std::string& section, const std::string& key) const {
        for (const auto& e : entries_)
            if (e.section == section && e.key == key) return true;
        return false;
    }

    std::string get(const std::string& section, const std::string& key) const {
        for (const auto& e : entries_)
            if (e.section == section && e.key == key) return e.value;
        throw std::runtime_error("config: missing key [" + section + "] " + key);
    }

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const {
        return has(section, key) ? get(section, key) : fallback;
    }

    std::vector<std::string> get_all(const std::string& section, const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& e : entries_)
            if (e.section == section && e.key == key) out.push_back(e.value);
        return out;
    }

    int get_int(const std::string& section, const std::string& key) const {
        return static_cast<int>(std::stol(get(section, key)));
    }

    int get_int_or(const std::string& section, const std::string& key, int fallback) const {
        return has(section, key) ? get_int(section, key) : fallback;
    }

    double get_double(const std::string& section, const std::string& key) const {
        return std::stod(get(section, key));
    }

    double get_double_or(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? get_double(section, key) : fallback;
    }

    bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        std::string v = get(section, key);
        if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
        if (v == "0" || v == "false" || v == "off" || v == "no") return false;
        throw std::runtime_error("config: bad boolean [" + section + "] " + key + " = " + v);
    }

    static std::vector<std::string> split_list(const std::string& value) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : value) {
            if (c == ',') {
                out.push_back(trim(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
        return out;
    }

    std::vector<double> get_double_list(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        for (const auto& tok : split_list(get(section, key))) out.push_back(std::stod(tok));
        return out;
    }

private:
    struct Entry {
        std::string section, key, value;
    };

    static std::string trim(const std::string& s) {
        size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    std::vector<Entry> entries_;
};

}  // namespace ia
