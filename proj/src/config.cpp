#include "gridboost/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace gridboost {

namespace {

// Everything any subcommand understands.  Commands pick what they need;
// anything outside this set is rejected up front.
const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "model",      "params",     "T",           "x0",
        "nu",         "alpha",      "beta",        "n",
        "mode",       "f",          "f_threshold", "f_direction",
        "f_coeffs",   "M",          "seed",        "threads",
        "coupling",   "theta",      "innovation",  "innovation_radius",
        "innovation_eps",           "innovation_ball_radius",
        "innovation_center",        "term_cap",    "out",
        "L",          "box_lo",     "box_hi",      "t_min",
        "t_max",      "samples",
    };
    return keys;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ';') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace

Config Config::parse_text(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!known_keys().count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key +
                              "'");
        if (cfg.values_.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "'");
        if (value.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty value for '" +
                              key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

void Config::fail(const std::string& key, const std::string& why) const {
    throw ConfigError(origin_ + ": key '" + key + "': " + why);
}

std::string Config::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) fail(key, "missing");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string s = get_string(key);
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail(key, "not a number: '" + s + "'");
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
    const std::string s = get_string(key);
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail(key, "not an integer: '" + s + "'");
    }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

Rational Config::get_rational(const std::string& key) const {
    try {
        return parse_rational(get_string(key));
    } catch (const std::invalid_argument& e) {
        fail(key, e.what());
    }
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : split_list(get_string(key))) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail(key, "bad list element '" + tok + "'");
        }
    }
    return out;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& tok : split_list(get_string(key))) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stoi(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail(key, "bad list element '" + tok + "'");
        }
    }
    return out;
}

std::vector<Rational> Config::get_rational_list(const std::string& key) const {
    std::vector<Rational> out;
    for (const auto& tok : split_list(get_string(key))) {
        try {
            out.push_back(parse_rational(tok));
        } catch (const std::invalid_argument& e) {
            fail(key, std::string("bad list element '") + tok + "': " + e.what());
        }
    }
    return out;
}

}  // namespace gridboost
