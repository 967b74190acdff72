#pragma once

#include "gridboost/errors.hpp"
#include "gridboost/rational.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gridboost {

// Line-oriented config: one "key = value" per line, '#' comments, UTF-8.
// Keys are validated against the known set at parse time; an unrecognized key
// is a hard error, not a warning (silent typos in study configs cost hours).
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_text(const std::string& text, const std::string& origin = "<config>");

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    Rational get_rational(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::vector<Rational> get_rational_list(const std::string& key) const;

    const std::map<std::string, std::string>& raw() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
    std::string origin_;

    [[noreturn]] void fail(const std::string& key, const std::string& why) const;
};

}  // namespace gridboost
