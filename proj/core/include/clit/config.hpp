#pragma once

#include <map>
#include <string>
#include <vector>

#include "clit/common.hpp"

namespace clit {

// Human-readable `key = value` configuration, one pair per line, `#` comments.
// Serialization is sorted by key so identical maps produce identical bytes.
class KeyValueMap {
public:
    static KeyValueMap parse(const std::string& text);
    static KeyValueMap load_file(const std::string& path);

    std::string serialize() const;
    void save_file(const std::string& path) const;

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void set_int(const std::string& key, int64_t v) { values_[key] = std::to_string(v); }
    void set_double(const std::string& key, double v);
    void set_bool(const std::string& key, bool v) { values_[key] = v ? "true" : "false"; }
    void set_list(const std::string& key, const std::vector<double>& v);

    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key) const;
    int64_t get_int_or(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& key) const;
    std::vector<double> get_list_or(const std::string& key, std::vector<double> fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace clit
