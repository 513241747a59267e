#include "clit/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace clit {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueMap KeyValueMap::parse(const std::string& text) {
    KeyValueMap kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        check(eq != std::string::npos,
              "config: line " + std::to_string(lineno) + " is not `key = value`: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        check(!key.empty(), "config: empty key on line " + std::to_string(lineno));
        kv.values_[key] = value;
    }
    return kv;
}

KeyValueMap KeyValueMap::load_file(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), "config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string KeyValueMap::serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
}

void KeyValueMap::save_file(const std::string& path) const {
    std::ofstream out(path);
    check(out.good(), "config: cannot write " + path);
    out << serialize();
}

void KeyValueMap::set_double(const std::string& key, double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    values_[key] = os.str();
}

void KeyValueMap::set_list(const std::string& key, const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << v[i];
    }
    values_[key] = os.str();
}

const std::string& KeyValueMap::get(const std::string& key) const {
    auto it = values_.find(key);
    check(it != values_.end(), "config: missing required key `" + key + "`");
    return it->second;
}

std::string KeyValueMap::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

int64_t KeyValueMap::get_int(const std::string& key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    check(end && *end == '\0', "config: key `" + key + "` is not an integer: " + v);
    return static_cast<int64_t>(x);
}

int64_t KeyValueMap::get_int_or(const std::string& key, int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double KeyValueMap::get_double(const std::string& key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    check(end && *end == '\0', "config: key `" + key + "` is not a number: " + v);
    return x;
}

double KeyValueMap::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool KeyValueMap::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    fail("config: key `" + key + "` is not a boolean: " + v);
}

std::vector<double> KeyValueMap::get_list(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<double> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        char* end = nullptr;
        out.push_back(std::strtod(item.c_str(), &end));
        check(end && *end == '\0', "config: key `" + key + "` has a bad list entry: " + item);
    }
    check(!out.empty(), "config: key `" + key + "` is an empty list");
    return out;
}

std::vector<double> KeyValueMap::get_list_or(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? get_list(key) : fallback;
}

}  // namespace clit
