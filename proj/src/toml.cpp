#include "qvi/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qvi/errors.hpp"

namespace qvi {

double TomlValue::as_number() const {
    if (kind == Kind::Int) return static_cast<double>(integer);
    if (kind == Kind::Float) return number;
    throw ConfigError("TOML value is not a number");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

// strip a trailing comment not inside a string
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

TomlValue parse_scalar(const std::string& tok, const std::string& where) {
    TomlValue v;
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
        v.kind = TomlValue::Kind::String;
        v.str = tok.substr(1, tok.size() - 2);
        if (v.str.find('"') != std::string::npos) throw ConfigError(where + ": nested quote in string");
        return v;
    }
    if (tok == "true" || tok == "false") {
        v.kind = TomlValue::Kind::Bool;
        v.boolean = (tok == "true");
        return v;
    }
    // number: integer if it looks like one, float otherwise
    char* end = nullptr;
    if (tok.find_first_of(".eE") == std::string::npos && tok.find("inf") == std::string::npos &&
        tok.find("nan") == std::string::npos) {
        const long long i = std::strtoll(tok.c_str(), &end, 10);
        if (end && *end == '\0') {
            v.kind = TomlValue::Kind::Int;
            v.integer = i;
            return v;
        }
    }
    const double d = std::strtod(tok.c_str(), &end);
    if (end && *end == '\0' && !tok.empty()) {
        v.kind = TomlValue::Kind::Float;
        v.number = d;
        return v;
    }
    throw ConfigError(where + ": cannot parse value '" + tok + "'");
}

TomlValue parse_value(const std::string& raw, const std::string& where) {
    const std::string s = trim(raw);
    if (s.empty()) throw ConfigError(where + ": empty value");
    if (s.front() == '[') {
        if (s.back() != ']') throw ConfigError(where + ": unterminated array");
        TomlValue v;
        v.kind = TomlValue::Kind::Array;
        std::string body = s.substr(1, s.size() - 2);
        std::string item;
        bool in_str = false;
        for (char c : body) {
            if (c == '"') in_str = !in_str;
            if (c == ',' && !in_str) {
                if (!trim(item).empty()) v.array.push_back(parse_scalar(trim(item), where));
                item.clear();
            } else
                item += c;
        }
        if (!trim(item).empty()) v.array.push_back(parse_scalar(trim(item), where));
        return v;
    }
    return parse_scalar(s, where);
}

} // namespace

TomlTable TomlTable::parse_string(const std::string& text, const std::string& origin) {
    TomlTable out;
    std::istringstream is(text);
    std::string line, table;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed table header");
            table = trim(line.substr(1, line.size() - 2));
            if (!valid_key(table)) throw ConfigError(where + ": bad table name '" + table + "'");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) throw ConfigError(where + ": bad key '" + key + "'");
        const std::string dotted = table.empty() ? key : table + "." + key;
        if (out.values_.count(dotted)) throw ConfigError(where + ": duplicate key '" + dotted + "'");
        out.values_[dotted] = parse_value(line.substr(eq + 1), where);
    }
    return out;
}

TomlTable TomlTable::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_string(ss.str(), path);
}

const TomlValue& TomlTable::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

std::string TomlTable::get_string(const std::string& key) const {
    const TomlValue& v = get(key);
    if (v.kind != TomlValue::Kind::String) throw ConfigError("config key '" + key + "' must be a string");
    return v.str;
}

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const TomlValue& v = get(key);
    if (v.kind != TomlValue::Kind::Bool) throw ConfigError("config key '" + key + "' must be a boolean");
    return v.boolean;
}

long long TomlTable::get_int(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const TomlValue& v = get(key);
    if (v.kind != TomlValue::Kind::Int) throw ConfigError("config key '" + key + "' must be an integer");
    return v.integer;
}

double TomlTable::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return get(key).as_number();
}

std::vector<double> TomlTable::get_double_array(const std::string& key) const {
    const TomlValue& v = get(key);
    if (v.kind != TomlValue::Kind::Array) throw ConfigError("config key '" + key + "' must be an array");
    std::vector<double> out;
    for (const auto& item : v.array) out.push_back(item.as_number());
    return out;
}

std::vector<std::string> TomlTable::keys() const {
    std::vector<std::string> out;
    for (const auto& kv : values_) out.push_back(kv.first);
    return out;
}

} // namespace qvi
