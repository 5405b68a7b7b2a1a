#pragma once

#include <map>
#include <string>
#include <vector>

namespace qvi {

/// Minimal strict TOML subset: one level of [tables], key = value with
/// strings, booleans, integers, floats and flat arrays. Anything outside the
/// subset is a parse error, so config typos fail loudly.
class TomlValue {
  public:
    enum class Kind { String, Bool, Int, Float, Array };
    Kind kind = Kind::String;
    std::string str;
    bool boolean = false;
    long long integer = 0;
    double number = 0.0;
    std::vector<TomlValue> array;

    double as_number() const; // Int or Float
};

class TomlTable {
  public:
    static TomlTable parse_string(const std::string& text, const std::string& origin = "<string>");
    static TomlTable parse_file(const std::string& path);

    bool has(const std::string& dotted_key) const { return values_.count(dotted_key) > 0; }
    const TomlValue& get(const std::string& dotted_key) const;

    std::string get_string(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::vector<double> get_double_array(const std::string& key) const;

    /// All dotted keys present, for unknown-key schema validation.
    std::vector<std::string> keys() const;

  private:
    std::map<std::string, TomlValue> values_;
};

} // namespace qvi
