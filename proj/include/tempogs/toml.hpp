#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tempogs {

// Minimal TOML reader covering the flat key = value files used for training
// configs: bare keys, strings, booleans, integers, floats, one-level arrays
// of numbers, and comments. Table headers are rejected.
class TomlTable {
public:
    static TomlTable parse(const std::string& text);
    static TomlTable parse_file(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::vector<std::string>& keys() const { return order_; }

    double get_double(const std::string& key, double fallback) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_array(const std::string& key,
                                  const std::vector<double>& fallback) const;

private:
    struct Value {
        enum class Kind { kString, kBool, kNumber, kArray } kind;
        std::string str;
        bool boolean = false;
        double number = 0.0;
        std::vector<double> array;
    };

    const Value* lookup(const std::string& key) const;

    std::map<std::string, Value> values_;
    std::vector<std::string> order_;
};

}  // namespace tempogs
