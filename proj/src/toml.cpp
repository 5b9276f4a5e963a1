#include "tempogs/toml.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tempogs {

namespace {

std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Remove a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

double parse_number(const std::string& token, int line_no) {
    try {
        size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("toml: bad number '" + token + "' on line " +
                                 std::to_string(line_no));
    }
}

}  // namespace

TomlTable TomlTable::parse(const std::string& text) {
    TomlTable table;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            throw std::runtime_error("toml: table headers are not supported (line " +
                                     std::to_string(line_no) + ")");
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("toml: expected key = value on line " +
                                     std::to_string(line_no));
        }
        const std::string key = strip(line.substr(0, eq));
        const std::string rhs = strip(line.substr(eq + 1));
        if (key.empty() || rhs.empty()) {
            throw std::runtime_error("toml: empty key or value on line " +
                                     std::to_string(line_no));
        }

        Value v{Value::Kind::kNumber, "", false, 0.0, {}};
        if (rhs.front() == '"') {
            if (rhs.size() < 2 || rhs.back() != '"') {
                throw std::runtime_error("toml: unterminated string on line " +
                                         std::to_string(line_no));
            }
            v.kind = Value::Kind::kString;
            v.str = rhs.substr(1, rhs.size() - 2);
        } else if (rhs == "true" || rhs == "false") {
            v.kind = Value::Kind::kBool;
            v.boolean = (rhs == "true");
        } else if (rhs.front() == '[') {
            if (rhs.back() != ']') {
                throw std::runtime_error("toml: unterminated array on line " +
                                         std::to_string(line_no));
            }
            v.kind = Value::Kind::kArray;
            std::string body = rhs.substr(1, rhs.size() - 2);
            std::istringstream items(body);
            std::string item;
            while (std::getline(items, item, ',')) {
                item = strip(item);
                if (!item.empty()) v.array.push_back(parse_number(item, line_no));
            }
        } else {
            v.kind = Value::Kind::kNumber;
            v.number = parse_number(rhs, line_no);
        }
        if (table.values_.count(key) == 0) table.order_.push_back(key);
        table.values_[key] = std::move(v);
    }
    return table;
}

TomlTable TomlTable::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const TomlTable::Value* TomlTable::lookup(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

double TomlTable::get_double(const std::string& key, double fallback) const {
    const Value* v = lookup(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::kNumber) throw std::runtime_error("toml: " + key + " is not a number");
    return v->number;
}

int64_t TomlTable::get_int(const std::string& key, int64_t fallback) const {
    const Value* v = lookup(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::kNumber) throw std::runtime_error("toml: " + key + " is not a number");
    return static_cast<int64_t>(v->number);
}

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
    const Value* v = lookup(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::kBool) throw std::runtime_error("toml: " + key + " is not a bool");
    return v->boolean;
}

std::string TomlTable::get_string(const std::string& key, const std::string& fallback) const {
    const Value* v = lookup(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::kString) throw std::runtime_error("toml: " + key + " is not a string");
    return v->str;
}

std::vector<double> TomlTable::get_array(const std::string& key,
                                         const std::vector<double>& fallback) const {
    const Value* v = lookup(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::kArray) throw std::runtime_error("toml: " + key + " is not an array");
    return v->array;
}

}  // namespace tempogs
