#pragma once
// Minimal TOML subset: [sections], key = value with strings, integers,
// floats, booleans, and flat arrays. Enough for the run configs; nested
// tables and multi-line values are rejected.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace s2s::toml {

struct TomlError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Value {
    enum class Kind { Bool, Int, Float, Str, Array };
    Kind kind = Kind::Str;
    bool b = false;
    long long i = 0;
    double d = 0.0;
    std::string s;
    std::vector<Value> items;

    double as_double() const {
        if (kind == Kind::Float) return d;
        if (kind == Kind::Int) return static_cast<double>(i);
        throw TomlError("expected a number, got '" + s + "'");
    }
};

class Table {
public:
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    const Value& raw(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw TomlError("missing key '" + key + "'");
        return it->second;
    }

    long long get_int(const std::string& key, long long def) const {
        if (!has(key)) return def;
        const Value& v = raw(key);
        if (v.kind != Value::Kind::Int) throw TomlError("key '" + key + "' must be an integer");
        return v.i;
    }

    double get_double(const std::string& key, double def) const {
        if (!has(key)) return def;
        return raw(key).as_double();
    }

    bool get_bool(const std::string& key, bool def) const {
        if (!has(key)) return def;
        const Value& v = raw(key);
        if (v.kind != Value::Kind::Bool) throw TomlError("key '" + key + "' must be a boolean");
        return v.b;
    }

    std::string get_string(const std::string& key, const std::string& def) const {
        if (!has(key)) return def;
        const Value& v = raw(key);
        if (v.kind != Value::Kind::Str) throw TomlError("key '" + key + "' must be a string");
        return v.s;
    }

    std::vector<double> get_doubles(const std::string& key, std::vector<double> def) const {
        if (!has(key)) return def;
        const Value& v = raw(key);
        if (v.kind != Value::Kind::Array) throw TomlError("key '" + key + "' must be an array");
        std::vector<double> out;
        for (const Value& e : v.items) out.push_back(e.as_double());
        return out;
    }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : kv_) out.push_back(k);
        return out;
    }

    void set(const std::string& key, Value v) { kv_[key] = std::move(v); }

private:
    std::map<std::string, Value> kv_;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline Value parse_scalar(const std::string& tok, int line);

inline Value parse_value(const std::string& tok, int line) {
    if (!tok.empty() && tok.front() == '[') {
        if (tok.back() != ']') throw TomlError("unterminated array on line " + std::to_string(line));
        Value v;
        v.kind = Value::Kind::Array;
        std::string body = tok.substr(1, tok.size() - 2);
        std::string cur;
        bool in_str = false;
        for (char c : body) {
            if (c == '"') in_str = !in_str;
            if (c == ',' && !in_str) {
                v.items.push_back(parse_scalar(trim(cur), line));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!trim(cur).empty()) v.items.push_back(parse_scalar(trim(cur), line));
        return v;
    }
    return parse_scalar(tok, line);
}

inline Value parse_scalar(const std::string& tok, int line) {
    Value v;
    if (tok.empty()) throw TomlError("missing value on line " + std::to_string(line));
    if (tok == "true" || tok == "false") {
        v.kind = Value::Kind::Bool;
        v.b = tok == "true";
        return v;
    }
    if (tok.front() == '"') {
        if (tok.size() < 2 || tok.back() != '"')
            throw TomlError("unterminated string on line " + std::to_string(line));
        v.kind = Value::Kind::Str;
        for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
            char c = tok[i];
            if (c == '\\' && i + 2 < tok.size()) {
                char n = tok[++i];
                c = n == 'n' ? '\n' : n == 't' ? '\t' : n;
            }
            v.s += c;
        }
        return v;
    }
    // a number: integer when it consumes as one, float otherwise
    errno = 0;
    char* end = nullptr;
    const long long as_i = std::strtoll(tok.c_str(), &end, 10);
    if (errno == 0 && end && *end == '\0') {
        v.kind = Value::Kind::Int;
        v.i = as_i;
        return v;
    }
    errno = 0;
    const double as_d = std::strtod(tok.c_str(), &end);
    if (errno != 0 || !end || *end != '\0')
        throw TomlError("cannot parse value '" + tok + "' on line " + std::to_string(line));
    v.kind = Value::Kind::Float;
    v.d = as_d;
    return v;
}

// strips a trailing comment that is not inside a quoted string
inline std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

}  // namespace detail

// Keys are returned fully qualified: "section.key" (bare "key" outside any
// section).
inline Table parse(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(detail::strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw TomlError("malformed section header on line " + std::to_string(lineno));
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section.empty() || section.find('[') != std::string::npos)
                throw TomlError("malformed section header on line " + std::to_string(lineno));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw TomlError("expected key = value on line " + std::to_string(lineno));
        std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw TomlError("empty key on line " + std::to_string(lineno));
        for (char c : key)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
                throw TomlError("invalid key '" + key + "' on line " + std::to_string(lineno));
        std::string val = detail::trim(line.substr(eq + 1));
        const std::string full = section.empty() ? key : section + "." + key;
        if (t.has(full)) throw TomlError("duplicate key '" + full + "'");
        t.set(full, detail::parse_value(val, lineno));
    }
    return t;
}

inline Table parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw TomlError("cannot open config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

}  // namespace s2s::toml
