#include "posg/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace posg::toml {

std::string Value::as_string() const {
    if (type != Type::string) throw std::runtime_error("toml: expected string value");
    return str;
}

std::int64_t Value::as_int() const {
    if (type != Type::integer) throw std::runtime_error("toml: expected integer value");
    return integer;
}

double Value::as_double() const {
    if (type == Type::floating) return floating;
    if (type == Type::integer) return static_cast<double>(integer);
    throw std::runtime_error("toml: expected numeric value");
}

bool Value::as_bool() const {
    if (type != Type::boolean) throw std::runtime_error("toml: expected boolean value");
    return boolean;
}

std::vector<double> Value::as_double_array() const {
    if (type != Type::array) throw std::runtime_error("toml: expected array value");
    std::vector<double> out;
    out.reserve(array.size());
    for (const Value& v : array) out.push_back(v.as_double());
    return out;
}

std::vector<std::int64_t> Value::as_int_array() const {
    if (type != Type::array) throw std::runtime_error("toml: expected array value");
    std::vector<std::int64_t> out;
    out.reserve(array.size());
    for (const Value& v : array) out.push_back(v.as_int());
    return out;
}

namespace {

std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// drops a trailing comment that is not inside a quoted string
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

Value parse_scalar(const std::string& raw, int line_no) {
    const std::string text = strip(raw);
    if (text.empty())
        throw std::runtime_error("toml line " + std::to_string(line_no) + ": empty value");
    Value v;
    if (text.front() == '"') {
        if (text.size() < 2 || text.back() != '"')
            throw std::runtime_error("toml line " + std::to_string(line_no) +
                                     ": unterminated string");
        v.type = Value::Type::string;
        v.str = text.substr(1, text.size() - 2);
        return v;
    }
    if (text == "true" || text == "false") {
        v.type = Value::Type::boolean;
        v.boolean = text == "true";
        return v;
    }
    const bool is_float = text.find_first_of(".eE") != std::string::npos &&
                          text.find_first_not_of("+-0123456789.eE") == std::string::npos;
    try {
        std::size_t used = 0;
        if (is_float) {
            v.type = Value::Type::floating;
            v.floating = std::stod(text, &used);
        } else {
            v.type = Value::Type::integer;
            v.integer = std::stoll(text, &used, 10);
        }
        if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw std::runtime_error("toml line " + std::to_string(line_no) +
                                 ": cannot parse value: " + text);
    }
    return v;
}

Value parse_value(const std::string& raw, int line_no) {
    const std::string text = strip(raw);
    if (!text.empty() && text.front() == '[') {
        if (text.back() != ']')
            throw std::runtime_error("toml line " + std::to_string(line_no) +
                                     ": unterminated array");
        Value v;
        v.type = Value::Type::array;
        const std::string inner = strip(text.substr(1, text.size() - 2));
        if (inner.empty()) return v;
        std::size_t start = 0;
        bool in_string = false;
        for (std::size_t i = 0; i <= inner.size(); ++i) {
            if (i < inner.size() && inner[i] == '"') in_string = !in_string;
            if (i == inner.size() || (inner[i] == ',' && !in_string)) {
                v.array.push_back(parse_scalar(inner.substr(start, i - start), line_no));
                start = i + 1;
            }
        }
        return v;
    }
    return parse_scalar(text, line_no);
}

} // namespace

Table parse(const std::string& text) {
    Table table;
    std::string section;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        line = strip(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("toml line " + std::to_string(line_no) +
                                         ": malformed section header");
            section = strip(line.substr(1, line.size() - 2));
            table[section]; // section may stay empty
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("toml line " + std::to_string(line_no) +
                                     ": expected key = value");
        const std::string key = strip(line.substr(0, eq));
        if (key.empty())
            throw std::runtime_error("toml line " + std::to_string(line_no) + ": empty key");
        table[section][key] = parse_value(line.substr(eq + 1), line_no);
    }
    return table;
}

Table parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const Value& require(const Table& t, const std::string& section, const std::string& key) {
    const auto sit = t.find(section);
    if (sit == t.end())
        throw std::runtime_error("config: missing section [" + section + "]");
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end())
        throw std::runtime_error("config: missing key '" + key + "' in [" + section + "]");
    return kit->second;
}

bool contains(const Table& t, const std::string& section, const std::string& key) {
    const auto sit = t.find(section);
    return sit != t.end() && sit->second.count(key) > 0;
}

} // namespace posg::toml
