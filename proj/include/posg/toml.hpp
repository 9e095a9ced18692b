#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace posg::toml {

// Minimal TOML reader covering what the experiment configs use: [sections],
// string/integer/float/boolean scalars, flat arrays, and # comments.

struct Value {
    enum class Type { string, integer, floating, boolean, array };
    Type type = Type::string;
    std::string str;
    std::int64_t integer = 0;
    double floating = 0.0;
    bool boolean = false;
    std::vector<Value> array;

    std::string as_string() const;
    std::int64_t as_int() const;
    double as_double() const; // accepts integer values too
    bool as_bool() const;
    std::vector<double> as_double_array() const;
    std::vector<std::int64_t> as_int_array() const;
};

using Section = std::map<std::string, Value>;
using Table = std::map<std::string, Section>; // "" holds root-level keys

Table parse(const std::string& text);
Table parse_file(const std::string& path);

// lookup helpers; throw std::runtime_error naming the missing key
const Value& require(const Table& t, const std::string& section, const std::string& key);
bool contains(const Table& t, const std::string& section, const std::string& key);

} // namespace posg::toml
