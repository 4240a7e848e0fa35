#pragma once

// Minimal TOML-subset reader for system description files.
//
// Supported grammar, which is all the bundled configs use:
//   [table]                     table headers (dotted names create nesting)
//   [[table]]                   array-of-tables headers
//   key = value                 bare keys; values: string, number, bool,
//                               [a, b, c] arrays, { k = v, ... } inline tables
//   # comment
//
// Not supported (rejected with a diagnostic): multi-line arrays/strings,
// dotted keys on the left-hand side, dates.

#include <string>
#include <utility>
#include <vector>

namespace photonoc::config {

class Value {
public:
    enum class Kind { None, Number, Boolean, String, Array, Table };

    Kind kind = Kind::None;
    double number = 0.0;
    bool boolean = false;
    std::string string;
    std::vector<Value> array;
    // Insertion-ordered key/value pairs; order matters for determinism.
    std::vector<std::pair<std::string, Value>> table;

    bool is_table() const { return kind == Kind::Table; }
    bool is_array() const { return kind == Kind::Array; }

    // Table lookups. `path` may be dotted ("mesh.fine_um"). The require_*
    // variants throw ConfigError naming the missing/mistyped key.
    const Value* find(const std::string& path) const;
    bool has(const std::string& path) const { return find(path) != nullptr; }

    double number_at(const std::string& path) const;
    double number_or(const std::string& path, double fallback) const;
    bool bool_or(const std::string& path, bool fallback) const;
    std::string string_at(const std::string& path) const;
    std::string string_or(const std::string& path, const std::string& fallback) const;
    const Value& table_at(const std::string& path) const;
    // Array of tables under `path`; empty vector if absent.
    std::vector<const Value*> table_array(const std::string& path) const;
    std::vector<double> number_array_at(const std::string& path) const;

    Value& insert(const std::string& key);  // adds (or reuses) a table child
};

// Parses a config file / string. Diagnostics carry file:line.
Value parse_file(const std::string& path);
Value parse_string(const std::string& text, const std::string& origin = "<string>");

}  // namespace photonoc::config
