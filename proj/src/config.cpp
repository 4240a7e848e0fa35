#include "photonoc/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "photonoc/common.hpp"

namespace photonoc::config {

namespace {

struct Cursor {
    const std::string& text;
    size_t pos = 0;
    const std::string& origin;
    int line;

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError(strfmt("%s:%d: %s", origin.c_str(), line, why.c_str()));
    }
    bool done() const { return pos >= text.size(); }
    char peek() const { return done() ? '\0' : text[pos]; }
    void skip_ws() {
        while (!done() && (text[pos] == ' ' || text[pos] == '\t')) pos++;
    }
};

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_bare_key(Cursor& c) {
    c.skip_ws();
    size_t start = c.pos;
    while (!c.done() && is_bare_key_char(c.peek())) c.pos++;
    if (c.pos == start) c.fail("expected a key");
    return c.text.substr(start, c.pos - start);
}

std::string parse_quoted(Cursor& c) {
    // c.peek() == '"'
    c.pos++;
    std::string out;
    while (true) {
        if (c.done()) c.fail("unterminated string");
        char ch = c.text[c.pos++];
        if (ch == '"') break;
        if (ch == '\\') {
            if (c.done()) c.fail("unterminated escape");
            char esc = c.text[c.pos++];
            switch (esc) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: c.fail(strfmt("unsupported escape '\\%c'", esc));
            }
        } else {
            out += ch;
        }
    }
    return out;
}

Value parse_value(Cursor& c);

Value parse_array(Cursor& c) {
    // c.peek() == '['
    c.pos++;
    Value v;
    v.kind = Value::Kind::Array;
    c.skip_ws();
    if (c.peek() == ']') {
        c.pos++;
        return v;
    }
    while (true) {
        v.array.push_back(parse_value(c));
        c.skip_ws();
        if (c.peek() == ',') {
            c.pos++;
            c.skip_ws();
            if (c.peek() == ']') {  // trailing comma
                c.pos++;
                break;
            }
            continue;
        }
        if (c.peek() == ']') {
            c.pos++;
            break;
        }
        c.fail("expected ',' or ']' in array (arrays must be single-line)");
    }
    return v;
}

Value parse_inline_table(Cursor& c) {
    // c.peek() == '{'
    c.pos++;
    Value v;
    v.kind = Value::Kind::Table;
    c.skip_ws();
    if (c.peek() == '}') {
        c.pos++;
        return v;
    }
    while (true) {
        std::string key = parse_bare_key(c);
        c.skip_ws();
        if (c.peek() != '=') c.fail(strfmt("expected '=' after key '%s'", key.c_str()));
        c.pos++;
        c.skip_ws();
        for (const auto& kv : v.table)
            if (kv.first == key) c.fail(strfmt("duplicate key '%s' in inline table", key.c_str()));
        v.table.emplace_back(key, parse_value(c));
        c.skip_ws();
        if (c.peek() == ',') {
            c.pos++;
            c.skip_ws();
            continue;
        }
        if (c.peek() == '}') {
            c.pos++;
            break;
        }
        c.fail("expected ',' or '}' in inline table");
    }
    return v;
}

Value parse_value(Cursor& c) {
    c.skip_ws();
    if (c.done()) c.fail("expected a value");
    char ch = c.peek();
    Value v;
    if (ch == '"') {
        v.kind = Value::Kind::String;
        v.string = parse_quoted(c);
        return v;
    }
    if (ch == '[') return parse_array(c);
    if (ch == '{') return parse_inline_table(c);
    if (c.text.compare(c.pos, 4, "true") == 0 && !is_bare_key_char(c.pos + 4 < c.text.size() ? c.text[c.pos + 4] : ' ')) {
        c.pos += 4;
        v.kind = Value::Kind::Boolean;
        v.boolean = true;
        return v;
    }
    if (c.text.compare(c.pos, 5, "false") == 0 && !is_bare_key_char(c.pos + 5 < c.text.size() ? c.text[c.pos + 5] : ' ')) {
        c.pos += 5;
        v.kind = Value::Kind::Boolean;
        v.boolean = false;
        return v;
    }
    // Number: defer to strtod and validate the consumed span.
    const char* begin = c.text.c_str() + c.pos;
    char* end = nullptr;
    double num = std::strtod(begin, &end);
    if (end == begin) c.fail(strfmt("cannot parse value starting at '%c'", ch));
    c.pos += static_cast<size_t>(end - begin);
    if (!c.done() && is_bare_key_char(c.peek()) && c.peek() != 'e' && c.peek() != 'E')
        c.fail("malformed number");
    v.kind = Value::Kind::Number;
    v.number = num;
    return v;
}

// Strips comments outside of strings and trailing whitespace.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    size_t cut = line.size();
    for (size_t i = 0; i < line.size(); i++) {
        char ch = line[i];
        if (ch == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (ch == '#' && !in_string) {
            cut = i;
            break;
        }
    }
    std::string out = line.substr(0, cut);
    while (!out.empty() && (out.back() == ' ' || out.back() == '\t' || out.back() == '\r')) out.pop_back();
    return out;
}

// Walks/creates nested tables for a dotted header name.
Value* descend(Value* node, const std::string& dotted, Cursor& c) {
    size_t start = 0;
    while (true) {
        size_t dot = dotted.find('.', start);
        std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) c.fail("empty table name component");
        Value* child = nullptr;
        for (auto& kv : node->table)
            if (kv.first == part) child = &kv.second;
        if (!child) {
            node->table.emplace_back(part, Value{});
            child = &node->table.back().second;
            child->kind = Value::Kind::Table;
        }
        if (child->kind == Value::Kind::Array) {
            // Descending through an array-of-tables targets its last element.
            if (child->array.empty()) c.fail(strfmt("'%s' is an empty table array", part.c_str()));
            child = &child->array.back();
        }
        if (!child->is_table()) c.fail(strfmt("'%s' is not a table", part.c_str()));
        node = child;
        if (dot == std::string::npos) return node;
        start = dot + 1;
    }
}

}  // namespace

Value& Value::insert(const std::string& key) {
    for (auto& [name, child] : table)
        if (name == key) return child;
    table.emplace_back(key, Value{});
    table.back().second.kind = Kind::Table;
    return table.back().second;
}

const Value* Value::find(const std::string& path) const {
    const Value* node = this;
    size_t start = 0;
    while (true) {
        size_t dot = path.find('.', start);
        std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_table()) return nullptr;
        const Value* child = nullptr;
        for (const auto& kv : node->table)
            if (kv.first == part) child = &kv.second;
        if (!child) return nullptr;
        node = child;
        if (dot == std::string::npos) return node;
        start = dot + 1;
    }
}

double Value::number_at(const std::string& path) const {
    const Value* v = find(path);
    if (!v || v->kind != Kind::Number)
        throw ConfigError(strfmt("missing or non-numeric config key '%s'", path.c_str()));
    return v->number;
}

double Value::number_or(const std::string& path, double fallback) const {
    const Value* v = find(path);
    if (!v) return fallback;
    if (v->kind != Kind::Number)
        throw ConfigError(strfmt("config key '%s' must be a number", path.c_str()));
    return v->number;
}

bool Value::bool_or(const std::string& path, bool fallback) const {
    const Value* v = find(path);
    if (!v) return fallback;
    if (v->kind != Kind::Boolean)
        throw ConfigError(strfmt("config key '%s' must be a boolean", path.c_str()));
    return v->boolean;
}

std::string Value::string_at(const std::string& path) const {
    const Value* v = find(path);
    if (!v || v->kind != Kind::String)
        throw ConfigError(strfmt("missing or non-string config key '%s'", path.c_str()));
    return v->string;
}

std::string Value::string_or(const std::string& path, const std::string& fallback) const {
    const Value* v = find(path);
    if (!v) return fallback;
    if (v->kind != Kind::String)
        throw ConfigError(strfmt("config key '%s' must be a string", path.c_str()));
    return v->string;
}

const Value& Value::table_at(const std::string& path) const {
    const Value* v = find(path);
    if (!v || !v->is_table())
        throw ConfigError(strfmt("missing config table '%s'", path.c_str()));
    return *v;
}

std::vector<const Value*> Value::table_array(const std::string& path) const {
    std::vector<const Value*> out;
    const Value* v = find(path);
    if (!v) return out;
    if (v->kind != Kind::Array)
        throw ConfigError(strfmt("config key '%s' must be an array of tables", path.c_str()));
    for (const auto& e : v->array) {
        if (!e.is_table())
            throw ConfigError(strfmt("config key '%s' holds a non-table element", path.c_str()));
        out.push_back(&e);
    }
    return out;
}

std::vector<double> Value::number_array_at(const std::string& path) const {
    const Value* v = find(path);
    if (!v || v->kind != Kind::Array)
        throw ConfigError(strfmt("missing or non-array config key '%s'", path.c_str()));
    std::vector<double> out;
    for (const auto& e : v->array) {
        if (e.kind != Kind::Number)
            throw ConfigError(strfmt("config key '%s' must hold numbers only", path.c_str()));
        out.push_back(e.number);
    }
    return out;
}

Value parse_string(const std::string& text, const std::string& origin) {
    Value root;
    root.kind = Value::Kind::Table;
    Value* current = &root;

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        lineno++;
        std::string line = strip_comment(raw);
        Cursor c{line, 0, origin, lineno};
        c.skip_ws();
        if (c.done()) continue;

        if (c.peek() == '[') {
            bool array_header = c.text.compare(c.pos, 2, "[[") == 0;
            c.pos += array_header ? 2 : 1;
            size_t name_start = c.pos;
            std::string closer = array_header ? "]]" : "]";
            size_t close = line.find(closer, name_start);
            if (close == std::string::npos) c.fail("unterminated table header");
            std::string name = line.substr(name_start, close - name_start);
            // Trim the header name.
            while (!name.empty() && (name.front() == ' ' || name.front() == '\t')) name.erase(name.begin());
            while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) name.pop_back();
            if (name.empty()) c.fail("empty table header");
            c.pos = close + closer.size();
            c.skip_ws();
            if (!c.done()) c.fail("trailing characters after table header");

            if (array_header) {
                size_t last_dot = name.rfind('.');
                Value* parent = &root;
                std::string leaf = name;
                if (last_dot != std::string::npos) {
                    parent = descend(&root, name.substr(0, last_dot), c);
                    leaf = name.substr(last_dot + 1);
                }
                Value* arr = nullptr;
                for (auto& kv : parent->table)
                    if (kv.first == leaf) arr = &kv.second;
                if (!arr) {
                    parent->table.emplace_back(leaf, Value{});
                    arr = &parent->table.back().second;
                    arr->kind = Value::Kind::Array;
                }
                if (arr->kind != Value::Kind::Array) c.fail(strfmt("'%s' is not a table array", leaf.c_str()));
                Value elem;
                elem.kind = Value::Kind::Table;
                arr->array.push_back(std::move(elem));
                current = &arr->array.back();
            } else {
                current = descend(&root, name, c);
            }
            continue;
        }

        std::string key = parse_bare_key(c);
        c.skip_ws();
        if (c.peek() != '=') c.fail(strfmt("expected '=' after key '%s'", key.c_str()));
        c.pos++;
        Value v = parse_value(c);
        c.skip_ws();
        if (!c.done()) c.fail(strfmt("trailing characters after value for '%s'", key.c_str()));
        for (const auto& kv : current->table)
            if (kv.first == key) c.fail(strfmt("duplicate key '%s'", key.c_str()));
        current->table.emplace_back(key, std::move(v));
    }
    return root;
}

Value parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(strfmt("cannot open config file '%s'", path.c_str()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

}  // namespace photonoc::config
