#pragma once

// A TOML subset for experiment files.
//
//   document   := { line }
//   line       := ws [ header | pair ] ws [ '#' comment ] newline
//   header     := '[' name ']'
//   pair       := key ws '=' ws value
//   name, key  := [A-Za-z0-9_+-]+ ( '.' [A-Za-z0-9_+-]+ )*
//   value      := string | number | 'true' | 'false' | array
//   string     := '"' { char | '\"' | '\\' | '\n' | '\t' } '"'
//   number     := decimal integer or float (strtod syntax, no inf/nan)
//   array      := '[' [ value { ',' value } [ ',' ] ] ']'   (may span lines)
//
// Keys before the first header belong to the root table "". Duplicate keys and duplicate
// headers are errors.

#include <netcalc/error.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace netcalc {

struct ConfigValue {
    enum class Type { string, number, boolean, array };
    Type type = Type::string;
    std::string text;
    double number = 0.0;
    bool integer = false;
    bool flag = false;
    std::vector<ConfigValue> items;
    std::size_t line = 0;
    std::size_t column = 0;

    static ConfigValue of(std::string s) {
        ConfigValue v;
        v.text = std::move(s);
        return v;
    }
    static ConfigValue of(double x) {
        ConfigValue v;
        v.type = Type::number;
        v.number = x;
        return v;
    }
    static ConfigValue of_integer(long long x) {
        ConfigValue v = of(static_cast<double>(x));
        v.integer = true;
        return v;
    }
    static ConfigValue of_bool(bool b) {
        ConfigValue v;
        v.type = Type::boolean;
        v.flag = b;
        return v;
    }
    static ConfigValue array(std::vector<ConfigValue> items) {
        ConfigValue v;
        v.type = Type::array;
        v.items = std::move(items);
        return v;
    }
};

struct ConfigTable {
    std::map<std::string, ConfigValue> entries;
    std::vector<std::string> order;
    std::size_t line = 0;

    bool has(const std::string& key) const { return entries.count(key) != 0; }
};

class ConfigDocument {
public:
    std::map<std::string, ConfigTable> tables;
    std::vector<std::string> order;

    bool has_table(const std::string& name) const { return tables.count(name) != 0; }
    const ConfigTable* table(const std::string& name) const {
        auto it = tables.find(name);
        return it == tables.end() ? nullptr : &it->second;
    }
    ConfigTable& table_for_write(const std::string& name) {
        if (!tables.count(name)) order.push_back(name);
        return tables[name];
    }
    void set(const std::string& table, const std::string& key, ConfigValue v) {
        auto& t = table_for_write(table);
        if (!t.entries.count(key)) t.order.push_back(key);
        t.entries[key] = std::move(v);
    }
};

namespace detail {

class ConfigParser {
public:
    explicit ConfigParser(const std::string& text) : text_(text) {}

    ConfigDocument parse() {
        ConfigDocument doc;
        doc.table_for_write("");
        std::string current;
        for (;;) {
            skip_blank();
            if (at_end()) break;
            const char c = peek();
            if (c == '\n') {
                advance();
                continue;
            }
            if (c == '#') {
                skip_comment();
                continue;
            }
            if (c == '[') {
                const std::size_t l = line_, col = col_;
                advance();
                skip_blank();
                std::string name = parse_name("table name");
                skip_blank();
                expect(']', "expected ']' after table name");
                if (doc.has_table(name)) throw ParseError("duplicate table [" + name + "]", l, col);
                doc.table_for_write(name).line = l;
                current = name;
                end_of_line();
                continue;
            }
            const std::size_t l = line_, col = col_;
            std::string key = parse_name("key");
            skip_blank();
            expect('=', "expected '=' after key '" + key + "'");
            skip_blank();
            ConfigValue v = parse_value();
            auto& t = doc.table_for_write(current);
            if (t.entries.count(key)) throw ParseError("duplicate key '" + key + "'", l, col);
            t.order.push_back(key);
            t.entries.emplace(key, std::move(v));
            end_of_line();
        }
        return doc;
    }

private:
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }
    void expect(char c, const std::string& msg) {
        if (at_end() || peek() != c) fail(msg);
        advance();
    }
    void skip_blank() {
        while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
    }
    void skip_comment() {
        while (!at_end() && peek() != '\n') advance();
    }
    // Anything after a header or pair must be blank or a comment.
    void end_of_line() {
        skip_blank();
        if (at_end()) return;
        if (peek() == '#') skip_comment();
        if (at_end()) return;
        if (peek() != '\n') fail("unexpected '" + std::string(1, peek()) + "' after value");
        advance();
    }
    // Inside arrays newlines and comments count as whitespace.
    void skip_space_in_array() {
        for (;;) {
            skip_blank();
            if (at_end()) return;
            if (peek() == '\n') advance();
            else if (peek() == '#') skip_comment();
            else return;
        }
    }
    static bool name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '+' || c == '.';
    }
    std::string parse_name(const char* what) {
        const std::size_t start = pos_;
        while (!at_end() && name_char(peek())) advance();
        if (pos_ == start) fail(std::string("expected ") + what);
        std::string name = text_.substr(start, pos_ - start);
        if (name.front() == '.' || name.back() == '.' || name.find("..") != std::string::npos)
            throw ParseError(std::string("malformed ") + what + " '" + name + "'", line_, col_ - name.size());
        return name;
    }
    ConfigValue parse_value() {
        if (at_end() || peek() == '\n') fail("expected a value");
        ConfigValue v;
        v.line = line_;
        v.column = col_;
        const char c = peek();
        if (c == '"') {
            advance();
            v.type = ConfigValue::Type::string;
            for (;;) {
                if (at_end() || peek() == '\n') fail("unterminated string");
                char ch = peek();
                advance();
                if (ch == '"') break;
                if (ch == '\\') {
                    if (at_end()) fail("unterminated escape");
                    const char e = peek();
                    advance();
                    switch (e) {
                        case '"': ch = '"'; break;
                        case '\\': ch = '\\'; break;
                        case 'n': ch = '\n'; break;
                        case 't': ch = '\t'; break;
                        default: fail(std::string("unknown escape '\\") + e + "'");
                    }
                }
                v.text.push_back(ch);
            }
            return v;
        }
        if (c == '[') {
            advance();
            v.type = ConfigValue::Type::array;
            skip_space_in_array();
            if (!at_end() && peek() == ']') {
                advance();
                return v;
            }
            for (;;) {
                skip_space_in_array();
                v.items.push_back(parse_value());
                skip_space_in_array();
                if (at_end()) fail("unterminated array");
                if (peek() == ',') {
                    advance();
                    skip_space_in_array();
                    if (!at_end() && peek() == ']') {
                        advance();
                        return v;
                    }
                    continue;
                }
                if (peek() == ']') {
                    advance();
                    return v;
                }
                fail("expected ',' or ']' in array");
            }
        }
        if (text_.compare(pos_, 4, "true") == 0 && !name_char_at(pos_ + 4)) {
            for (int i = 0; i < 4; ++i) advance();
            v.type = ConfigValue::Type::boolean;
            v.flag = true;
            return v;
        }
        if (text_.compare(pos_, 5, "false") == 0 && !name_char_at(pos_ + 5)) {
            for (int i = 0; i < 5; ++i) advance();
            v.type = ConfigValue::Type::boolean;
            return v;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
            const std::size_t start = pos_;
            while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '-' ||
                                 peek() == '+' || peek() == '_'))
                advance();
            std::string tok = text_.substr(start, pos_ - start);
            std::string clean;
            for (char ch : tok)
                if (ch != '_') clean.push_back(ch);
            char* end = nullptr;
            const double x = std::strtod(clean.c_str(), &end);
            if (clean.empty() || *end != '\0' || !std::isfinite(x))
                throw ParseError("malformed number '" + tok + "'", v.line, v.column);
            v.type = ConfigValue::Type::number;
            v.number = x;
            v.integer = clean.find_first_of(".eE") == std::string::npos;
            return v;
        }
        fail("unexpected '" + std::string(1, c) + "' at start of value");
    }
    bool name_char_at(std::size_t p) const { return p < text_.size() && name_char(text_[p]); }

    const std::string& text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    return out + "\"";
}

inline std::string render(const ConfigValue& v) {
    switch (v.type) {
        case ConfigValue::Type::string: return quote(v.text);
        case ConfigValue::Type::boolean: return v.flag ? "true" : "false";
        case ConfigValue::Type::number: {
            char buf[64];
            if (v.integer) std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v.number));
            else {
                std::snprintf(buf, sizeof buf, "%.17g", v.number);
                std::string s = buf;
                if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
                return s;
            }
            return buf;
        }
        case ConfigValue::Type::array: {
            std::string out = "[";
            for (std::size_t i = 0; i < v.items.size(); ++i) out += (i ? ", " : "") + render(v.items[i]);
            return out + "]";
        }
    }
    return {};
}

}  // namespace detail

inline ConfigDocument parse_config(const std::string& text) { return detail::ConfigParser(text).parse(); }

/// Canonical text: root keys first, then tables in insertion order, keys in insertion order.
inline std::string emit_config(const ConfigDocument& doc) {
    std::string out;
    auto emit_table = [&](const ConfigTable& t) {
        for (const auto& key : t.order) out += key + " = " + detail::render(t.entries.at(key)) + "\n";
    };
    if (const auto* root = doc.table("")) emit_table(*root);
    for (const auto& name : doc.order) {
        if (name.empty()) continue;
        out += "\n[" + name + "]\n";
        emit_table(doc.tables.at(name));
    }
    return out;
}

/// Typed, validating access to one table; every read marks the key as used.
class TableReader {
public:
    TableReader(const ConfigTable* table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

    bool present() const { return table_ != nullptr; }
    bool has(const std::string& key) const { return table_ && table_->has(key); }

    std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    const ConfigValue* get(const std::string& key) {
        used_.push_back(key);
        if (!table_) return nullptr;
        auto it = table_->entries.find(key);
        return it == table_->entries.end() ? nullptr : &it->second;
    }

    std::optional<std::string> string(const std::string& key) {
        const auto* v = get(key);
        if (!v) return std::nullopt;
        if (v->type != ConfigValue::Type::string) throw SpecError(field(key), "expected a string");
        return v->text;
    }
    std::optional<double> number(const std::string& key) {
        const auto* v = get(key);
        if (!v) return std::nullopt;
        if (v->type != ConfigValue::Type::number) throw SpecError(field(key), "expected a number");
        return v->number;
    }
    std::optional<long long> integer(const std::string& key) {
        const auto* v = get(key);
        if (!v) return std::nullopt;
        if (v->type != ConfigValue::Type::number || !v->integer) throw SpecError(field(key), "expected an integer");
        return static_cast<long long>(v->number);
    }
    std::optional<std::vector<double>> numbers(const std::string& key) {
        const auto* v = get(key);
        if (!v) return std::nullopt;
        return to_numbers(*v, field(key));
    }
    std::optional<std::vector<std::string>> strings(const std::string& key) {
        const auto* v = get(key);
        if (!v) return std::nullopt;
        if (v->type != ConfigValue::Type::array) throw SpecError(field(key), "expected an array of strings");
        std::vector<std::string> out;
        for (const auto& item : v->items) {
            if (item.type != ConfigValue::Type::string) throw SpecError(field(key), "expected an array of strings");
            out.push_back(item.text);
        }
        return out;
    }
    std::optional<std::vector<std::vector<double>>> matrix(const std::string& key) {
        const auto* v = get(key);
        if (!v) return std::nullopt;
        if (v->type != ConfigValue::Type::array) throw SpecError(field(key), "expected an array of rows");
        std::vector<std::vector<double>> out;
        for (const auto& row : v->items) out.push_back(to_numbers(row, field(key)));
        for (const auto& row : out)
            if (row.size() != out.front().size()) throw SpecError(field(key), "rows have different lengths");
        return out;
    }

    /// Reject keys that were never read.
    void finish() const {
        if (!table_) return;
        for (const auto& key : table_->order)
            if (std::find(used_.begin(), used_.end(), key) == used_.end()) throw SpecError(field(key), "unknown key");
    }

private:
    static std::vector<double> to_numbers(const ConfigValue& v, const std::string& field) {
        if (v.type != ConfigValue::Type::array) throw SpecError(field, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& item : v.items) {
            if (item.type != ConfigValue::Type::number) throw SpecError(field, "expected an array of numbers");
            out.push_back(item.number);
        }
        return out;
    }

    const ConfigTable* table_;
    std::string prefix_;
    std::vector<std::string> used_;
};

}  // namespace netcalc
