#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace foamgpt {

struct FoamValue;
struct DictEntry;

// Word or quoted-string token, stored verbatim (quotes included when present).
struct Atom {
    std::string lexeme;
};

// Decimal number; the original lexeme is kept so unmodified entries re-emit
// byte-for-byte and diffs stay quiet.
struct Number {
    std::string lexeme;
    double value = 0.0;
};

// [0 1 -1 0 0 0 0]
struct DimensionSet {
    std::array<int, 7> exponents{};
};

// Parenthesized all-numeric group, e.g. (2 0 0).
struct VectorLike {
    std::vector<Number> components;
};

// Verbatim span for constructs outside the grammar subset ($macros, #calc,
// #include lines, odd bracket groups). Survives serialization unchanged.
struct Raw {
    std::string text;
};

enum class ListStyle {
    Parenthesized,  // ( a b c )
    Inline,         // bare token sequence after a keyword: uniform (0 0 0)
};

struct FoamList {
    std::vector<FoamValue> items;
    ListStyle style = ListStyle::Parenthesized;
    // Lexeme of the size prefix for size-prefixed lists ("6" in `6 ( ... )`).
    std::optional<std::string> size_prefix;
};

// Ordered keyword -> value map. Insertion order is part of the value: OpenFOAM
// dictionaries are order-sensitive on disk and we must not reshuffle them.
class FoamDict {
public:
    FoamDict() = default;
    FoamDict(const FoamDict&);
    FoamDict(FoamDict&&) noexcept = default;
    FoamDict& operator=(const FoamDict&);
    FoamDict& operator=(FoamDict&&) noexcept = default;
    ~FoamDict() = default;

    const FoamValue* find(std::string_view key) const;
    FoamValue* find(std::string_view key);
    // Replaces the first entry with this key in place, else appends.
    void insert_or_assign(std::string key, FoamValue value);
    void append(std::string key, FoamValue value);

    bool empty() const noexcept;
    std::size_t size() const noexcept;
    const std::vector<DictEntry>& entries() const noexcept { return entries_; }
    std::vector<DictEntry>& entries() noexcept { return entries_; }

private:
    std::vector<DictEntry> entries_;
};

struct FoamValue {
    std::variant<Atom, Number, DimensionSet, VectorLike, FoamList, FoamDict, Raw> node;

    bool is_atom() const { return std::holds_alternative<Atom>(node); }
    bool is_number() const { return std::holds_alternative<Number>(node); }
    bool is_dict() const { return std::holds_alternative<FoamDict>(node); }
    bool is_list() const { return std::holds_alternative<FoamList>(node); }
    bool is_raw() const { return std::holds_alternative<Raw>(node); }

    const Atom* as_atom() const { return std::get_if<Atom>(&node); }
    const Number* as_number() const { return std::get_if<Number>(&node); }
    const FoamDict* as_dict() const { return std::get_if<FoamDict>(&node); }
    FoamDict* as_dict() { return std::get_if<FoamDict>(&node); }
    const FoamList* as_list() const { return std::get_if<FoamList>(&node); }
};

struct DictEntry {
    std::string key;  // empty key = anonymous top-level entry (bare list)
    FoamValue value;
};

// One parsed dictionary file: FoamFile header + body entries.
struct FoamFile {
    FoamDict header;
    FoamDict body;
    std::string source_path;  // case-relative; empty when not tied to a case
};

struct FormatStyle {
    bool banner = false;
    int indent_width = 4;
    int keyword_column = 16;
};

class FoamParseError : public std::runtime_error {
public:
    enum class Kind { UnbalancedBraces, MissingHeader, NonAsciiFormat };

    FoamParseError(Kind k, int line, const std::string& message)
        : std::runtime_error(message), kind(k), line(line) {}

    Kind kind;
    int line;  // 1-based; 0 when not tied to a location
};

class EntryError : public std::runtime_error {
public:
    enum class Kind { NotFound, NotADict };

    EntryError(Kind k, std::string path, const std::string& message)
        : std::runtime_error(message), kind(k), path(std::move(path)) {}

    Kind kind;
    std::string path;  // offending path (NotFound) or prefix (NotADict)
};

FoamFile parse_foam_file(std::string_view text);
std::string serialize_foam_file(const FoamFile& file, const FormatStyle& style = {});

// Single-line rendering of a value; used by entry assertions and messages.
std::string value_to_string(const FoamValue& value);

// Slash-separated keyword path into the body ("boundaryField/movingWall/type").
// find_entry returns nullptr when absent; get_entry throws EntryError instead.
const FoamValue* find_entry(const FoamFile& file, std::string_view path);
const FoamValue& get_entry(const FoamFile& file, std::string_view path);
FoamFile set_entry(const FoamFile& file, std::string_view path, FoamValue value);

bool structurally_equal(const FoamValue& a, const FoamValue& b);
bool structurally_equal(const FoamDict& a, const FoamDict& b);
bool structurally_equal(const FoamFile& a, const FoamFile& b);

// Token-wise comparison of two inline value renderings; numeric tokens compare
// by value so "2" matches "2.0".
bool value_text_equal(std::string_view a, std::string_view b);

Number make_number(double v);
Number make_number(std::string lexeme);
FoamValue atom(std::string lexeme);
FoamValue number(double v);
FoamValue vector3(double x, double y, double z);

// Header dict in standard write order: version, format, class, object.
FoamDict make_header(std::string cls, std::string object);
FoamFile make_foam_file(std::string cls, std::string object);

}  // namespace foamgpt
