#include "foamgpt/foam_dict.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <utility>

namespace foamgpt {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
}

bool is_integer_token(std::string_view s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

bool parse_number_token(std::string_view s, double& out) {
    if (s.empty()) return false;
    char c = s[0];
    if (!std::isdigit(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.')
        return false;
    std::string buf(s);
    const char* begin = buf.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end != begin + buf.size()) return false;
    out = v;
    return true;
}

std::string rtrim_copy(std::string_view s) {
    std::size_t n = s.size();
    while (n > 0 && is_space(s[n - 1])) --n;
    return std::string(s.substr(0, n));
}

struct Token {
    enum class Kind { Word, String, Punct, End };
    Kind kind = Kind::End;
    std::string_view text;
    int line = 0;
    std::size_t begin = 0;
    std::size_t end = 0;

    bool is_punct(char c) const { return kind == Kind::Punct && text.size() == 1 && text[0] == c; }
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    const Token& peek() {
        if (!has_cached_) {
            cached_ = lex();
            has_cached_ = true;
        }
        return cached_;
    }

    Token next() {
        Token t = peek();
        has_cached_ = false;
        return t;
    }

    // Jumps to an absolute offset, discarding lookahead. Used by Raw recovery.
    void set_pos(std::size_t pos, int line) {
        pos_ = pos;
        line_ = line;
        has_cached_ = false;
    }

    std::size_t pos_after_skip() {
        peek();
        return peek().begin;
    }

    std::string_view source() const { return src_; }
    int line() const { return line_; }

    // End offset of the line containing `from`, excluding the newline.
    std::size_t end_of_line(std::size_t from) const {
        std::size_t p = src_.find('\n', from);
        return p == std::string_view::npos ? src_.size() : p;
    }

    // Scans raw text for the next ';' outside strings and bracket groups,
    // starting at `from`. Returns offset one past the ';', or npos.
    std::size_t find_entry_terminator(std::size_t from) const {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = from; i < src_.size(); ++i) {
            char c = src_[i];
            if (in_string) {
                if (c == '"') in_string = false;
                continue;
            }
            switch (c) {
                case '"': in_string = true; break;
                case '(': case '[': case '{': ++depth; break;
                case ')': case ']': --depth; break;
                case '}':
                    if (depth == 0) return std::string_view::npos;  // entry ends with the dict
                    --depth;
                    break;
                case ';':
                    if (depth <= 0) return i + 1;
                    break;
                default: break;
            }
        }
        return std::string_view::npos;
    }

    int line_at(std::size_t offset) const {
        int line = 1;
        for (std::size_t i = 0; i < offset && i < src_.size(); ++i)
            if (src_[i] == '\n') ++line;
        return line;
    }

private:
    void skip_ws_and_comments() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (is_space(c)) {
                ++pos_;
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
                pos_ += 2;
                while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) {
                    if (src_[pos_] == '\n') ++line_;
                    ++pos_;
                }
                pos_ = std::min(pos_ + 2, src_.size());
            } else {
                break;
            }
        }
    }

    Token lex() {
        skip_ws_and_comments();
        Token t;
        t.begin = pos_;
        t.line = line_;
        if (pos_ >= src_.size()) {
            t.kind = Token::Kind::End;
            t.end = pos_;
            return t;
        }
        char c = src_[pos_];
        if (c == '{' || c == '}' || c == '(' || c == ')' || c == '[' || c == ']' || c == ';') {
            ++pos_;
            t.kind = Token::Kind::Punct;
            t.text = src_.substr(t.begin, 1);
            t.end = pos_;
            return t;
        }
        if (c == '"') {
            ++pos_;
            while (pos_ < src_.size() && src_[pos_] != '"') {
                if (src_[pos_] == '\n') ++line_;
                ++pos_;
            }
            if (pos_ < src_.size()) ++pos_;  // closing quote
            t.kind = Token::Kind::String;
            t.text = src_.substr(t.begin, pos_ - t.begin);
            t.end = pos_;
            return t;
        }
        // Word: runs to whitespace or a delimiter; parens opened inside the
        // word stay part of it so keys like div(phi,U) lex as one token.
        int paren_depth = 0;
        while (pos_ < src_.size()) {
            char w = src_[pos_];
            if (is_space(w) || w == ';' || w == '{' || w == '}' || w == '"' || w == '[' || w == ']')
                break;
            if (w == '/' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == '/' || src_[pos_ + 1] == '*'))
                break;
            if (w == '(') {
                if (pos_ == t.begin) break;  // bare ( is punctuation
                ++paren_depth;
            } else if (w == ')') {
                if (paren_depth == 0) break;
                --paren_depth;
            }
            ++pos_;
        }
        if (pos_ == t.begin) {
            // first char was '(' or ')'
            ++pos_;
            t.kind = Token::Kind::Punct;
        } else {
            t.kind = Token::Kind::Word;
        }
        t.text = src_.substr(t.begin, pos_ - t.begin);
        t.end = pos_;
        return t;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    Token cached_;
    bool has_cached_ = false;
};

// Internal: value-level trouble that downgrades the entry to Raw.
struct SoftError {
    int line;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) {}

    FoamDict parse_top() {
        FoamDict dict;
        parse_entries(dict, /*top_level=*/true, 0);
        return dict;
    }

private:
    void parse_entries(FoamDict& dict, bool top_level, int open_line) {
        for (;;) {
            Token tok = lex_.peek();
            if (tok.kind == Token::Kind::End) {
                if (top_level) return;
                throw FoamParseError(FoamParseError::Kind::UnbalancedBraces, open_line,
                                     "unbalanced braces: dictionary opened at line " +
                                         std::to_string(open_line) + " is never closed");
            }
            if (tok.is_punct('}')) {
                if (top_level)
                    throw FoamParseError(FoamParseError::Kind::UnbalancedBraces, tok.line,
                                         "unbalanced braces: stray '}' at line " +
                                             std::to_string(tok.line));
                lex_.next();
                return;
            }
            if (tok.kind == Token::Kind::Word && !tok.text.empty() && tok.text[0] == '#') {
                dict.append(std::string(tok.text), parse_directive_raw(tok));
                continue;
            }
            if (tok.kind == Token::Kind::Word && !tok.text.empty() && tok.text[0] == '$') {
                dict.append(std::string(tok.text), parse_macro_raw(tok));
                continue;
            }
            if (top_level && tok.is_punct('(')) {
                lex_.next();
                FoamValue v = try_entry(tok, [&] { return parse_list(tok.line, std::nullopt); });
                consume_optional_semicolon();
                dict.append("", std::move(v));
                continue;
            }
            if (top_level && tok.kind == Token::Kind::Word && is_integer_token(tok.text)) {
                std::size_t mark = tok.begin;
                int mark_line = tok.line;
                lex_.next();
                if (lex_.peek().is_punct('(')) {
                    std::string prefix(tok.text);
                    Token open = lex_.next();
                    FoamValue v = try_entry(tok, [&] { return parse_list(open.line, prefix); });
                    consume_optional_semicolon();
                    dict.append("", std::move(v));
                    continue;
                }
                lex_.set_pos(mark, mark_line);
                tok = lex_.peek();
            }

            // Keyword entry.
            Token key = lex_.next();
            if (key.kind == Token::Kind::Punct) {
                // Stray punctuation where a keyword belongs: capture to ';'.
                dict.append(std::string(key.text), capture_raw_from(key.begin, key.line));
                continue;
            }
            Token after = lex_.peek();
            if (after.is_punct('{')) {
                lex_.next();
                FoamDict sub;
                parse_entries(sub, false, after.line);
                dict.append(std::string(key.text), FoamValue{std::move(sub)});
                continue;
            }
            // Recovery spans start at the first value token so the keyword is
            // not duplicated on re-serialization.
            Token first_value = lex_.peek();
            FoamValue v = try_entry(first_value, [&] { return parse_value_sequence(); });
            dict.append(std::string(key.text), std::move(v));
        }
    }

    template <typename F>
    FoamValue try_entry(const Token& start, F&& body) {
        try {
            return body();
        } catch (const SoftError&) {
            return capture_raw_from(start.begin, start.line);
        }
    }

    FoamValue capture_raw_from(std::size_t begin, int line) {
        std::size_t end = lex_.find_entry_terminator(begin);
        if (end == std::string_view::npos) end = lex_.end_of_line(begin);
        lex_.set_pos(end, lex_.line_at(end));
        return FoamValue{Raw{rtrim_copy(lex_.source().substr(begin, end - begin))}};
    }

    FoamValue parse_directive_raw(const Token& tok) {
        std::size_t end = lex_.end_of_line(tok.begin);
        lex_.set_pos(end, tok.line);
        return FoamValue{Raw{rtrim_copy(lex_.source().substr(tok.begin, end - tok.begin))}};
    }

    FoamValue parse_macro_raw(const Token& tok) {
        std::size_t end = lex_.find_entry_terminator(tok.begin);
        if (end == std::string_view::npos) end = lex_.end_of_line(tok.begin);
        lex_.set_pos(end, lex_.line_at(end));
        return FoamValue{Raw{rtrim_copy(lex_.source().substr(tok.begin, end - tok.begin))}};
    }

    FoamValue parse_value_sequence() {
        std::vector<FoamValue> values;
        for (;;) {
            Token tok = lex_.peek();
            if (tok.is_punct(';')) {
                lex_.next();
                break;
            }
            if (tok.is_punct('}')) break;  // missing ';' before dict close: tolerate
            if (tok.kind == Token::Kind::End) {
                if (values.empty()) throw SoftError{tok.line};
                break;  // missing trailing ';' at EOF: tolerate
            }
            values.push_back(parse_single_value(lex_.next()));
        }
        if (values.size() == 1) return std::move(values[0]);
        FoamList list;
        list.items = std::move(values);
        list.style = ListStyle::Inline;
        return FoamValue{std::move(list)};
    }

    FoamValue parse_single_value(Token tok) {
        switch (tok.kind) {
            case Token::Kind::String:
                return FoamValue{Atom{std::string(tok.text)}};
            case Token::Kind::Word: {
                if (tok.text[0] == '$')
                    return FoamValue{Raw{std::string(tok.text)}};
                if (tok.text[0] == '#') {
                    // #calc "expr" and friends: keep directive plus its string.
                    if (lex_.peek().kind == Token::Kind::String) {
                        Token str = lex_.next();
                        return FoamValue{
                            Raw{std::string(lex_.source().substr(tok.begin, str.end - tok.begin))}};
                    }
                    return FoamValue{Raw{std::string(tok.text)}};
                }
                if (is_integer_token(tok.text) && lex_.peek().is_punct('(')) {
                    Token open = lex_.next();
                    return parse_list(open.line, std::string(tok.text));
                }
                double num = 0.0;
                if (parse_number_token(tok.text, num))
                    return FoamValue{Number{std::string(tok.text), num}};
                return FoamValue{Atom{std::string(tok.text)}};
            }
            case Token::Kind::Punct:
                if (tok.text[0] == '(') return parse_list(tok.line, std::nullopt);
                if (tok.text[0] == '[') return parse_bracket_group(tok);
                if (tok.text[0] == '{') {
                    FoamDict sub;
                    parse_entries(sub, false, tok.line);
                    return FoamValue{std::move(sub)};
                }
                throw SoftError{tok.line};
            case Token::Kind::End:
            default:
                throw SoftError{tok.line};
        }
    }

    FoamValue parse_list(int open_line, std::optional<std::string> size_prefix) {
        std::vector<FoamValue> items;
        for (;;) {
            Token tok = lex_.peek();
            if (tok.is_punct(')')) {
                lex_.next();
                break;
            }
            if (tok.kind == Token::Kind::End) throw SoftError{open_line};
            if (tok.is_punct(';') || tok.is_punct('}')) throw SoftError{tok.line};
            items.push_back(parse_single_value(lex_.next()));
        }
        bool all_numbers = !items.empty() &&
                           std::all_of(items.begin(), items.end(),
                                       [](const FoamValue& v) { return v.is_number(); });
        if (all_numbers && !size_prefix) {
            VectorLike vec;
            vec.components.reserve(items.size());
            for (auto& item : items) vec.components.push_back(std::get<Number>(item.node));
            return FoamValue{std::move(vec)};
        }
        FoamList list;
        list.items = std::move(items);
        list.style = ListStyle::Parenthesized;
        list.size_prefix = std::move(size_prefix);
        return FoamValue{std::move(list)};
    }

    FoamValue parse_bracket_group(const Token& open) {
        std::vector<Token> toks;
        for (;;) {
            Token tok = lex_.peek();
            if (tok.is_punct(']')) {
                lex_.next();
                break;
            }
            if (tok.kind == Token::Kind::End) throw SoftError{open.line};
            if (tok.kind != Token::Kind::Word) {
                // Not a plain dimension set; capture [ ... ] verbatim.
                return capture_bracket_raw(open);
            }
            toks.push_back(lex_.next());
        }
        if (toks.size() == 7 &&
            std::all_of(toks.begin(), toks.end(),
                        [](const Token& t) { return is_integer_token(t.text); })) {
            DimensionSet dims;
            for (std::size_t i = 0; i < 7; ++i)
                dims.exponents[i] = std::atoi(std::string(toks[i].text).c_str());
            return FoamValue{dims};
        }
        // Something like [kg m^-3] or a 5-component set: keep the original span.
        std::size_t end = toks.empty() ? open.end : toks.back().end;
        // The ']' was consumed; include it.
        std::string_view src = lex_.source();
        std::size_t close = src.find(']', end);
        std::size_t stop = close == std::string_view::npos ? end : close + 1;
        return FoamValue{Raw{std::string(src.substr(open.begin, stop - open.begin))}};
    }

    FoamValue capture_bracket_raw(const Token& open) {
        std::string_view src = lex_.source();
        std::size_t close = src.find(']', open.begin);
        if (close == std::string_view::npos) throw SoftError{open.line};
        lex_.set_pos(close + 1, lex_.line_at(close + 1));
        return FoamValue{Raw{std::string(src.substr(open.begin, close + 1 - open.begin))}};
    }

    void consume_optional_semicolon() {
        if (lex_.peek().is_punct(';')) lex_.next();
    }

    Lexer lex_;
};

//
// Serialization
//

constexpr std::string_view kBanner =
    "/*--------------------------------*- C++ -*----------------------------------*\\\n"
    "| =========                 |                                                 |\n"
    "| \\\\      /  F ield         | OpenFOAM: The Open Source CFD Toolbox           |\n"
    "|  \\\\    /   O peration     | Version:  v2406                                 |\n"
    "|   \\\\  /    A nd           | Website:  www.openfoam.com                      |\n"
    "|    \\\\/     M anipulation  |                                                 |\n"
    "\\*---------------------------------------------------------------------------*/\n";

constexpr std::string_view kSeparator =
    "// * * * * * * * * * * * * * * * * * * * * * * * * * * * * * * * * * * * * * //\n";

constexpr std::string_view kFooter =
    "// ************************************************************************* //\n";

class Writer {
public:
    explicit Writer(const FormatStyle& style) : style_(style) {}

    std::string result() { return std::move(out_); }

    void write_entry(const DictEntry& entry, int depth) {
        const FoamValue& v = entry.value;
        if (v.is_raw()) {
            const std::string& raw = std::get<Raw>(v.node).text;
            indent(depth);
            // Directive, macro and recovery spans embed their own keyword;
            // a Raw that is merely an entry's value gets the keyed layout.
            if (entry.key.empty() || raw.rfind(entry.key, 0) == 0) {
                out_ += raw;
            } else {
                pad_keyword(entry.key);
                out_ += raw;
                if (raw.empty() || raw.back() != ';') out_ += ';';
            }
            out_ += '\n';
            return;
        }
        if (entry.key.empty()) {
            if (const FoamList* list = v.as_list()) {
                write_multiline_list(*list, depth, /*terminator=*/"");
                return;
            }
        }
        if (v.is_dict()) {
            indent(depth);
            out_ += entry.key;
            out_ += '\n';
            indent(depth);
            out_ += "{\n";
            for (const auto& sub : std::get<FoamDict>(v.node).entries()) write_entry(sub, depth + 1);
            indent(depth);
            out_ += "}\n";
            return;
        }
        if (const FoamList* list = v.as_list();
            list && list->style == ListStyle::Parenthesized && !inline_eligible(*list)) {
            indent(depth);
            out_ += entry.key;
            out_ += '\n';
            write_multiline_list(*list, depth, ";");
            return;
        }
        indent(depth);
        pad_keyword(entry.key);
        std::string rendered = render_inline(v);
        if (rendered.empty()) {
            // `key;` form
            if (!out_.empty() && out_.back() == ' ') {
                while (!out_.empty() && out_.back() == ' ') out_.pop_back();
            }
        } else {
            out_ += rendered;
        }
        out_ += ";\n";
    }

    void blank_line() { out_ += '\n'; }
    void literal(std::string_view text) { out_ += text; }

    static std::string render_inline(const FoamValue& v) {
        struct Visitor {
            std::string operator()(const Atom& a) const { return a.lexeme; }
            std::string operator()(const Number& n) const { return n.lexeme; }
            std::string operator()(const DimensionSet& d) const {
                std::string s = "[";
                for (std::size_t i = 0; i < d.exponents.size(); ++i) {
                    if (i) s += ' ';
                    s += std::to_string(d.exponents[i]);
                }
                s += ']';
                return s;
            }
            std::string operator()(const VectorLike& vec) const {
                std::string s = "(";
                for (std::size_t i = 0; i < vec.components.size(); ++i) {
                    if (i) s += ' ';
                    s += vec.components[i].lexeme;
                }
                s += ')';
                return s;
            }
            std::string operator()(const FoamList& list) const {
                std::string s;
                if (list.style == ListStyle::Parenthesized) {
                    if (list.size_prefix) {
                        s += *list.size_prefix;
                        s += ' ';
                    }
                    s += '(';
                    for (std::size_t i = 0; i < list.items.size(); ++i) {
                        if (i) s += ' ';
                        s += render_inline(list.items[i]);
                    }
                    s += ')';
                } else {
                    for (std::size_t i = 0; i < list.items.size(); ++i) {
                        if (i) s += ' ';
                        s += render_inline(list.items[i]);
                    }
                }
                return s;
            }
            std::string operator()(const FoamDict& dict) const {
                std::string s = "{ ";
                for (const auto& e : dict.entries()) {
                    s += e.key;
                    s += ' ';
                    s += render_inline(e.value);
                    s += "; ";
                }
                s += '}';
                return s;
            }
            std::string operator()(const Raw& r) const { return r.text; }
        };
        return std::visit(Visitor{}, v.node);
    }

private:
    static bool scalar_like(const FoamValue& v) {
        if (v.is_dict()) return false;
        if (const FoamList* l = v.as_list()) {
            if (l->style == ListStyle::Parenthesized && l->size_prefix) return false;
            return std::all_of(l->items.begin(), l->items.end(), scalar_like);
        }
        return true;
    }

    static bool inline_eligible(const FoamList& list) {
        if (list.size_prefix) return false;
        if (!std::all_of(list.items.begin(), list.items.end(), scalar_like)) return false;
        std::size_t width = 2;
        for (const auto& item : list.items) width += render_inline(item).size() + 1;
        return width <= 60;
    }

    void write_multiline_list(const FoamList& list, int depth, std::string_view terminator) {
        if (list.size_prefix) {
            indent(depth);
            out_ += *list.size_prefix;
            out_ += '\n';
        }
        indent(depth);
        out_ += "(\n";
        for (const auto& item : list.items) {
            if (item.is_dict()) {
                indent(depth + 1);
                out_ += "{\n";
                for (const auto& sub : std::get<FoamDict>(item.node).entries())
                    write_entry(sub, depth + 2);
                indent(depth + 1);
                out_ += "}\n";
            } else if (const FoamList* sub = item.as_list();
                       sub && sub->style == ListStyle::Parenthesized && !inline_eligible(*sub)) {
                write_multiline_list(*sub, depth + 1, "");
            } else {
                indent(depth + 1);
                out_ += render_inline(item);
                out_ += '\n';
            }
        }
        indent(depth);
        out_ += ')';
        out_ += terminator;
        out_ += '\n';
    }

    void indent(int depth) { out_.append(static_cast<std::size_t>(depth) * style_.indent_width, ' '); }

    void pad_keyword(const std::string& key) {
        out_ += key;
        int pad = style_.keyword_column - static_cast<int>(key.size());
        if (pad < 1) pad = 1;
        out_.append(static_cast<std::size_t>(pad), ' ');
    }

    const FormatStyle& style_;
    std::string out_;
};

}  // namespace

FoamDict::FoamDict(const FoamDict& other) : entries_(other.entries_) {}

FoamDict& FoamDict::operator=(const FoamDict& other) {
    entries_ = other.entries_;
    return *this;
}

const FoamValue* FoamDict::find(std::string_view key) const {
    for (const auto& e : entries_)
        if (e.key == key) return &e.value;
    return nullptr;
}

FoamValue* FoamDict::find(std::string_view key) {
    for (auto& e : entries_)
        if (e.key == key) return &e.value;
    return nullptr;
}

void FoamDict::insert_or_assign(std::string key, FoamValue value) {
    for (auto& e : entries_) {
        if (e.key == key) {
            e.value = std::move(value);
            return;
        }
    }
    entries_.push_back(DictEntry{std::move(key), std::move(value)});
}

void FoamDict::append(std::string key, FoamValue value) {
    entries_.push_back(DictEntry{std::move(key), std::move(value)});
}

bool FoamDict::empty() const noexcept { return entries_.empty(); }
std::size_t FoamDict::size() const noexcept { return entries_.size(); }

FoamFile parse_foam_file(std::string_view text) {
    Parser parser(text);
    FoamDict all = parser.parse_top();

    FoamFile file;
    bool header_found = false;
    auto& entries = all.entries();
    for (auto it = entries.begin(); it != entries.end(); ++it) {
        if (it->key == "FoamFile" && it->value.is_dict()) {
            file.header = std::get<FoamDict>(it->value.node);
            entries.erase(it);
            header_found = true;
            break;
        }
    }
    if (!header_found)
        throw FoamParseError(FoamParseError::Kind::MissingHeader, 0,
                             "missing FoamFile { ... } header block");
    if (const FoamValue* fmt = file.header.find("format")) {
        const Atom* a = fmt->as_atom();
        if (!a || a->lexeme != "ascii")
            throw FoamParseError(FoamParseError::Kind::NonAsciiFormat, 0,
                                 "unsupported format '" + (a ? a->lexeme : std::string("?")) +
                                     "' (only ascii is handled)");
    }
    file.body = std::move(all);
    return file;
}

std::string serialize_foam_file(const FoamFile& file, const FormatStyle& style) {
    Writer w(style);
    if (style.banner) w.literal(kBanner);
    w.write_entry(DictEntry{"FoamFile", FoamValue{file.header}}, 0);
    if (style.banner) w.literal(kSeparator);
    w.blank_line();
    for (const auto& entry : file.body.entries()) {
        w.write_entry(entry, 0);
        w.blank_line();
    }
    if (style.banner) w.literal(kFooter);
    return w.result();
}

std::string value_to_string(const FoamValue& value) { return Writer::render_inline(value); }

namespace {

std::vector<std::string_view> split_path(std::string_view path) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (start <= path.size()) {
        std::size_t slash = path.find('/', start);
        if (slash == std::string_view::npos) {
            if (start < path.size()) parts.push_back(path.substr(start));
            break;
        }
        if (slash > start) parts.push_back(path.substr(start, slash - start));
        start = slash + 1;
    }
    return parts;
}

}  // namespace

const FoamValue* find_entry(const FoamFile& file, std::string_view path) {
    auto parts = split_path(path);
    if (parts.empty()) return nullptr;
    const FoamDict* dict = &file.body;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        const FoamValue* v = dict->find(parts[i]);
        if (!v) return nullptr;
        dict = v->as_dict();
        if (!dict) return nullptr;
    }
    return dict->find(parts.back());
}

const FoamValue& get_entry(const FoamFile& file, std::string_view path) {
    auto parts = split_path(path);
    if (parts.empty())
        throw EntryError(EntryError::Kind::NotFound, std::string(path), "empty entry path");
    const FoamDict* dict = &file.body;
    std::string prefix;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!prefix.empty()) prefix += '/';
        prefix += parts[i];
        const FoamValue* v = dict->find(parts[i]);
        if (!v)
            throw EntryError(EntryError::Kind::NotFound, std::string(path),
                             "entry not found: " + std::string(path));
        dict = v->as_dict();
        if (!dict)
            throw EntryError(EntryError::Kind::NotADict, prefix,
                             "path prefix is not a dictionary: " + prefix);
    }
    const FoamValue* v = dict->find(parts.back());
    if (!v)
        throw EntryError(EntryError::Kind::NotFound, std::string(path),
                         "entry not found: " + std::string(path));
    return *v;
}

FoamFile set_entry(const FoamFile& file, std::string_view path, FoamValue value) {
    auto parts = split_path(path);
    if (parts.empty())
        throw EntryError(EntryError::Kind::NotFound, std::string(path), "empty entry path");
    FoamFile copy = file;
    FoamDict* dict = &copy.body;
    std::string prefix;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!prefix.empty()) prefix += '/';
        prefix += parts[i];
        FoamValue* v = dict->find(parts[i]);
        if (!v) {
            dict->append(std::string(parts[i]), FoamValue{FoamDict{}});
            v = dict->find(parts[i]);
        }
        FoamDict* next = v->as_dict();
        if (!next)
            throw EntryError(EntryError::Kind::NotADict, prefix,
                             "path prefix is not a dictionary: " + prefix);
        dict = next;
    }
    dict->insert_or_assign(std::string(parts.back()), std::move(value));
    return copy;
}

bool structurally_equal(const FoamValue& a, const FoamValue& b) {
    if (a.node.index() != b.node.index()) return false;
    struct Visitor {
        const FoamValue& b;
        bool operator()(const Atom& x) const { return x.lexeme == std::get<Atom>(b.node).lexeme; }
        bool operator()(const Number& x) const {
            return x.lexeme == std::get<Number>(b.node).lexeme;
        }
        bool operator()(const DimensionSet& x) const {
            return x.exponents == std::get<DimensionSet>(b.node).exponents;
        }
        bool operator()(const VectorLike& x) const {
            const auto& y = std::get<VectorLike>(b.node);
            if (x.components.size() != y.components.size()) return false;
            for (std::size_t i = 0; i < x.components.size(); ++i)
                if (x.components[i].lexeme != y.components[i].lexeme) return false;
            return true;
        }
        bool operator()(const FoamList& x) const {
            const auto& y = std::get<FoamList>(b.node);
            if (x.style != y.style || x.size_prefix != y.size_prefix) return false;
            if (x.items.size() != y.items.size()) return false;
            for (std::size_t i = 0; i < x.items.size(); ++i)
                if (!structurally_equal(x.items[i], y.items[i])) return false;
            return true;
        }
        bool operator()(const FoamDict& x) const {
            return structurally_equal(x, std::get<FoamDict>(b.node));
        }
        bool operator()(const Raw& x) const { return x.text == std::get<Raw>(b.node).text; }
    };
    return std::visit(Visitor{b}, a.node);
}

bool structurally_equal(const FoamDict& a, const FoamDict& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        const DictEntry& x = a.entries()[i];
        const DictEntry& y = b.entries()[i];
        if (x.key != y.key || !structurally_equal(x.value, y.value)) return false;
    }
    return true;
}

bool structurally_equal(const FoamFile& a, const FoamFile& b) {
    return structurally_equal(a.header, b.header) && structurally_equal(a.body, b.body);
}

bool value_text_equal(std::string_view a, std::string_view b) {
    auto tokenize = [](std::string_view s) {
        std::vector<std::string> toks;
        std::string cur;
        for (char c : s) {
            if (is_space(c)) {
                if (!cur.empty()) toks.push_back(std::exchange(cur, {}));
            } else if (c == '(' || c == ')' || c == '{' || c == '}' || c == ';' || c == '[' ||
                       c == ']') {
                if (!cur.empty()) toks.push_back(std::exchange(cur, {}));
                toks.emplace_back(1, c);
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) toks.push_back(cur);
        return toks;
    };
    auto ta = tokenize(a);
    auto tb = tokenize(b);
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i] == tb[i]) continue;
        double x = 0, y = 0;
        if (parse_number_token(ta[i], x) && parse_number_token(tb[i], y) && x == y) continue;
        return false;
    }
    return true;
}

Number make_number(double v) {
    std::ostringstream os;
    os << v;
    return Number{os.str(), v};
}

Number make_number(std::string lexeme) {
    double v = 0.0;
    parse_number_token(lexeme, v);
    return Number{std::move(lexeme), v};
}

FoamValue atom(std::string lexeme) { return FoamValue{Atom{std::move(lexeme)}}; }

FoamValue number(double v) { return FoamValue{make_number(v)}; }

FoamValue vector3(double x, double y, double z) {
    VectorLike vec;
    vec.components = {make_number(x), make_number(y), make_number(z)};
    return FoamValue{std::move(vec)};
}

FoamDict make_header(std::string cls, std::string object) {
    FoamDict header;
    header.append("version", FoamValue{Number{"2.0", 2.0}});
    header.append("format", atom("ascii"));
    header.append("class", atom(std::move(cls)));
    header.append("object", atom(std::move(object)));
    return header;
}

FoamFile make_foam_file(std::string cls, std::string object) {
    FoamFile file;
    file.header = make_header(std::move(cls), std::move(object));
    return file;
}

}  // namespace foamgpt
