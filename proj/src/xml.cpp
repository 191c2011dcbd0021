#include "geoquiz/xml.hpp"

#include <cstdint>

namespace geoquiz::xml {

const std::string* Element::attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes)
        if (k == key) return &v;
    return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view child) const {
    std::vector<const Element*> out;
    for (const auto& c : children)
        if (c.name == child) out.push_back(&c);
    return out;
}

ParseError::ParseError(const std::string& message, int line, int column)
    : Error(ErrorKind::validation,
            "XML parse error at " + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

bool is_name_start(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' || u >= 0x80;
}

bool is_name_char(char c) {
    return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Element document() {
        if (src_.substr(0, 3) == "\xEF\xBB\xBF") advance(3);
        skip_misc();
        if (at_end() || peek() != '<') fail("expected root element");
        Element root = element();
        skip_misc();
        if (!at_end()) fail("content after root element");
        return root;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    bool at_end() const { return pos_ >= src_.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }
    bool starts_with(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

    void advance(std::size_t n = 1) {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i, ++pos_) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else if ((static_cast<unsigned char>(src_[pos_]) & 0xC0) != 0x80) {
                ++col_;
            }
        }
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

    void expect(std::string_view s) {
        if (!starts_with(s)) fail("expected '" + std::string(s) + "'");
        advance(s.size());
    }

    void skip_space() {
        while (!at_end() && is_space(peek())) advance();
    }

    void skip_until(std::string_view terminator, const char* what) {
        while (!at_end() && !starts_with(terminator)) advance();
        if (at_end()) fail(std::string("unterminated ") + what);
        advance(terminator.size());
    }

    // Prolog/epilog: whitespace, comments, PIs, doctype (skipped, not interpreted).
    void skip_misc() {
        for (;;) {
            skip_space();
            if (starts_with("<?")) {
                skip_until("?>", "processing instruction");
            } else if (starts_with("<!--")) {
                skip_until("-->", "comment");
            } else if (starts_with("<!DOCTYPE")) {
                skip_until(">", "doctype");
            } else {
                return;
            }
        }
    }

    std::string name() {
        if (at_end() || !is_name_start(peek())) fail("expected a name");
        const std::size_t start = pos_;
        while (!at_end() && is_name_char(peek())) advance();
        return std::string(src_.substr(start, pos_ - start));
    }

    void reference(std::string& out) {
        const int line = line_, col = col_;
        advance();  // '&'
        const std::size_t start = pos_;
        while (!at_end() && peek() != ';' && pos_ - start < 12) advance();
        if (peek() != ';') throw ParseError("unterminated entity reference", line, col);
        const std::string_view ref = src_.substr(start, pos_ - start);
        advance();
        if (ref == "lt") out += '<';
        else if (ref == "gt") out += '>';
        else if (ref == "amp") out += '&';
        else if (ref == "quot") out += '"';
        else if (ref == "apos") out += '\'';
        else if (ref.size() > 1 && ref[0] == '#') {
            std::uint32_t cp = 0;
            const bool hex = ref[1] == 'x';
            const std::string_view digits = ref.substr(hex ? 2 : 1);
            if (digits.empty()) throw ParseError("empty character reference", line, col);
            for (char c : digits) {
                int v;
                if (c >= '0' && c <= '9') v = c - '0';
                else if (hex && c >= 'a' && c <= 'f') v = c - 'a' + 10;
                else if (hex && c >= 'A' && c <= 'F') v = c - 'A' + 10;
                else throw ParseError("bad character reference", line, col);
                cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
                if (cp > 0x10FFFF) throw ParseError("character reference out of range", line, col);
            }
            append_utf8(out, cp);
        } else {
            throw ParseError("unknown entity '&" + std::string(ref) + ";'", line, col);
        }
    }

    std::string attribute_value() {
        const char quote = peek();
        if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
        advance();
        std::string value;
        while (!at_end() && peek() != quote) {
            if (peek() == '<') fail("'<' in attribute value");
            if (peek() == '&') reference(value);
            else {
                value += peek();
                advance();
            }
        }
        if (at_end()) fail("unterminated attribute value");
        advance();
        return value;
    }

    Element element() {
        Element el;
        el.line = line_;
        el.column = col_;
        expect("<");
        el.name = name();
        for (;;) {
            const bool had_space = !at_end() && is_space(peek());
            skip_space();
            if (starts_with("/>")) {
                advance(2);
                return el;
            }
            if (peek() == '>') {
                advance();
                break;
            }
            if (!had_space) fail("expected whitespace before attribute");
            std::string key = name();
            if (el.attribute(key)) fail("duplicate attribute '" + key + "'");
            skip_space();
            expect("=");
            skip_space();
            el.attributes.emplace_back(std::move(key), attribute_value());
        }
        for (;;) {
            if (at_end()) fail("unterminated element <" + el.name + ">");
            if (starts_with("</")) {
                advance(2);
                const std::string closing = name();
                if (closing != el.name)
                    fail("mismatched closing tag </" + closing + "> for <" + el.name + ">");
                skip_space();
                expect(">");
                return el;
            }
            if (starts_with("<!--")) {
                skip_until("-->", "comment");
            } else if (starts_with("<![CDATA[")) {
                advance(9);
                const std::size_t start = pos_;
                while (!at_end() && !starts_with("]]>")) advance();
                if (at_end()) fail("unterminated CDATA section");
                el.text.append(src_.substr(start, pos_ - start));
                advance(3);
            } else if (starts_with("<?")) {
                skip_until("?>", "processing instruction");
            } else if (peek() == '<') {
                el.children.push_back(element());
            } else if (peek() == '&') {
                reference(el.text);
            } else {
                el.text += peek();
                advance();
            }
        }
    }
};

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

void normalize_text(Element& el) {
    el.text = trim(el.text);
    for (auto& c : el.children) normalize_text(c);
}

void write_element(const Element& el, int depth, std::string& out) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += '<';
    out += el.name;
    for (const auto& [k, v] : el.attributes) {
        out += ' ';
        out += k;
        out += "=\"";
        out += escape(v, true);
        out += '"';
    }
    if (el.children.empty() && el.text.empty()) {
        out += "/>\n";
        return;
    }
    out += '>';
    if (el.children.empty()) {
        out += escape(el.text);
    } else {
        out += '\n';
        if (!el.text.empty()) {
            out.append(static_cast<std::size_t>(depth + 1) * 2, ' ');
            out += escape(el.text);
            out += '\n';
        }
        for (const auto& c : el.children) write_element(c, depth + 1, out);
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
    }
    out += "</";
    out += el.name;
    out += ">\n";
}

}  // namespace

Element parse(std::string_view document) {
    Element root = Parser(document).document();
    normalize_text(root);
    return root;
}

std::string escape(std::string_view raw, bool in_attribute) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += in_attribute ? "&quot;" : "\""; break;
            case '\n': out += in_attribute ? "&#10;" : "\n"; break;
            default: out += c;
        }
    }
    return out;
}

std::string write(const Element& root) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    write_element(root, 0, out);
    return out;
}

}  // namespace geoquiz::xml
