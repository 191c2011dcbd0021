#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geoquiz/error.hpp"

// Minimal XML 1.0 reader/writer for content packs: elements, attributes,
// character data, entity and character references, comments, processing
// instructions and CDATA. No DTD processing and no namespaces.
namespace geoquiz::xml {

struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;
    std::string text;  // concatenated character data directly inside this element
    int line = 0;
    int column = 0;

    const std::string* attribute(std::string_view key) const;
    std::vector<const Element*> children_named(std::string_view child) const;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, int line, int column);
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Parses a complete document and returns its root element.
Element parse(std::string_view document);

std::string escape(std::string_view raw, bool in_attribute = false);

/// Serializes with two-space indentation. Elements with text and no children
/// are written on one line.
std::string write(const Element& root);

}  // namespace geoquiz::xml
