#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>

#include "geoquiz/content.hpp"

namespace geoquiz::content::detail {

inline std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::optional<int> to_int(std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string path_with_id(std::string_view base, std::string_view id_attr, std::string_view id) {
    std::string p(base);
    p += "[@";
    p += id_attr;
    p += "='";
    p += id;
    p += "']";
    return p;
}

}  // namespace geoquiz::content::detail
