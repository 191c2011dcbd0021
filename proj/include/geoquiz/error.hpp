#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geoquiz {

// Error categories shared by every module. The HTTP layer maps each one onto
// a status code and an ApiError code.
enum class ErrorKind {
    domain,      // argument outside its mathematical or declared domain
    validation,  // user-supplied field rejected
    auth,
    conflict,    // operation incompatible with current state (e.g. quiz already active)
    sequence,    // ordering violated (time regression, out-of-order answer)
    not_found,
    content,     // content pack cannot satisfy the request
    state,       // operation called in the wrong lifecycle phase
    io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string field = {})
        : std::runtime_error(message), kind_(kind), field_(std::move(field)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorKind kind_;
    std::string field_;
};

}  // namespace geoquiz
