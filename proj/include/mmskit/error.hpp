#pragma once

#include <stdexcept>
#include <string>

namespace mmskit {

/// Base for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A document could not be decoded. `field()` names the first offending
/// element as a path such as `submodels[0].ports[1].kind`.
class ParseError : public Error {
public:
    ParseError(std::string field, const std::string& message)
        : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace mmskit
