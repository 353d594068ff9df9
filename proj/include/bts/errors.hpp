#pragma once

#include <stdexcept>
#include <string>

namespace bts {

/// A configuration that cannot describe a valid experiment (K < 2, empty
/// ranges, non-positive intervals).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Arguments that are well-typed but inconsistent with each other
/// (dimension mismatch, empty metric input, undefined ratios).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or invalid corpus data. Carries the offending line (1-based,
/// 0 when not tied to a line) and field name.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::size_t line = 0, std::string field = {})
        : std::runtime_error(what), line_(line), field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

}  // namespace bts
