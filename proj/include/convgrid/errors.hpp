#pragma once

#include <stdexcept>
#include <string>

namespace convgrid {

// Invalid shapes, arguments, or domain violations. CLI exit code 2.
class value_error : public std::invalid_argument {
public:
    explicit value_error(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed, truncated, or unreadable files. CLI exit code 2.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite ones are required. CLI exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace convgrid
