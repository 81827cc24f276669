#pragma once

#include <stdexcept>
#include <string>

namespace osgrf {

// Invalid user input or configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A numerical tolerance could not be met (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A configured memory/site budget was exceeded (CLI exit code 4).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Broken invariant inside the library.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace osgrf
