#pragma once

#include <stdexcept>
#include <string>

namespace suremap {

// Invalid argument to an operation (bad class index, wrong vector length, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Input data cannot support the requested computation (no samples, degenerate variance).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A linear system was too ill-conditioned to solve reliably.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad command line or incompatible flags.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace suremap
