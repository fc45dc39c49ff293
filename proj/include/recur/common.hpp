#ifndef RECUR_COMMON_HPP
#define RECUR_COMMON_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace recur {

using Vec = std::vector<double>;

// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input, failed validation, impossible requests on a dataset.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// A numerical routine could not deliver a usable answer.
class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& msg) : Error(msg) {}
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

} // namespace recur

#endif
