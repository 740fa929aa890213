#ifndef AMRC_COMMON_HPP
#define AMRC_COMMON_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace amrc {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr const char* kToolVersion = "0.1.0";

/// Base class for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, inconsistent dimensions, invalid configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numerical failure at run time (non-finite loss, gradient or activation).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace amrc

#endif  // AMRC_COMMON_HPP
