#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace streamopt {

using Vec = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid user-supplied parameters or configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A random series could not be produced (e.g. covariance factorization failed).
class GenerationError : public Error {
public:
    using Error::Error;
};

// A loss gradient was requested outside the model's admissible region.
class GradientError : public Error {
public:
    using Error::Error;
};

}  // namespace streamopt
