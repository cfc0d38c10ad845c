#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace fusionreg {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Invalid argument: bad shape, out-of-range hyperparameter, malformed input.
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// Not enough information to determine a quantity (e.g. too few grid points).
class RankError : public std::runtime_error {
public:
    explicit RankError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown: non-finite values, overflow, failed factorization.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ParameterError(msg);
}

}  // namespace fusionreg
