#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace iud {

using Index = Eigen::Index;
using Count = std::int64_t;

// J x H layouts: rows are treatments, columns are strata.
using CountMatrix = Eigen::Matrix<Count, Eigen::Dynamic, Eigen::Dynamic>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Configuration or data too thin for a statistic (zero denominators etc.).
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UndefinedStatisticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace iud
