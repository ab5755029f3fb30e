#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace ocmt {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or sizes that do not agree.
class DimensionError : public Error
{
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
    using Error::Error;
};

/// A column (of Z, or of a post-selection design) is linearly dependent on
/// the ones before it.
class RankError : public Error
{
public:
    RankError(const std::string& what, std::size_t column)
        : Error(what), column_(column)
    {}

    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// Covariate with zero norm / variance, or a perfect fit that leaves no
/// residual variance.
class DegenerateError : public Error
{
public:
    using Error::Error;
};

/// Iterative solver hit its sweep cap.
class ConvergenceError : public Error
{
public:
    ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate,
                     long sweeps)
        : Error(what), last_(std::move(last_iterate)), sweeps_(sweeps)
    {}

    const Eigen::VectorXd& last_iterate() const noexcept { return last_; }
    long sweeps() const noexcept { return sweeps_; }

private:
    Eigen::VectorXd last_;
    long sweeps_;
};

/// Malformed input file (CSV or config). Carries 1-based row/column when known.
class ParseError : public Error
{
public:
    ParseError(const std::string& what, std::size_t row = 0, std::size_t col = 0)
        : Error(what), row_(row), col_(col)
    {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

} // namespace ocmt
