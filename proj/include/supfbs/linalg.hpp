// Dense vector aliases, the linear-operator concept shared by all solvers,
// and a handful of componentwise helpers.
#pragma once

#include <Eigen/Dense>

#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace supfbs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Thrown when a caller violates a documented precondition (sizes, ranges).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a meaningful result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what)
{
    if (!cond) {
        throw ContractError(what);
    }
}

/// Anything that behaves like an m x n matrix through forward and adjoint products.
template <typename Op>
concept LinearOperator = requires(const Op& op, const Vector& v) {
    { op.rows() } -> std::convertible_to<Index>;
    { op.cols() } -> std::convertible_to<Index>;
    { op.apply(v) } -> std::convertible_to<Vector>;
    { op.apply_adjoint(v) } -> std::convertible_to<Vector>;
};

/// Wraps an operator and counts forward and adjoint products.
/// The wrapped operator must outlive the wrapper.
template <LinearOperator Op>
class CountingOperator {
public:
    explicit CountingOperator(const Op& op) : op_(&op) {}

    Index rows() const { return op_->rows(); }
    Index cols() const { return op_->cols(); }

    Vector apply(const Vector& x) const
    {
        ++count_;
        return op_->apply(x);
    }
    Vector apply_adjoint(const Vector& y) const
    {
        ++count_;
        return op_->apply_adjoint(y);
    }

    std::uint64_t products() const { return count_; }
    void reset() const { count_ = 0; }
    const Op& base() const { return *op_; }

private:
    const Op* op_;
    mutable std::uint64_t count_ = 0;
};

template <typename Op>
std::uint64_t product_count(const Op&)
{
    return 0;
}

template <typename Op>
std::uint64_t product_count(const CountingOperator<Op>& op)
{
    return op.products();
}

/// x_+ : projection onto the nonnegative orthant.
inline Vector positive_part(const Vector& x) { return x.cwiseMax(0.0); }

/// x_- = x - x_+ : projection onto the nonpositive orthant (componentwise min(x, 0)).
inline Vector negative_part(const Vector& x) { return x.cwiseMin(0.0); }

inline bool all_finite(const Vector& x) { return x.allFinite(); }

} // namespace supfbs
