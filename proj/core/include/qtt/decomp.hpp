#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "qtt/core.hpp"

namespace qtt {

template <Scalar T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <Scalar T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Rank selection for SVD splits. `cutoff` is relative to the Frobenius norm
/// of the matrix being split.
struct TruncationRule {
    static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

    std::size_t max_rank = kUnbounded;
    double cutoff = 0.0;

    void validate() const;
};

template <Scalar T>
struct SvdResult {
    Matrix<T> u;            ///< rows x r, orthonormal columns
    std::vector<double> s;  ///< r singular values, descending
    Matrix<T> vh;           ///< r x cols, orthonormal rows
    double discarded = 0.0; ///< sqrt of the sum of squared dropped values

    std::size_t rank() const { return s.size(); }
};

/// Kept rank is min(max_rank, smallest r whose tail norm is within
/// cutoff * total norm). Singular values below the numerical-rank floor
/// s_max * max(rows, cols) * eps are always dropped, and at least one value
/// is kept for a non-empty matrix. Throws NumericError on non-finite input.
template <Scalar T>
SvdResult<T> truncated_svd(const Matrix<T>& m, const TruncationRule& rule);

template <Scalar T>
struct QrResult {
    Matrix<T> q; ///< rows x k with k = min(rows, cols)
    Matrix<T> r; ///< k x cols
};

template <Scalar T>
QrResult<T> qr_reduced(const Matrix<T>& m);

/// Rows of a tall matrix spanning a dominant square submatrix: every entry of
/// m * inv(m[rows]) has modulus <= 1 + tol on return (unless the iteration
/// cap of 100 swaps is hit). Starts from column-pivoted QR rows; ties break
/// toward the lowest index. A rank-deficient m keeps the pivoted-QR rows.
template <Scalar T>
std::vector<std::size_t> maxvol(const Matrix<T>& m, double tol = 0.01, std::size_t max_iters = 100);

} // namespace qtt
