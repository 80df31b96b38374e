#pragma once

#include <cstddef>
#include <vector>

#include "qtt/arithmetic.hpp"
#include "qtt/quantics.hpp"
#include "qtt/tensortrain.hpp"

namespace qtt {

/// A rows x cols matrix of dense sub-cores over the same digit extents,
/// stored in core layout (row, local, col).
template <Scalar T>
struct RankBlock {
    std::size_t rows = 1;
    std::size_t cols = 1;
    std::vector<std::size_t> extents;
    std::vector<T> data;

    RankBlock(std::size_t r, std::size_t c, std::vector<std::size_t> ext);

    std::size_t local_extent() const;
    T& operator()(std::size_t r, std::size_t local, std::size_t c) {
        return data[(r * local_extent() + local) * cols + c];
    }
    const T& operator()(std::size_t r, std::size_t local, std::size_t c) const {
        return data[(r * local_extent() + local) * cols + c];
    }
    Core<T> to_core() const { return Core<T>(rows, local_extent(), cols, data); }
};

/// Block matrix product with the outer product of sub-cores as the scalar
/// product. Digit axes of b follow those of a. Throws ShapeError when a.cols
/// differs from b.rows.
template <Scalar T>
RankBlock<T> rank_product(const RankBlock<T>& a, const RankBlock<T>& b);

/// Rank-1 train with every entry equal to v.
TensorTrain constant(const TrainShape& shape, double v);
TensorTrain constant(const TrainShape& shape, cplx v);

/// exp(v (x - x0)) on a single-axis grid, rank 1.
TensorTrain exp_train(const UniformGrid& grid, double v, double x0 = 0.0);
TensorTrain exp_train(const UniformGrid& grid, cplx v, double x0 = 0.0);

/// cos(v (x - x0)) and sin(v (x - x0)) as real rank-2 trains.
TensorTrain cos_train(const UniformGrid& grid, double v, double x0 = 0.0);
TensorTrain sin_train(const UniformGrid& grid, double v, double x0 = 0.0);

/// sum_s coeffs[s] (x - x0)^(p - s), coefficients in descending degree.
/// Interior ranks are p + 1.
TensorTrain polyval_train(const UniformGrid& grid, const std::vector<double>& coeffs, double x0 = 0.0);

/// Matrix over (i, j), interleaved, with entry 1 iff i - j == d. The
/// circular variant uses i - j == d (mod N). -N <= d <= N; negative d gives
/// the transpose of shift -d.
TensorTrain shift_train(const Dimension& dim, long long d, bool circular = false);

/// Dirichlet finite-difference Laplacian -(S(-1) + S(+1) - 2 I) / h^2 over
/// (i, j), interleaved, rank 3.
TensorTrain dirichlet_laplacian(const Dimension& dim, double h);

enum class ToeplitzMode { Circular, Full };

/// Tensor over (i, j, k) with entry 1 iff (i - j) mod M == k, where M = N
/// (circular) or M = 2N (full; k gets an extra leading base-2 digit on its
/// own core). Contracting k with a kernel gives the Toeplitz matrix of the
/// kernel.
TensorTrain toeplitz_train(const Dimension& dim, ToeplitzMode mode);

/// Shape of a vector over `dim` with its digits placed least significant
/// first, which is the layout the DFT matrix contracts against.
TrainShape reversed_vector_shape(const Dimension& dim);

/// DFT matrix exp(-2 pi i i j / N) (times 1/sqrt(N) when normalized). Both
/// axes use `dim`; core q carries digit q of i and digit n-1-q of j. Built as
/// a zip-up element-wise product of one train per digit of i, truncated with
/// `rule`.
TensorTrain dft_train(const Dimension& dim, bool normalized = false, const TruncationRule& rule = {},
                      OpStats* stats = nullptr);

} // namespace qtt
