#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "qtt/core.hpp"
#include "qtt/decomp.hpp"
#include "qtt/dense.hpp"
#include "qtt/trainshape.hpp"

namespace qtt {

/// Default refusal threshold for dense expansion (entries).
inline constexpr std::size_t kDenseGuard = std::size_t{1} << 24;

/// A tensor represented as a train of cores.
///
/// The cores are authoritative: the ranks stored on the shape are re-derived
/// from them on construction. `center` records a canonical center when one is
/// known; any mutation through `mutable_cores` clears it.
class TensorTrain {
public:
    using RealCores = std::vector<Core<double>>;
    using ComplexCores = std::vector<Core<cplx>>;
    using Storage = std::variant<RealCores, ComplexCores>;

    template <Scalar T>
    TensorTrain(const TrainShape& shape, std::vector<Core<T>> cores, std::optional<std::size_t> center = {})
        : shape_(validated(shape, cores)), cores_(std::move(cores)), center_(center) {}

    const TrainShape& shape() const { return shape_; }
    std::size_t ncores() const { return shape_.ncores(); }
    const std::vector<std::size_t>& ranks() const { return shape_.ranks(); }

    ScalarKind kind() const { return is_complex() ? ScalarKind::Complex : ScalarKind::Real; }
    bool is_complex() const { return std::holds_alternative<ComplexCores>(cores_); }

    const Storage& storage() const { return cores_; }

    template <Scalar T>
    const std::vector<Core<T>>& cores() const {
        return std::get<std::vector<Core<T>>>(cores_);
    }

    template <Scalar T>
    std::vector<Core<T>>& mutable_cores() {
        center_.reset();
        return std::get<std::vector<Core<T>>>(cores_);
    }

    /// Copy of the cores promoted to complex.
    ComplexCores complex_cores() const;
    TensorTrain to_complex() const;

    std::optional<std::size_t> center() const { return center_; }
    void set_center(std::optional<std::size_t> c) { center_ = c; }

    /// Re-derives shape ranks after in-place core edits.
    void refresh_ranks();

private:
    template <Scalar T>
    static TrainShape validated(const TrainShape& shape, const std::vector<Core<T>>& cores);

    TrainShape shape_;
    Storage cores_;
    std::optional<std::size_t> center_;
};

template <Scalar T>
TensorTrain from_cores(const TrainShape& shape, std::vector<Core<T>> cores) {
    return TensorTrain(shape, std::move(cores));
}

/// Cores of `t` as scalar type T (promoting real to complex when asked).
template <Scalar T>
std::vector<Core<T>> cores_as(const TensorTrain& t);

/// Standard-normal random cores with the ranks recorded on `shape`.
TensorTrain random_train(const TrainShape& shape, std::uint64_t seed, ScalarKind kind = ScalarKind::Real);

/// Expands to a dense array over the original dimensions.
DenseArray to_tensor(const TensorTrain& t, std::size_t guard = kDenseGuard);

/// Entries at the given multi-indices; idxs[d][k] is the index of point k
/// along dimension d.
DenseArray evaluate(const TensorTrain& t, const std::vector<std::vector<std::size_t>>& idxs);
cplx evaluate_at(const TensorTrain& t, std::span<const std::size_t> idx);

/// Moves the canonical center to core `center` by QR sweeps.
void normalize(TensorTrain& t, std::size_t center);
TensorTrain normalized(TensorTrain t, std::size_t center);

/// <a, b>, conjugate-linear in a.
cplx inner(const TensorTrain& a, const TensorTrain& b);

/// Frobenius norm, read off the center core after orthonormalization.
double frobenius_norm(const TensorTrain& t);

/// ||a - b|| from ||a||^2 + ||b||^2 - 2 Re<a, b>, with every term contracted
/// in quadruple precision so that tiny distances between large trains
/// survive the cancellation.
double distance(const TensorTrain& a, const TensorTrain& b);

TensorTrain conj(const TensorTrain& t);

/// Outer product: cores of u appended after the cores of t.
TensorTrain extend(const TensorTrain& t, const TensorTrain& u);

TensorTrain scaled(const TensorTrain& t, double factor);
TensorTrain scaled(const TensorTrain& t, cplx factor);

/// Relabels dimensions: result dimension k is dimension perm[k] of `t`.
/// Digits inside each core are re-sorted by (dimension, position).
TensorTrain permute_dims(const TensorTrain& t, const std::vector<std::size_t>& perm);

/// Permutes the local index of every core so that its groups match `target`
/// (which must hold the same digits core by core).
TensorTrain regroup(const TensorTrain& t, const TrainShape& target);

/// Dense array with the same dims as `shape`, rearranged so that the flat
/// index runs over the per-core local indices (core 0 slowest).
template <Scalar T>
std::vector<T> dense_to_core_order(const TrainShape& shape, const std::vector<T>& dense);

/// Train of a dense array by sequential truncated SVDs, left to right (the
/// result is centered on the last core). `discarded` receives the summed
/// discarded weights, which bound the Frobenius error.
TensorTrain from_dense(const TrainShape& shape, const DenseArray& dense, const TruncationRule& rule = {},
                       double* discarded = nullptr);

} // namespace qtt
