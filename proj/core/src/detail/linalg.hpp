#pragma once

// Eigen views of cores and the small contractions shared by the train
// algorithms.

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "qtt/core.hpp"
#include "qtt/decomp.hpp"

namespace qtt::detail {

template <Scalar T>
using Map = Eigen::Map<Matrix<T>>;
template <Scalar T>
using CMap = Eigen::Map<const Matrix<T>>;

inline Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

/// (left * extent) x right view.
template <Scalar T>
CMap<T> left_unfold(const Core<T>& c) {
    return CMap<T>(c.data.data(), ix(c.left * c.extent), ix(c.right));
}
template <Scalar T>
Map<T> left_unfold(Core<T>& c) {
    return Map<T>(c.data.data(), ix(c.left * c.extent), ix(c.right));
}

/// left x (extent * right) view.
template <Scalar T>
CMap<T> right_unfold(const Core<T>& c) {
    return CMap<T>(c.data.data(), ix(c.left), ix(c.extent * c.right));
}
template <Scalar T>
Map<T> right_unfold(Core<T>& c) {
    return Map<T>(c.data.data(), ix(c.left), ix(c.extent * c.right));
}

template <Scalar T, class Derived>
Core<T> core_from_matrix(const Eigen::MatrixBase<Derived>& m, std::size_t left, std::size_t extent,
                         std::size_t right) {
    Core<T> c(left, extent, right);
    Map<T>(c.data.data(), m.rows(), m.cols()) = m;
    return c;
}

/// m (k x left) applied to the left bond.
template <Scalar T, class Derived>
Core<T> mul_left(const Eigen::MatrixBase<Derived>& m, const Core<T>& c) {
    Core<T> out(static_cast<std::size_t>(m.rows()), c.extent, c.right);
    right_unfold(out) = m * right_unfold(c);
    return out;
}

/// m (right x k) applied to the right bond.
template <Scalar T, class Derived>
Core<T> mul_right(const Core<T>& c, const Eigen::MatrixBase<Derived>& m) {
    Core<T> out(c.left, c.extent, static_cast<std::size_t>(m.cols()));
    left_unfold(out) = left_unfold(c) * m;
    return out;
}

/// Contracts the shared bond: (l, ma, r) x (r, mb, r') -> (l, ma*mb, r').
template <Scalar T>
Core<T> merge(const Core<T>& a, const Core<T>& b) {
    Core<T> out(a.left, a.extent * b.extent, b.right);
    Map<T>(out.data.data(), ix(a.left * a.extent), ix(b.extent * b.right)) = left_unfold(a) * right_unfold(b);
    return out;
}

template <Scalar T>
Core<T> promote(const Core<double>& c) {
    if constexpr (std::is_same_v<T, double>) {
        return c;
    } else {
        Core<T> out(c.left, c.extent, c.right);
        for (std::size_t k = 0; k < c.data.size(); ++k) out.data[k] = c.data[k];
        return out;
    }
}

template <Scalar T>
std::vector<Core<T>> promote(const std::vector<Core<double>>& cs) {
    std::vector<Core<T>> out;
    out.reserve(cs.size());
    for (const auto& c : cs) out.push_back(promote<T>(c));
    return out;
}

/// Left-to-right QR on cores [from, to): cores become left-orthonormal and
/// the R factor is pushed into core `to`.
template <Scalar T>
void orthonormalize_left(std::vector<Core<T>>& cores, std::size_t from, std::size_t to) {
    for (std::size_t q = from; q < to; ++q) {
        auto qr = qr_reduced<T>(Matrix<T>(left_unfold(cores[q])));
        const auto k = static_cast<std::size_t>(qr.q.cols());
        cores[q] = core_from_matrix<T>(qr.q, cores[q].left, cores[q].extent, k);
        cores[q + 1] = mul_left(qr.r, cores[q + 1]);
    }
}

/// Right-to-left LQ on cores (to, from]: cores become right-orthonormal and
/// the L factor is pushed into core `to`.
template <Scalar T>
void orthonormalize_right(std::vector<Core<T>>& cores, std::size_t from, std::size_t to) {
    for (std::size_t q = from; q > to; --q) {
        auto qr = qr_reduced<T>(Matrix<T>(right_unfold(cores[q]).adjoint()));
        const auto k = static_cast<std::size_t>(qr.q.cols());
        cores[q] = core_from_matrix<T>(qr.q.adjoint(), k, cores[q].extent, cores[q].right);
        cores[q - 1] = mul_right(cores[q - 1], Matrix<T>(qr.r.adjoint()));
    }
}

template <Scalar T>
void canonicalize(std::vector<Core<T>>& cores, std::size_t center) {
    orthonormalize_left(cores, 0, center);
    if (!cores.empty()) orthonormalize_right(cores, cores.size() - 1, center);
}

template <Scalar T>
std::vector<std::size_t> ranks_of(const std::vector<Core<T>>& cores) {
    std::vector<std::size_t> r;
    r.reserve(cores.size() + 1);
    for (const auto& c : cores) r.push_back(c.left);
    r.push_back(cores.empty() ? 1 : cores.back().right);
    return r;
}

template <Scalar T>
double core_norm(const Core<T>& c) {
    double s = 0.0;
    for (const auto& v : c.data) s += std::norm(v);
    return std::sqrt(s);
}

} // namespace qtt::detail
