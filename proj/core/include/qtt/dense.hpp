#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "qtt/core.hpp"

namespace qtt {

/// Row-major dense array over unfactorized dimensions, real or complex.
class DenseArray {
public:
    DenseArray() = default;
    DenseArray(std::vector<std::size_t> shape, std::vector<double> values);
    DenseArray(std::vector<std::size_t> shape, std::vector<cplx> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const;
    bool is_complex() const { return std::holds_alternative<std::vector<cplx>>(values_); }
    ScalarKind kind() const { return is_complex() ? ScalarKind::Complex : ScalarKind::Real; }

    /// Real storage; throws ShapeError for complex arrays.
    const std::vector<double>& real() const;
    /// Complex view of the values (copied and promoted when real).
    std::vector<cplx> complex() const;

    template <Scalar T>
    const std::vector<T>& values() const {
        return std::get<std::vector<T>>(values_);
    }

    cplx at(std::size_t flat) const;

private:
    std::vector<std::size_t> shape_;
    std::variant<std::vector<double>, std::vector<cplx>> values_;
};

} // namespace qtt
