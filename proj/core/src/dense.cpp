#include "qtt/dense.hpp"

#include <functional>
#include <numeric>

#include "qtt/errors.hpp"

namespace qtt {

namespace {

std::size_t product(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

} // namespace

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (product(shape_) != real().size()) throw ShapeError("dense array size does not match its shape");
}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<cplx> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (product(shape_) != std::get<std::vector<cplx>>(values_).size()) throw ShapeError("dense array size does not match its shape");
}

std::size_t DenseArray::size() const { return product(shape_); }

const std::vector<double>& DenseArray::real() const {
    if (is_complex()) throw ShapeError("dense array is complex");
    return std::get<std::vector<double>>(values_);
}

std::vector<cplx> DenseArray::complex() const {
    if (is_complex()) return std::get<std::vector<cplx>>(values_);
    const auto& r = std::get<std::vector<double>>(values_);
    return {r.begin(), r.end()};
}

cplx DenseArray::at(std::size_t flat) const {
    return std::visit([flat](const auto& v) { return cplx(v.at(flat)); }, values_);
}

} // namespace qtt
