#pragma once

#include <complex>
#include <cstddef>
#include <type_traits>
#include <vector>

namespace qtt {

using cplx = std::complex<double>;

template <class T>
concept Scalar = std::is_same_v<T, double> || std::is_same_v<T, cplx>;

enum class ScalarKind : unsigned char { Real = 0, Complex = 1 };

template <Scalar T>
constexpr ScalarKind scalar_kind_of() {
    return std::is_same_v<T, double> ? ScalarKind::Real : ScalarKind::Complex;
}

/// Dense three-way array (left rank, local digit index, right rank), row-major
/// with the left rank slowest. The local index enumerates the core's digit
/// group with the first digit slowest.
template <Scalar T>
struct Core {
    std::size_t left = 1;
    std::size_t extent = 1;
    std::size_t right = 1;
    std::vector<T> data = std::vector<T>(1);

    Core() = default;
    Core(std::size_t l, std::size_t m, std::size_t r) : left(l), extent(m), right(r), data(l * m * r) {}
    Core(std::size_t l, std::size_t m, std::size_t r, std::vector<T> values)
        : left(l), extent(m), right(r), data(std::move(values)) {}

    T& operator()(std::size_t a, std::size_t s, std::size_t b) { return data[(a * extent + s) * right + b]; }
    const T& operator()(std::size_t a, std::size_t s, std::size_t b) const {
        return data[(a * extent + s) * right + b];
    }

    std::size_t size() const { return data.size(); }

    friend bool operator==(const Core&, const Core&) = default;
};

inline double conj_if(double v) { return v; }
inline cplx conj_if(cplx v) { return std::conj(v); }

} // namespace qtt
