#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qtt {

/// One mixed-radix position of a factorized index: its radix and place value.
struct Digit {
    std::size_t base = 1;
    std::size_t factor = 1;

    friend bool operator==(const Digit&, const Digit&) = default;
};

/// A factorized index range. Digit q has place value equal to the product of
/// the bases of all later digits, so the first digit is the most significant.
class Dimension {
public:
    Dimension() : Dimension(std::vector<std::size_t>{1}) {}
    explicit Dimension(std::vector<std::size_t> bases);

    std::size_t size() const { return size_; }
    std::size_t ndigits() const { return digits_.size(); }
    const Digit& operator[](std::size_t q) const { return digits_[q]; }
    const std::vector<Digit>& digits() const { return digits_; }
    std::vector<std::size_t> bases() const;

    auto begin() const { return digits_.begin(); }
    auto end() const { return digits_.end(); }

    /// Digits of one flat index; throws RangeError when idx >= size().
    std::vector<std::size_t> to_digits(std::size_t idx) const;
    /// Batched form: result[q][k] is digit q of idxs[k].
    std::vector<std::vector<std::size_t>> to_digits(std::span<const std::size_t> idxs) const;

    std::size_t to_idx(std::span<const std::size_t> digits) const;
    /// Inverse of the batched to_digits.
    std::vector<std::size_t> to_idxs(const std::vector<std::vector<std::size_t>>& digits) const;

    /// The same digits in reverse significance order.
    Dimension reversed() const;

    friend bool operator==(const Dimension& a, const Dimension& b) { return a.digits_ == b.digits_; }

private:
    std::vector<Digit> digits_;
    std::size_t size_ = 1;
};

/// Prime factorization with ascending bases (20 -> 2,2,5). Size 1 gives a
/// single base-1 digit.
Dimension make_dimension(long long size);
/// Explicit bases taken verbatim.
Dimension make_dimension(std::span<const long long> bases);
Dimension make_dimension(std::initializer_list<long long> bases);

struct Domain {
    double lower = 0.0;
    double upper = 1.0;
};

Domain make_domain(double lower, double upper);

/// Tensor product of uniform 1D grids, one per dimension.
class UniformGrid {
public:
    UniformGrid(std::vector<Dimension> dims, std::vector<Domain> domains);
    UniformGrid(Dimension dim, Domain domain);

    std::size_t naxes() const { return dims_.size(); }
    const std::vector<Dimension>& dims() const { return dims_; }
    const std::vector<Domain>& domains() const { return domains_; }

    /// Grid spacing of one axis; size-1 axes use a divisor of 1.
    double spacing(std::size_t axis) const;

    double to_coord(std::size_t axis, std::size_t idx) const;
    std::size_t to_idx(std::size_t axis, double coord) const;

    /// Per-axis batched conversions; idxs[a] holds the indices for axis a.
    std::vector<std::vector<double>> to_coords(const std::vector<std::vector<std::size_t>>& idxs) const;
    std::vector<std::vector<std::size_t>> to_idxs(const std::vector<std::vector<double>>& coords) const;

private:
    std::vector<Dimension> dims_;
    std::vector<Domain> domains_;
};

} // namespace qtt
