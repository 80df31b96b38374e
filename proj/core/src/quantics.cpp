#include "qtt/quantics.hpp"

#include <cmath>
#include <string>

#include "qtt/errors.hpp"

namespace qtt {

Dimension::Dimension(std::vector<std::size_t> bases) {
    if (bases.empty()) throw InvalidDimension("dimension needs at least one digit");
    digits_.resize(bases.size());
    std::size_t factor = 1;
    for (std::size_t q = bases.size(); q-- > 0;) {
        if (bases[q] == 0) throw InvalidDimension("digit base must be positive");
        digits_[q] = Digit{bases[q], factor};
        factor *= bases[q];
    }
    size_ = factor;
}

std::vector<std::size_t> Dimension::bases() const {
    std::vector<std::size_t> out;
    out.reserve(digits_.size());
    for (const auto& d : digits_) out.push_back(d.base);
    return out;
}

std::vector<std::size_t> Dimension::to_digits(std::size_t idx) const {
    if (idx >= size_)
        throw RangeError("index " + std::to_string(idx) + " out of range for dimension of size " +
                         std::to_string(size_));
    std::vector<std::size_t> out(digits_.size());
    for (std::size_t q = 0; q < digits_.size(); ++q)
        out[q] = (idx % (digits_[q].base * digits_[q].factor)) / digits_[q].factor;
    return out;
}

std::vector<std::vector<std::size_t>> Dimension::to_digits(std::span<const std::size_t> idxs) const {
    std::vector<std::vector<std::size_t>> out(digits_.size(), std::vector<std::size_t>(idxs.size()));
    for (std::size_t k = 0; k < idxs.size(); ++k) {
        auto d = to_digits(idxs[k]);
        for (std::size_t q = 0; q < d.size(); ++q) out[q][k] = d[q];
    }
    return out;
}

std::size_t Dimension::to_idx(std::span<const std::size_t> digits) const {
    if (digits.size() != digits_.size())
        throw RangeError("expected " + std::to_string(digits_.size()) + " digits, got " +
                         std::to_string(digits.size()));
    std::size_t idx = 0;
    for (std::size_t q = 0; q < digits.size(); ++q) {
        if (digits[q] >= digits_[q].base)
            throw RangeError("digit " + std::to_string(q) + " value " + std::to_string(digits[q]) +
                             " exceeds base " + std::to_string(digits_[q].base));
        idx += digits[q] * digits_[q].factor;
    }
    return idx;
}

std::vector<std::size_t> Dimension::to_idxs(const std::vector<std::vector<std::size_t>>& digits) const {
    if (digits.size() != digits_.size())
        throw RangeError("expected " + std::to_string(digits_.size()) + " digit rows");
    const std::size_t count = digits.empty() ? 0 : digits.front().size();
    std::vector<std::size_t> out(count);
    std::vector<std::size_t> buf(digits_.size());
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t q = 0; q < digits_.size(); ++q) {
            if (digits[q].size() != count) throw RangeError("ragged digit rows");
            buf[q] = digits[q][k];
        }
        out[k] = to_idx(buf);
    }
    return out;
}

Dimension Dimension::reversed() const {
    auto b = bases();
    return Dimension(std::vector<std::size_t>(b.rbegin(), b.rend()));
}

Dimension make_dimension(long long size) {
    if (size < 1) throw InvalidDimension("dimension size must be >= 1, got " + std::to_string(size));
    if (size == 1) return Dimension(std::vector<std::size_t>{1});
    std::vector<std::size_t> bases;
    auto n = static_cast<std::size_t>(size);
    for (std::size_t p = 2; p * p <= n; ++p) {
        while (n % p == 0) {
            bases.push_back(p);
            n /= p;
        }
    }
    if (n > 1) bases.push_back(n);
    return Dimension(std::move(bases));
}

Dimension make_dimension(std::span<const long long> bases) {
    if (bases.empty()) throw InvalidDimension("empty base sequence");
    std::vector<std::size_t> b;
    b.reserve(bases.size());
    for (long long v : bases) {
        if (v < 1) throw InvalidDimension("digit base must be >= 1, got " + std::to_string(v));
        b.push_back(static_cast<std::size_t>(v));
    }
    return Dimension(std::move(b));
}

Dimension make_dimension(std::initializer_list<long long> bases) {
    return make_dimension(std::span<const long long>(bases.begin(), bases.size()));
}

Domain make_domain(double lower, double upper) {
    if (!(upper > lower)) throw InvalidDimension("domain requires upper > lower");
    return Domain{lower, upper};
}

UniformGrid::UniformGrid(std::vector<Dimension> dims, std::vector<Domain> domains)
    : dims_(std::move(dims)), domains_(std::move(domains)) {
    if (dims_.size() != domains_.size())
        throw ShapeError("grid needs one domain per dimension");
    for (const auto& d : domains_)
        if (!(d.upper > d.lower)) throw InvalidDimension("domain requires upper > lower");
}

UniformGrid::UniformGrid(Dimension dim, Domain domain)
    : UniformGrid(std::vector<Dimension>{std::move(dim)}, std::vector<Domain>{domain}) {}

double UniformGrid::spacing(std::size_t axis) const {
    const auto n = dims_.at(axis).size();
    const double div = n > 1 ? static_cast<double>(n - 1) : 1.0;
    return (domains_[axis].upper - domains_[axis].lower) / div;
}

double UniformGrid::to_coord(std::size_t axis, std::size_t idx) const {
    const auto n = dims_.at(axis).size();
    if (idx >= n) throw RangeError("grid index " + std::to_string(idx) + " out of range");
    const auto& dom = domains_[axis];
    if (n == 1) return dom.lower;
    if (idx == n - 1) return dom.upper;
    return dom.lower + (dom.upper - dom.lower) * static_cast<double>(idx) / static_cast<double>(n - 1);
}

std::size_t UniformGrid::to_idx(std::size_t axis, double coord) const {
    const auto n = dims_.at(axis).size();
    const auto& dom = domains_[axis];
    const double h = spacing(axis);
    if (!std::isfinite(coord) || coord < dom.lower - 0.5 * h || coord > dom.upper + 0.5 * h)
        throw RangeError("coordinate " + std::to_string(coord) + " outside grid domain");
    // Ties round up; a small slack keeps coordinates like 0.35 on a 0.1 grid from
    // landing on the wrong side of the midpoint.
    const double u = (coord - dom.lower) / h;
    const double base = std::floor(u);
    const double t = (u - base >= 0.5 - 1e-9) ? base + 1.0 : base;
    if (t <= 0.0) return 0;
    const auto idx = static_cast<std::size_t>(t);
    return idx >= n ? n - 1 : idx;
}

std::vector<std::vector<double>> UniformGrid::to_coords(const std::vector<std::vector<std::size_t>>& idxs) const {
    if (idxs.size() != dims_.size()) throw ShapeError("need one index array per grid axis");
    std::vector<std::vector<double>> out(idxs.size());
    for (std::size_t a = 0; a < idxs.size(); ++a) {
        out[a].reserve(idxs[a].size());
        for (auto i : idxs[a]) out[a].push_back(to_coord(a, i));
    }
    return out;
}

std::vector<std::vector<std::size_t>> UniformGrid::to_idxs(const std::vector<std::vector<double>>& coords) const {
    if (coords.size() != dims_.size()) throw ShapeError("need one coordinate array per grid axis");
    std::vector<std::vector<std::size_t>> out(coords.size());
    for (std::size_t a = 0; a < coords.size(); ++a) {
        out[a].reserve(coords[a].size());
        for (double c : coords[a]) out[a].push_back(to_idx(a, c));
    }
    return out;
}

} // namespace qtt
