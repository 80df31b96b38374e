#pragma once

#include <cstddef>
#include <vector>

#include "qtt/core.hpp"

namespace qtt::detail {

/// Permutes the digits of a core's local index. `bases` describes the current
/// group; new digit k is old digit order[k].
template <Scalar T>
Core<T> reorder_core(const Core<T>& c, const std::vector<std::size_t>& bases, const std::vector<std::size_t>& order) {
    const std::size_t k = bases.size();
    bool identity = true;
    for (std::size_t j = 0; j < k; ++j) identity &= order[j] == j;
    if (identity) return c;

    std::vector<std::size_t> old_stride(k), new_stride(k);
    std::size_t s = 1;
    for (std::size_t j = k; j-- > 0;) {
        old_stride[j] = s;
        s *= bases[j];
    }
    s = 1;
    for (std::size_t j = k; j-- > 0;) {
        new_stride[j] = s;
        s *= bases[order[j]];
    }
    std::vector<std::size_t> map(c.extent);
    for (std::size_t loc = 0; loc < c.extent; ++loc) {
        std::size_t out = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t digit = (loc / old_stride[order[j]]) % bases[order[j]];
            out += digit * new_stride[j];
        }
        map[loc] = out;
    }
    Core<T> r(c.left, c.extent, c.right);
    for (std::size_t a = 0; a < c.left; ++a)
        for (std::size_t loc = 0; loc < c.extent; ++loc)
            for (std::size_t b = 0; b < c.right; ++b) r(a, map[loc], b) = c(a, loc, b);
    return r;
}

} // namespace qtt::detail
