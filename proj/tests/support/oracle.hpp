#pragma once

// Brute-force dense references used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qtt/tensortrain.hpp"

namespace qtt::oracle {

/// Entry-by-entry evaluation of every multi-index, row-major.
inline std::vector<cplx> enumerate(const TensorTrain& t) {
    const auto sizes = t.shape().sizes();
    std::vector<cplx> out(t.shape().size());
    std::vector<std::size_t> idx(sizes.size(), 0);
    for (std::size_t f = 0; f < out.size(); ++f) {
        out[f] = evaluate_at(t, idx);
        for (std::size_t d = sizes.size(); d-- > 0;) {
            if (++idx[d] < sizes[d]) break;
            idx[d] = 0;
        }
    }
    return out;
}

inline std::vector<cplx> dense(const TensorTrain& t) { return to_tensor(t).complex(); }

inline double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (auto x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = a.size() == b.size() ? 0.0 : INFINITY;
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

/// max|a - b| / max|b|
inline double rel_err(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    const double s = max_abs(b);
    return max_diff(a, b) / (s > 0 ? s : 1.0);
}

inline double norm2(const std::vector<cplx>& v) {
    double s = 0.0;
    for (auto x : v) s += std::norm(x);
    return std::sqrt(s);
}

/// Row-major (rows x inner) times (inner x cols).
inline std::vector<cplx> matmul(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t rows,
                                std::size_t inner, std::size_t cols) {
    std::vector<cplx> c(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < inner; ++k)
            for (std::size_t j = 0; j < cols; ++j) c[i * cols + j] += a[i * inner + k] * b[k * cols + j];
    return c;
}

inline std::vector<cplx> to_cplx(const std::vector<double>& v) { return {v.begin(), v.end()}; }

} // namespace qtt::oracle

#include <map>
#include <string>

namespace qtt::oracle {

struct DenseTerm {
    std::string letters;
    std::vector<std::size_t> sizes;
    std::vector<cplx> values; // row-major
};

/// Direct summation over every letter assignment.
inline std::vector<cplx> einsum(const std::vector<DenseTerm>& terms, const std::string& out) {
    std::map<char, std::size_t> size;
    std::string all;
    for (const auto& t : terms)
        for (std::size_t k = 0; k < t.letters.size(); ++k) {
            size[t.letters[k]] = t.sizes[k];
            if (all.find(t.letters[k]) == std::string::npos) all.push_back(t.letters[k]);
        }
    std::size_t out_size = 1;
    for (char c : out) out_size *= size[c];
    std::vector<cplx> res(out_size);
    std::map<char, std::size_t> val;
    for (char c : all) val[c] = 0;
    auto flat = [&](const std::string& letters) {
        std::size_t f = 0;
        for (char c : letters) f = f * size[c] + val[c];
        return f;
    };
    while (true) {
        cplx p = 1.0;
        for (const auto& t : terms) p *= t.values[flat(t.letters)];
        res[flat(out)] += p;
        std::size_t k = all.size();
        while (k-- > 0) {
            if (++val[all[k]] < size[all[k]]) break;
            val[all[k]] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) break;
    }
    return res;
}

inline DenseTerm term(const TensorTrain& t, const std::string& letters) {
    return {letters, t.shape().sizes(), dense(t)};
}

} // namespace qtt::oracle
