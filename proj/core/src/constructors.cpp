#include "qtt/constructors.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "qtt/errors.hpp"

namespace qtt {

template <Scalar T>
RankBlock<T>::RankBlock(std::size_t r, std::size_t c, std::vector<std::size_t> ext)
    : rows(r), cols(c), extents(std::move(ext)) {
    data.assign(rows * local_extent() * cols, T(0));
}

template <Scalar T>
std::size_t RankBlock<T>::local_extent() const {
    return std::accumulate(extents.begin(), extents.end(), std::size_t{1}, std::multiplies<>());
}

template <Scalar T>
RankBlock<T> rank_product(const RankBlock<T>& a, const RankBlock<T>& b) {
    if (a.cols != b.rows)
        throw ShapeError("rank product needs " + std::to_string(a.cols) + " block rows, got " +
                         std::to_string(b.rows));
    auto ext = a.extents;
    ext.insert(ext.end(), b.extents.begin(), b.extents.end());
    RankBlock<T> out(a.rows, b.cols, std::move(ext));
    const std::size_t ea = a.local_extent(), eb = b.local_extent();
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t la = 0; la < ea; ++la)
            for (std::size_t j = 0; j < a.cols; ++j) {
                const T x = a(i, la, j);
                if (x == T(0)) continue;
                for (std::size_t lb = 0; lb < eb; ++lb)
                    for (std::size_t k = 0; k < b.cols; ++k) out(i, la * eb + lb, k) += x * b(j, lb, k);
            }
    return out;
}

template struct RankBlock<double>;
template struct RankBlock<cplx>;
template RankBlock<double> rank_product(const RankBlock<double>&, const RankBlock<double>&);
template RankBlock<cplx> rank_product(const RankBlock<cplx>&, const RankBlock<cplx>&);

namespace {

template <Scalar T>
TensorTrain constant_impl(const TrainShape& shape, T v) {
    std::vector<Core<T>> cores;
    for (std::size_t q = 0; q < shape.ncores(); ++q) {
        const std::size_t m = shape.core_extent(q);
        cores.emplace_back(1, m, 1, std::vector<T>(m, q == 0 ? v : T(1)));
    }
    return TensorTrain(shape.with_ranks(std::vector<std::size_t>(shape.ncores() + 1, 1)), std::move(cores));
}

struct GridAxis {
    TrainShape shape;
    std::vector<std::size_t> bases;
    std::vector<double> step; ///< coordinate increment per unit of digit q
    double lower;
};

GridAxis grid_axis(const UniformGrid& grid) {
    if (grid.naxes() != 1) throw ShapeError("expected a single-axis grid, got " + std::to_string(grid.naxes()));
    const Dimension& dim = grid.dims()[0];
    GridAxis ax{make_trainshape({dim}, LayoutMode::Block), dim.bases(), {}, grid.domains()[0].lower};
    const double h = grid.spacing(0);
    for (const auto& d : dim) ax.step.push_back(h * static_cast<double>(d.factor));
    return ax;
}

template <Scalar T>
TensorTrain exp_impl(const UniformGrid& grid, T v, double x0) {
    const auto ax = grid_axis(grid);
    std::vector<Core<T>> cores;
    for (std::size_t q = 0; q < ax.bases.size(); ++q) {
        Core<T> c(1, ax.bases[q], 1);
        const T offset = q == 0 ? v * (ax.lower - x0) : T(0);
        for (std::size_t s = 0; s < ax.bases[q]; ++s) c.data[s] = std::exp(v * (ax.step[q] * double(s)) + offset);
        cores.push_back(std::move(c));
    }
    return TensorTrain(ax.shape, std::move(cores));
}

/// cos or sin of sum_q theta_q(x_q) as (e0 or e1) R(theta_1) ... R(theta_n) e0,
/// R the 2x2 rotation matrix.
TensorTrain trig_impl(const UniformGrid& grid, double v, double x0, bool sine) {
    const auto ax = grid_axis(grid);
    const std::size_t n = ax.bases.size();
    const double shift = v * (ax.lower - x0) / double(n);
    std::vector<Core<double>> cores;
    for (std::size_t q = 0; q < n; ++q) {
        const std::size_t b = ax.bases[q];
        const std::size_t l = q == 0 ? 1 : 2, r = q + 1 == n ? 1 : 2;
        Core<double> c(l, b, r);
        for (std::size_t s = 0; s < b; ++s) {
            const double th = v * ax.step[q] * double(s) + shift;
            const double rot[2][2] = {{std::cos(th), -std::sin(th)}, {std::sin(th), std::cos(th)}};
            for (std::size_t a = 0; a < l; ++a)
                for (std::size_t e = 0; e < r; ++e) {
                    const std::size_t row = q == 0 ? (sine ? 1 : 0) : a;
                    c(a, s, e) = rot[row][e];
                }
        }
        cores.push_back(std::move(c));
    }
    return TensorTrain(ax.shape, std::move(cores));
}

double binom(std::size_t t, std::size_t s) {
    double r = 1.0;
    for (std::size_t k = 1; k <= s; ++k) r = r * double(t - s + k) / double(k);
    return r;
}

} // namespace

TensorTrain constant(const TrainShape& shape, double v) { return constant_impl(shape, v); }
TensorTrain constant(const TrainShape& shape, cplx v) { return constant_impl(shape, v); }

TensorTrain exp_train(const UniformGrid& grid, double v, double x0) { return exp_impl(grid, v, x0); }
TensorTrain exp_train(const UniformGrid& grid, cplx v, double x0) { return exp_impl(grid, v, x0); }

TensorTrain cos_train(const UniformGrid& grid, double v, double x0) { return trig_impl(grid, v, x0, false); }
TensorTrain sin_train(const UniformGrid& grid, double v, double x0) { return trig_impl(grid, v, x0, true); }

TensorTrain polyval_train(const UniformGrid& grid, const std::vector<double>& coeffs, double x0) {
    if (coeffs.empty()) throw ShapeError("polyval needs at least one coefficient");
    const auto ax = grid_axis(grid);
    const std::size_t n = ax.bases.size();
    const std::size_t p = coeffs.size() - 1;
    const std::vector<double> a(coeffs.rbegin(), coeffs.rend()); // ascending degree
    const double shift = (ax.lower - x0) / double(n);

    // The bond carries powers 0..p of the sum of the remaining terms.
    std::vector<Core<double>> cores;
    for (std::size_t q = 0; q < n; ++q) {
        const std::size_t b = ax.bases[q];
        const std::size_t l = q == 0 ? 1 : p + 1, r = q + 1 == n ? 1 : p + 1;
        Core<double> c(l, b, r);
        for (std::size_t s = 0; s < b; ++s) {
            const double xt = ax.step[q] * double(s) + shift;
            std::vector<double> pw(p + 1, 1.0);
            for (std::size_t k = 1; k <= p; ++k) pw[k] = pw[k - 1] * xt;
            if (n == 1) {
                for (std::size_t t = 0; t <= p; ++t) c(0, s, 0) += a[t] * pw[t];
            } else if (q == 0) {
                for (std::size_t u = 0; u <= p; ++u)
                    for (std::size_t t = u; t <= p; ++t) c(0, s, u) += a[t] * binom(t, u) * pw[t - u];
            } else if (q + 1 == n) {
                for (std::size_t t = 0; t <= p; ++t) c(t, s, 0) = pw[t];
            } else {
                for (std::size_t t = 0; t <= p; ++t)
                    for (std::size_t u = 0; u <= t; ++u) c(t, s, u) = binom(t, u) * pw[t - u];
            }
        }
        cores.push_back(std::move(c));
    }
    return TensorTrain(ax.shape, std::move(cores));
}

namespace {

/// Q^b_d (i - j == d) or R^b_d (i - j == d - b) for any integer d.
bool shift_entry(bool r_block, std::size_t b, long long d, std::size_t i, std::size_t j) {
    const long long diff = static_cast<long long>(i) - static_cast<long long>(j);
    return diff == (r_block ? d - static_cast<long long>(b) : d);
}

/// Block [[Q_d, Q_{d+1}], [R_d, R_{d+1}]] (or its first column when `last`)
/// over digits (i, j), with d the value of the block's own k digit when
/// `with_k` is set.
RankBlock<double> shift_block(std::size_t b, long long d, bool last, bool with_k) {
    const std::size_t cols = last ? 1 : 2;
    RankBlock<double> blk(2, cols, with_k ? std::vector<std::size_t>{b, b, b} : std::vector<std::size_t>{b, b});
    const std::size_t nk = with_k ? b : 1;
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < b; ++j)
                    for (std::size_t k = 0; k < nk; ++k) {
                        const long long dd = (with_k ? static_cast<long long>(k) : d) + static_cast<long long>(c);
                        if (shift_entry(r == 1, b, dd, i, j)) blk(r, (i * b + j) * nk + k, c) = 1.0;
                    }
    return blk;
}

RankBlock<double> selector(double q, double r) {
    RankBlock<double> s(1, 2, {});
    s(0, 0, 0) = q;
    s(0, 0, 1) = r;
    return s;
}

/// Chains the per-digit blocks under a leading selector; returns the cores.
std::vector<Core<double>> chain(const RankBlock<double>& head, std::vector<RankBlock<double>> blocks) {
    std::vector<Core<double>> cores;
    blocks.front() = rank_product(head, blocks.front());
    for (const auto& b : blocks) cores.push_back(b.to_core());
    return cores;
}

} // namespace

TensorTrain shift_train(const Dimension& dim, long long offset, bool circular) {
    const auto N = static_cast<long long>(dim.size());
    if (offset > N || offset < -N)
        throw RangeError("shift " + std::to_string(offset) + " outside [-" + std::to_string(N) + ", " +
                         std::to_string(N) + "]");
    if (offset < 0) {
        // Transpose: swap the i and j digit of every core.
        auto t = shift_train(dim, -offset, circular);
        auto cores = cores_as<double>(t);
        for (std::size_t q = 0; q < cores.size(); ++q) {
            const std::size_t m = dim[q].base;
            Core<double> c(cores[q].left, m * m, cores[q].right);
            for (std::size_t a = 0; a < c.left; ++a)
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j)
                        for (std::size_t b = 0; b < c.right; ++b) c(a, j * m + i, b) = cores[q](a, i * m + j, b);
            cores[q] = std::move(c);
        }
        return TensorTrain(t.shape(), std::move(cores));
    }
    const auto d = static_cast<std::size_t>(offset);
    const std::size_t n = dim.ndigits();
    // Mixed-radix digits of d; d == N puts b_0 in the leading digit.
    std::vector<long long> dq(n);
    std::size_t rest = d;
    for (std::size_t q = 0; q < n; ++q) {
        dq[q] = static_cast<long long>(rest / dim[q].factor);
        rest %= dim[q].factor;
    }
    std::vector<RankBlock<double>> blocks;
    for (std::size_t q = 0; q < n; ++q) blocks.push_back(shift_block(dim[q].base, dq[q], q + 1 == n, false));
    auto cores = chain(selector(1.0, circular ? 1.0 : 0.0), std::move(blocks));
    return TensorTrain(make_trainshape({dim, dim}, LayoutMode::Interleaved), std::move(cores));
}

TensorTrain dirichlet_laplacian(const Dimension& dim, double h) {
    if (!(h > 0.0)) throw RangeError("grid spacing must be positive");
    const double s = 1.0 / (h * h);
    const TensorTrain lo = scaled(shift_train(dim, 1), -s);
    const TensorTrain up = scaled(shift_train(dim, -1), -s);
    const TensorTrain id = scaled(shift_train(dim, 0), 2.0 * s);
    return truncate(Decomposition{{}}, add(Exact{}, {lo, up, id}));
}

TensorTrain toeplitz_train(const Dimension& dim, ToeplitzMode mode) {
    const std::size_t n = dim.ndigits();
    std::vector<RankBlock<double>> blocks;
    for (std::size_t q = 0; q < n; ++q) blocks.push_back(shift_block(dim[q].base, 0, q + 1 == n, true));

    if (mode == ToeplitzMode::Circular) {
        auto cores = chain(selector(1.0, 1.0), std::move(blocks));
        return TensorTrain(make_trainshape({dim, dim, dim}, LayoutMode::Interleaved), std::move(cores));
    }

    // Leading k digit picks Q (k0 = 0, i >= j) or R (k0 = 1, i < j).
    auto kb = dim.bases();
    kb.insert(kb.begin(), 2);
    std::vector<long long> kbl(kb.begin(), kb.end());
    const Dimension kdim = make_dimension(std::span<const long long>(kbl));
    std::vector<DigitGroup> groups{{DigitRef{2, 0}}};
    for (std::size_t q = 0; q < n; ++q) groups.push_back({DigitRef{0, q}, DigitRef{1, q}, DigitRef{2, q + 1}});
    Core<double> head(1, 2, 2, {1.0, 0.0, 0.0, 1.0});
    std::vector<Core<double>> cores{head};
    for (const auto& b : blocks) cores.push_back(b.to_core());
    return TensorTrain(TrainShape({dim, dim, kdim}, std::move(groups)), std::move(cores));
}

TrainShape reversed_vector_shape(const Dimension& dim) {
    std::vector<DigitGroup> groups;
    for (std::size_t q = dim.ndigits(); q-- > 0;) groups.push_back({DigitRef{0, q}});
    return TrainShape({dim}, std::move(groups));
}

TensorTrain dft_train(const Dimension& dim, bool normalized, const TruncationRule& rule, OpStats* stats) {
    rule.validate();
    const std::size_t n = dim.ndigits();
    const std::size_t N = dim.size();
    std::vector<DigitGroup> groups;
    for (std::size_t q = 0; q < n; ++q) groups.push_back({DigitRef{0, q}, DigitRef{1, n - 1 - q}});
    const TrainShape shape({dim, dim}, groups);

    auto phase = [N](std::size_t e) {
        return std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(e % N) / static_cast<double>(N));
    };

    // T_q(i_q, j) = exp(-2 pi i i_q c_q j / N): the bond carries u = i_q,
    // pinned to i_q on core q and read by every core's j digit.
    auto factor_train = [&](std::size_t q) {
        const std::size_t bq = dim[q].base;
        const std::size_t uq = dim[q].factor % N;
        std::vector<Core<cplx>> cores;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t bi = dim[k].base, bj = dim[n - 1 - k].base;
            const std::size_t cj = dim[n - 1 - k].factor % N;
            const std::size_t l = k == 0 ? 1 : bq, r = k + 1 == n ? 1 : bq;
            Core<cplx> c(l, bi * bj, r);
            for (std::size_t u = 0; u < bq; ++u)
                for (std::size_t i = 0; i < bi; ++i) {
                    if (k == q && i != u) continue;
                    for (std::size_t j = 0; j < bj; ++j) {
                        const cplx v = phase(((u * uq) % N) * ((j * cj) % N));
                        c(k == 0 ? 0 : u, i * bj + j, k + 1 == n ? 0 : u) = v;
                    }
                }
            cores.push_back(std::move(c));
        }
        return TensorTrain(shape, std::move(cores));
    };

    TensorTrain acc = factor_train(0);
    double discarded = 0.0;
    for (std::size_t q = 1; q < n; ++q) {
        OpStats st;
        const TensorTrain tq = factor_train(q);
        acc = einsum(Decomposition{rule, 2}, "ij,ij->ij", {acc, tq}, &st);
        discarded += st.discarded;
    }
    if (normalized) acc = scaled(acc, 1.0 / std::sqrt(static_cast<double>(N)));
    if (stats) stats->discarded = normalized ? discarded / std::sqrt(static_cast<double>(N)) : discarded;
    return acc;
}

} // namespace qtt
