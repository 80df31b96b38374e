#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../support/oracle.hpp"
#include "qtt/constructors.hpp"
#include "qtt/errors.hpp"

using namespace qtt;

namespace {

std::vector<double> grid_points(const UniformGrid& g) {
    std::vector<double> x;
    for (std::size_t i = 0; i < g.dims()[0].size(); ++i) x.push_back(g.to_coord(0, i));
    return x;
}

double max_rel(const std::vector<cplx>& got, const std::vector<double>& ref) {
    double err = 0.0, m = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        err = std::max(err, std::abs(got[k] - ref[k]));
        m = std::max(m, std::abs(ref[k]));
    }
    return err / m;
}

void expect_interior_ranks(const TensorTrain& t, std::size_t r) {
    for (std::size_t q = 1; q < t.ncores(); ++q) EXPECT_EQ(t.ranks()[q], r) << "bond " << q;
}

std::vector<cplx> dense_shift(std::size_t n, std::size_t d, bool circular) {
    std::vector<cplx> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const long long diff = (long long)i - (long long)j;
            m[i * n + j] = (diff == (long long)d || (circular && diff == (long long)d - (long long)n)) ? 1.0 : 0.0;
        }
    return m;
}

std::vector<cplx> dense_dft(std::size_t n) {
    std::vector<cplx> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m[i * n + j] = std::polar(1.0, -2.0 * std::numbers::pi * double((i * j) % n) / double(n));
    return m;
}

TensorTrain vector_train(const TrainShape& shape, const std::vector<double>& v) {
    // Identity cores carry the prefix index; the last core holds the values.
    std::vector<Core<double>> cores;
    std::size_t left = 1;
    for (std::size_t q = 0; q + 1 < shape.ncores(); ++q) {
        const std::size_t m = shape.core_extent(q);
        Core<double> c(left, m, left * m);
        for (std::size_t a = 0; a < left; ++a)
            for (std::size_t s = 0; s < m; ++s) c(a, s, a * m + s) = 1.0;
        cores.push_back(std::move(c));
        left *= m;
    }
    cores.emplace_back(left, shape.core_extent(shape.ncores() - 1), 1, dense_to_core_order(shape, v));
    return TensorTrain(shape, std::move(cores));
}

} // namespace

TEST(RankProduct, OuterProductOfScalarsBlocks) {
    RankBlock<double> a(1, 1, {2}), b(1, 1, {3});
    a.data = {1.0, 2.0};
    b.data = {1.0, 10.0, 100.0};
    auto c = rank_product(a, b);
    EXPECT_EQ(c.extents, (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(c.data, (std::vector<double>{1, 10, 100, 2, 20, 200}));
}

TEST(RankProduct, RowSelection) {
    RankBlock<double> sel(1, 2, {});
    sel.data = {1.0, 0.0};
    RankBlock<double> m(2, 1, {2});
    m.data = {1.0, 2.0, 3.0, 4.0};
    auto r = rank_product(sel, m);
    EXPECT_EQ(r.data, (std::vector<double>{1.0, 2.0}));
    EXPECT_THROW(rank_product(m, m), ShapeError);
}

TEST(Constant, Values) {
    auto shape = make_trainshape(30);
    auto t = constant(shape, 1.25);
    for (auto v : oracle::dense(t)) EXPECT_EQ(v, cplx(1.25));
    auto z = constant(make_trainshape({make_dimension(4), make_dimension(6)}), 0.0);
    for (auto v : oracle::dense(z)) EXPECT_EQ(v, cplx(0.0));
    expect_interior_ranks(t, 1);
}

TEST(ExpTrain, MatchesScalar) {
    UniformGrid g(make_dimension(512), make_domain(0.0, 1.0));
    auto t = exp_train(g, 1.0, 0.0);
    std::vector<double> ref;
    for (double x : grid_points(g)) ref.push_back(std::exp(x));
    EXPECT_LT(max_rel(oracle::dense(t), ref), 1e-13);
    expect_interior_ranks(t, 1);
    auto one = exp_train(g, 0.0, 0.3);
    for (auto v : oracle::dense(one)) EXPECT_NEAR(v.real(), 1.0, 1e-15);
}

TEST(ExpTrain, ComplexRate) {
    UniformGrid g(make_dimension(600), make_domain(-1.0, 2.0));
    auto t = exp_train(g, cplx(0.5, 3.0), 0.25);
    auto d = oracle::dense(t);
    auto x = grid_points(g);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(std::abs(d[k] - std::exp(cplx(0.5, 3.0) * (x[k] - 0.25))), 0.0, 1e-12);
}

TEST(TrigTrain, CosOnTernaryGrid) {
    UniformGrid g(make_dimension(729), make_domain(-std::numbers::pi, std::numbers::pi));
    auto t = cos_train(g, 1.0, 0.0);
    EXPECT_FALSE(t.is_complex());
    expect_interior_ranks(t, 2);
    std::vector<double> ref;
    for (double x : grid_points(g)) ref.push_back(std::cos(x));
    EXPECT_LT(max_rel(oracle::dense(t), ref), 1e-12);
}

TEST(TrigTrain, SinIsPhaseShiftedCos) {
    UniformGrid g(make_dimension(600), make_domain(0.0, 3.0));
    const double v = 2.5, x0 = 0.4;
    auto s = sin_train(g, v, x0);
    auto c = cos_train(g, v, x0 + std::numbers::pi / (2 * v));
    EXPECT_LT(oracle::max_diff(oracle::dense(s), oracle::dense(c)), 1e-12);
    std::vector<double> ref;
    for (double x : grid_points(g)) ref.push_back(std::sin(v * (x - x0)));
    EXPECT_LT(max_rel(oracle::dense(s), ref), 1e-12);
}

TEST(Polyval, ExampleCoefficients) {
    UniformGrid g(make_dimension(600), make_domain(0.0, 1.0));
    auto t = polyval_train(g, {1.0, 0.0, 0.1}, 0.5);
    expect_interior_ranks(t, 3);
    std::vector<double> ref;
    for (double x : grid_points(g)) ref.push_back((x - 0.5) * (x - 0.5) + 0.1);
    EXPECT_LT(max_rel(oracle::dense(t), ref), 1e-11);
}

TEST(Polyval, RanksAndConstant) {
    UniformGrid g(make_dimension(512), make_domain(-2.0, 2.0));
    auto cubic = polyval_train(g, {0.5, -1.0, 2.0, 3.0}, 0.1);
    expect_interior_ranks(cubic, 4);
    std::vector<double> ref;
    for (double x : grid_points(g)) {
        const double y = x - 0.1;
        ref.push_back(0.5 * y * y * y - y * y + 2.0 * y + 3.0);
    }
    EXPECT_LT(max_rel(oracle::dense(cubic), ref), 1e-11);
    auto c = polyval_train(g, {4.0});
    expect_interior_ranks(c, 1);
    for (auto v : oracle::dense(c)) EXPECT_NEAR(v.real(), 4.0, 1e-14);
}

TEST(Shift, IdentityAndRange) {
    const auto dim = make_dimension(8);
    auto t = shift_train(dim, 0);
    EXPECT_EQ(oracle::dense(t), dense_shift(8, 0, false));
    EXPECT_THROW(shift_train(dim, 9), RangeError);
}

TEST(Shift, EveryOffsetMixedBases) {
    const auto dim = make_dimension({2, 2, 3});
    for (std::size_t d = 0; d <= 12; ++d) {
        auto t = shift_train(dim, (long long)d, false);
        EXPECT_EQ(oracle::dense(t), dense_shift(12, d, false)) << "d=" << d;
        auto c = shift_train(dim, (long long)d, true);
        EXPECT_EQ(oracle::dense(c), dense_shift(12, d, true)) << "circular d=" << d;
        for (std::size_t q = 1; q < t.ncores(); ++q) EXPECT_LE(t.ranks()[q], 2u);
    }
}

TEST(Shift, NegativeOffsetIsTranspose) {
    const auto dim = make_dimension({2, 2, 3});
    for (long long d = 0; d <= 12; ++d)
        for (bool circ : {false, true}) {
            const auto pos = dense_shift(12, std::size_t(d), circ);
            const auto neg = oracle::dense(shift_train(dim, -d, circ));
            for (std::size_t i = 0; i < 12; ++i)
                for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(neg[i * 12 + j], pos[j * 12 + i]) << d;
        }
    EXPECT_THROW(shift_train(dim, -13), RangeError);
}

TEST(Shift, CircularPermutation) {
    auto c = shift_train(make_dimension(4), 1, true);
    auto d = oracle::dense(c);
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(d[i * 4 + j], cplx(i == (j + 1) % 4 ? 1.0 : 0.0));
}

TEST(Shift, Composition) {
    const auto dim = make_dimension({2, 5, 2});
    for (auto [d1, d2] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 2}, {3, 7}, {0, 20}, {9, 9}}) {
        auto a = shift_train(dim, (long long)d1), b = shift_train(dim, (long long)d2);
        auto ab = einsum(Exact{}, "ij,jk->ik", {a, b});
        EXPECT_EQ(oracle::dense(ab), dense_shift(20, d1 + d2, false));
    }
}

TEST(Toeplitz, CircularSlicesAreShifts) {
    const auto dim = make_dimension({2, 3});
    auto t = toeplitz_train(dim, ToeplitzMode::Circular);
    const auto d = oracle::dense(t);
    for (std::size_t k = 0; k < 6; ++k) {
        auto ref = dense_shift(6, k, true);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(d[(i * 6 + j) * 6 + k], ref[i * 6 + j]);
    }
    auto ones = constant(make_trainshape({dim}), 1.0);
    auto m = einsum(Exact{}, "ijk,k->ij", {t, ones});
    for (auto v : oracle::dense(m)) EXPECT_NEAR(v.real(), 1.0, 1e-14);
}

TEST(Toeplitz, FullModeMatchesDenseToeplitz) {
    const auto dim = make_dimension({2, 3});
    const std::size_t n = 6;
    auto t = toeplitz_train(dim, ToeplitzMode::Full);
    const auto kdim = t.shape().dims()[2];
    EXPECT_EQ(kdim.size(), 2 * n);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    std::vector<double> c(2 * n);
    for (auto& v : c) v = nd(rng);
    auto kern = vector_train(make_trainshape({kdim}), c);
    auto m = einsum(Exact{}, "ijk,k->ij", {t, kern});
    auto d = oracle::dense(m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double ref = i >= j ? c[i - j] : c[2 * n + i - j];
            EXPECT_NEAR(d[i * n + j].real(), ref, 1e-12);
        }
}

TEST(Dft, SmallSizes) {
    for (auto dim : {make_dimension({2, 2}), make_dimension({2, 3}), make_dimension({3, 2, 2}), make_dimension(7)}) {
        auto t = dft_train(dim);
        EXPECT_LT(oracle::max_diff(oracle::dense(t), dense_dft(dim.size())), 1e-12) << dim.size();
        auto u = dft_train(dim, true);
        auto ref = dense_dft(dim.size());
        for (auto& v : ref) v /= std::sqrt(double(dim.size()));
        EXPECT_LT(oracle::max_diff(oracle::dense(u), ref), 1e-12);
    }
}

TEST(Dft, AppliedToReversedVector) {
    const auto dim = make_dimension({2, 3, 2});
    const std::size_t n = dim.size();
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = std::cos(0.3 * double(k)) + 0.1 * double(k % 3);
    auto xt = vector_train(reversed_vector_shape(dim), x);
    const auto f = dft_train(dim);
    auto y = einsum(Exact{}, "ij,j->i", {f, xt});
    auto ref = oracle::matmul(dense_dft(n), oracle::to_cplx(x), n, n, 1);
    EXPECT_LT(oracle::max_diff(oracle::dense(y), ref), 1e-11);
}

TEST(Dft, TwiceGivesReversal) {
    const auto dim = make_dimension(16);
    const std::size_t n = 16;
    auto f = oracle::dense(dft_train(dim));
    auto d = oracle::matmul(f, f, n, n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            EXPECT_NEAR(std::abs(d[i * n + k] - cplx((i + k) % n == 0 ? double(n) : 0.0)), 0.0, 1e-10);
}
