#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "../support/oracle.hpp"
#include "qtt/cross.hpp"
#include "qtt/errors.hpp"

using namespace qtt;

namespace {

RealFunction smooth2d(std::size_t n) {
    return [n](const IndexBatch& idx) {
        std::vector<double> out(idx[0].size());
        for (std::size_t k = 0; k < out.size(); ++k) {
            const double x = double(idx[0][k]) / n, y = double(idx[1][k]) / n;
            out[k] = std::exp(-x * y) + std::sin(3 * x + y);
        }
        return out;
    };
}

} // namespace

TEST(Cross, RecoversLowRankTrainExactly) {
    TrainShape shape = make_trainshape({make_dimension(64), make_dimension(64)});
    std::vector<std::size_t> ranks(shape.ncores() + 1, 3);
    ranks.front() = ranks.back() = 1;
    auto t = random_train(shape.with_ranks(ranks), 1);
    RealFunction f = [&](const IndexBatch& idx) { return evaluate(t, idx).real(); };
    CrossStats st;
    auto c = cross_build(shape, f, Cross{8, 1e-12, 6, 0}, &st);
    EXPECT_LT(oracle::rel_err(oracle::dense(c), oracle::dense(t)), 1e-10);
    EXPECT_LE(st.probe_error, 1e-10);
    EXPECT_GT(st.evaluations, 0u);
    EXPECT_EQ(st.pivots.size(), shape.ncores() - 1);
}

TEST(Cross, Constant) {
    auto shape = make_trainshape(1024);
    RealFunction f = [](const IndexBatch& idx) { return std::vector<double>(idx[0].size(), 2.5); };
    auto c = cross_build(shape, f, Cross{4, 1e-12, 4, 0});
    EXPECT_EQ(c.shape().max_rank(), 1u);
    EXPECT_NEAR(evaluate_at(c, std::vector<std::size_t>{777}).real(), 2.5, 1e-12);
}

TEST(Cross, SmoothFunctionOfTwoVariables) {
    const std::size_t n = 256;
    auto shape = make_trainshape({make_dimension(n), make_dimension(n)});
    auto c = cross_build(shape, smooth2d(n), Cross{24, 1e-9, 10, 3});
    auto d = oracle::dense(c);
    double err = 0.0, fmax = 0.0;
    IndexBatch all(2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            all[0].push_back(i);
            all[1].push_back(j);
        }
    auto ref = smooth2d(n)(all);
    for (std::size_t k = 0; k < ref.size(); ++k) {
        err = std::max(err, std::abs(d[k] - ref[k]));
        fmax = std::max(fmax, std::abs(ref[k]));
    }
    EXPECT_LT(err / fmax, 1e-7);
}

TEST(Cross, ComplexFunction) {
    auto shape = make_trainshape(512);
    ComplexFunction f = [](const IndexBatch& idx) {
        std::vector<cplx> out(idx[0].size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::polar(1.0, 0.01 * double(idx[0][k]));
        return out;
    };
    auto c = cross_build(shape, f, Cross{4, 1e-12, 4, 0});
    EXPECT_TRUE(c.is_complex());
    EXPECT_LE(c.shape().max_rank(), 2u);
    EXPECT_NEAR(std::abs(evaluate_at(c, std::vector<std::size_t>{300}) - std::polar(1.0, 3.0)), 0.0, 1e-10);
}

TEST(Cross, NonFiniteSampleNamesIndex) {
    auto shape = make_trainshape(64);
    RealFunction f = [](const IndexBatch& idx) {
        std::vector<double> out(idx[0].size());
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] = idx[0][k] == 0 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
        return out;
    };
    try {
        cross_build(shape, f, Cross{4, 1e-10, 4, 0});
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("(0)"), std::string::npos) << e.what();
    }
}

TEST(Cross, TransformExp) {
    auto shape = make_trainshape(256);
    std::vector<Core<double>> cs;
    for (std::size_t q = 0; q < shape.ncores(); ++q) {
        const double w = std::ldexp(1.0, int(shape.ncores() - 1 - q)) / 256.0;
        cs.push_back(Core<double>(2, 2, 2, {1.0, 0.0, 1.0, w, 0.0, 1.0, 0.0, 1.0}));
    }
    cs.front() = Core<double>(1, 2, 2, {1.0, 0.0, 1.0, 0.5});
    cs.back() = Core<double>(2, 2, 1, {0.0, 1.0 / 256.0, 1.0, 1.0});
    TensorTrain x(shape, cs);
    auto e = transform(x, [](double v) { return std::exp(v); }, Cross{8, 1e-12, 6, 0});
    auto dx = oracle::dense(x), de = oracle::dense(e);
    for (std::size_t k = 0; k < 256; ++k) EXPECT_NEAR(de[k].real(), std::exp(dx[k].real()), 1e-10);
}

TEST(Cross, DivisionPowAbs) {
    auto shape = make_trainshape(128);
    std::vector<std::size_t> ranks(shape.ncores() + 1, 2);
    ranks.front() = ranks.back() = 1;
    auto a = random_train(shape.with_ranks(ranks), 5);
    RealFunction pos = [](const IndexBatch& idx) {
        std::vector<double> out(idx[0].size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = 2.0 + std::cos(0.05 * double(idx[0][k]));
        return out;
    };
    auto b = cross_build(shape, pos, Cross{8, 1e-13, 6, 0});
    auto da = oracle::dense(a), db = oracle::dense(b);

    auto q = elementwise_div(a, b, Cross{16, 1e-12, 8, 0});
    std::vector<cplx> ref(128);
    for (std::size_t k = 0; k < 128; ++k) ref[k] = da[k] / db[k];
    EXPECT_LT(oracle::rel_err(oracle::dense(q), ref), 1e-9);

    auto sq = pow(a, 2.0, Cross{});
    for (std::size_t k = 0; k < 128; ++k) ref[k] = da[k] * da[k];
    EXPECT_LT(oracle::rel_err(oracle::dense(sq), ref), 1e-12);

    auto root = pow(b, 0.5, Cross{16, 1e-12, 8, 0});
    for (std::size_t k = 0; k < 128; ++k) ref[k] = std::sqrt(db[k]);
    EXPECT_LT(oracle::rel_err(oracle::dense(root), ref), 1e-9);

    auto m = abs(a, Cross{32, 1e-12, 8, 0});
    EXPECT_FALSE(m.is_complex());
    for (std::size_t k = 0; k < 128; ++k) ref[k] = std::abs(da[k]);
    EXPECT_LT(oracle::rel_err(oracle::dense(m), ref), 1e-9);
}

TEST(Cross, DivisionByZeroRaises) {
    auto shape = make_trainshape(16);
    RealFunction one = [](const IndexBatch& idx) { return std::vector<double>(idx[0].size(), 1.0); };
    auto a = cross_build(shape, one, Cross{2, 1e-10, 2, 0});
    std::vector<Core<double>> zc;
    for (std::size_t q = 0; q < shape.ncores(); ++q) zc.push_back(Core<double>(1, 2, 1, {0.0, 0.0}));
    TensorTrain z(shape, zc);
    EXPECT_THROW(elementwise_div(a, z, Cross{2, 1e-10, 2, 0}), NumericError);
}

TEST(Cross, PolicyValidation) {
    auto shape = make_trainshape(16);
    RealFunction one = [](const IndexBatch& idx) { return std::vector<double>(idx[0].size(), 1.0); };
    EXPECT_THROW(cross_build(shape, one, Cross{0, 1e-10, 2, 0}), ShapeError);
    EXPECT_THROW(cross_build(shape, one, Cross{2, 0.0, 2, 0}), ShapeError);
}
