#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "../support/oracle.hpp"
#include "qtt/constructors.hpp"
#include "qtt/errors.hpp"
#include "qtt/solvers.hpp"

using namespace qtt;

namespace {

TrainShape ranked(TrainShape s, std::size_t r) {
    std::vector<std::size_t> ranks(s.ncores() + 1, r);
    ranks.front() = ranks.back() = 1;
    return s.with_ranks(ranks);
}

Eigen::MatrixXd dense_matrix(const TensorTrain& a, std::size_t n) {
    const auto d = oracle::dense(a);
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(Eigen::Index(i), Eigen::Index(j)) = d[i * n + j].real();
    return m;
}

Eigen::VectorXd dense_vector(const TensorTrain& v) {
    const auto d = oracle::dense(v);
    Eigen::VectorXd out(Eigen::Index(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) out(Eigen::Index(i)) = d[i].real();
    return out;
}

struct LaplaceCase {
    Dimension dim = make_dimension(64);
    double h = 1.0 / 65.0;
    TensorTrain lap = dirichlet_laplacian(dim, h);
    TrainShape xs = make_trainshape(64);
};

Eigen::MatrixXd spd(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = nd(rng);
    return g * g.transpose() + double(n) * Eigen::MatrixXd::Identity(n, n);
}

} // namespace

TEST(LinearMap, IdentityKeepsX) {
    const auto dim = make_dimension(16);
    const auto id = shift_train(dim, 0);
    LinearMap map("ij,j->i", {id}, 1, make_trainshape(16));
    auto x = random_train(ranked(make_trainshape(16), 2), 1);
    EXPECT_LT(oracle::max_diff(oracle::dense(map.apply(x)), oracle::dense(x)), 1e-14);
}

TEST(LinearMap, ChainedShifts) {
    const auto dim = make_dimension(8);
    const auto a = shift_train(dim, 1), b = shift_train(dim, 2);
    LinearMap map("ij,jl,l->i", {a, b}, 2, make_trainshape(8));
    auto x = random_train(ranked(make_trainshape(8), 2), 2);
    const auto ab = oracle::matmul(oracle::dense(a), oracle::dense(b), 8, 8, 8);
    const auto ref = oracle::matmul(ab, oracle::dense(x), 8, 8, 1);
    EXPECT_LT(oracle::max_diff(oracle::dense(map.apply(x)), ref), 1e-14);

    // The operator train acts like the dense matrix.
    const auto m = oracle::dense(map.mpo());
    EXPECT_LT(oracle::max_diff(m, ab), 1e-14);
}

TEST(LinearMap, ZeroTrain) {
    const auto dim = make_dimension(8);
    const auto a = shift_train(dim, 1);
    LinearMap map("ij,j->i", {a}, 1, make_trainshape(8));
    auto z = scaled(random_train(make_trainshape(8), 3), 0.0);
    EXPECT_EQ(oracle::max_abs(oracle::dense(map.apply(z))), 0.0);
}

TEST(LinearMap, RejectsBadLayouts) {
    const auto dim = make_dimension(8);
    const auto block = random_train(make_trainshape({dim, dim}, LayoutMode::Block), 4);
    EXPECT_THROW(LinearMap("ij,j->i", {block}, 1, make_trainshape(8)), ShapeError);
    const auto a = shift_train(dim, 1);
    EXPECT_THROW(LinearMap("ij,j->i", {a}, 2, make_trainshape(8)), ShapeError);
    EXPECT_THROW(LinearMap("ij,j->i", {a}, 1, make_trainshape(16)), ShapeError);
    LinearMap map("ij,j->i", {a}, 1, make_trainshape(8));
    EXPECT_THROW(map.apply(random_train(make_trainshape(16), 1)), ShapeError);
}

TEST(Krylov, SmallCases) {
    MatVec<double> diag = [](const Vector<double>& v) {
        Vector<double> y = v;
        y(1) *= 3.0;
        return y;
    };
    Vector<double> start(2);
    start << 1.0, 1.0;
    auto e = lanczos<double>(diag, start);
    EXPECT_NEAR(e.value, 1.0, 1e-12);
    EXPECT_TRUE(e.converged);

    MatVec<double> id = [](const Vector<double>& v) { return v; };
    Vector<double> rhs(4);
    rhs << 1, 2, 3, 4;
    auto g = gmres<double>(id, rhs, Vector<double>::Zero(4));
    EXPECT_EQ(g.iterations, 1u);
    EXPECT_LT((g.vector - rhs).norm(), 1e-14);

    // A zero start is replaced, not rejected.
    auto z = lanczos<double>(diag, Vector<double>::Zero(2));
    EXPECT_NEAR(z.value, 1.0, 1e-12);
}

TEST(Krylov, RandomSpdMatchesDense) {
    const Eigen::MatrixXd a = spd(50, 7);
    MatVec<double> op = [&](const Vector<double>& v) { return Vector<double>(a * v); };
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    auto e = lanczos<double>(op, Vector<double>::Ones(50));
    EXPECT_NEAR(e.value, es.eigenvalues()(0), 1e-8 * es.eigenvalues()(0));
    Vector<double> b = Vector<double>::LinSpaced(50, -1.0, 2.0);
    auto g = gmres<double>(op, b, Vector<double>::Zero(50));
    const Eigen::VectorXd ref = a.llt().solve(b);
    EXPECT_LT((g.vector - ref).norm() / ref.norm(), 1e-8);
}

TEST(Krylov, ComplexHermitian) {
    const Eigen::MatrixXd re = spd(12, 3);
    Matrix<cplx> a = re.cast<cplx>();
    for (Eigen::Index i = 0; i < 12; ++i)
        for (Eigen::Index j = i + 1; j < 12; ++j) {
            a(i, j) += cplx(0, 0.5 * double(i - j));
            a(j, i) = std::conj(a(i, j));
        }
    MatVec<cplx> op = [&](const Vector<cplx>& v) { return Vector<cplx>(a * v); };
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(a.cast<cplx>()));
    auto e = lanczos<cplx>(op, Vector<cplx>::Ones(12));
    EXPECT_NEAR(e.value, es.eigenvalues()(0), 1e-9);
}

TEST(Eigsolve, IdentityMap) {
    const auto dim = make_dimension(16);
    const auto id = shift_train(dim, 0);
    LinearMap map("ij,j->i", {id}, 1, make_trainshape(16));
    auto g = random_train(ranked(make_trainshape(16), 2), 5);
    auto guess = scaled(g, 1.0 / frobenius_norm(g));
    auto r = eigsolve(map, guess, SweepPlan{});
    EXPECT_NEAR(r.value, 1.0, 1e-12);
    EXPECT_NEAR(frobenius_norm(r.vector), 1.0, 1e-12);
    EXPECT_LT(std::abs(std::abs(inner(r.vector, guess)) - 1.0), 1e-10);
}

TEST(Eigsolve, LaplacianMatchesDense) {
    LaplaceCase c;
    LinearMap map("ij,j->i", {c.lap}, 1, c.xs);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_matrix(c.lap, 64));
    auto guess = random_train(ranked(c.xs, 2), 11);
    SweepPlan plan;
    plan.tol = 1e-12;
    auto r = eigsolve(map, guess, plan);
    EXPECT_NEAR(r.value, es.eigenvalues()(0), 1e-8);
    EXPECT_TRUE(r.info.converged);
    // Rayleigh quotients never increase.
    for (std::size_t k = 1; k < r.info.history.size(); ++k)
        EXPECT_LE(r.info.history[k], r.info.history[k - 1] + 1e-12 * std::abs(r.info.history[k - 1])) << k;
    // The vector is the eigenvector.
    const Eigen::VectorXd v = dense_vector(r.vector);
    EXPECT_NEAR(std::abs(v.dot(es.eigenvectors().col(0))), 1.0, 1e-9);
}

TEST(Eigsolve, DiagonalMap) {
    const UniformGrid grid(make_dimension(64), make_domain(0.0, 1.0));
    const auto d = polyval_train(grid, {1.0, -0.6, 0.5});
    LinearMap map("i,i->i", {d}, 1, make_trainshape(64));
    const auto dv = oracle::dense(d);
    std::size_t imin = 0;
    for (std::size_t i = 1; i < dv.size(); ++i)
        if (dv[i].real() < dv[imin].real()) imin = i;
    auto r = eigsolve(map, random_train(ranked(make_trainshape(64), 2), 3), SweepPlan{});
    EXPECT_NEAR(r.value, dv[imin].real(), 1e-10);
    const auto v = oracle::dense(r.vector);
    std::size_t ipeak = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[ipeak])) ipeak = i;
    EXPECT_EQ(ipeak, imin);
}

TEST(Eigsolve, SingleSiteAndGuessErrors) {
    LaplaceCase c;
    LinearMap map("ij,j->i", {c.lap}, 1, c.xs);
    SweepPlan plan;
    plan.ncores = 1;
    auto guess = random_train(c.xs.with_ranks({1, 2, 4, 8, 4, 2, 1}), 4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_matrix(c.lap, 64));
    EXPECT_NEAR(eigsolve(map, guess, plan).value, es.eigenvalues()(0), 1e-8);

    EXPECT_THROW(eigsolve(map, scaled(guess, 0.0), plan), InvalidGuess);
    EXPECT_THROW(eigsolve(map, random_train(make_trainshape(32), 1), plan), ShapeError);
    plan.ncores = 7;
    EXPECT_THROW(eigsolve(map, guess, plan), ShapeError);
}

TEST(Linsolve, IdentityOneSweep) {
    const auto dim = make_dimension(32);
    const auto id = shift_train(dim, 0);
    LinearMap map("ij,j->i", {id}, 1, make_trainshape(32));
    auto b = random_train(ranked(make_trainshape(32), 3), 6);
    auto guess = random_train(ranked(make_trainshape(32), 1), 7);
    for (auto method : {LinsolveMethod::Amen, LinsolveMethod::Dmrg}) {
        auto r = linsolve(map, b, guess, SweepPlan{}, method);
        EXPECT_EQ(r.info.sweeps, 1u);
        EXPECT_LT(distance(r.x, b) / frobenius_norm(b), 1e-10);
    }
}

TEST(Linsolve, ShiftedLaplacianAmen) {
    LaplaceCase c;
    const auto id = shift_train(c.dim, 0);
    const auto a = add(Exact{}, {c.lap, id});
    LinearMap map("ij,j->i", {a}, 1, c.xs);
    auto b = random_train(ranked(c.xs, 2), 21);
    auto guess = random_train(ranked(c.xs, 2), 22);
    SweepPlan plan;
    plan.nsweeps = 30;
    plan.tol = 1e-9;
    auto r = linsolve(map, b, guess, plan);
    EXPECT_TRUE(r.info.converged);
    ASSERT_FALSE(r.info.history.empty());
    EXPECT_LE(r.info.history.back(), 1e-8);
    for (std::size_t k = 1; k < r.info.history.size(); ++k)
        EXPECT_LE(r.info.history[k], r.info.history[k - 1] + 1e-12) << k;

    const Eigen::VectorXd ref = dense_matrix(a, 64).ldlt().solve(dense_vector(b));
    EXPECT_LE((dense_vector(r.x) - ref).norm() / ref.norm(), 1e-6);
}

TEST(Linsolve, ShiftedLaplacianDmrg) {
    LaplaceCase c;
    const auto id = shift_train(c.dim, 0);
    const auto a = add(Exact{}, {c.lap, id});
    LinearMap map("ij,j->i", {a}, 1, c.xs);
    auto b = random_train(ranked(c.xs, 2), 21);
    auto r = linsolve(map, b, b, SweepPlan{}, LinsolveMethod::Dmrg);
    EXPECT_LE(r.info.history.back(), 1e-8);
}

TEST(Linsolve, ManufacturedSolution) {
    LaplaceCase c;
    const auto id = shift_train(c.dim, 0);
    const auto id100 = scaled(id, 100.0);
    const auto a = add(Exact{}, {c.lap, id100});
    LinearMap map("ij,j->i", {a}, 1, c.xs);
    const auto known = random_train(ranked(c.xs, 2), 31);
    const auto b = map.apply(known);
    SweepPlan plan;
    plan.tol = 1e-12;
    plan.nsweeps = 30;
    auto r = linsolve(map, b, random_train(ranked(c.xs, 2), 32), plan);
    EXPECT_LE(distance(r.x, known) / frobenius_norm(known), 1e-8);
}

TEST(Linsolve, ZeroRhsAndErrors) {
    const auto dim = make_dimension(16);
    const auto id = shift_train(dim, 0);
    LinearMap map("ij,j->i", {id}, 1, make_trainshape(16));
    auto g = random_train(make_trainshape(16), 1);
    auto r = linsolve(map, scaled(g, 0.0), g, SweepPlan{});
    EXPECT_EQ(frobenius_norm(r.x), 0.0);
    EXPECT_THROW(linsolve(map, g, scaled(g, 0.0), SweepPlan{}), InvalidGuess);
    SweepPlan bad;
    bad.nsweeps = 0;
    EXPECT_THROW(linsolve(map, g, g, bad), ShapeError);
}

TEST(MinMax, Constant) {
    auto t = constant(make_trainshape(32), 2.5);
    auto r = min_max(t);
    EXPECT_EQ(r.min.value, 2.5);
    EXPECT_EQ(r.max.value, 2.5);
}

TEST(MinMax, SineMatchesDenseScan) {
    const UniformGrid grid(make_dimension(128), make_domain(0.0, 2.0 * std::numbers::pi));
    auto t = sin_train(grid, 1.0);
    const auto d = oracle::dense(t);
    std::size_t imin = 0, imax = 0;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (d[i].real() < d[imin].real()) imin = i;
        if (d[i].real() > d[imax].real()) imax = i;
    }
    auto r = min_max(t, 8);
    EXPECT_EQ(r.max.index, std::vector<std::size_t>{imax});
    EXPECT_EQ(r.min.index, std::vector<std::size_t>{imin});
    EXPECT_DOUBLE_EQ(r.max.value, d[imax].real());
}

TEST(MinMax, MonotoneExp) {
    const UniformGrid grid(make_dimension(256), make_domain(-1.0, 2.0));
    auto r = min_max(exp_train(grid, 1.3));
    EXPECT_EQ(r.min.index, std::vector<std::size_t>{0});
    EXPECT_EQ(r.max.index, std::vector<std::size_t>{255});
}

TEST(MinMax, RandomTrainsAgainstDenseScan) {
    const auto shape = make_trainshape({make_dimension(16), make_dimension(16), make_dimension(16)});
    std::size_t hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto t = random_train(ranked(shape, 3), 100 + seed);
        const auto d = oracle::dense(t);
        double lo = INFINITY, hi = -INFINITY;
        for (auto v : d) {
            lo = std::min(lo, v.real());
            hi = std::max(hi, v.real());
        }
        std::vector<double> prev_gap;
        double last_lo = INFINITY, last_hi = -INFINITY;
        for (std::size_t k : {1, 2, 4, 8}) {
            auto r = min_max(t, k);
            // Returned values are genuine entries.
            EXPECT_NEAR(evaluate_at(t, r.min.index).real(), r.min.value, 1e-13);
            EXPECT_NEAR(evaluate_at(t, r.max.index).real(), r.max.value, 1e-13);
            EXPECT_LE(r.min.value, last_lo);
            EXPECT_GE(r.max.value, last_hi);
            last_lo = r.min.value;
            last_hi = r.max.value;
        }
        if (std::abs(last_lo - lo) <= 1e-10 && std::abs(last_hi - hi) <= 1e-10) ++hits;
    }
    EXPECT_EQ(hits, 20u);
}

TEST(MinMax, Errors) {
    EXPECT_THROW(min_max(random_train(make_trainshape(8), 1), 0), ShapeError);
    EXPECT_THROW(min_max(random_train(make_trainshape(8), 1, ScalarKind::Complex)), ShapeError);
}
