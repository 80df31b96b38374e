#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "qtt/arithmetic.hpp"
#include "qtt/decomp.hpp"
#include "qtt/tensortrain.hpp"

namespace qtt {

/// A linear operator given by einsum subscripts in which one input slot is
/// the unknown x. The output must have x's shape, and every output digit must
/// sit on the same core as the matching digit of x.
class LinearMap {
public:
    /// `operands` fills every input slot except `slot`, in order.
    LinearMap(std::string_view subscripts, const TrainRefs& operands, std::size_t slot, TrainShape x_shape);

    const TrainShape& shape() const { return shape_; }
    const EinsumSpec& spec() const { return spec_; }
    std::size_t slot() const { return slot_; }
    bool is_complex() const { return mpo_.is_complex(); }

    /// Operator train: core q has local index (out digits of core q, in
    /// digits of core q), out slowest.
    const TensorTrain& mpo() const { return mpo_; }

    /// einsum(policy, subscripts, operands with x in its slot).
    TensorTrain apply(const TensorTrain& x, const ApproxPolicy& policy = Exact{}, OpStats* stats = nullptr) const;

private:
    EinsumSpec spec_;
    std::vector<TensorTrain> operands_;
    std::size_t slot_;
    TrainShape shape_;
    TensorTrain mpo_;
};

struct SweepPlan {
    std::size_t ncores = 2;
    std::size_t nsweeps = 10;
    TruncationRule rule{};
    std::size_t local_iters = 100; ///< Lanczos iterations or GMRES iteration cap
    std::size_t restart = 30;      ///< GMRES restart length
    double local_tol = 1e-10;
    double tol = 1e-10;            ///< sweep-level stopping tolerance
    std::size_t enrich_rank = 3;   ///< AMEn residual rank

    void validate(std::size_t ncores_of_train) const;
};

template <Scalar T>
using MatVec = std::function<Vector<T>(const Vector<T>&)>;

template <Scalar T>
struct KrylovResult {
    double value = 0.0;      ///< eigenvalue (lanczos)
    Vector<T> vector;        ///< eigenvector or solution
    std::size_t iterations = 0;
    double residual = 0.0;   ///< relative residual
    bool converged = false;
};

/// Smallest eigenpair of a Hermitian operator by restarted Lanczos with full
/// reorthogonalization, warm-started from `start` (a zero start is replaced
/// by a fixed pseudo-random vector).
template <Scalar T>
KrylovResult<T> lanczos(const MatVec<T>& op, Vector<T> start, std::size_t iters = 100, double tol = 1e-10);

/// Restarted GMRES from x0.
template <Scalar T>
KrylovResult<T> gmres(const MatVec<T>& op, const Vector<T>& rhs, Vector<T> x0, std::size_t restart = 30,
                      std::size_t iters = 200, double tol = 1e-10);

struct SolveInfo {
    std::vector<double> history;       ///< eigsolve: Rayleigh quotient per update; linsolve: residual per sweep
    std::vector<std::string> warnings; ///< local solves that did not converge
    std::size_t sweeps = 0;
    bool converged = false;
    bool stagnated = false;
};

struct EigResult {
    double value = 0.0;
    TensorTrain vector;
    SolveInfo info;
};

/// DMRG sweeps for the smallest eigenpair of a Hermitian map. Throws
/// InvalidGuess for a zero or mis-shaped guess.
EigResult eigsolve(const LinearMap& map, const TensorTrain& guess, const SweepPlan& plan);

enum class LinsolveMethod { Dmrg, Amen };

struct LinsolveResult {
    TensorTrain x;
    SolveInfo info;
};

/// Solves map(x) = b. Dmrg solves Galerkin-projected window systems with
/// GMRES (meant for Hermitian positive-definite maps). Amen updates one core
/// at a time and enriches its basis with a rank-`enrich_rank` residual
/// approximation. Stops when ||Ax - b|| / ||b|| <= plan.tol.
LinsolveResult linsolve(const LinearMap& map, const TensorTrain& b, const TensorTrain& guess, const SweepPlan& plan,
                        LinsolveMethod method = LinsolveMethod::Amen);

struct Extremum {
    double value = 0.0;
    std::vector<std::size_t> index;
};

struct MinMax {
    Extremum min;
    Extremum max;
};

/// Approximate extrema of a real train by a beam search over k candidate
/// prefixes per core, in both sweep directions, for every power of two up to
/// k. Returned values are entries of t at the returned indices.
MinMax min_max(const TensorTrain& t, std::size_t k = 8);

} // namespace qtt
