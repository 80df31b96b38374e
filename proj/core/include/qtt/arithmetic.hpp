#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qtt/decomp.hpp"
#include "qtt/tensortrain.hpp"

namespace qtt {

/// Exact arithmetic: ranks add (add) or multiply (einsum).
struct Exact {};

/// Zip-up: exact result sites compressed left to right with a super-core of
/// `window` sites.
struct Decomposition {
    TruncationRule rule;
    std::size_t window = 2;
};

/// Sweeping fit of a guess (the zip-up result) to the exact result.
/// `record_history` stores the exact distance after every window update,
/// which costs one extra train contraction per update.
struct Variational {
    TruncationRule rule;
    std::size_t ncores = 2;
    std::size_t nsweeps = 2;
    bool record_history = false;
};

/// Tensor cross interpolation of the exact result.
struct Cross {
    std::size_t max_rank = 16;
    double eps = 1e-10;
    std::size_t nsweeps = 10;
    std::uint64_t seed = 0;
};

using ApproxPolicy = std::variant<Exact, Decomposition, Variational, Cross>;

void validate(const ApproxPolicy& policy);

/// Side results of an approximate operation.
struct OpStats {
    double discarded = 0.0;           ///< sum of discarded weights (zip-up)
    std::vector<double> history;      ///< distance to exact after each update (variational)
};

/// Parsed subscripts such as "ij,jk->ik".
struct EinsumSpec {
    std::vector<std::string> inputs;
    std::string output;

    /// Throws ParseError on bad grammar (missing "->", non-letters, a letter
    /// repeated within one input or in the output, output letters missing
    /// from the inputs).
    static EinsumSpec parse(std::string_view subscripts);
    std::string str() const;
};

using TrainRefs = std::vector<std::reference_wrapper<const TensorTrain>>;

/// Element-wise sum of addition-compatible trains.
TensorTrain add(const ApproxPolicy& policy, const TrainRefs& trains, OpStats* stats = nullptr);

/// Exact contraction of one or two operands; the building block of einsum.
TensorTrain einsum_exact(const EinsumSpec& spec, const TrainRefs& operands);

/// Operands are reduced pairwise from the left; the policy applies at each
/// step. Throws ConformanceError for layouts that cannot be contracted core
/// by core.
TensorTrain einsum(const ApproxPolicy& policy, std::string_view subscripts, const TrainRefs& operands,
                   OpStats* stats = nullptr);

/// Rank reduction of t under the policy (Exact returns a copy).
TensorTrain truncate(const ApproxPolicy& policy, const TensorTrain& t, OpStats* stats = nullptr);

/// Compresses an exact train left to right. Returns a train centered on its
/// last core; stats->discarded bounds the distance to `exact`.
TensorTrain zip_up(const TensorTrain& exact, const TruncationRule& rule, std::size_t window = 2,
                   OpStats* stats = nullptr);

/// Sweeps `guess` toward `exact`. Distances are estimated from the window
/// projections unless policy.record_history asks for exact ones.
TensorTrain variational_fit(const TensorTrain& exact, const TensorTrain& guess, const Variational& policy,
                            OpStats* stats = nullptr);

/// Holds an ambient policy so call sites can omit it.
class Engine {
public:
    explicit Engine(ApproxPolicy policy = Exact{}) : policy_(std::move(policy)) { validate(policy_); }

    const ApproxPolicy& policy() const { return policy_; }
    void set_policy(ApproxPolicy p) {
        validate(p);
        policy_ = std::move(p);
    }

    TensorTrain add(const TrainRefs& trains, OpStats* stats = nullptr) const {
        return qtt::add(policy_, trains, stats);
    }
    TensorTrain einsum(std::string_view subscripts, const TrainRefs& operands, OpStats* stats = nullptr) const {
        return qtt::einsum(policy_, subscripts, operands, stats);
    }
    TensorTrain truncate(const TensorTrain& t, OpStats* stats = nullptr) const {
        return qtt::truncate(policy_, t, stats);
    }

private:
    ApproxPolicy policy_;
};

} // namespace qtt
