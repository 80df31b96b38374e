#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "qtt/arithmetic.hpp"
#include "qtt/tensortrain.hpp"

namespace qtt {

/// idxs[d][k]: index of sample k along dimension d.
using IndexBatch = std::vector<std::vector<std::size_t>>;
using RealFunction = std::function<std::vector<double>(const IndexBatch&)>;
using ComplexFunction = std::function<std::vector<cplx>(const IndexBatch&)>;

struct CrossStats {
    std::size_t evaluations = 0; ///< function samples, probes included
    std::size_t sweeps = 0;
    double probe_error = 0.0;    ///< max |f - t| / max |f| on the last probe set
    std::vector<std::vector<std::vector<std::size_t>>> pivots; ///< per bond, row pivots as full index tuples
};

/// Two-site cross interpolation of f on `shape` (ranks on the shape are
/// ignored). Converges when the probe error drops to policy.eps or after
/// policy.nsweeps sweeps. A non-finite sample raises NumericError naming the
/// index.
TensorTrain cross_build(const TrainShape& shape, const RealFunction& f, const Cross& policy,
                        CrossStats* stats = nullptr);
TensorTrain cross_build(const TrainShape& shape, const ComplexFunction& f, const Cross& policy,
                        CrossStats* stats = nullptr);

/// g applied entry-wise.
TensorTrain transform(const TensorTrain& t, const std::function<double(double)>& g, const Cross& policy,
                      CrossStats* stats = nullptr);
TensorTrain transform(const TensorTrain& t, const std::function<cplx(cplx)>& g, const Cross& policy,
                      CrossStats* stats = nullptr);

/// a / b entry-wise; a zero divisor at a sampled index raises NumericError.
TensorTrain elementwise_div(const TensorTrain& a, const TensorTrain& b, const Cross& policy,
                            CrossStats* stats = nullptr);

/// t^e entry-wise. e == 2 is an exact Hadamard square.
TensorTrain pow(const TensorTrain& t, double e, const Cross& policy, CrossStats* stats = nullptr);

TensorTrain abs(const TensorTrain& t, const Cross& policy, CrossStats* stats = nullptr);

} // namespace qtt
