#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qtt/quantics.hpp"

namespace qtt {

/// Digit `pos` of dimension `dim` of a TrainShape.
struct DigitRef {
    std::size_t dim = 0;
    std::size_t pos = 0;

    friend bool operator==(const DigitRef&, const DigitRef&) = default;
    friend auto operator<=>(const DigitRef&, const DigitRef&) = default;
};

/// Digits carried by one core, in local (row-major, leftmost slowest) order.
using DigitGroup = std::vector<DigitRef>;

enum class LayoutMode { Auto, Block, Interleaved, Explicit };

/// Static shape of a tensor train.
///
/// Every digit of every dimension sits in exactly one group. Reading groups
/// left to right, the digits of one dimension appear either in significance
/// order or fully reversed (the reversed case is what the DFT layout needs).
/// A shape with no dimensions is the scalar shape: one empty group.
class TrainShape {
public:
    TrainShape(std::vector<Dimension> dims, std::vector<DigitGroup> groups,
               std::vector<std::size_t> ranks = {});

    const std::vector<Dimension>& dims() const { return dims_; }
    const std::vector<DigitGroup>& groups() const { return groups_; }
    const std::vector<std::size_t>& ranks() const { return ranks_; }

    std::size_t ndims() const { return dims_.size(); }
    std::size_t ncores() const { return groups_.size(); }
    std::size_t rank_left(std::size_t q) const { return ranks_.at(q); }
    std::size_t rank_right(std::size_t q) const { return ranks_.at(q + 1); }
    std::size_t max_rank() const;

    /// Product of the bases of the digits in group q.
    std::size_t core_extent(std::size_t q) const;
    std::vector<std::size_t> core_bases(std::size_t q) const;

    /// Number of entries of the represented tensor.
    std::size_t size() const;
    std::vector<std::size_t> sizes() const;

    TrainShape with_ranks(std::vector<std::size_t> ranks) const;

    /// Same dims and the same digit groups (ranks ignored).
    bool compatible(const TrainShape& other) const;

    /// Core index and in-group position of a digit.
    std::pair<std::size_t, std::size_t> locate(DigitRef ref) const;

    /// Per-core local indices for one multi-index (one entry per dimension).
    void local_indices(std::span<const std::size_t> idxs, std::span<std::size_t> out) const;
    /// Inverse of local_indices.
    void dim_indices(std::span<const std::size_t> local, std::span<std::size_t> out) const;

    std::string describe() const;

private:
    struct Placement {
        std::size_t dim, pos, stride;
    };

    std::vector<Dimension> dims_;
    std::vector<DigitGroup> groups_;
    std::vector<std::size_t> ranks_;
    std::vector<std::vector<Placement>> placement_;
};

/// Builds a shape from dimensions. Auto picks block layout for a single
/// dimension or unequal digit counts, interleaved otherwise.
TrainShape make_trainshape(std::vector<Dimension> dims, LayoutMode mode = LayoutMode::Auto,
                           std::vector<DigitGroup> groups = {});

/// Convenience: block layout of a single dimension of the given size.
TrainShape make_trainshape(long long size);

} // namespace qtt
